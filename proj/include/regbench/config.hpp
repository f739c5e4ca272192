#pragma once

#include <cstdint>
#include <string>

#include "regbench/geometry.hpp"
#include "regbench/image.hpp"

namespace regbench {

// One cell of the protocol grid. Defaults follow the evaluation protocol's
// stated defaults; the RANSAC schedule constants are engine policy and stay
// out of the canonical key.
struct ProtocolConfig {
    NormalizationKind normalization = NormalizationKind::identity;
    int max_dimension = 2048;
    int tile_size = 768;
    int tile_overlap = 256;
    GeometryModel geometry = GeometryModel::affine;
    double ransac_threshold = 10.0;
    int min_inliers = 6;
    int keypoint_budget = 4096;
    std::uint64_t seed = 0;

    int ransac_max_iterations = 2000;
    double ransac_confidence = 0.995;

    // Canonical serialized form:
    // norm={}|maxdim={}|tile={}|ov={}|geom={}|thr={}|mininl={}|kp={}|seed={}
    std::string key() const;

    RansacParams ransac_params(std::uint64_t stream_seed) const {
        return {ransac_threshold, ransac_max_iterations, ransac_confidence, min_inliers,
                stream_seed};
    }

    // Throws std::invalid_argument on out-of-range fields.
    void validate() const;
};

}  // namespace regbench
