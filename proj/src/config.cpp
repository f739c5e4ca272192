#include "regbench/config.hpp"

#include <cstdio>
#include <stdexcept>

namespace regbench {

std::string ProtocolConfig::key() const {
    char thr[32];
    std::snprintf(thr, sizeof(thr), "%g", ransac_threshold);
    std::string out = "norm=";
    out += to_string(normalization);
    out += "|maxdim=" + std::to_string(max_dimension);
    out += "|tile=" + std::to_string(tile_size);
    out += "|ov=" + std::to_string(tile_overlap);
    out += "|geom=";
    out += to_string(geometry);
    out += "|thr=";
    out += thr;
    out += "|mininl=" + std::to_string(min_inliers);
    out += "|kp=" + std::to_string(keypoint_budget);
    out += "|seed=" + std::to_string(seed);
    return out;
}

void ProtocolConfig::validate() const {
    if (max_dimension < 1) throw std::invalid_argument("max-dimension must be >= 1");
    if (tile_size < 1) throw std::invalid_argument("tile-size must be >= 1");
    if (tile_overlap < 0 || tile_overlap >= tile_size)
        throw std::invalid_argument("tile-overlap must satisfy 0 <= overlap < tile-size");
    if (ransac_threshold <= 0.0) throw std::invalid_argument("ransac-threshold must be > 0");
    if (min_inliers < minimal_sample_size(geometry))
        throw std::invalid_argument("min-inliers must be >= the minimal sample size of the model");
    if (keypoint_budget < 1) throw std::invalid_argument("keypoint-budget must be >= 1");
    if (ransac_max_iterations < 1) throw std::invalid_argument("ransac iterations must be >= 1");
    if (ransac_confidence <= 0.0 || ransac_confidence >= 1.0)
        throw std::invalid_argument("ransac confidence must lie in (0, 1)");
}

}  // namespace regbench
