#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "regbench/config.hpp"
#include "regbench/external_matcher.hpp"
#include "regbench/geometry.hpp"
#include "regbench/manifest.hpp"
#include "regbench/matching.hpp"

namespace regbench {

enum class PairStatus { ok, failed };

// Stage boundary durations (seconds) for the four protocol stages.
struct StageTrace {
    double normalize_s = 0.0;
    double resize_s = 0.0;
    double match_s = 0.0;
    double fit_s = 0.0;
};

struct PairResult {
    std::string pair_id;
    PairStatus status = PairStatus::failed;
    std::optional<GeometricTransform> transform;
    int inlier_count = 0;
    int correspondence_count = 0;
    std::vector<double> tiepoint_errors;
    double wall_clock = 0.0;  // tile extraction + matching + robust fit
    StageTrace trace;
    std::string failure_reason;
    int tile_failures = 0;  // external tiles that errored and were skipped
};

struct RunOptions {
    std::string dump_tiles_dir;       // when set, tiles land here as PNG
    std::string work_dir;             // scratch for external tile PNGs
    double external_timeout_s = 120.0;
    ExternalMatcherSession* session = nullptr;  // shared session, optional
};

// Four-stage protocol over one scene pair: normalize, resize, tiled matching
// with full-frame reprojection, robust fit in full-resolution coordinates,
// tie-point displacement errors. Fit failures become a Failed status rather
// than an exception; unreadable inputs raise IoError.
PairResult run_pair(const ScenePairRecord& entry, const ProtocolConfig& config,
                    const MatcherSpec& matcher, const RunOptions& options = {});

// Like run_pair, but scores the estimated transform against the record's
// ground-truth affine at the four source-image corners.
PairResult run_pair_corners(const ScenePairRecord& entry, const ProtocolConfig& config,
                            const MatcherSpec& matcher, const RunOptions& options = {});

// Euclidean error between the mapped optical point and the SAR point, per
// tie point.
std::vector<double> predict_displacements(const GeometricTransform& t,
                                          std::span<const TiePoint> tiepoints);

// The per-pair RANSAC stream seed: global seed, pair id, and tile lattice
// folded together.
std::uint64_t pair_stream_seed(std::uint64_t global_seed, const std::string& pair_id,
                               std::uint64_t tile_hash);

}  // namespace regbench
