#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "regbench/config.hpp"
#include "regbench/manifest.hpp"
#include "regbench/matching.hpp"
#include "regbench/metrics.hpp"
#include "regbench/pipeline.hpp"
#include "regbench/retrieval.hpp"

namespace regbench {

// Axis value lists for the protocol grid plus the matcher list. Expansion is
// the full cross-product.
struct SweepGrid {
    std::vector<NormalizationKind> normalizations{NormalizationKind::identity};
    std::vector<int> max_dimensions{2048};
    std::vector<int> tile_sizes{768};
    std::vector<int> tile_overlaps{256};
    std::vector<GeometryModel> geometries{GeometryModel::affine};
    std::vector<double> thresholds{10.0};
    std::vector<int> min_inlier_counts{6};
    std::vector<int> keypoint_budgets{4096};
    std::vector<std::uint64_t> seeds{0};
    std::vector<MatcherSpec> matchers{MatcherSpec{}};
};

struct SweepRun {
    ProtocolConfig config;
    MatcherSpec matcher;
};

// Deterministic lexicographic expansion: matcher outermost, then the config
// axes in canonical key order. Throws EmptyAxis when any axis is empty.
std::vector<SweepRun> expand_grid(const SweepGrid& grid);

// Flat key = value grid file; values split on commas except for `matcher`
// lines, which hold one matcher each and accumulate. Unknown keys are
// rejected. '#' starts a comment.
SweepGrid load_grid(const std::string& path);

struct RunAggregate {
    std::string config_key;
    std::string matcher;
    MetricSummary metrics;
    std::optional<RetrievalSummary> retrieval;
};

struct SweepOutcome {
    std::vector<RunAggregate> aggregates;
    std::vector<std::vector<PairResult>> pair_results;  // [run][pair]
};

struct SweepOptions {
    std::string dump_tiles_dir;
    double external_timeout_s = 120.0;
};

// Executes every run over the manifest and writes, under output_dir:
//   runs/run_NNNN/pairs.csv + aggregate.json (+ queries.csv for retrieval)
//   run_index.csv, ranking.csv, timing.log
// All primary reports are byte-reproducible; wall-clock measurements go to
// timing.log only. Per-pair errors become Failed rows and never abort the
// sweep.
SweepOutcome run_sweep(const SweepGrid& grid, const Manifest& manifest,
                       const std::string& output_dir, const SweepOptions& options = {});

// Per matcher, the aggregate minimizing mean error (ties: higher Success@10,
// lower failure rate, then canonical key), returned in ascending mean-error
// order.
std::vector<RunAggregate> best_per_matcher(std::span<const RunAggregate> aggregates);

// Rebuilds ranking.csv and aggregates.csv from the per-run aggregate.json
// files of a finished sweep directory.
void reaggregate_reports(const std::string& output_dir);

}  // namespace regbench
