#pragma once

#include <map>
#include <span>
#include <vector>

#include "regbench/pipeline.hpp"

namespace regbench {

struct MetricSummary {
    double mean_error = 0.0;                // undefined when no_evaluable_points
    std::map<double, double> success_at;    // tau -> fraction of points with error < tau
    double failure_rate = 0.0;
    int pair_count = 0;
    long evaluated_point_count = 0;
    bool no_evaluable_points = false;
};

// Point-level aggregation over non-failed pairs: mean over all tie-point
// errors, Success@tau as the fraction strictly below each threshold, failure
// rate as failed pairs over all pairs. When every pair failed the summary is
// flagged and carries failure_rate only.
MetricSummary summarize(std::span<const PairResult> results, std::span<const double> thresholds);

// Nondecreasing fraction of errors strictly below each tau; taus must be
// strictly increasing. Empty error lists yield all zeros.
std::vector<double> success_curve(std::span<const double> errors, std::span<const double> taus);

}  // namespace regbench
