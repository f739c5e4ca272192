#include "regbench/metrics.hpp"

#include <stdexcept>

namespace regbench {

MetricSummary summarize(std::span<const PairResult> results, std::span<const double> thresholds) {
    if (results.empty()) throw std::invalid_argument("summarize needs at least one pair result");

    MetricSummary summary;
    summary.pair_count = static_cast<int>(results.size());

    int failed = 0;
    double error_sum = 0.0;
    std::map<double, long> below;
    for (double tau : thresholds) below[tau] = 0;

    for (const auto& result : results) {
        if (result.status == PairStatus::failed) {
            ++failed;
            continue;
        }
        for (double err : result.tiepoint_errors) {
            ++summary.evaluated_point_count;
            error_sum += err;
            for (auto& [tau, count] : below)
                if (err < tau) ++count;
        }
    }

    summary.failure_rate = static_cast<double>(failed) / summary.pair_count;
    if (summary.evaluated_point_count == 0) {
        summary.no_evaluable_points = true;
        for (double tau : thresholds) summary.success_at[tau] = 0.0;
        return summary;
    }
    summary.mean_error = error_sum / static_cast<double>(summary.evaluated_point_count);
    for (const auto& [tau, count] : below)
        summary.success_at[tau] =
            static_cast<double>(count) / static_cast<double>(summary.evaluated_point_count);
    return summary;
}

std::vector<double> success_curve(std::span<const double> errors, std::span<const double> taus) {
    for (std::size_t i = 1; i < taus.size(); ++i)
        if (taus[i] <= taus[i - 1])
            throw std::invalid_argument("success_curve taus must be strictly increasing");
    std::vector<double> curve(taus.size(), 0.0);
    if (errors.empty()) return curve;
    for (std::size_t i = 0; i < taus.size(); ++i) {
        long count = 0;
        for (double err : errors)
            if (err < taus[i]) ++count;
        curve[i] = static_cast<double>(count) / static_cast<double>(errors.size());
    }
    return curve;
}

}  // namespace regbench
