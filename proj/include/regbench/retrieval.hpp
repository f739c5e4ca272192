#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "regbench/geometry.hpp"
#include "regbench/image.hpp"
#include "regbench/matching.hpp"

namespace regbench {

// One query's scored candidate pool. Candidate ids are pool positions;
// exactly one candidate is the positive.
struct RetrievalQuery {
    std::string query_id;
    std::vector<int> candidate_ids;
    std::vector<bool> is_positive;
    std::vector<int> scores;  // RANSAC inlier counts
};

struct RetrievalSummary {
    double auroc = 0.0;
    double auprc = 0.0;
    std::map<int, double> recall_at;
};

// Matches the query against every candidate and fits an affine model via
// RANSAC; the score is the inlier count, zero when the fit fails or too few
// correspondences exist.
std::vector<int> score_candidates(const GrayImage& query, std::span<const GrayImage> candidates,
                                  const MatcherSpec& matcher, const RansacParams& ransac);

// Mann-Whitney statistic with half credit for ties, pooled over all scores.
double auroc(std::span<const double> scores_pos, std::span<const double> scores_neg);

// Area under the precision-recall curve by descending-score sweep with step
// interpolation; tied scores collapse into one threshold group.
double auprc(std::span<const double> scores_pos, std::span<const double> scores_neg);

// Macro Recall@K: fraction of queries whose positive ranks in the top K by
// descending score, ties broken by ascending candidate id.
std::map<int, double> recall_at_k(std::span<const RetrievalQuery> queries,
                                  std::span<const int> ks);

// Pooled AUROC/AUPRC plus macro Recall@K over the given cutoffs.
RetrievalSummary summarize_retrieval(std::span<const RetrievalQuery> queries,
                                     std::span<const int> ks);

}  // namespace regbench
