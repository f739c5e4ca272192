#include "regbench/retrieval.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "regbench/external_matcher.hpp"
#include "regbench/types.hpp"

namespace regbench {

std::vector<int> score_candidates(const GrayImage& query, std::span<const GrayImage> candidates,
                                  const MatcherSpec& matcher, const RansacParams& ransac) {
    if (candidates.empty()) throw std::invalid_argument("empty candidate pool");
    std::vector<int> scores(candidates.size(), 0);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const std::vector<Correspondence> corrs = match_tiles(query, candidates[i], matcher);
        try {
            const FitResult fit = ransac_fit(corrs, GeometryModel::affine, ransac);
            scores[i] = fit.inlier_count;
        } catch (const FitFailure&) {
            scores[i] = 0;
        }
    }
    return scores;
}

double auroc(std::span<const double> scores_pos, std::span<const double> scores_neg) {
    if (scores_pos.empty() || scores_neg.empty())
        throw std::invalid_argument("auroc needs nonempty positive and negative score lists");

    // Midrank formulation of the Mann-Whitney statistic; the O(n^2) pairwise
    // count lives in the tests as the independent oracle.
    struct Entry {
        double score;
        bool positive;
    };
    std::vector<Entry> entries;
    entries.reserve(scores_pos.size() + scores_neg.size());
    for (double s : scores_pos) entries.push_back({s, true});
    for (double s : scores_neg) entries.push_back({s, false});
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.score < b.score; });

    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < entries.size()) {
        std::size_t j = i;
        while (j < entries.size() && entries[j].score == entries[i].score) ++j;
        const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (std::size_t k = i; k < j; ++k)
            if (entries[k].positive) rank_sum_pos += midrank;
        i = j;
    }
    const double n_pos = static_cast<double>(scores_pos.size());
    const double n_neg = static_cast<double>(scores_neg.size());
    return (rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

double auprc(std::span<const double> scores_pos, std::span<const double> scores_neg) {
    if (scores_pos.empty() || scores_neg.empty())
        throw std::invalid_argument("auprc needs nonempty positive and negative score lists");

    struct Entry {
        double score;
        bool positive;
    };
    std::vector<Entry> entries;
    entries.reserve(scores_pos.size() + scores_neg.size());
    for (double s : scores_pos) entries.push_back({s, true});
    for (double s : scores_neg) entries.push_back({s, false});
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.score > b.score; });

    const double n_pos = static_cast<double>(scores_pos.size());
    double area = 0.0;
    double prev_recall = 0.0;
    long tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < entries.size()) {
        // All scores tied at this threshold enter together.
        std::size_t j = i;
        while (j < entries.size() && entries[j].score == entries[i].score) ++j;
        for (std::size_t k = i; k < j; ++k) {
            if (entries[k].positive)
                ++tp;
            else
                ++fp;
        }
        const double recall = static_cast<double>(tp) / n_pos;
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j;
    }
    return area;
}

namespace {

// 0-based rank of the positive under descending score, ties by ascending
// candidate id.
int positive_rank(const RetrievalQuery& query) {
    const std::size_t n = query.scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (query.scores[a] != query.scores[b]) return query.scores[a] > query.scores[b];
        return query.candidate_ids[a] < query.candidate_ids[b];
    });
    for (std::size_t r = 0; r < n; ++r)
        if (query.is_positive[order[r]]) return static_cast<int>(r);
    return static_cast<int>(n);
}

}  // namespace

std::map<int, double> recall_at_k(std::span<const RetrievalQuery> queries,
                                  std::span<const int> ks) {
    if (queries.empty()) throw std::invalid_argument("recall_at_k needs at least one query");
    for (int k : ks)
        if (k < 1) throw std::invalid_argument("recall cutoffs must be >= 1");

    std::map<int, double> recall;
    std::vector<int> ranks;
    ranks.reserve(queries.size());
    for (const auto& q : queries) ranks.push_back(positive_rank(q));
    for (int k : ks) {
        long hits = 0;
        for (int r : ranks)
            if (r < k) ++hits;
        recall[k] = static_cast<double>(hits) / static_cast<double>(queries.size());
    }
    return recall;
}

RetrievalSummary summarize_retrieval(std::span<const RetrievalQuery> queries,
                                     std::span<const int> ks) {
    std::vector<double> pos, neg;
    for (const auto& q : queries) {
        for (std::size_t i = 0; i < q.scores.size(); ++i) {
            if (q.is_positive[i])
                pos.push_back(q.scores[i]);
            else
                neg.push_back(q.scores[i]);
        }
    }
    RetrievalSummary summary;
    summary.auroc = auroc(pos, neg);
    summary.auprc = auprc(pos, neg);
    summary.recall_at = recall_at_k(queries, ks);
    return summary;
}

}  // namespace regbench
