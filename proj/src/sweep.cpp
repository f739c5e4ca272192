#include "regbench/sweep.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>

#include "regbench/image_io.hpp"
#include "regbench/rng.hpp"

namespace regbench {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_fixed(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::string run_dir_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "run_%04zu", index);
    return buf;
}

std::vector<std::string> split_values(const std::string& text) {
    std::vector<std::string> out;
    std::string current;
    for (char c : text) {
        if (c == ',' || c == ' ' || c == '\t') {
            if (!current.empty()) out.push_back(std::move(current));
            current.clear();
        } else {
            current += c;
        }
    }
    if (!current.empty()) out.push_back(std::move(current));
    return out;
}

json metrics_to_json(const MetricSummary& m) {
    json success = json::object();
    for (const auto& [tau, fraction] : m.success_at) {
        char key[32];
        std::snprintf(key, sizeof(key), "%g", tau);
        success[key] = fraction;
    }
    json out = {
        {"pair_count", m.pair_count},
        {"evaluated_point_count", m.evaluated_point_count},
        {"failure_rate", m.failure_rate},
        {"success_at", success},
    };
    if (m.no_evaluable_points)
        out["mean_error"] = nullptr;
    else
        out["mean_error"] = m.mean_error;
    return out;
}

json retrieval_to_json(const RetrievalSummary& r) {
    json recall = json::object();
    for (const auto& [k, fraction] : r.recall_at) recall[std::to_string(k)] = fraction;
    return {{"auroc", r.auroc}, {"auprc", r.auprc}, {"recall_at", recall}};
}

}  // namespace

std::vector<SweepRun> expand_grid(const SweepGrid& grid) {
    auto check = [](const auto& axis, const char* name) {
        if (axis.empty()) throw EmptyAxis(std::string("empty sweep axis: ") + name);
    };
    check(grid.normalizations, "normalization");
    check(grid.max_dimensions, "max_dimension");
    check(grid.tile_sizes, "tile_size");
    check(grid.tile_overlaps, "tile_overlap");
    check(grid.geometries, "geometry");
    check(grid.thresholds, "ransac_threshold");
    check(grid.min_inlier_counts, "min_inliers");
    check(grid.keypoint_budgets, "keypoint_budget");
    check(grid.seeds, "seed");
    check(grid.matchers, "matcher");

    std::vector<SweepRun> runs;
    for (const auto& matcher : grid.matchers)
        for (auto norm : grid.normalizations)
            for (int maxdim : grid.max_dimensions)
                for (int tile : grid.tile_sizes)
                    for (int overlap : grid.tile_overlaps)
                        for (auto geometry : grid.geometries)
                            for (double threshold : grid.thresholds)
                                for (int min_inl : grid.min_inlier_counts)
                                    for (int budget : grid.keypoint_budgets)
                                        for (std::uint64_t seed : grid.seeds) {
                                            SweepRun run;
                                            run.config.normalization = norm;
                                            run.config.max_dimension = maxdim;
                                            run.config.tile_size = tile;
                                            run.config.tile_overlap = overlap;
                                            run.config.geometry = geometry;
                                            run.config.ransac_threshold = threshold;
                                            run.config.min_inliers = min_inl;
                                            run.config.keypoint_budget = budget;
                                            run.config.seed = seed;
                                            run.matcher = matcher;
                                            run.matcher.keypoint_budget = budget;
                                            runs.push_back(std::move(run));
                                        }
    return runs;
}

SweepGrid load_grid(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open grid " + path);

    SweepGrid grid;
    grid.matchers.clear();
    bool saw_matcher = false;

    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            std::istringstream check(line);
            std::string leftovers;
            if (check >> leftovers)
                throw IoError(path + ":" + std::to_string(line_number) + ": expected key = values");
            continue;
        }
        std::istringstream key_stream(line.substr(0, eq));
        std::string key;
        key_stream >> key;
        const std::string value_text = line.substr(eq + 1);

        auto fail = [&](const std::string& why) -> IoError {
            return IoError(path + ":" + std::to_string(line_number) + ": " + why);
        };

        if (key == "matcher") {
            // One matcher per line; external commands may contain spaces.
            std::string value = value_text;
            const auto first = value.find_first_not_of(" \t");
            if (first == std::string::npos) throw fail("matcher line has no value");
            const auto last = value.find_last_not_of(" \t");
            value = value.substr(first, last - first + 1);
            grid.matchers.push_back(matcher_spec_from_string(value));
            saw_matcher = true;
            continue;
        }

        const std::vector<std::string> values = split_values(value_text);
        if (values.empty()) throw fail("no values for key " + key);
        try {
            if (key == "normalization") {
                grid.normalizations.clear();
                for (const auto& v : values)
                    grid.normalizations.push_back(normalization_from_string(v));
            } else if (key == "max_dimension") {
                grid.max_dimensions.clear();
                for (const auto& v : values) grid.max_dimensions.push_back(std::stoi(v));
            } else if (key == "tile_size") {
                grid.tile_sizes.clear();
                for (const auto& v : values) grid.tile_sizes.push_back(std::stoi(v));
            } else if (key == "tile_overlap") {
                grid.tile_overlaps.clear();
                for (const auto& v : values) grid.tile_overlaps.push_back(std::stoi(v));
            } else if (key == "geometry") {
                grid.geometries.clear();
                for (const auto& v : values)
                    grid.geometries.push_back(geometry_model_from_string(v));
            } else if (key == "ransac_threshold") {
                grid.thresholds.clear();
                for (const auto& v : values) grid.thresholds.push_back(std::stod(v));
            } else if (key == "min_inliers") {
                grid.min_inlier_counts.clear();
                for (const auto& v : values) grid.min_inlier_counts.push_back(std::stoi(v));
            } else if (key == "keypoint_budget") {
                grid.keypoint_budgets.clear();
                for (const auto& v : values) grid.keypoint_budgets.push_back(std::stoi(v));
            } else if (key == "seed") {
                grid.seeds.clear();
                for (const auto& v : values) grid.seeds.push_back(std::stoull(v));
            } else {
                throw fail("unknown grid key \"" + key + "\"");
            }
        } catch (const std::invalid_argument& e) {
            throw fail(e.what());
        } catch (const std::out_of_range&) {
            throw fail("value out of range for key " + key);
        }
    }
    if (!saw_matcher) grid.matchers.push_back(MatcherSpec{});
    return grid;
}

namespace {

struct WorkItem {
    std::size_t run_index;
    bool is_retrieval;
    std::size_t record_index;
};

std::vector<int> recall_cutoffs(const Manifest& manifest) {
    int max_pool = 0;
    for (const auto& record : manifest.retrieval)
        max_pool = std::max(max_pool, static_cast<int>(record.candidate_paths.size()));
    std::vector<int> ks;
    for (int k : {1, 5, 10})
        if (k <= max_pool) ks.push_back(k);
    if (max_pool >= 1 && (ks.empty() || ks.back() != max_pool)) ks.push_back(max_pool);
    return ks;
}

void write_pairs_csv(const fs::path& path, const std::string& config_key,
                     const std::string& matcher, std::span<const PairResult> results) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "pair_id,config_key,matcher,status,correspondences,inliers,mean_err_px,s_at_5,"
           "s_at_10,wall_clock_s\n";
    for (const auto& r : results) {
        std::string mean = "-", s5 = "-", s10 = "-";
        if (r.status == PairStatus::ok && !r.tiepoint_errors.empty()) {
            double sum = 0.0;
            long below5 = 0, below10 = 0;
            for (double e : r.tiepoint_errors) {
                sum += e;
                if (e < 5.0) ++below5;
                if (e < 10.0) ++below10;
            }
            const double n = static_cast<double>(r.tiepoint_errors.size());
            mean = format_fixed(sum / n);
            s5 = format_fixed(below5 / n);
            s10 = format_fixed(below10 / n);
        }
        // Wall clock is measured but isolated to timing.log so the primary
        // reports stay byte-reproducible across reruns and worker counts.
        out << r.pair_id << ',' << config_key << ',' << matcher << ','
            << (r.status == PairStatus::ok ? "ok" : "failed") << ',' << r.correspondence_count
            << ',' << r.inlier_count << ',' << mean << ',' << s5 << ',' << s10 << ",-\n";
    }
}

void write_queries_csv(const fs::path& path, std::span<const RetrievalQuery> queries) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "query_id,positive_rank,positive_score,best_negative_score\n";
    for (const auto& q : queries) {
        int positive_score = 0, positive_id = 0, best_negative = 0;
        for (std::size_t i = 0; i < q.scores.size(); ++i) {
            if (q.is_positive[i]) {
                positive_score = q.scores[i];
                positive_id = q.candidate_ids[i];
            } else {
                best_negative = std::max(best_negative, q.scores[i]);
            }
        }
        int rank = 0;
        for (std::size_t i = 0; i < q.scores.size(); ++i) {
            if (q.is_positive[i]) continue;
            if (q.scores[i] > positive_score ||
                (q.scores[i] == positive_score && q.candidate_ids[i] < positive_id))
                ++rank;
        }
        out << q.query_id << ',' << rank << ',' << positive_score << ',' << best_negative << "\n";
    }
}

void write_ranking_csv(const fs::path& path, std::span<const RunAggregate> rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "matcher,config_key,mean_err_px,s_at_5,s_at_10,failure_rate\n";
    for (const auto& row : rows) {
        const std::string mean =
            row.metrics.no_evaluable_points ? "-" : format_fixed(row.metrics.mean_error);
        auto success = [&](double tau) {
            const auto it = row.metrics.success_at.find(tau);
            return it == row.metrics.success_at.end() ? std::string("-")
                                                      : format_fixed(it->second);
        };
        out << row.matcher << ',' << row.config_key << ',' << mean << ',' << success(5.0) << ','
            << success(10.0) << ',' << format_fixed(row.metrics.failure_rate) << "\n";
    }
}

}  // namespace

SweepOutcome run_sweep(const SweepGrid& grid, const Manifest& manifest,
                       const std::string& output_dir, const SweepOptions& options) {
    if (manifest.pairs.empty() && manifest.retrieval.empty())
        throw std::invalid_argument("manifest holds no records");
    const std::vector<SweepRun> runs = expand_grid(grid);
    for (const auto& run : runs) run.config.validate();

    const fs::path out_root(output_dir);
    fs::create_directories(out_root / "runs");

    // One shared session per distinct external command; requests serialize
    // inside the session.
    std::map<std::string, std::unique_ptr<ExternalMatcherSession>> sessions;
    for (const auto& run : runs)
        if (run.matcher.kind == MatcherSpec::Kind::external &&
            !sessions.count(run.matcher.external_command))
            sessions.emplace(run.matcher.external_command,
                             std::make_unique<ExternalMatcherSession>(
                                 run.matcher.external_command, options.external_timeout_s));

    const std::size_t n_runs = runs.size();
    const std::size_t n_pairs = manifest.pairs.size();
    const std::size_t n_queries = manifest.retrieval.size();

    SweepOutcome outcome;
    outcome.pair_results.assign(n_runs, std::vector<PairResult>(n_pairs));
    std::vector<std::vector<RetrievalQuery>> query_results(
        n_runs, std::vector<RetrievalQuery>(n_queries));

    std::vector<WorkItem> work;
    work.reserve(n_runs * (n_pairs + n_queries));
    for (std::size_t r = 0; r < n_runs; ++r) {
        for (std::size_t p = 0; p < n_pairs; ++p) work.push_back({r, false, p});
        for (std::size_t q = 0; q < n_queries; ++q) work.push_back({r, true, q});
    }

    const std::int64_t n_work = static_cast<std::int64_t>(work.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t w = 0; w < n_work; ++w) {
        const WorkItem& item = work[w];
        const SweepRun& run = runs[item.run_index];
        RunOptions run_options;
        run_options.dump_tiles_dir = options.dump_tiles_dir;
        run_options.external_timeout_s = options.external_timeout_s;
        if (run.matcher.kind == MatcherSpec::Kind::external)
            run_options.session = sessions.at(run.matcher.external_command).get();

        if (!item.is_retrieval) {
            const ScenePairRecord& entry = manifest.pairs[item.record_index];
            PairResult result;
            try {
                if (!entry.tiepoints_path.empty())
                    result = run_pair(entry, run.config, run.matcher, run_options);
                else if (entry.gt_affine)
                    result = run_pair_corners(entry, run.config, run.matcher, run_options);
                else
                    result = run_pair(entry, run.config, run.matcher, run_options);
            } catch (const std::exception& e) {
                result = PairResult{};
                result.pair_id = entry.pair_id;
                result.status = PairStatus::failed;
                result.failure_reason = e.what();
            }
            outcome.pair_results[item.run_index][item.record_index] = std::move(result);
        } else {
            const RetrievalRecord& record = manifest.retrieval[item.record_index];
            RetrievalQuery query;
            query.query_id = record.query_id;
            try {
                // Retrieval patches run stage 1 (normalize + resize cap) but
                // are matched whole, never tiled.
                const GrayImage query_img = resize_long_side(
                    normalize(read_gray(record.query_path), run.config.normalization),
                    run.config.max_dimension).first;
                std::vector<GrayImage> candidates;
                candidates.reserve(record.candidate_paths.size());
                for (const auto& path : record.candidate_paths)
                    candidates.push_back(resize_long_side(
                        normalize(read_gray(path), run.config.normalization),
                        run.config.max_dimension).first);

                // Pair-level ranking always fits an affine model at the 3 px
                // retrieval threshold, whatever the run's registration
                // geometry is.
                RansacParams params = run.config.ransac_params(0);
                params.reproj_threshold = 3.0;
                params.min_inliers = std::max(minimal_sample_size(GeometryModel::affine),
                                              run.config.min_inliers);
                MatcherSpec matcher = run.matcher;
                const int n_candidates = static_cast<int>(candidates.size());
                query.scores.assign(n_candidates, 0);
                query.candidate_ids.resize(n_candidates);
                query.is_positive.assign(n_candidates, false);
                for (int c = 0; c < n_candidates; ++c) {
                    query.candidate_ids[c] = c;
                    RansacParams per_candidate = params;
                    per_candidate.seed = mix_seed(run.config.seed, fnv1a64(record.query_id),
                                                  static_cast<std::uint64_t>(c) + 1);
                    std::vector<Correspondence> corrs;
                    if (matcher.kind == MatcherSpec::Kind::builtin) {
                        corrs = match_tiles_builtin(query_img, candidates[c], matcher);
                    } else {
                        corrs = match_tiles(query_img, candidates[c], matcher);
                    }
                    try {
                        query.scores[c] =
                            ransac_fit(corrs, GeometryModel::affine, per_candidate).inlier_count;
                    } catch (const FitFailure&) {
                        query.scores[c] = 0;
                    }
                }
                query.is_positive[record.positive_index] = true;
            } catch (const std::exception&) {
                // Unreadable retrieval assets leave all-zero scores.
                const int n_candidates = static_cast<int>(record.candidate_paths.size());
                query.scores.assign(n_candidates, 0);
                query.candidate_ids.resize(n_candidates);
                for (int c = 0; c < n_candidates; ++c) query.candidate_ids[c] = c;
                query.is_positive.assign(n_candidates, false);
                if (record.positive_index >= 0 && record.positive_index < n_candidates)
                    query.is_positive[record.positive_index] = true;
            }
            query_results[item.run_index][item.record_index] = std::move(query);
        }
    }

    // Serial, ordered report assembly.
    const std::vector<int> ks = recall_cutoffs(manifest);
    const double thresholds[2] = {5.0, 10.0};
    std::ofstream index_csv(out_root / "run_index.csv");
    if (!index_csv) throw IoError("cannot write run_index.csv under " + output_dir);
    index_csv << "run,config_key,matcher\n";
    std::ofstream timing(out_root / "timing.log");

    for (std::size_t r = 0; r < n_runs; ++r) {
        const std::string config_key = runs[r].config.key();
        const std::string matcher = runs[r].matcher.label();
        const fs::path run_dir = out_root / "runs" / run_dir_name(r);
        fs::create_directories(run_dir);
        index_csv << run_dir_name(r) << ',' << config_key << ',' << matcher << "\n";

        RunAggregate aggregate;
        aggregate.config_key = config_key;
        aggregate.matcher = matcher;

        json doc = {{"config_key", config_key}, {"matcher", matcher}};
        if (!manifest.pairs.empty()) {
            write_pairs_csv(run_dir / "pairs.csv", config_key, matcher, outcome.pair_results[r]);
            aggregate.metrics = summarize(outcome.pair_results[r], thresholds);
            doc["metrics"] = metrics_to_json(aggregate.metrics);
            for (const auto& pr : outcome.pair_results[r])
                timing << config_key << ',' << matcher << ',' << pr.pair_id << ','
                       << format_fixed(pr.wall_clock) << "\n";
            double clock_sum = 0.0;
            for (const auto& pr : outcome.pair_results[r]) clock_sum += pr.wall_clock;
            timing << config_key << ',' << matcher << ",MEAN,"
                   << format_fixed(clock_sum / static_cast<double>(n_pairs)) << "\n";
        } else {
            aggregate.metrics.no_evaluable_points = true;
            doc["metrics"] = nullptr;
        }
        if (!manifest.retrieval.empty()) {
            write_queries_csv(run_dir / "queries.csv", query_results[r]);
            aggregate.retrieval = summarize_retrieval(query_results[r], ks);
            doc["retrieval"] = retrieval_to_json(*aggregate.retrieval);
        }

        std::ofstream aggregate_out(run_dir / "aggregate.json");
        if (!aggregate_out) throw IoError("cannot write aggregate.json under " + output_dir);
        aggregate_out << doc.dump(2) << "\n";
        outcome.aggregates.push_back(std::move(aggregate));
    }

    if (!manifest.pairs.empty())
        write_ranking_csv(out_root / "ranking.csv", best_per_matcher(outcome.aggregates));
    return outcome;
}

std::vector<RunAggregate> best_per_matcher(std::span<const RunAggregate> aggregates) {
    auto sort_key = [](const RunAggregate& a) {
        const double mean =
            a.metrics.no_evaluable_points ? std::numeric_limits<double>::infinity()
                                          : a.metrics.mean_error;
        const auto s10 = a.metrics.success_at.find(10.0);
        const double success10 = s10 == a.metrics.success_at.end() ? 0.0 : s10->second;
        return std::make_tuple(mean, -success10, a.metrics.failure_rate, a.config_key);
    };

    std::map<std::string, const RunAggregate*> best;
    for (const auto& aggregate : aggregates) {
        auto [it, inserted] = best.emplace(aggregate.matcher, &aggregate);
        if (!inserted && sort_key(aggregate) < sort_key(*it->second)) it->second = &aggregate;
    }
    std::vector<RunAggregate> rows;
    rows.reserve(best.size());
    for (const auto& [matcher, aggregate] : best) rows.push_back(*aggregate);
    std::sort(rows.begin(), rows.end(), [&](const RunAggregate& a, const RunAggregate& b) {
        return sort_key(a) < sort_key(b);
    });
    return rows;
}

void reaggregate_reports(const std::string& output_dir) {
    const fs::path out_root(output_dir);
    std::ifstream index(out_root / "run_index.csv");
    if (!index) throw IoError("no run_index.csv under " + output_dir);

    std::vector<RunAggregate> aggregates;
    std::string line;
    std::getline(index, line);  // header
    while (std::getline(index, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        const std::string run_name = line.substr(0, comma);
        std::ifstream in(out_root / "runs" / run_name / "aggregate.json");
        if (!in) throw IoError("missing aggregate.json for " + run_name);
        json doc = json::parse(in);

        RunAggregate aggregate;
        aggregate.config_key = doc.at("config_key").get<std::string>();
        aggregate.matcher = doc.at("matcher").get<std::string>();
        if (doc.contains("metrics") && !doc["metrics"].is_null()) {
            const json& m = doc["metrics"];
            aggregate.metrics.pair_count = m.at("pair_count").get<int>();
            aggregate.metrics.evaluated_point_count = m.at("evaluated_point_count").get<long>();
            aggregate.metrics.failure_rate = m.at("failure_rate").get<double>();
            if (m.at("mean_error").is_null()) {
                aggregate.metrics.no_evaluable_points = true;
            } else {
                aggregate.metrics.mean_error = m.at("mean_error").get<double>();
            }
            for (const auto& [key, value] : m.at("success_at").items())
                aggregate.metrics.success_at[std::stod(key)] = value.get<double>();
        } else {
            aggregate.metrics.no_evaluable_points = true;
        }
        aggregates.push_back(std::move(aggregate));
    }

    std::ofstream all(out_root / "aggregates.csv");
    if (!all) throw IoError("cannot write aggregates.csv under " + output_dir);
    all << "matcher,config_key,mean_err_px,s_at_5,s_at_10,failure_rate\n";
    for (const auto& row : aggregates) {
        const std::string mean =
            row.metrics.no_evaluable_points ? "-" : format_fixed(row.metrics.mean_error);
        auto success = [&](double tau) {
            const auto it = row.metrics.success_at.find(tau);
            return it == row.metrics.success_at.end() ? std::string("-")
                                                      : format_fixed(it->second);
        };
        all << row.matcher << ',' << row.config_key << ',' << mean << ',' << success(5.0) << ','
            << success(10.0) << ',' << format_fixed(row.metrics.failure_rate) << "\n";
    }
    write_ranking_csv(out_root / "ranking.csv", best_per_matcher(aggregates));
}

}  // namespace regbench
