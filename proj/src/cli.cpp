#include "regbench/cli.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <thread>

#include "regbench/manifest.hpp"
#include "regbench/rng.hpp"
#include "regbench/sweep.hpp"
#include "regbench/synthgen.hpp"

namespace regbench {

namespace {

namespace fs = std::filesystem;

struct ProtocolFlags {
    std::string normalization = "identity";
    int max_dimension = 2048;
    int tile_size = 768;
    int tile_overlap = 256;
    std::string geometry = "affine";
    double ransac_threshold = 10.0;
    int min_inliers = 6;
    int keypoint_budget = 4096;
    std::uint64_t seed = 0;
    std::string matcher = "builtin";

    ProtocolConfig to_config() const {
        ProtocolConfig config;
        config.normalization = normalization_from_string(normalization);
        config.max_dimension = max_dimension;
        config.tile_size = tile_size;
        config.tile_overlap = tile_overlap;
        config.geometry = geometry_model_from_string(geometry);
        config.ransac_threshold = ransac_threshold;
        config.min_inliers = min_inliers;
        config.keypoint_budget = keypoint_budget;
        config.seed = seed;
        config.validate();
        return config;
    }
};

struct CommonFlags {
    std::string manifest_path;
    std::string output_dir = "out";
    int jobs = 0;
    bool dump_tiles = false;
    bool dry_run = false;
    double external_timeout = 120.0;
};

void add_protocol_options(CLI::App* cmd, ProtocolFlags& flags, bool with_geometry = true) {
    cmd->add_option("--normalization", flags.normalization, "Stage-1 normalization")
        ->check(CLI::IsMember({"identity", "percentile", "zscore", "clahe"}))
        ->capture_default_str();
    cmd->add_option("--max-dimension", flags.max_dimension, "Resize cap for the image long side")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--tile-size", flags.tile_size, "Tile edge length in resized pixels")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--tile-overlap", flags.tile_overlap, "Tile overlap in resized pixels")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    if (with_geometry)
        cmd->add_option("--geometry", flags.geometry, "Robust-fit geometry model")
            ->check(CLI::IsMember({"affine", "homography"}))
            ->capture_default_str();
    cmd->add_option("--ransac-threshold", flags.ransac_threshold,
                    "RANSAC reprojection threshold in full-resolution pixels")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--min-inliers", flags.min_inliers, "Minimum consensus size")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--keypoint-budget", flags.keypoint_budget, "Keypoints per tile")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--seed", flags.seed, "Global random seed")->capture_default_str();
    cmd->add_option("--matcher", flags.matcher,
                    "Correspondence source: builtin or external:<command>")
        ->capture_default_str();
}

void add_common_options(CLI::App* cmd, CommonFlags& flags, bool manifest_required = true) {
    auto* manifest =
        cmd->add_option("--manifest", flags.manifest_path, "Scene-pair manifest file");
    if (manifest_required) manifest->required();
    cmd->add_option("--output-dir", flags.output_dir, "Report directory")->capture_default_str();
    cmd->add_option("--jobs", flags.jobs, "Worker count (0 = available parallelism)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    cmd->add_flag("--dump-tiles", flags.dump_tiles, "Write tile crops as PNG under the reports");
    cmd->add_flag("--dry-run", flags.dry_run, "Print the expanded run list without executing");
    cmd->add_option("--external-timeout", flags.external_timeout,
                    "Per-request timeout for external matchers, seconds")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
}

void apply_jobs(int jobs) {
    if (jobs <= 0) {
        const unsigned hw = std::thread::hardware_concurrency();
        jobs = hw == 0 ? 1 : static_cast<int>(hw);
    }
    omp_set_num_threads(jobs);
}

SweepGrid single_run_grid(const ProtocolConfig& config, const MatcherSpec& matcher) {
    SweepGrid grid;
    grid.normalizations = {config.normalization};
    grid.max_dimensions = {config.max_dimension};
    grid.tile_sizes = {config.tile_size};
    grid.tile_overlaps = {config.tile_overlap};
    grid.geometries = {config.geometry};
    grid.thresholds = {config.ransac_threshold};
    grid.min_inlier_counts = {config.min_inliers};
    grid.keypoint_budgets = {config.keypoint_budget};
    grid.seeds = {config.seed};
    grid.matchers = {matcher};
    return grid;
}

void print_dry_run(const std::vector<SweepRun>& runs) {
    for (const auto& run : runs)
        std::cout << run.config.key() << " matcher=" << run.matcher.label() << "\n";
    std::cout << runs.size() << " runs\n";
}

void print_aggregates(const SweepOutcome& outcome) {
    for (const auto& aggregate : outcome.aggregates) {
        std::cout << aggregate.config_key << " matcher=" << aggregate.matcher << "\n";
        if (!aggregate.metrics.no_evaluable_points || aggregate.metrics.pair_count > 0) {
            char line[256];
            if (aggregate.metrics.no_evaluable_points) {
                std::snprintf(line, sizeof(line),
                              "  pairs=%d mean_err=- failure_rate=%.3f (no evaluable points)\n",
                              aggregate.metrics.pair_count, aggregate.metrics.failure_rate);
            } else {
                const auto s5 = aggregate.metrics.success_at.find(5.0);
                const auto s10 = aggregate.metrics.success_at.find(10.0);
                std::snprintf(line, sizeof(line),
                              "  pairs=%d points=%ld mean_err=%.3f s@5=%.3f s@10=%.3f "
                              "failure_rate=%.3f\n",
                              aggregate.metrics.pair_count,
                              aggregate.metrics.evaluated_point_count,
                              aggregate.metrics.mean_error,
                              s5 == aggregate.metrics.success_at.end() ? 0.0 : s5->second,
                              s10 == aggregate.metrics.success_at.end() ? 0.0 : s10->second,
                              aggregate.metrics.failure_rate);
            }
            std::cout << line;
        }
        if (aggregate.retrieval) {
            char line[256];
            std::snprintf(line, sizeof(line), "  auroc=%.4f auprc=%.4f", aggregate.retrieval->auroc,
                          aggregate.retrieval->auprc);
            std::cout << line;
            for (const auto& [k, v] : aggregate.retrieval->recall_at) {
                std::snprintf(line, sizeof(line), " r@%d=%.3f", k, v);
                std::cout << line;
            }
            std::cout << "\n";
        }
    }
}

struct SynthFlags {
    int scenes = 3;
    int width = 768;
    int height = 768;
    double speckle = 0.0;
    bool invert = false;
    int tiepoint_grid = 7;
    std::uint64_t seed = 0;
    std::string output_dir = "synth_out";
    int queries = 0;
    int pool_size = 13;
    double pool_speckle = 0.1;
    bool pool_invert = false;
};

int run_synth(const SynthFlags& flags) {
    fs::create_directories(flags.output_dir);
    Manifest manifest;
    for (int s = 0; s < flags.scenes; ++s) {
        SynthSpec spec;
        spec.width = flags.width;
        spec.height = flags.height;
        spec.texture_seed = mix_seed(flags.seed, static_cast<std::uint64_t>(s) + 1);
        spec.planted_transform = random_mild_affine(spec.texture_seed);
        spec.speckle_strength = flags.speckle;
        spec.invert_contrast = flags.invert;
        spec.tiepoint_grid = flags.tiepoint_grid;
        const SynthPair pair = generate_pair(spec);
        manifest.pairs.push_back(write_pair_fixture((fs::path(flags.output_dir) / "scenes").string(),
                                                    "scene_" + std::to_string(s), pair));
    }
    if (flags.queries > 0) {
        RetrievalPoolSpec pool_spec;
        pool_spec.n_queries = flags.queries;
        pool_spec.pool_size = flags.pool_size;
        pool_spec.seed = flags.seed;
        pool_spec.speckle_strength = flags.pool_speckle;
        pool_spec.invert_contrast = flags.pool_invert;
        const GeneratedPool pool = generate_retrieval_pool(pool_spec);
        auto records =
            write_retrieval_fixture((fs::path(flags.output_dir) / "retrieval").string(), pool);
        for (auto& record : records) manifest.retrieval.push_back(std::move(record));
    }

    // Manifest paths relative to its own directory travel with the fixture.
    const fs::path base = fs::absolute(flags.output_dir);
    Manifest relative = manifest;
    auto relativize = [&](std::string& path) {
        if (path.empty()) return;
        path = fs::relative(fs::absolute(path), base).string();
    };
    for (auto& pair : relative.pairs) {
        relativize(pair.optical_path);
        relativize(pair.sar_path);
        relativize(pair.tiepoints_path);
    }
    for (auto& record : relative.retrieval) {
        relativize(record.query_path);
        for (auto& path : record.candidate_paths) relativize(path);
    }
    const std::string manifest_path = (fs::path(flags.output_dir) / "manifest.txt").string();
    write_manifest(manifest_path, relative);
    std::cout << "wrote " << manifest.pairs.size() << " scene pairs and "
              << manifest.retrieval.size() << " retrieval queries\n"
              << "manifest: " << manifest_path << "\n";
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Deterministic cross-modal registration evaluation engine"};
    app.require_subcommand(1);

    ProtocolFlags run_protocol, sweep_protocol, retrieve_protocol;
    CommonFlags run_common, sweep_common, retrieve_common, report_common;
    std::string grid_path;
    SynthFlags synth_flags;

    auto* run_cmd = app.add_subcommand("run", "Evaluate one protocol configuration");
    add_protocol_options(run_cmd, run_protocol);
    add_common_options(run_cmd, run_common);
    run_cmd->set_config("--config", "", "Config file with flag defaults (key=value)");

    auto* sweep_cmd = app.add_subcommand("sweep", "Run a protocol grid");
    sweep_cmd->add_option("--grid", grid_path, "Grid file of axis value lists")->required();
    add_common_options(sweep_cmd, sweep_common);
    sweep_cmd->set_config("--config", "", "Config file with flag defaults (key=value)");

    auto* retrieve_cmd = app.add_subcommand("retrieve", "Rank retrieval pools by inlier count");
    retrieve_protocol.ransac_threshold = 3.0;  // pair-ranking default
    retrieve_protocol.min_inliers = 4;
    add_protocol_options(retrieve_cmd, retrieve_protocol, /*with_geometry=*/false);
    add_common_options(retrieve_cmd, retrieve_common);
    retrieve_cmd->set_config("--config", "", "Config file with flag defaults (key=value)");

    auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic fixtures with ground truth");
    synth_cmd->add_option("--scenes", synth_flags.scenes, "Scene pairs to generate")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    synth_cmd->add_option("--width", synth_flags.width, "Scene width")->capture_default_str();
    synth_cmd->add_option("--height", synth_flags.height, "Scene height")->capture_default_str();
    synth_cmd->add_option("--speckle", synth_flags.speckle, "Multiplicative speckle spread")
        ->capture_default_str();
    synth_cmd->add_flag("--invert", synth_flags.invert, "Invert SAR-side contrast");
    synth_cmd->add_option("--tiepoint-grid", synth_flags.tiepoint_grid, "Tie points per axis")
        ->capture_default_str();
    synth_cmd->add_option("--seed", synth_flags.seed, "Generator seed")->capture_default_str();
    synth_cmd->add_option("--output-dir", synth_flags.output_dir, "Fixture directory")
        ->capture_default_str();
    synth_cmd->add_option("--queries", synth_flags.queries, "Retrieval queries (0 = none)")
        ->capture_default_str();
    synth_cmd->add_option("--pool-size", synth_flags.pool_size, "Candidates per query")
        ->capture_default_str();
    synth_cmd->add_option("--pool-speckle", synth_flags.pool_speckle, "Query degradation spread")
        ->capture_default_str();
    synth_cmd->add_flag("--pool-invert", synth_flags.pool_invert, "Invert query contrast");

    auto* report_cmd = app.add_subcommand("report", "Re-aggregate reports from a sweep directory");
    report_cmd->add_option("--output-dir", report_common.output_dir, "Finished sweep directory")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (run_cmd->parsed() || retrieve_cmd->parsed()) {
            const bool is_retrieve = retrieve_cmd->parsed();
            const ProtocolFlags& protocol = is_retrieve ? retrieve_protocol : run_protocol;
            const CommonFlags& common = is_retrieve ? retrieve_common : run_common;
            apply_jobs(common.jobs);
            const ProtocolConfig config = protocol.to_config();
            const MatcherSpec matcher = [&] {
                MatcherSpec spec = matcher_spec_from_string(protocol.matcher);
                spec.keypoint_budget = protocol.keypoint_budget;
                return spec;
            }();
            const SweepGrid grid = single_run_grid(config, matcher);
            if (common.dry_run) {
                print_dry_run(expand_grid(grid));
                return 0;
            }
            const Manifest manifest = load_manifest(common.manifest_path);
            SweepOptions options;
            options.external_timeout_s = common.external_timeout;
            if (common.dump_tiles)
                options.dump_tiles_dir = (fs::path(common.output_dir) / "tiles").string();
            const SweepOutcome outcome =
                run_sweep(grid, manifest, common.output_dir, options);
            print_aggregates(outcome);
            return 0;
        }
        if (sweep_cmd->parsed()) {
            apply_jobs(sweep_common.jobs);
            const SweepGrid grid = load_grid(grid_path);
            if (sweep_common.dry_run) {
                print_dry_run(expand_grid(grid));
                return 0;
            }
            const Manifest manifest = load_manifest(sweep_common.manifest_path);
            SweepOptions options;
            options.external_timeout_s = sweep_common.external_timeout;
            if (sweep_common.dump_tiles)
                options.dump_tiles_dir = (fs::path(sweep_common.output_dir) / "tiles").string();
            const SweepOutcome outcome =
                run_sweep(grid, manifest, sweep_common.output_dir, options);
            print_aggregates(outcome);
            return 0;
        }
        if (synth_cmd->parsed()) return run_synth(synth_flags);
        if (report_cmd->parsed()) {
            reaggregate_reports(report_common.output_dir);
            std::cout << "re-aggregated " << report_common.output_dir << "\n";
            return 0;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const EmptyAxis& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

}  // namespace regbench
