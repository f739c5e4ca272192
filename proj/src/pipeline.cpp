#include "regbench/pipeline.hpp"

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <memory>

#include "regbench/image_io.hpp"
#include "regbench/rng.hpp"
#include "regbench/tiling.hpp"

namespace regbench {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct PreparedSide {
    GrayImage resized;
    double scale = 1.0;
};

std::string tile_png_name(int row, int col) {
    return "r" + std::to_string(row) + "_c" + std::to_string(col) + ".png";
}

fs::path ensure_dir(const fs::path& p) {
    fs::create_directories(p);
    return p;
}

struct PairCore {
    PairResult result;
    std::vector<Correspondence> correspondences;
};

// Stages 1-3 shared by run_pair and run_pair_corners.
PairCore run_stages(const ScenePairRecord& entry, const ProtocolConfig& config,
                    const MatcherSpec& matcher, const RunOptions& options) {
    config.validate();

    PairCore core;
    PairResult& result = core.result;
    result.pair_id = entry.pair_id;

    const GrayImage optical_full = read_gray(entry.optical_path);
    const GrayImage sar_full = read_gray(entry.sar_path);

    // Stage 1: normalization, then the resize cap.
    auto t_norm = Clock::now();
    const GrayImage optical_norm = normalize(optical_full, config.normalization);
    const GrayImage sar_norm = normalize(sar_full, config.normalization);
    result.trace.normalize_s = seconds_since(t_norm);

    auto t_resize = Clock::now();
    PreparedSide optical, sar;
    std::tie(optical.resized, optical.scale) = resize_long_side(optical_norm, config.max_dimension);
    std::tie(sar.resized, sar.scale) = resize_long_side(sar_norm, config.max_dimension);
    result.trace.resize_s = seconds_since(t_resize);

    // Stage 2: tiled correspondence extraction in the resized frame. Small
    // pairs (both long sides within one tile) skip the lattice entirely.
    const auto t_work = Clock::now();
    const bool tiled = optical.resized.long_side() > config.tile_size ||
                       sar.resized.long_side() > config.tile_size;

    TileGrid src_grid, dst_grid;
    if (tiled) {
        src_grid = build_grid(optical.resized.width, optical.resized.height, config.tile_size,
                              config.tile_overlap);
        dst_grid = build_grid(sar.resized.width, sar.resized.height, config.tile_size,
                              config.tile_overlap);
    } else {
        src_grid = build_grid(optical.resized.width, optical.resized.height,
                              std::max(optical.resized.long_side(), 1), 0);
        dst_grid = build_grid(sar.resized.width, sar.resized.height,
                              std::max(sar.resized.long_side(), 1), 0);
    }
    const int rows = std::min(src_grid.rows(), dst_grid.rows());
    const int cols = std::min(src_grid.cols(), dst_grid.cols());
    const std::uint64_t tile_hash = tile_set_hash(src_grid, dst_grid);

    // Scratch PNGs for the external protocol; also the --dump-tiles target.
    std::unique_ptr<ExternalMatcherSession> own_session;
    ExternalMatcherSession* session = options.session;
    fs::path scratch;
    const bool external = matcher.kind == MatcherSpec::Kind::external;
    if (external) {
        if (!session) {
            own_session = std::make_unique<ExternalMatcherSession>(matcher.external_command,
                                                                   options.external_timeout_s);
            session = own_session.get();
        }
        scratch = options.work_dir.empty()
                      ? fs::temp_directory_path() /
                            ("regbench_pair_" + std::to_string(getpid()) + "_" +
                             std::to_string(fnv1a64(entry.pair_id)))
                      : fs::path(options.work_dir) / entry.pair_id;
    }
    fs::path dump_dir;
    if (!options.dump_tiles_dir.empty()) dump_dir = fs::path(options.dump_tiles_dir) / entry.pair_id;

    const int tile_total = rows * cols;
    std::vector<std::vector<Correspondence>> per_tile(tile_total);
    std::vector<std::string> tile_errors(tile_total);

#pragma omp parallel for schedule(dynamic)
    for (int t = 0; t < tile_total; ++t) {
        const int row = t / cols;
        const int col = t % cols;
        const int sx = src_grid.xs[col], sy = src_grid.ys[row];
        const int dx = dst_grid.xs[col], dy = dst_grid.ys[row];

        TilePair pair;
        pair.row = row;
        pair.col = col;
        pair.src_tile = crop(optical.resized, sx, sy, src_grid.tile_size, src_grid.tile_size);
        pair.dst_tile = crop(sar.resized, dx, dy, dst_grid.tile_size, dst_grid.tile_size);
        pair.src_origin = {static_cast<double>(sx), static_cast<double>(sy)};
        pair.dst_origin = {static_cast<double>(dx), static_cast<double>(dy)};

        try {
            std::vector<Correspondence> local;
            if (external) {
                const fs::path src_dir = ensure_dir(scratch / "optical");
                const fs::path dst_dir = ensure_dir(scratch / "sar");
                const std::string src_png = (src_dir / tile_png_name(row, col)).string();
                const std::string dst_png = (dst_dir / tile_png_name(row, col)).string();
                write_gray_png(src_png, pair.src_tile);
                write_gray_png(dst_png, pair.dst_tile);
                local = session->match(src_png, dst_png);
            } else {
                local = match_tiles_builtin(pair.src_tile, pair.dst_tile, matcher);
            }
            if (!dump_dir.empty()) {
                write_gray_png((ensure_dir(dump_dir / "optical") / tile_png_name(row, col)).string(),
                               pair.src_tile);
                write_gray_png((ensure_dir(dump_dir / "sar") / tile_png_name(row, col)).string(),
                               pair.dst_tile);
            }
            per_tile[t] = project_to_full_frame(local, pair, optical.scale, sar.scale);
        } catch (const ExternalMatcherFailure& e) {
            // A failed tile contributes nothing; the rest still count.
            tile_errors[t] = e.what();
        }
    }

    for (const auto& err : tile_errors)
        if (!err.empty()) ++result.tile_failures;

    core.correspondences = aggregate(per_tile);
    result.correspondence_count = static_cast<int>(core.correspondences.size());
    result.trace.match_s = seconds_since(t_work);

    // Stage 3: robust fit in full-resolution coordinates.
    const auto t_fit = Clock::now();
    const std::uint64_t stream_seed = pair_stream_seed(config.seed, entry.pair_id, tile_hash);
    try {
        const FitResult fit =
            ransac_fit(core.correspondences, config.geometry, config.ransac_params(stream_seed));
        result.status = PairStatus::ok;
        result.transform = fit.transform;
        result.inlier_count = fit.inlier_count;
    } catch (const FitFailure& e) {
        result.status = PairStatus::failed;
        result.failure_reason = e.what();
    }
    result.trace.fit_s = seconds_since(t_fit);
    result.wall_clock = seconds_since(t_work);

    if (external && options.work_dir.empty() && dump_dir.empty()) {
        std::error_code ec;
        fs::remove_all(scratch, ec);
    }
    return core;
}

}  // namespace

std::uint64_t pair_stream_seed(std::uint64_t global_seed, const std::string& pair_id,
                               std::uint64_t tile_hash) {
    return mix_seed(global_seed, fnv1a64(pair_id), tile_hash);
}

std::vector<double> predict_displacements(const GeometricTransform& t,
                                          std::span<const TiePoint> tiepoints) {
    std::vector<double> errors(tiepoints.size());
    for (std::size_t i = 0; i < tiepoints.size(); ++i) {
        try {
            errors[i] = distance(apply_transform(t, tiepoints[i].optical), tiepoints[i].sar);
        } catch (const DegeneratePoint&) {
            errors[i] = std::numeric_limits<double>::infinity();
        }
    }
    return errors;
}

PairResult run_pair(const ScenePairRecord& entry, const ProtocolConfig& config,
                    const MatcherSpec& matcher, const RunOptions& options) {
    PairCore core = run_stages(entry, config, matcher, options);
    PairResult& result = core.result;

    // Stage 4: displacement prediction against manual tie points.
    if (result.status == PairStatus::ok && !entry.tiepoints_path.empty()) {
        const std::vector<TiePoint> tiepoints = load_tiepoints_csv(entry.tiepoints_path);
        result.tiepoint_errors = predict_displacements(*result.transform, tiepoints);
    }
    return result;
}

PairResult run_pair_corners(const ScenePairRecord& entry, const ProtocolConfig& config,
                            const MatcherSpec& matcher, const RunOptions& options) {
    if (!entry.gt_affine)
        throw std::invalid_argument("pair " + entry.pair_id +
                                    " has no ground-truth affine for corner evaluation");
    PairCore core = run_stages(entry, config, matcher, options);
    PairResult& result = core.result;

    if (result.status == PairStatus::ok) {
        const Raster raster = read_raster(entry.optical_path);
        const double w = raster.width - 1.0;
        const double h = raster.height - 1.0;
        const Point2 corners[4] = {{0.0, 0.0}, {w, 0.0}, {0.0, h}, {w, h}};
        result.tiepoint_errors.resize(4);
        for (int i = 0; i < 4; ++i) {
            try {
                result.tiepoint_errors[i] =
                    distance(apply_transform(*result.transform, corners[i]),
                             entry.gt_affine->apply(corners[i]));
            } catch (const DegeneratePoint&) {
                result.tiepoint_errors[i] = std::numeric_limits<double>::infinity();
            }
        }
    }
    return result;
}

}  // namespace regbench
