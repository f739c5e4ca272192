#include "regbench/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "regbench/image_io.hpp"
#include "regbench/rng.hpp"

namespace regbench {

namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kBlobStream = 0x626c6f62ULL;
constexpr std::uint64_t kSpeckleStream = 0x7370636bULL;
constexpr std::uint64_t kPoolStream = 0x706f6f6cULL;

// Lattice value in [0, 1), a pure hash of (seed, octave, cell).
double lattice_value(std::uint64_t seed, int octave, std::int64_t gx, std::int64_t gy) {
    const std::uint64_t mixed =
        mix_seed(seed, static_cast<std::uint64_t>(octave) * 0x9e3779b97f4a7c15ULL,
                 (static_cast<std::uint64_t>(gx) << 32) ^ static_cast<std::uint32_t>(gy));
    return static_cast<double>(mixed >> 11) * 0x1.0p-53;
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

double value_noise(std::uint64_t seed, int octave, double x, double y, double cell) {
    const double fx = x / cell, fy = y / cell;
    const std::int64_t gx = static_cast<std::int64_t>(std::floor(fx));
    const std::int64_t gy = static_cast<std::int64_t>(std::floor(fy));
    const double tx = smoothstep(fx - static_cast<double>(gx));
    const double ty = smoothstep(fy - static_cast<double>(gy));
    const double v00 = lattice_value(seed, octave, gx, gy);
    const double v10 = lattice_value(seed, octave, gx + 1, gy);
    const double v01 = lattice_value(seed, octave, gx, gy + 1);
    const double v11 = lattice_value(seed, octave, gx + 1, gy + 1);
    return (1.0 - ty) * ((1.0 - tx) * v00 + tx * v10) + ty * ((1.0 - tx) * v01 + tx * v11);
}

struct Blob {
    int x0, y0, x1, y1;
    float delta;
};

}  // namespace

GrayImage render_texture(std::uint64_t seed, int width, int height) {
    // Blob placement comes from one serial stream so the pixel loop stays
    // order-free.
    Rng blob_rng(mix_seed(seed, kBlobStream));
    const int n_blobs = std::clamp(width * height / 3000, 30, 400);
    std::vector<Blob> blobs(n_blobs);
    for (auto& b : blobs) {
        const int bw = 8 + blob_rng.bounded_int(41);
        const int bh = 8 + blob_rng.bounded_int(41);
        b.x0 = blob_rng.bounded_int(std::max(1, width - bw));
        b.y0 = blob_rng.bounded_int(std::max(1, height - bh));
        b.x1 = std::min(b.x0 + bw, width);
        b.y1 = std::min(b.y0 + bh, height);
        const double magnitude = 0.15 + 0.3 * blob_rng.uniform();
        b.delta = static_cast<float>(blob_rng.bounded(2) ? magnitude : -magnitude);
    }
    std::vector<float> blob_layer(static_cast<std::size_t>(width) * height, 0.0f);
    for (const auto& b : blobs)
        for (int y = b.y0; y < b.y1; ++y)
            for (int x = b.x0; x < b.x1; ++x)
                blob_layer[static_cast<std::size_t>(y) * width + x] += b.delta;

    static constexpr double kCells[4] = {47.0, 23.0, 11.0, 5.0};
    static constexpr double kAmps[4] = {1.0, 0.55, 0.3, 0.18};
    constexpr double kAmpSum = kAmps[0] + kAmps[1] + kAmps[2] + kAmps[3];

    GrayImage out(width, height);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double base = 0.0;
            for (int o = 0; o < 4; ++o)
                base += kAmps[o] * value_noise(seed, o, x, y, kCells[o]);
            base /= kAmpSum;
            const double v =
                0.12 + 0.76 * base + blob_layer[static_cast<std::size_t>(y) * width + x];
            out.at(x, y) = static_cast<float>(255.0 * std::clamp(v, 0.0, 1.0));
        }
    }
    return out;
}

GrayImage apply_speckle(const GrayImage& img, double strength, std::uint64_t seed) {
    if (strength <= 0.0) return img;
    const double shape = 1.0 / (strength * strength);
    GrayImage out(img.width, img.height);
    const std::int64_t n = static_cast<std::int64_t>(img.pixel_count());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        // Dedicated stream per pixel keeps the field independent of thread
        // count.
        Rng rng(mix_seed(seed, kSpeckleStream, static_cast<std::uint64_t>(i)));
        const double factor = rng.gamma(shape) / shape;
        out.data[i] = static_cast<float>(
            std::clamp(static_cast<double>(img.data[i]) * factor, 0.0, 255.0));
    }
    return out;
}

GrayImage warp_image(const GrayImage& img, const GeometricTransform& transform, int out_width,
                     int out_height) {
    const GeometricTransform inverse_map = invert(transform);
    GrayImage out(out_width, out_height);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < out_height; ++y) {
        for (int x = 0; x < out_width; ++x) {
            Point2 src;
            try {
                src = apply_transform(inverse_map,
                                      {static_cast<double>(x), static_cast<double>(y)});
            } catch (const DegeneratePoint&) {
                out.at(x, y) = 0.0f;
                continue;
            }
            const double cx = std::clamp(src.x, 0.0, img.width - 1.0);
            const double cy = std::clamp(src.y, 0.0, img.height - 1.0);
            const int x0 = static_cast<int>(cx);
            const int y0 = static_cast<int>(cy);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const int y1 = std::min(y0 + 1, img.height - 1);
            const double fx = cx - x0, fy = cy - y0;
            const double v = (1.0 - fy) * ((1.0 - fx) * img.at(x0, y0) + fx * img.at(x1, y0)) +
                             fy * ((1.0 - fx) * img.at(x0, y1) + fx * img.at(x1, y1));
            out.at(x, y) = static_cast<float>(v);
        }
    }
    return out;
}

SynthPair generate_pair(const SynthSpec& spec) {
    if (spec.width < 64 || spec.height < 64)
        throw std::invalid_argument("synthetic scenes must be at least 64x64");

    SynthPair pair;
    pair.gt = spec.planted_transform;
    pair.optical = render_texture(spec.texture_seed, spec.width, spec.height);

    pair.sar_like = warp_image(pair.optical, pair.gt, spec.width, spec.height);
    if (spec.invert_contrast) {
        const std::int64_t n = static_cast<std::int64_t>(pair.sar_like.pixel_count());
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i)
            pair.sar_like.data[i] = 255.0f - pair.sar_like.data[i];
    }
    pair.sar_like = apply_speckle(pair.sar_like, spec.speckle_strength, spec.texture_seed);

    // Regular tie-point grid; keep the points whose mapped locations land
    // inside the SAR frame.
    const int g = std::max(2, spec.tiepoint_grid);
    const double margin_x = spec.width * 0.08;
    const double margin_y = spec.height * 0.08;
    for (int j = 0; j < g; ++j) {
        for (int i = 0; i < g; ++i) {
            TiePoint tp;
            tp.optical = {margin_x + (spec.width - 2.0 * margin_x) * i / (g - 1),
                          margin_y + (spec.height - 2.0 * margin_y) * j / (g - 1)};
            tp.sar = apply_transform(pair.gt, tp.optical);
            if (tp.sar.x >= 0.0 && tp.sar.x <= spec.width - 1.0 && tp.sar.y >= 0.0 &&
                tp.sar.y <= spec.height - 1.0)
                pair.tiepoints.push_back(tp);
        }
    }
    return pair;
}

AffineTransform random_mild_affine(std::uint64_t seed, double max_translation) {
    Rng rng(mix_seed(seed, 0x616666ULL));
    const double angle = (rng.uniform() - 0.5) * 0.08;   // about +-2.3 degrees
    const double scale = 0.98 + 0.04 * rng.uniform();
    const double shear = (rng.uniform() - 0.5) * 0.03;
    const double tx = (rng.uniform() - 0.5) * 2.0 * max_translation;
    const double ty = (rng.uniform() - 0.5) * 2.0 * max_translation;
    const double c = std::cos(angle), s = std::sin(angle);
    return {{scale * c, -scale * s + shear, tx, scale * s, scale * c + shear * 0.5, ty}};
}

GeneratedPool generate_retrieval_pool(const RetrievalPoolSpec& spec) {
    if (spec.pool_size < 2) throw std::invalid_argument("pool_size must be >= 2");
    if (spec.n_queries < 1) throw std::invalid_argument("n_queries must be >= 1");

    GeneratedPool pool;
    Rng rng(mix_seed(spec.seed, kPoolStream));
    for (int q = 0; q < spec.n_queries; ++q) {
        GeneratedPool::Query query;
        query.query_id = "q" + std::to_string(q);
        query.positive_index = rng.bounded_int(spec.pool_size);

        for (int c = 0; c < spec.pool_size; ++c) {
            const std::uint64_t candidate_seed =
                mix_seed(spec.seed, static_cast<std::uint64_t>(q) + 1,
                         static_cast<std::uint64_t>(c) + 1);
            query.candidates.push_back(
                render_texture(candidate_seed, spec.candidate_size, spec.candidate_size));
        }

        // Query: mildly warped crop of the positive, then degradation.
        const double angle = (rng.uniform() - 0.5) * 0.12;  // about +-3.4 degrees
        const double scale = 0.96 + 0.08 * rng.uniform();
        const double tx = (rng.uniform() - 0.5) * 8.0;
        const double ty = (rng.uniform() - 0.5) * 8.0;
        const AffineTransform jitter{{scale * std::cos(angle), -scale * std::sin(angle), tx,
                                      scale * std::sin(angle), scale * std::cos(angle), ty}};
        const GrayImage warped = warp_image(query.candidates[query.positive_index], jitter,
                                            spec.candidate_size, spec.candidate_size);
        const int m = spec.query_margin;
        GrayImage cropped(spec.candidate_size - 2 * m, spec.candidate_size - 2 * m);
        for (int y = 0; y < cropped.height; ++y)
            for (int x = 0; x < cropped.width; ++x) cropped.at(x, y) = warped.at(x + m, y + m);

        if (spec.invert_contrast)
            for (auto& v : cropped.data) v = 255.0f - v;
        query.query = apply_speckle(cropped, spec.speckle_strength,
                                    mix_seed(spec.seed, static_cast<std::uint64_t>(q) + 101));
        pool.queries.push_back(std::move(query));
    }
    return pool;
}

ScenePairRecord write_pair_fixture(const std::string& dir, const std::string& pair_id,
                                   const SynthPair& pair) {
    const fs::path base = fs::path(dir) / pair_id;
    fs::create_directories(base);
    ScenePairRecord record;
    record.pair_id = pair_id;
    record.optical_path = (base / "optical.png").string();
    record.sar_path = (base / "sar.png").string();
    record.tiepoints_path = (base / "tiepoints.csv").string();
    write_gray_png(record.optical_path, pair.optical);
    write_gray_png(record.sar_path, pair.sar_like);
    save_tiepoints_csv(record.tiepoints_path, pair.tiepoints);
    save_transform((base / "gt_transform.txt").string(), pair.gt);
    if (const auto* affine = std::get_if<AffineTransform>(&pair.gt)) record.gt_affine = *affine;
    return record;
}

std::vector<RetrievalRecord> write_retrieval_fixture(const std::string& dir,
                                                     const GeneratedPool& pool) {
    std::vector<RetrievalRecord> records;
    for (const auto& query : pool.queries) {
        const fs::path base = fs::path(dir) / query.query_id;
        fs::create_directories(base);
        RetrievalRecord record;
        record.query_id = query.query_id;
        record.query_path = (base / "query.png").string();
        write_gray_png(record.query_path, query.query);
        for (std::size_t c = 0; c < query.candidates.size(); ++c) {
            const std::string path = (base / ("candidate_" + std::to_string(c) + ".png")).string();
            write_gray_png(path, query.candidates[c]);
            record.candidate_paths.push_back(path);
        }
        record.positive_index = query.positive_index;
        records.push_back(std::move(record));
    }
    return records;
}

void write_manifest(const std::string& path, const Manifest& manifest) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest " + path);
    char buf[64];
    for (const auto& pair : manifest.pairs) {
        out << "pair_id=" << pair.pair_id << " optical=" << pair.optical_path
            << " sar=" << pair.sar_path;
        if (!pair.tiepoints_path.empty()) out << " tiepoints=" << pair.tiepoints_path;
        if (pair.gt_affine) {
            out << " gt_affine=";
            for (int i = 0; i < 6; ++i) {
                std::snprintf(buf, sizeof(buf), "%.17g", pair.gt_affine->m[i]);
                out << (i ? "," : "") << buf;
            }
        }
        out << "\n";
    }
    for (const auto& record : manifest.retrieval) {
        out << "query_id=" << record.query_id << " query=" << record.query_path << " candidates=";
        for (std::size_t i = 0; i < record.candidate_paths.size(); ++i)
            out << (i ? "," : "") << record.candidate_paths[i];
        out << " positive=" << record.positive_index << "\n";
    }
}

}  // namespace regbench
