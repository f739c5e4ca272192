#include "regbench/reference.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "regbench/rng.hpp"

namespace regbench::reference {

namespace {

constexpr float kHarrisK = 0.04f;
constexpr int kGaussRadius = 3;

inline int clamp_coord(int v, int hi) { return v < 0 ? 0 : (v > hi ? hi : v); }

void gaussian_blur_serial(std::vector<float>& buf, std::vector<float>& scratch, int w, int h) {
    static const std::array<float, 2 * kGaussRadius + 1> kernel = [] {
        std::array<float, 2 * kGaussRadius + 1> k{};
        float sum = 0.0f;
        for (int i = -kGaussRadius; i <= kGaussRadius; ++i) {
            const float v = std::exp(-0.5f * static_cast<float>(i * i));
            k[i + kGaussRadius] = v;
            sum += v;
        }
        for (auto& v : k) v /= sum;
        return k;
    }();

    scratch.resize(buf.size());
    for (int y = 0; y < h; ++y) {
        const float* row = buf.data() + static_cast<std::size_t>(y) * w;
        float* out = scratch.data() + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
            float acc = 0.0f;
            for (int i = -kGaussRadius; i <= kGaussRadius; ++i)
                acc += kernel[i + kGaussRadius] * row[clamp_coord(x + i, w - 1)];
            out[x] = acc;
        }
    }
    for (int y = 0; y < h; ++y) {
        float* out = buf.data() + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
            float acc = 0.0f;
            for (int i = -kGaussRadius; i <= kGaussRadius; ++i)
                acc += kernel[i + kGaussRadius] *
                       scratch[static_cast<std::size_t>(clamp_coord(y + i, h - 1)) * w + x];
            out[x] = acc;
        }
    }
}

}  // namespace

std::vector<float> harris_response(const GrayImage& img) {
    const int w = img.width, h = img.height;
    const std::size_t n = img.pixel_count();
    std::vector<float> ixx(n), iyy(n), ixy(n);

    for (int y = 0; y < h; ++y) {
        const int ym = clamp_coord(y - 1, h - 1), yp = clamp_coord(y + 1, h - 1);
        for (int x = 0; x < w; ++x) {
            const int xm = clamp_coord(x - 1, w - 1), xp = clamp_coord(x + 1, w - 1);
            const float gx = (img.at(xp, ym) + 2.0f * img.at(xp, y) + img.at(xp, yp)) -
                             (img.at(xm, ym) + 2.0f * img.at(xm, y) + img.at(xm, yp));
            const float gy = (img.at(xm, yp) + 2.0f * img.at(x, yp) + img.at(xp, yp)) -
                             (img.at(xm, ym) + 2.0f * img.at(x, ym) + img.at(xp, ym));
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            ixx[i] = gx * gx;
            iyy[i] = gy * gy;
            ixy[i] = gx * gy;
        }
    }

    std::vector<float> scratch;
    gaussian_blur_serial(ixx, scratch, w, h);
    gaussian_blur_serial(iyy, scratch, w, h);
    gaussian_blur_serial(ixy, scratch, w, h);

    std::vector<float> response(n);
    for (std::size_t i = 0; i < n; ++i) {
        const float det = ixx[i] * iyy[i] - ixy[i] * ixy[i];
        const float trace = ixx[i] + iyy[i];
        response[i] = det - kHarrisK * trace * trace;
    }
    return response;
}

GrayImage resize_bilinear(const GrayImage& img, int out_width, int out_height) {
    GrayImage out(out_width, out_height);
    const double sx = static_cast<double>(img.width) / out_width;
    const double sy = static_cast<double>(img.height) / out_height;
    for (int y = 0; y < out_height; ++y) {
        const double src_y = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height - 1.0);
        const int y0 = static_cast<int>(src_y);
        const int y1 = std::min(y0 + 1, img.height - 1);
        const double fy = src_y - y0;
        for (int x = 0; x < out_width; ++x) {
            const double src_x = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width - 1.0);
            const int x0 = static_cast<int>(src_x);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const double fx = src_x - x0;
            const double v = (1.0 - fy) * ((1.0 - fx) * img.at(x0, y0) + fx * img.at(x1, y0)) +
                             fy * ((1.0 - fx) * img.at(x0, y1) + fx * img.at(x1, y1));
            out.at(x, y) = static_cast<float>(v);
        }
    }
    return out;
}

namespace {

GrayImage percentile_serial(const GrayImage& img) {
    const double p2 = percentile_value(img, 2.0);
    const double p98 = percentile_value(img, 98.0);
    if (p98 - p2 < 1e-6) return img;
    const double scale = 255.0 / (p98 - p2);
    GrayImage out(img.width, img.height);
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        const double v = (static_cast<double>(img.data[i]) - p2) * scale;
        out.data[i] = static_cast<float>(std::clamp(v, 0.0, 255.0));
    }
    return out;
}

GrayImage zscore_serial(const GrayImage& img) {
    double sum = 0.0;
    for (float v : img.data) sum += v;
    const double mean = sum / static_cast<double>(img.pixel_count());
    double sq = 0.0;
    for (float v : img.data) {
        const double d = static_cast<double>(v) - mean;
        sq += d * d;
    }
    const double sigma = std::sqrt(sq / static_cast<double>(img.pixel_count()));
    if (sigma < 1e-9) return img;
    const double inv_sigma = 1.0 / sigma;
    GrayImage out(img.width, img.height);
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        const double z = (static_cast<double>(img.data[i]) - mean) * inv_sigma;
        out.data[i] = static_cast<float>(std::clamp(128.0 + 64.0 * z, 0.0, 255.0));
    }
    return out;
}

constexpr int kClaheGrid = 8;
constexpr int kClaheBins = 256;
constexpr double kClaheClipLimit = 2.0;

GrayImage clahe_serial(const GrayImage& img) {
    float lo = img.data[0], hi = img.data[0];
    for (float v : img.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi - lo < 1e-9f) return img;

    const int gx = std::min(kClaheGrid, img.width);
    const int gy = std::min(kClaheGrid, img.height);
    std::vector<int> x0(gx + 1), y0(gy + 1);
    for (int i = 0; i <= gx; ++i)
        x0[i] = static_cast<int>(static_cast<std::int64_t>(i) * img.width / gx);
    for (int j = 0; j <= gy; ++j)
        y0[j] = static_cast<int>(static_cast<std::int64_t>(j) * img.height / gy);

    std::vector<std::array<float, kClaheBins>> luts(static_cast<std::size_t>(gx) * gy);
    for (int ty = 0; ty < gy; ++ty) {
        for (int tx = 0; tx < gx; ++tx) {
            std::array<double, kClaheBins> hist{};
            const std::int64_t tile_pixels =
                static_cast<std::int64_t>(x0[tx + 1] - x0[tx]) * (y0[ty + 1] - y0[ty]);
            for (int y = y0[ty]; y < y0[ty + 1]; ++y)
                for (int x = x0[tx]; x < x0[tx + 1]; ++x) {
                    const int bin = std::clamp(static_cast<int>(img.at(x, y)), 0, kClaheBins - 1);
                    hist[bin] += 1.0;
                }
            const double clip =
                std::max(1.0, kClaheClipLimit * static_cast<double>(tile_pixels) / kClaheBins);
            double excess = 0.0;
            for (double& hval : hist) {
                if (hval > clip) {
                    excess += hval - clip;
                    hval = clip;
                }
            }
            const double bonus = excess / kClaheBins;
            double cum = 0.0;
            auto& lut = luts[static_cast<std::size_t>(ty) * gx + tx];
            const double inv_total = tile_pixels > 0 ? 1.0 / static_cast<double>(tile_pixels) : 0.0;
            for (int b = 0; b < kClaheBins; ++b) {
                cum += hist[b] + bonus;
                lut[b] = static_cast<float>(255.0 * cum * inv_total);
            }
        }
    }

    std::vector<double> cx(gx), cy(gy);
    for (int i = 0; i < gx; ++i) cx[i] = 0.5 * (x0[i] + x0[i + 1]);
    for (int j = 0; j < gy; ++j) cy[j] = 0.5 * (y0[j] + y0[j + 1]);

    GrayImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        int ty = 0;
        while (ty + 1 < gy && cy[ty + 1] <= y) ++ty;
        const int ty1 = std::min(ty + 1, gy - 1);
        double wy = 0.0;
        if (y >= cy[ty] && ty1 != ty) wy = (y - cy[ty]) / (cy[ty1] - cy[ty]);
        wy = std::clamp(wy, 0.0, 1.0);
        for (int x = 0; x < img.width; ++x) {
            int tx = 0;
            while (tx + 1 < gx && cx[tx + 1] <= x) ++tx;
            const int tx1 = std::min(tx + 1, gx - 1);
            double wx = 0.0;
            if (x >= cx[tx] && tx1 != tx) wx = (x - cx[tx]) / (cx[tx1] - cx[tx]);
            wx = std::clamp(wx, 0.0, 1.0);

            const int bin = std::clamp(static_cast<int>(img.at(x, y)), 0, kClaheBins - 1);
            const double v00 = luts[static_cast<std::size_t>(ty) * gx + tx][bin];
            const double v10 = luts[static_cast<std::size_t>(ty) * gx + tx1][bin];
            const double v01 = luts[static_cast<std::size_t>(ty1) * gx + tx][bin];
            const double v11 = luts[static_cast<std::size_t>(ty1) * gx + tx1][bin];
            const double v = (1.0 - wy) * ((1.0 - wx) * v00 + wx * v10) +
                             wy * ((1.0 - wx) * v01 + wx * v11);
            out.at(x, y) = static_cast<float>(std::clamp(v, 0.0, 255.0));
        }
    }
    return out;
}

}  // namespace

GrayImage normalize(const GrayImage& img, NormalizationKind kind) {
    if (img.empty()) return img;
    switch (kind) {
        case NormalizationKind::identity: return img;
        case NormalizationKind::percentile: return percentile_serial(img);
        case NormalizationKind::zscore: return zscore_serial(img);
        case NormalizationKind::clahe: return clahe_serial(img);
    }
    return img;
}

namespace {

inline float squared_distance(const float* a, const float* b) {
    float acc = 0.0f;
    for (int i = 0; i < kDescriptorDim; ++i) {
        const float d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

}  // namespace

std::vector<DescriptorMatch> match_descriptors(std::span<const float> src_desc, int n_src,
                                               std::span<const float> dst_desc, int n_dst) {
    if (n_src == 0 || n_dst == 0) return {};

    std::vector<float> dist(static_cast<std::size_t>(n_src) * n_dst);
    for (int i = 0; i < n_src; ++i) {
        const float* a = src_desc.data() + static_cast<std::size_t>(i) * kDescriptorDim;
        float* row = dist.data() + static_cast<std::size_t>(i) * n_dst;
        for (int j = 0; j < n_dst; ++j)
            row[j] = squared_distance(
                a, dst_desc.data() + static_cast<std::size_t>(j) * kDescriptorDim);
    }

    struct NearestTwo {
        int best = -1;
        float best_d2 = std::numeric_limits<float>::infinity();
        float second_d2 = std::numeric_limits<float>::infinity();
    };
    std::vector<NearestTwo> fwd(n_src);
    std::vector<int> rev(n_dst, -1);
    for (int i = 0; i < n_src; ++i) {
        const float* row = dist.data() + static_cast<std::size_t>(i) * n_dst;
        NearestTwo nn;
        for (int j = 0; j < n_dst; ++j) {
            const float d2 = row[j];
            if (d2 < nn.best_d2) {
                nn.second_d2 = nn.best_d2;
                nn.best_d2 = d2;
                nn.best = j;
            } else if (d2 < nn.second_d2) {
                nn.second_d2 = d2;
            }
        }
        fwd[i] = nn;
    }
    for (int j = 0; j < n_dst; ++j) {
        int best = -1;
        float best_d2 = std::numeric_limits<float>::infinity();
        for (int i = 0; i < n_src; ++i) {
            const float d2 = dist[static_cast<std::size_t>(i) * n_dst + j];
            if (d2 < best_d2) {
                best_d2 = d2;
                best = i;
            }
        }
        rev[j] = best;
    }

    std::vector<DescriptorMatch> matches;
    for (int i = 0; i < n_src; ++i) {
        const int j = fwd[i].best;
        if (j < 0 || rev[j] != i) continue;
        const double best = std::sqrt(static_cast<double>(fwd[i].best_d2));
        const double second = std::sqrt(static_cast<double>(fwd[i].second_d2));
        double ratio;
        if (std::isinf(second)) {
            ratio = 0.0;
        } else if (second <= 0.0) {
            ratio = 1.0;
        } else {
            ratio = best / second;
        }
        if (ratio < 0.9) matches.push_back({i, j, std::clamp(1.0 - ratio, 0.0, 1.0)});
    }
    return matches;
}

namespace {

constexpr std::uint64_t kBlobStream = 0x626c6f62ULL;
constexpr std::uint64_t kSpeckleStream = 0x7370636bULL;

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

}  // namespace

GrayImage render_texture(std::uint64_t seed, int width, int height) {
    Rng blob_rng(mix_seed(seed, kBlobStream));
    const int n_blobs = std::clamp(width * height / 3000, 30, 400);
    struct Blob {
        int x0, y0, x1, y1;
        float delta;
    };
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
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double base = 0.0;
            for (int o = 0; o < 4; ++o) base += kAmps[o] * value_noise(seed, o, x, y, kCells[o]);
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
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        Rng rng(mix_seed(seed, kSpeckleStream, static_cast<std::uint64_t>(i)));
        const double factor = rng.gamma(shape) / shape;
        out.data[i] =
            static_cast<float>(std::clamp(static_cast<double>(img.data[i]) * factor, 0.0, 255.0));
    }
    return out;
}

}  // namespace regbench::reference
