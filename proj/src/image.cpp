#include "regbench/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace regbench {

const char* to_string(NormalizationKind kind) {
    switch (kind) {
        case NormalizationKind::identity: return "identity";
        case NormalizationKind::percentile: return "percentile";
        case NormalizationKind::zscore: return "zscore";
        case NormalizationKind::clahe: return "clahe";
    }
    return "identity";
}

NormalizationKind normalization_from_string(std::string_view name) {
    if (name == "identity") return NormalizationKind::identity;
    if (name == "percentile") return NormalizationKind::percentile;
    if (name == "zscore") return NormalizationKind::zscore;
    if (name == "clahe") return NormalizationKind::clahe;
    throw std::invalid_argument("unknown normalization \"" + std::string(name) + "\"");
}

double percentile_value(const GrayImage& img, double q) {
    std::vector<float> sorted(img.data);
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    const double rank = q / 100.0 * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(rank);
    const double frac = rank - static_cast<double>(lo);
    if (lo + 1 >= n) return sorted[n - 1];
    return static_cast<double>(sorted[lo]) * (1.0 - frac) +
           static_cast<double>(sorted[lo + 1]) * frac;
}

namespace {

GrayImage percentile_normalize(const GrayImage& img) {
    const double p2 = percentile_value(img, 2.0);
    const double p98 = percentile_value(img, 98.0);
    if (p98 - p2 < 1e-6) return img;
    const double scale = 255.0 / (p98 - p2);
    GrayImage out(img.width, img.height);
    const std::int64_t n = static_cast<std::int64_t>(img.pixel_count());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        const double v = (static_cast<double>(img.data[i]) - p2) * scale;
        out.data[i] = static_cast<float>(std::clamp(v, 0.0, 255.0));
    }
    return out;
}

GrayImage zscore_normalize(const GrayImage& img) {
    // Serial accumulation keeps the statistics independent of thread count.
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
    const std::int64_t n = static_cast<std::int64_t>(img.pixel_count());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        const double z = (static_cast<double>(img.data[i]) - mean) * inv_sigma;
        out.data[i] = static_cast<float>(std::clamp(128.0 + 64.0 * z, 0.0, 255.0));
    }
    return out;
}

constexpr int kClaheGrid = 8;
constexpr int kClaheBins = 256;
constexpr double kClaheClipLimit = 2.0;

GrayImage clahe_normalize(const GrayImage& img) {
    float lo = img.data[0], hi = img.data[0];
    for (float v : img.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi - lo < 1e-9f) return img;

    const int gx = std::min(kClaheGrid, img.width);
    const int gy = std::min(kClaheGrid, img.height);
    std::vector<int> x0(gx + 1), y0(gy + 1);
    for (int i = 0; i <= gx; ++i) x0[i] = static_cast<int>(static_cast<std::int64_t>(i) * img.width / gx);
    for (int j = 0; j <= gy; ++j) y0[j] = static_cast<int>(static_cast<std::int64_t>(j) * img.height / gy);

    // Per-tile clipped-equalization LUT: lut[b] = 255 * cdf[b].
    std::vector<std::array<float, kClaheBins>> luts(static_cast<std::size_t>(gx) * gy);
#pragma omp parallel for schedule(static) collapse(2)
    for (int ty = 0; ty < gy; ++ty) {
        for (int tx = 0; tx < gx; ++tx) {
            std::array<double, kClaheBins> hist{};
            const std::int64_t tile_pixels =
                static_cast<std::int64_t>(x0[tx + 1] - x0[tx]) * (y0[ty + 1] - y0[ty]);
            for (int y = y0[ty]; y < y0[ty + 1]; ++y)
                for (int x = x0[tx]; x < x0[tx + 1]; ++x) {
                    const int bin =
                        std::clamp(static_cast<int>(img.at(x, y)), 0, kClaheBins - 1);
                    hist[bin] += 1.0;
                }

            // Clip at clip_limit x the uniform bin height, then spread the
            // excess uniformly in a single pass.
            const double clip =
                std::max(1.0, kClaheClipLimit * static_cast<double>(tile_pixels) / kClaheBins);
            double excess = 0.0;
            for (double& h : hist) {
                if (h > clip) {
                    excess += h - clip;
                    h = clip;
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

    // Tile centers for the interpolation lattice; outside the lattice the
    // border tile's LUT applies (clamped-edge).
    std::vector<double> cx(gx), cy(gy);
    for (int i = 0; i < gx; ++i) cx[i] = 0.5 * (x0[i] + x0[i + 1]);
    for (int j = 0; j < gy; ++j) cy[j] = 0.5 * (y0[j] + y0[j + 1]);

    GrayImage out(img.width, img.height);
#pragma omp parallel for schedule(static)
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
        case NormalizationKind::percentile: return percentile_normalize(img);
        case NormalizationKind::zscore: return zscore_normalize(img);
        case NormalizationKind::clahe: return clahe_normalize(img);
    }
    return img;
}

GrayImage resize_bilinear(const GrayImage& img, int out_width, int out_height) {
    GrayImage out(out_width, out_height);
    const double sx = static_cast<double>(img.width) / out_width;
    const double sy = static_cast<double>(img.height) / out_height;
#pragma omp parallel for schedule(static)
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

std::pair<GrayImage, double> resize_long_side(const GrayImage& img, int max_dimension) {
    if (max_dimension < 1) throw std::invalid_argument("max_dimension must be >= 1");
    const int long_side = img.long_side();
    if (long_side <= max_dimension) return {img, 1.0};
    const double scale = static_cast<double>(max_dimension) / long_side;
    int out_w, out_h;
    if (img.width >= img.height) {
        out_w = max_dimension;
        out_h = std::max(1, static_cast<int>(std::llround(img.height * scale)));
    } else {
        out_h = max_dimension;
        out_w = std::max(1, static_cast<int>(std::llround(img.width * scale)));
    }
    return {resize_bilinear(img, out_w, out_h), scale};
}

GrayImage to_gray(const Raster& raster) {
    if (raster.bands != 1 && raster.bands != 3)
        throw UnsupportedBandCount("raster has " + std::to_string(raster.bands) +
                                   " bands; expected 1 or 3");
    const std::size_t n = static_cast<std::size_t>(raster.width) * raster.height;

    double value_scale = 1.0;
    double value_offset = 0.0;
    if (raster.bit_depth == 16) {
        std::uint16_t lo = raster.samples[0], hi = raster.samples[0];
        for (std::uint16_t s : raster.samples) {
            lo = std::min(lo, s);
            hi = std::max(hi, s);
        }
        if (hi > lo) {
            value_scale = 255.0 / (hi - lo);
            value_offset = -static_cast<double>(lo) * value_scale;
        } else {
            value_scale = 0.0;
        }
    }

    GrayImage out(raster.width, raster.height);
    const std::int64_t total = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < total; ++i) {
        double v;
        if (raster.bands == 1) {
            v = raster.samples[i] * value_scale + value_offset;
        } else {
            const double r = raster.samples[3 * i] * value_scale + value_offset;
            const double g = raster.samples[3 * i + 1] * value_scale + value_offset;
            const double b = raster.samples[3 * i + 2] * value_scale + value_offset;
            v = 0.299 * r + 0.587 * g + 0.114 * b;
        }
        out.data[i] = static_cast<float>(std::clamp(v, 0.0, 255.0));
    }
    return out;
}

}  // namespace regbench
