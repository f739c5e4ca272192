#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "regbench/types.hpp"

namespace regbench {

// Row-major grayscale raster with continuous intensities in [0, 255].
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    GrayImage() = default;
    GrayImage(int w, int h, float fill = 0.0f)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    float& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    std::size_t pixel_count() const { return data.size(); }
    bool empty() const { return data.empty(); }
    int long_side() const { return width > height ? width : height; }
};

enum class NormalizationKind { identity, percentile, zscore, clahe };

const char* to_string(NormalizationKind kind);
NormalizationKind normalization_from_string(std::string_view name);

// Stage-1 normalization. Identity returns the input; percentile maps
// [p2, p98] linearly onto [0, 255] with clamping; z-score maps to
// 128 + 64*z clamped; CLAHE runs an 8x8 tile grid with clip limit 2.0 and
// bilinear LUT interpolation. Degenerate inputs (no contrast) pass through
// unchanged.
GrayImage normalize(const GrayImage& img, NormalizationKind kind);

// Caps the long side at max_dimension via bilinear resampling, preserving
// aspect ratio. Returns the image and the applied scale (1.0 when unchanged).
std::pair<GrayImage, double> resize_long_side(const GrayImage& img, int max_dimension);

// Bilinear resample to an explicit size.
GrayImage resize_bilinear(const GrayImage& img, int out_width, int out_height);

// Decoded image file before grayscale conversion: interleaved samples,
// 1 or 3 bands, 8- or 16-bit values stored widened to uint16.
struct Raster {
    int width = 0;
    int height = 0;
    int bands = 0;
    int bit_depth = 0;  // 8 or 16
    std::vector<std::uint16_t> samples;
};

// 3-band rasters collapse through the 0.299/0.587/0.114 luma weights;
// 16-bit rasters are min-max rescaled to [0, 255] first.
GrayImage to_gray(const Raster& raster);

// Linear-interpolation percentile (q in [0, 100]) over all pixels.
double percentile_value(const GrayImage& img, double q);

}  // namespace regbench
