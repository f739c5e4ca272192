#pragma once

#include <string>

#include "regbench/image.hpp"

namespace regbench {

// Decodes a PNG or uncompressed baseline TIFF by magic bytes. Grayscale and
// RGB at 8 or 16 bits per sample; palette PNGs expand to RGB. Throws IoError
// on unreadable files and UnsupportedBandCount on other layouts.
Raster read_raster(const std::string& path);

// read_raster followed by to_gray.
GrayImage read_gray(const std::string& path);

// 8-bit grayscale PNG; intensities round to the nearest integer in [0, 255].
void write_gray_png(const std::string& path, const GrayImage& img);

}  // namespace regbench
