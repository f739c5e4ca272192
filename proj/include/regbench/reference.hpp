#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "regbench/image.hpp"
#include "regbench/matching.hpp"

namespace regbench::reference {

// Serial twins of the OpenMP kernels. Same arithmetic, plain loops, no
// pragmas; the parity tests assert bit-identical outputs and the benchmark
// target compares throughput.

std::vector<float> harris_response(const GrayImage& img);

GrayImage resize_bilinear(const GrayImage& img, int out_width, int out_height);

GrayImage normalize(const GrayImage& img, NormalizationKind kind);

std::vector<DescriptorMatch> match_descriptors(std::span<const float> src_desc, int n_src,
                                               std::span<const float> dst_desc, int n_dst);

GrayImage render_texture(std::uint64_t seed, int width, int height);

GrayImage apply_speckle(const GrayImage& img, double strength, std::uint64_t seed);

}  // namespace regbench::reference
