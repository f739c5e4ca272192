#pragma once

#include <span>
#include <string>
#include <vector>

#include "regbench/image.hpp"
#include "regbench/types.hpp"

namespace regbench {

struct Keypoint {
    Point2 pt;
    float response = 0.0f;
};

struct MatcherSpec {
    enum class Kind { builtin, external };
    Kind kind = Kind::builtin;
    int keypoint_budget = 4096;
    std::string external_command;  // used when kind == external

    std::string label() const {
        return kind == Kind::builtin ? "builtin" : "external:" + external_command;
    }
};

// "builtin" or "external:<command>".
MatcherSpec matcher_spec_from_string(std::string_view text);

// Harris corner response field (k = 0.04, 3x3 Sobel, Gaussian window
// sigma = 1.0), row-major like the image.
std::vector<float> harris_response(const GrayImage& img);

// Harris corners after 3x3 non-max suppression, strongest `budget` responses
// in descending order. Constant images yield none.
std::vector<Keypoint> detect_keypoints(const GrayImage& img, int budget);

// 16x16 mean/variance-normalized patch descriptors, one row of 256 floats per
// keypoint. Keypoints must keep an 8-px margin from the image border.
std::vector<float> compute_descriptors(std::span<const Keypoint> kps, const GrayImage& img);

constexpr int kPatchSize = 16;
constexpr int kDescriptorDim = kPatchSize * kPatchSize;
constexpr int kPatchMargin = kPatchSize / 2;

struct DescriptorMatch {
    int src_index;
    int dst_index;
    double confidence;
};

// Mutual nearest neighbour in Euclidean descriptor space with a Lowe ratio
// test at 0.9; confidence = 1 - best/second-best distance ratio.
std::vector<DescriptorMatch> match_descriptors(std::span<const float> src_desc, int n_src,
                                               std::span<const float> dst_desc, int n_dst);

std::vector<Correspondence> describe_and_match(std::span<const Keypoint> src_kps,
                                               std::span<const Keypoint> dst_kps,
                                               const GrayImage& src_img,
                                               const GrayImage& dst_img);

// Keeps keypoints that leave room for a full descriptor patch.
std::vector<Keypoint> filter_margin(std::span<const Keypoint> kps, const GrayImage& img);

// Tile-local correspondences from the built-in detector/descriptor matcher.
// External matchers go through ExternalMatcherSession (see
// external_matcher.hpp); the convenience overload in that header runs a
// one-shot session to satisfy the same contract.
std::vector<Correspondence> match_tiles_builtin(const GrayImage& src_tile,
                                                const GrayImage& dst_tile,
                                                const MatcherSpec& spec);

}  // namespace regbench
