#include "regbench/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace regbench {

MatcherSpec matcher_spec_from_string(std::string_view text) {
    MatcherSpec spec;
    if (text == "builtin") {
        spec.kind = MatcherSpec::Kind::builtin;
        return spec;
    }
    if (text.starts_with("external:") && text.size() > 9) {
        spec.kind = MatcherSpec::Kind::external;
        spec.external_command = std::string(text.substr(9));
        return spec;
    }
    throw std::invalid_argument("unknown matcher \"" + std::string(text) +
                                "\" (expected builtin or external:<command>)");
}

namespace {

constexpr float kHarrisK = 0.04f;
constexpr float kResponseFloor = 1e-6f;
constexpr int kGaussRadius = 3;  // sigma = 1.0

inline int clamp_coord(int v, int hi) { return v < 0 ? 0 : (v > hi ? hi : v); }

// Horizontal then vertical pass with a normalized sigma = 1 kernel.
void gaussian_blur_inplace(std::vector<float>& buf, std::vector<float>& scratch, int w, int h) {
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
#pragma omp parallel for schedule(static)
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
#pragma omp parallel for schedule(static)
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

#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        const int ym = clamp_coord(y - 1, h - 1), yp = clamp_coord(y + 1, h - 1);
        for (int x = 0; x < w; ++x) {
            const int xm = clamp_coord(x - 1, w - 1), xp = clamp_coord(x + 1, w - 1);
            // 3x3 Sobel with replicated edges.
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
    gaussian_blur_inplace(ixx, scratch, w, h);
    gaussian_blur_inplace(iyy, scratch, w, h);
    gaussian_blur_inplace(ixy, scratch, w, h);

    std::vector<float> response(n);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
        const float det = ixx[i] * iyy[i] - ixy[i] * ixy[i];
        const float trace = ixx[i] + iyy[i];
        response[i] = det - kHarrisK * trace * trace;
    }
    return response;
}

std::vector<Keypoint> detect_keypoints(const GrayImage& img, int budget) {
    if (budget < 1) throw std::invalid_argument("keypoint budget must be >= 1");
    if (img.width < 3 || img.height < 3) return {};
    const std::vector<float> response = harris_response(img);
    const int w = img.width, h = img.height;

    std::vector<Keypoint> kps;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const float r = response[static_cast<std::size_t>(y) * w + x];
            if (r <= kResponseFloor) continue;
            // 3x3 non-max suppression; ties keep the first point in scan
            // order so plateaus yield a single detection.
            bool is_max = true;
            for (int dy = -1; dy <= 1 && is_max; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const int nx = clamp_coord(x + dx, w - 1);
                    const int ny = clamp_coord(y + dy, h - 1);
                    if (nx == x && ny == y) continue;
                    const float rn = response[static_cast<std::size_t>(ny) * w + nx];
                    const bool neighbor_first = (dy < 0) || (dy == 0 && dx < 0);
                    if (neighbor_first ? rn >= r : rn > r) {
                        is_max = false;
                        break;
                    }
                }
            }
            if (is_max)
                kps.push_back({{static_cast<double>(x), static_cast<double>(y)}, r});
        }
    }

    std::sort(kps.begin(), kps.end(), [](const Keypoint& a, const Keypoint& b) {
        if (a.response != b.response) return a.response > b.response;
        if (a.pt.y != b.pt.y) return a.pt.y < b.pt.y;
        return a.pt.x < b.pt.x;
    });
    if (static_cast<int>(kps.size()) > budget) kps.resize(budget);
    return kps;
}

std::vector<Keypoint> filter_margin(std::span<const Keypoint> kps, const GrayImage& img) {
    std::vector<Keypoint> out;
    out.reserve(kps.size());
    for (const auto& kp : kps) {
        const int x = static_cast<int>(std::llround(kp.pt.x));
        const int y = static_cast<int>(std::llround(kp.pt.y));
        if (x >= kPatchMargin && x <= img.width - kPatchMargin && y >= kPatchMargin &&
            y <= img.height - kPatchMargin)
            out.push_back(kp);
    }
    return out;
}

std::vector<float> compute_descriptors(std::span<const Keypoint> kps, const GrayImage& img) {
    const int n = static_cast<int>(kps.size());
    std::vector<float> desc(static_cast<std::size_t>(n) * kDescriptorDim);
#pragma omp parallel for schedule(static)
    for (int k = 0; k < n; ++k) {
        const int cx = static_cast<int>(std::llround(kps[k].pt.x));
        const int cy = static_cast<int>(std::llround(kps[k].pt.y));
        float* d = desc.data() + static_cast<std::size_t>(k) * kDescriptorDim;

        float sum = 0.0f;
        for (int py = 0; py < kPatchSize; ++py)
            for (int px = 0; px < kPatchSize; ++px) {
                const float v = img.at(cx - kPatchMargin + px, cy - kPatchMargin + py);
                d[py * kPatchSize + px] = v;
                sum += v;
            }
        const float mean = sum / kDescriptorDim;
        float var = 0.0f;
        for (int i = 0; i < kDescriptorDim; ++i) {
            const float dv = d[i] - mean;
            var += dv * dv;
        }
        const float stddev = std::sqrt(var / kDescriptorDim);
        if (stddev < 1e-6f) {
            std::fill(d, d + kDescriptorDim, 0.0f);
        } else {
            const float inv = 1.0f / stddev;
            for (int i = 0; i < kDescriptorDim; ++i) d[i] = (d[i] - mean) * inv;
        }
    }
    return desc;
}

namespace {

struct NearestTwo {
    int best = -1;
    float best_d2 = std::numeric_limits<float>::infinity();
    float second_d2 = std::numeric_limits<float>::infinity();
};

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

    // One pass over the full distance matrix serves both directions.
    std::vector<float> dist(static_cast<std::size_t>(n_src) * n_dst);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n_src; ++i) {
        const float* a = src_desc.data() + static_cast<std::size_t>(i) * kDescriptorDim;
        float* row = dist.data() + static_cast<std::size_t>(i) * n_dst;
        for (int j = 0; j < n_dst; ++j)
            row[j] = squared_distance(
                a, dst_desc.data() + static_cast<std::size_t>(j) * kDescriptorDim);
    }

    std::vector<NearestTwo> fwd(n_src);
    std::vector<int> rev(n_dst, -1);
#pragma omp parallel for schedule(static)
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
#pragma omp parallel for schedule(static)
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
            ratio = 0.0;  // single candidate: unambiguous by construction
        } else if (second <= 0.0) {
            ratio = 1.0;  // duplicate zero-distance candidates are ambiguous
        } else {
            ratio = best / second;
        }
        if (ratio < 0.9)
            matches.push_back({i, j, std::clamp(1.0 - ratio, 0.0, 1.0)});
    }
    return matches;
}

std::vector<Correspondence> describe_and_match(std::span<const Keypoint> src_kps,
                                               std::span<const Keypoint> dst_kps,
                                               const GrayImage& src_img,
                                               const GrayImage& dst_img) {
    const std::vector<float> src_desc = compute_descriptors(src_kps, src_img);
    const std::vector<float> dst_desc = compute_descriptors(dst_kps, dst_img);
    const auto matches = match_descriptors(src_desc, static_cast<int>(src_kps.size()), dst_desc,
                                           static_cast<int>(dst_kps.size()));
    std::vector<Correspondence> out;
    out.reserve(matches.size());
    for (const auto& m : matches)
        out.push_back({src_kps[m.src_index].pt, dst_kps[m.dst_index].pt, m.confidence});
    return out;
}

std::vector<Correspondence> match_tiles_builtin(const GrayImage& src_tile,
                                                const GrayImage& dst_tile,
                                                const MatcherSpec& spec) {
    if (src_tile.empty() || dst_tile.empty())
        throw std::invalid_argument("match_tiles requires non-empty tiles");
    const std::vector<Keypoint> src_all = detect_keypoints(src_tile, spec.keypoint_budget);
    const std::vector<Keypoint> dst_all = detect_keypoints(dst_tile, spec.keypoint_budget);
    const std::vector<Keypoint> src_kps = filter_margin(src_all, src_tile);
    const std::vector<Keypoint> dst_kps = filter_margin(dst_all, dst_tile);
    if (src_kps.empty() || dst_kps.empty()) return {};
    return describe_and_match(src_kps, dst_kps, src_tile, dst_tile);
}

}  // namespace regbench
