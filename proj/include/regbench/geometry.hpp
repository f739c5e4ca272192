#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "regbench/types.hpp"

namespace regbench {

// Row-major 2x3 affine map [[a, b, tx], [c, d, ty]].
struct AffineTransform {
    std::array<double, 6> m{1, 0, 0, 0, 1, 0};

    static AffineTransform identity() { return {}; }

    Point2 apply(Point2 p) const {
        return {m[0] * p.x + m[1] * p.y + m[2], m[3] * p.x + m[4] * p.y + m[5]};
    }

    double linear_determinant() const { return m[0] * m[4] - m[1] * m[3]; }

    AffineTransform inverse() const;
    // Returns the map p -> this(other(p)).
    AffineTransform compose(const AffineTransform& other) const;
};

// Row-major 3x3 projective map, normalized so h[8] = 1 where possible.
struct Homography {
    std::array<double, 9> h{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Homography identity() { return {}; }
    static Homography from_affine(const AffineTransform& a) {
        return {{a.m[0], a.m[1], a.m[2], a.m[3], a.m[4], a.m[5], 0, 0, 1}};
    }

    // Throws DegeneratePoint when the projective denominator vanishes.
    Point2 apply(Point2 p) const;

    Homography inverse() const;
    Homography compose(const Homography& other) const;
    // Rescale so h[8] = 1, falling back to unit Frobenius norm with positive
    // trace sign when h[8] is numerically zero.
    void normalize();
};

using GeometricTransform = std::variant<AffineTransform, Homography>;

enum class GeometryModel { affine, homography };

constexpr int minimal_sample_size(GeometryModel model) {
    return model == GeometryModel::affine ? 3 : 4;
}

const char* to_string(GeometryModel model);
GeometryModel geometry_model_from_string(std::string_view name);

Point2 apply_transform(const GeometricTransform& t, Point2 p);
GeometricTransform compose(const GeometricTransform& a, const GeometricTransform& b);
GeometricTransform invert(const GeometricTransform& t);

struct RansacParams {
    double reproj_threshold = 10.0;
    int max_iterations = 2000;
    double confidence = 0.995;
    int min_inliers = 6;
    std::uint64_t seed = 0;
};

struct FitResult {
    GeometricTransform transform;
    std::vector<std::uint8_t> inlier_mask;
    int inlier_count = 0;
    double mean_inlier_residual = 0.0;
    // Consensus mean of the winning minimal-sample hypothesis, before the
    // refit. Diagnostic; the refit mean should not exceed it.
    double hypothesis_mean_residual = 0.0;
};

// Least-squares affine fit; exact interpolation for 3 non-collinear pairs.
// Throws DegenerateConfiguration when the source points are collinear.
AffineTransform fit_affine_lsq(std::span<const Point2> src, std::span<const Point2> dst);

// Hartley-normalized DLT; needs >= 4 pairs with no three source or target
// points collinear.
Homography fit_homography_dlt(std::span<const Point2> src, std::span<const Point2> dst);

// Seeded, deterministic RANSAC: minimal-sample hypotheses scored by
// reprojection residual, single least-squares refit on the best consensus,
// one final mask recomputation. Throws InsufficientCorrespondences or
// BelowInlierGate.
FitResult ransac_fit(std::span<const Correspondence> corrs, GeometryModel model,
                     const RansacParams& params);

// Per-correspondence Euclidean reprojection distances; degenerate projective
// points yield +inf.
std::vector<double> residuals(const GeometricTransform& t, std::span<const Correspondence> corrs);

// One line of 6 (affine) or 9 (homography) whitespace-separated decimals.
std::string serialize_transform(const GeometricTransform& t);
GeometricTransform parse_transform(std::string_view text);

}  // namespace regbench
