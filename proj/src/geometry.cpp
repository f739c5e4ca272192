#include "regbench/geometry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "regbench/rng.hpp"

namespace regbench {

namespace {

constexpr double kDenominatorEps = 1e-12;

// Sine-of-angle collinearity test, scale invariant.
bool collinear(Point2 a, Point2 b, Point2 c) {
    const double abx = b.x - a.x, aby = b.y - a.y;
    const double acx = c.x - a.x, acy = c.y - a.y;
    const double cross = abx * acy - aby * acx;
    const double nab = std::hypot(abx, aby);
    const double nac = std::hypot(acx, acy);
    if (nab == 0.0 || nac == 0.0) return true;
    return std::abs(cross) <= 1e-8 * nab * nac;
}

bool any_three_collinear(std::span<const Point2> pts) {
    const int n = static_cast<int>(pts.size());
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            for (int k = j + 1; k < n; ++k)
                if (collinear(pts[i], pts[j], pts[k])) return true;
    return false;
}

struct Similarity {
    double scale = 1.0;
    double tx = 0.0;
    double ty = 0.0;
};

// Isotropic Hartley normalization: centroid to origin, mean distance sqrt(2).
Similarity hartley_normalization(std::span<const Point2> pts) {
    double cx = 0.0, cy = 0.0;
    for (const auto& p : pts) {
        cx += p.x;
        cy += p.y;
    }
    cx /= static_cast<double>(pts.size());
    cy /= static_cast<double>(pts.size());
    double mean_dist = 0.0;
    for (const auto& p : pts) mean_dist += std::hypot(p.x - cx, p.y - cy);
    mean_dist /= static_cast<double>(pts.size());
    const double s = mean_dist > 1e-12 ? std::sqrt(2.0) / mean_dist : 1.0;
    return {s, -s * cx, -s * cy};
}

Point2 apply_similarity(const Similarity& t, Point2 p) {
    return {t.scale * p.x + t.tx, t.scale * p.y + t.ty};
}

Point2 apply_or_infinity(const GeometricTransform& t, Point2 p) {
    if (const auto* a = std::get_if<AffineTransform>(&t)) return a->apply(p);
    const auto& h = std::get<Homography>(t).h;
    const double w = h[6] * p.x + h[7] * p.y + h[8];
    if (std::abs(w) < kDenominatorEps) {
        const double inf = std::numeric_limits<double>::infinity();
        return {inf, inf};
    }
    return {(h[0] * p.x + h[1] * p.y + h[2]) / w, (h[3] * p.x + h[4] * p.y + h[5]) / w};
}

void append_number(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

}  // namespace

AffineTransform AffineTransform::inverse() const {
    const double det = linear_determinant();
    if (std::abs(det) < kDenominatorEps)
        throw DegenerateConfiguration("affine transform is not invertible");
    const double ia = m[4] / det, ib = -m[1] / det;
    const double ic = -m[3] / det, id = m[0] / det;
    return {{ia, ib, -(ia * m[2] + ib * m[5]), ic, id, -(ic * m[2] + id * m[5])}};
}

AffineTransform AffineTransform::compose(const AffineTransform& other) const {
    const auto& a = m;
    const auto& b = other.m;
    return {{a[0] * b[0] + a[1] * b[3], a[0] * b[1] + a[1] * b[4], a[0] * b[2] + a[1] * b[5] + a[2],
             a[3] * b[0] + a[4] * b[3], a[3] * b[1] + a[4] * b[4], a[3] * b[2] + a[4] * b[5] + a[5]}};
}

Point2 Homography::apply(Point2 p) const {
    const double w = h[6] * p.x + h[7] * p.y + h[8];
    if (std::abs(w) < kDenominatorEps)
        throw DegeneratePoint("projective denominator vanishes at (" + std::to_string(p.x) + ", " +
                              std::to_string(p.y) + ")");
    return {(h[0] * p.x + h[1] * p.y + h[2]) / w, (h[3] * p.x + h[4] * p.y + h[5]) / w};
}

Homography Homography::inverse() const {
    Eigen::Matrix3d m;
    m << h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8];
    if (std::abs(m.determinant()) < kDenominatorEps)
        throw DegenerateConfiguration("homography is not invertible");
    const Eigen::Matrix3d inv = m.inverse();
    Homography out{{inv(0, 0), inv(0, 1), inv(0, 2), inv(1, 0), inv(1, 1), inv(1, 2), inv(2, 0),
                    inv(2, 1), inv(2, 2)}};
    out.normalize();
    return out;
}

Homography Homography::compose(const Homography& other) const {
    Eigen::Matrix3d a, b;
    a << h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8];
    b << other.h[0], other.h[1], other.h[2], other.h[3], other.h[4], other.h[5], other.h[6],
        other.h[7], other.h[8];
    const Eigen::Matrix3d c = a * b;
    Homography out{{c(0, 0), c(0, 1), c(0, 2), c(1, 0), c(1, 1), c(1, 2), c(2, 0), c(2, 1),
                    c(2, 2)}};
    out.normalize();
    return out;
}

void Homography::normalize() {
    if (std::abs(h[8]) > 1e-9) {
        const double inv = 1.0 / h[8];
        for (auto& v : h) v *= inv;
        return;
    }
    double frob = 0.0;
    for (double v : h) frob += v * v;
    frob = std::sqrt(frob);
    if (frob < kDenominatorEps) throw DegenerateConfiguration("homography is numerically zero");
    double s = 1.0 / frob;
    if ((h[0] + h[4] + h[8]) * s < 0.0) s = -s;
    for (auto& v : h) v *= s;
}

const char* to_string(GeometryModel model) {
    return model == GeometryModel::affine ? "affine" : "homography";
}

GeometryModel geometry_model_from_string(std::string_view name) {
    if (name == "affine") return GeometryModel::affine;
    if (name == "homography") return GeometryModel::homography;
    throw std::invalid_argument("unknown geometry \"" + std::string(name) + "\"");
}

Point2 apply_transform(const GeometricTransform& t, Point2 p) {
    return std::visit([&](const auto& v) { return v.apply(p); }, t);
}

GeometricTransform compose(const GeometricTransform& a, const GeometricTransform& b) {
    if (std::holds_alternative<AffineTransform>(a) && std::holds_alternative<AffineTransform>(b))
        return std::get<AffineTransform>(a).compose(std::get<AffineTransform>(b));
    const Homography ha = std::holds_alternative<Homography>(a)
                              ? std::get<Homography>(a)
                              : Homography::from_affine(std::get<AffineTransform>(a));
    const Homography hb = std::holds_alternative<Homography>(b)
                              ? std::get<Homography>(b)
                              : Homography::from_affine(std::get<AffineTransform>(b));
    return ha.compose(hb);
}

GeometricTransform invert(const GeometricTransform& t) {
    if (const auto* a = std::get_if<AffineTransform>(&t)) return a->inverse();
    return std::get<Homography>(t).inverse();
}

AffineTransform fit_affine_lsq(std::span<const Point2> src, std::span<const Point2> dst) {
    if (src.size() != dst.size() || src.size() < 3)
        throw std::invalid_argument("fit_affine_lsq needs equal-length lists of >= 3 points");
    const int n = static_cast<int>(src.size());

    // The x and y rows decouple; both share the [x y 1] design matrix.
    Eigen::MatrixXd design(n, 3);
    Eigen::VectorXd bx(n), by(n);
    for (int i = 0; i < n; ++i) {
        design(i, 0) = src[i].x;
        design(i, 1) = src[i].y;
        design(i, 2) = 1.0;
        bx(i) = dst[i].x;
        by(i) = dst[i].y;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < 3)
        throw DegenerateConfiguration("collinear source points in affine fit");
    const Eigen::Vector3d row_x = qr.solve(bx);
    const Eigen::Vector3d row_y = qr.solve(by);
    return {{row_x(0), row_x(1), row_x(2), row_y(0), row_y(1), row_y(2)}};
}

Homography fit_homography_dlt(std::span<const Point2> src, std::span<const Point2> dst) {
    if (src.size() != dst.size() || src.size() < 4)
        throw std::invalid_argument("fit_homography_dlt needs equal-length lists of >= 4 points");
    const int n = static_cast<int>(src.size());

    const Similarity ts = hartley_normalization(src);
    const Similarity td = hartley_normalization(dst);

    Eigen::MatrixXd design(2 * n, 9);
    for (int i = 0; i < n; ++i) {
        const Point2 p = apply_similarity(ts, src[i]);
        const Point2 q = apply_similarity(td, dst[i]);
        design.row(2 * i) << 0, 0, 0, -p.x, -p.y, -1, q.y * p.x, q.y * p.y, q.y;
        design.row(2 * i + 1) << p.x, p.y, 1, 0, 0, 0, -q.x * p.x, -q.x * p.y, -q.x;
    }

    const Eigen::Matrix<double, 9, 9> gram = design.transpose() * design;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 9, 9>> eig(gram);
    const auto& eigenvalues = eig.eigenvalues();  // ascending
    if (eigenvalues(1) <= 1e-12 * std::max(eigenvalues(8), 1.0))
        throw DegenerateConfiguration("rank-deficient design matrix in homography fit");
    const Eigen::Matrix<double, 9, 1> hn = eig.eigenvectors().col(0);

    // Denormalize: H = inv(Td) * Hn * Ts.
    Eigen::Matrix3d mh;
    mh << hn(0), hn(1), hn(2), hn(3), hn(4), hn(5), hn(6), hn(7), hn(8);
    Eigen::Matrix3d mts, mtd_inv;
    mts << ts.scale, 0, ts.tx, 0, ts.scale, ts.ty, 0, 0, 1;
    mtd_inv << 1.0 / td.scale, 0, -td.tx / td.scale, 0, 1.0 / td.scale, -td.ty / td.scale, 0, 0, 1;
    const Eigen::Matrix3d full = mtd_inv * mh * mts;
    if (std::abs(full.determinant()) < kDenominatorEps)
        throw DegenerateConfiguration("estimated homography is singular");

    Homography result{{full(0, 0), full(0, 1), full(0, 2), full(1, 0), full(1, 1), full(1, 2),
                       full(2, 0), full(2, 1), full(2, 2)}};
    result.normalize();
    return result;
}

std::vector<double> residuals(const GeometricTransform& t, std::span<const Correspondence> corrs) {
    std::vector<double> out(corrs.size());
    for (std::size_t i = 0; i < corrs.size(); ++i) {
        const Point2 mapped = apply_or_infinity(t, corrs[i].src);
        out[i] = mapped.finite() ? distance(mapped, corrs[i].dst)
                                 : std::numeric_limits<double>::infinity();
    }
    return out;
}

namespace {

GeometricTransform fit_exact(std::span<const Point2> src, std::span<const Point2> dst,
                             GeometryModel model) {
    if (model == GeometryModel::affine) return fit_affine_lsq(src, dst);
    return fit_homography_dlt(src, dst);
}

bool sample_degenerate(std::span<const Point2> src, std::span<const Point2> dst,
                       GeometryModel model) {
    if (model == GeometryModel::affine)
        return collinear(src[0], src[1], src[2]) || collinear(dst[0], dst[1], dst[2]);
    return any_three_collinear(src) || any_three_collinear(dst);
}

}  // namespace

FitResult ransac_fit(std::span<const Correspondence> corrs, GeometryModel model,
                     const RansacParams& params) {
    const int sample_size = minimal_sample_size(model);
    if (params.reproj_threshold <= 0.0) throw std::invalid_argument("reproj_threshold must be > 0");
    if (params.max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
    if (params.confidence <= 0.0 || params.confidence >= 1.0)
        throw std::invalid_argument("confidence must lie in (0, 1)");
    if (params.min_inliers < sample_size)
        throw std::invalid_argument("min_inliers must be >= the minimal sample size");

    const int n = static_cast<int>(corrs.size());
    if (n < sample_size)
        throw InsufficientCorrespondences("got " + std::to_string(n) + " correspondences, need " +
                                          std::to_string(sample_size));

    Rng rng(params.seed);
    std::array<int, 4> idx{};
    std::array<Point2, 4> sample_src{};
    std::array<Point2, 4> sample_dst{};

    bool have_best = false;
    GeometricTransform best_transform = AffineTransform::identity();
    int best_count = 0;
    double best_mean = std::numeric_limits<double>::infinity();

    int iteration_bound = params.max_iterations;
    int degenerate_rejections = 0;
    for (int it = 0; it < iteration_bound; ++it) {
        // Distinct minimal sample.
        for (int k = 0; k < sample_size; ++k) {
            for (;;) {
                const int candidate = rng.bounded_int(n);
                bool repeat = false;
                for (int j = 0; j < k; ++j) repeat |= (idx[j] == candidate);
                if (!repeat) {
                    idx[k] = candidate;
                    break;
                }
            }
            sample_src[k] = corrs[idx[k]].src;
            sample_dst[k] = corrs[idx[k]].dst;
        }

        const std::span<const Point2> ss(sample_src.data(), sample_size);
        const std::span<const Point2> sd(sample_dst.data(), sample_size);
        if (sample_degenerate(ss, sd, model)) {
            // Resample without spending the iteration, up to 100 rejections.
            if (++degenerate_rejections < 100) {
                --it;
            } else {
                degenerate_rejections = 0;
            }
            continue;
        }
        degenerate_rejections = 0;

        GeometricTransform hypothesis;
        try {
            hypothesis = fit_exact(ss, sd, model);
        } catch (const DegenerateConfiguration&) {
            continue;
        }

        const std::vector<double> res = residuals(hypothesis, corrs);
        int count = 0;
        double residual_sum = 0.0;
        for (double r : res) {
            if (r < params.reproj_threshold) {
                ++count;
                residual_sum += r;
            }
        }
        if (count == 0) continue;
        const double mean = residual_sum / count;
        if (count > best_count || (count == best_count && mean < best_mean)) {
            have_best = true;
            best_transform = hypothesis;
            best_count = count;
            best_mean = mean;

            // Adaptive bound: iterations needed to hit the confidence target
            // at the current inlier ratio.
            const double w = static_cast<double>(count) / n;
            const double p_all_inlier = std::pow(w, sample_size);
            if (p_all_inlier >= 1.0 - 1e-15) {
                iteration_bound = std::min(iteration_bound, it + 1);
            } else if (p_all_inlier > 0.0) {
                const double needed =
                    std::log(1.0 - params.confidence) / std::log(1.0 - p_all_inlier);
                if (needed < static_cast<double>(iteration_bound))
                    iteration_bound = std::max(it + 1, static_cast<int>(std::ceil(needed)));
            }
        }
    }

    if (!have_best || best_count < params.min_inliers)
        throw BelowInlierGate("best consensus " + std::to_string(best_count) +
                              " below minimum inlier count " + std::to_string(params.min_inliers));

    // Single least-squares refit on the consensus set.
    std::vector<Point2> in_src, in_dst;
    in_src.reserve(best_count);
    in_dst.reserve(best_count);
    const std::vector<double> best_res = residuals(best_transform, corrs);
    for (int i = 0; i < n; ++i) {
        if (best_res[i] < params.reproj_threshold) {
            in_src.push_back(corrs[i].src);
            in_dst.push_back(corrs[i].dst);
        }
    }
    GeometricTransform refit;
    try {
        refit = fit_exact(in_src, in_dst, model);
    } catch (const DegenerateConfiguration&) {
        refit = best_transform;
    }

    // One mask recomputation against the refit; no iteration to a fixpoint.
    FitResult result;
    result.transform = refit;
    result.hypothesis_mean_residual = best_mean;
    result.inlier_mask.assign(corrs.size(), 0);
    const std::vector<double> final_res = residuals(refit, corrs);
    double inlier_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        if (final_res[i] <= params.reproj_threshold) {
            result.inlier_mask[i] = 1;
            ++result.inlier_count;
            inlier_sum += final_res[i];
        }
    }
    if (result.inlier_count < params.min_inliers)
        throw BelowInlierGate("refit consensus " + std::to_string(result.inlier_count) +
                              " below minimum inlier count " + std::to_string(params.min_inliers));
    result.mean_inlier_residual = inlier_sum / result.inlier_count;
    return result;
}

std::string serialize_transform(const GeometricTransform& t) {
    std::string out;
    if (const auto* a = std::get_if<AffineTransform>(&t)) {
        for (int i = 0; i < 6; ++i) {
            if (i) out += ' ';
            append_number(out, a->m[i]);
        }
    } else {
        const auto& h = std::get<Homography>(t).h;
        for (int i = 0; i < 9; ++i) {
            if (i) out += ' ';
            append_number(out, h[i]);
        }
    }
    return out;
}

GeometricTransform parse_transform(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::vector<double> values;
    double v;
    while (in >> v) values.push_back(v);
    if (values.size() == 6) {
        AffineTransform a;
        std::copy(values.begin(), values.end(), a.m.begin());
        return a;
    }
    if (values.size() == 9) {
        Homography h;
        std::copy(values.begin(), values.end(), h.h.begin());
        return h;
    }
    throw IoError("transform line must hold 6 or 9 numbers, got " +
                  std::to_string(values.size()));
}

}  // namespace regbench
