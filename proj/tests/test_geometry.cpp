#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "regbench/geometry.hpp"
#include "regbench/rng.hpp"

using namespace regbench;

namespace {

// Seeded oracle: random well-conditioned affine with rotation, anisotropic
// scale, shear, and translation.
AffineTransform random_affine(Rng& rng) {
    const double angle = rng.uniform(-1.2, 1.2);
    const double sx = rng.uniform(0.5, 2.0);
    const double sy = rng.uniform(0.5, 2.0);
    const double shear = rng.uniform(-0.3, 0.3);
    const double tx = rng.uniform(-200.0, 200.0);
    const double ty = rng.uniform(-200.0, 200.0);
    const double c = std::cos(angle), s = std::sin(angle);
    return {{sx * c, -sy * s + shear, tx, sx * s, sy * c, ty}};
}

// Mild projective map: affine part plus small perspective terms.
Homography random_projective(Rng& rng) {
    const AffineTransform a = random_affine(rng);
    Homography h = Homography::from_affine(a);
    h.h[6] = rng.uniform(-1e-4, 1e-4);
    h.h[7] = rng.uniform(-1e-4, 1e-4);
    h.normalize();
    return h;
}

std::vector<Point2> random_points(Rng& rng, int n, double lo = 0.0, double hi = 1000.0) {
    std::vector<Point2> pts(n);
    for (auto& p : pts) p = {rng.uniform(lo, hi), rng.uniform(lo, hi)};
    return pts;
}

std::vector<Point2> map_points(const GeometricTransform& t, const std::vector<Point2>& pts) {
    std::vector<Point2> out;
    out.reserve(pts.size());
    for (const auto& p : pts) out.push_back(apply_transform(t, p));
    return out;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

TEST_CASE("apply_transform identity affine fixes points") {
    const GeometricTransform t = AffineTransform::identity();
    const Point2 p = apply_transform(t, {37.5, -4.0});
    CHECK(p.x == 37.5);
    CHECK(p.y == -4.0);
}

TEST_CASE("apply_transform scaling affine") {
    const AffineTransform a{{2, 0, 10, 0, 2, 20}};
    const Point2 p = apply_transform(a, {1, 1});
    CHECK(p.x == doctest::Approx(12.0));
    CHECK(p.y == doctest::Approx(22.0));
}

TEST_CASE("apply_transform homography with perspective division") {
    // h = diag(2, 2, 1): hand-evaluated product (6, 8, 1).
    const Homography h{{2, 0, 0, 0, 2, 0, 0, 0, 1}};
    const Point2 p = apply_transform(GeometricTransform{h}, {3, 4});
    CHECK(p.x == doctest::Approx(6.0));
    CHECK(p.y == doctest::Approx(8.0));
}

TEST_CASE("apply_transform throws on vanishing denominator") {
    Homography h = Homography::identity();
    h.h[6] = 1.0;
    h.h[8] = 0.0;  // denominator = x
    CHECK_THROWS_AS(apply_transform(GeometricTransform{h}, {0.0, 5.0}), DegeneratePoint);
}

TEST_CASE("fit_affine_lsq three exact constraints") {
    const std::vector<Point2> src{{0, 0}, {1, 0}, {0, 1}};
    const std::vector<Point2> dst{{10, 20}, {12, 20}, {10, 22}};
    const AffineTransform a = fit_affine_lsq(src, dst);
    const double expected[6] = {2, 0, 10, 0, 2, 20};
    for (int i = 0; i < 6; ++i) CHECK(a.m[i] == doctest::Approx(expected[i]).epsilon(1e-12));
}

TEST_CASE("fit_affine_lsq src equal to dst gives identity") {
    Rng rng(3);
    const std::vector<Point2> src = random_points(rng, 12);
    const AffineTransform a = fit_affine_lsq(src, src);
    const double expected[6] = {1, 0, 0, 0, 1, 0};
    for (int i = 0; i < 6; ++i) CHECK(a.m[i] == doctest::Approx(expected[i]).epsilon(1e-9));
}

TEST_CASE("fit_affine_lsq recovers seeded affine from noiseless points") {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const AffineTransform truth = random_affine(rng);
        const std::vector<Point2> src = random_points(rng, 50);
        const std::vector<Point2> dst = map_points(truth, src);
        const AffineTransform fitted = fit_affine_lsq(src, dst);
        for (int i = 0; i < 6; ++i)
            CHECK(std::abs(fitted.m[i] - truth.m[i]) < 1e-9);
    }
}

TEST_CASE("fit_affine_lsq rejects collinear sources") {
    const std::vector<Point2> src{{0, 0}, {1, 1}, {2, 2}, {3, 3}};
    const std::vector<Point2> dst{{0, 0}, {2, 2}, {4, 4}, {6, 6}};
    CHECK_THROWS_AS(fit_affine_lsq(src, dst), DegenerateConfiguration);
}

TEST_CASE("fit_homography_dlt maps unit square to itself") {
    const std::vector<Point2> corners{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    const Homography h = fit_homography_dlt(corners, corners);
    const Homography id = Homography::identity();
    for (int i = 0; i < 9; ++i) CHECK(std::abs(h.h[i] - id.h[i]) < 1e-9);
}

TEST_CASE("fit_homography_dlt embeds an affine") {
    const AffineTransform a{{1, 0, 5, 0, 1, 7}};
    const std::vector<Point2> src{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    std::vector<Point2> dst;
    for (const auto& p : src) dst.push_back(a.apply(p));
    const Homography h = fit_homography_dlt(src, dst);
    const Homography expected = Homography::from_affine(a);
    for (int i = 0; i < 9; ++i) CHECK(std::abs(h.h[i] - expected.h[i]) < 1e-9);
}

TEST_CASE("fit_homography_dlt recovers a seeded projective map") {
    Rng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        const Homography truth = random_projective(rng);
        const std::vector<Point2> src = random_points(rng, 30);
        const std::vector<Point2> dst = map_points(GeometricTransform{truth}, src);
        const Homography fitted = fit_homography_dlt(src, dst);
        // Corner reprojection, the metric the protocol cares about.
        for (const Point2 corner : {Point2{0, 0}, Point2{1000, 0}, Point2{0, 1000},
                                    Point2{1000, 1000}}) {
            const Point2 want = truth.apply(corner);
            const Point2 got = fitted.apply(corner);
            CHECK(distance(want, got) < 1e-6);
        }
    }
}

TEST_CASE("fit_homography_dlt rejects three collinear sources") {
    const std::vector<Point2> src{{0, 0}, {1, 1}, {2, 2}, {5, 0}};
    const std::vector<Point2> dst{{0, 0}, {1, 1}, {2, 2}, {5, 0}};
    CHECK_THROWS_AS(fit_homography_dlt(src, dst), DegenerateConfiguration);
}

TEST_CASE("homography affine embedding has clean bottom row") {
    Rng rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        const AffineTransform truth = random_affine(rng);
        const std::vector<Point2> src = random_points(rng, 25);
        std::vector<Point2> dst;
        for (const auto& p : src) dst.push_back(truth.apply(p));
        const Homography h = fit_homography_dlt(src, dst);
        CHECK(std::abs(h.h[6]) < 1e-6);
        CHECK(std::abs(h.h[7]) < 1e-6);
        CHECK(std::abs(h.h[8] - 1.0) < 1e-6);
    }
}

TEST_CASE("residuals identity on coincident pairs is zero") {
    std::vector<Correspondence> corrs;
    Rng rng(5);
    for (int i = 0; i < 10; ++i) {
        const Point2 p{rng.uniform(0, 100), rng.uniform(0, 100)};
        corrs.push_back({p, p, 1.0});
    }
    const auto res = residuals(AffineTransform::identity(), corrs);
    for (double r : res) CHECK(r == 0.0);
}

TEST_CASE("residuals 3-4-5 triangle") {
    const std::vector<Correspondence> corrs{{{0, 0}, {3, 4}, 1.0}};
    const auto res = residuals(AffineTransform::identity(), corrs);
    CHECK(res[0] == doctest::Approx(5.0));
}

TEST_CASE("residuals of a planted instance recover the injected noise") {
    Rng rng(41);
    const AffineTransform truth = random_affine(rng);
    std::vector<Correspondence> corrs;
    std::vector<double> injected;
    for (int i = 0; i < 40; ++i) {
        const Point2 src{rng.uniform(0, 500), rng.uniform(0, 500)};
        Point2 dst = truth.apply(src);
        const double angle = rng.uniform(0, 6.283185307179586);
        const double magnitude = rng.uniform(0.0, 2.0);
        dst.x += magnitude * std::cos(angle);
        dst.y += magnitude * std::sin(angle);
        injected.push_back(magnitude);
        corrs.push_back({src, dst, 1.0});
    }
    const auto res = residuals(GeometricTransform{truth}, corrs);
    for (std::size_t i = 0; i < corrs.size(); ++i)
        CHECK(std::abs(res[i] - injected[i]) < 1e-9);
}

TEST_CASE("residuals degenerate homography points become infinite") {
    Homography h = Homography::identity();
    h.h[6] = 1.0;
    h.h[8] = 0.0;
    const std::vector<Correspondence> corrs{{{0.0, 3.0}, {1.0, 1.0}, 1.0},
                                            {{2.0, 3.0}, {1.0, 1.5}, 1.0}};
    const auto res = residuals(GeometricTransform{h}, corrs);
    CHECK(res[0] == kInf);
    CHECK(std::isfinite(res[1]));
}

namespace {

struct PlantedInstance {
    std::vector<Correspondence> corrs;
    AffineTransform truth;
    std::vector<int> inlier_indices;
    std::vector<double> noise;
};

PlantedInstance plant_affine_instance(std::uint64_t seed, int n_inliers, int n_outliers,
                                      double noise_sigma) {
    Rng rng(seed);
    PlantedInstance inst;
    inst.truth = random_affine(rng);
    for (int i = 0; i < n_inliers; ++i) {
        const Point2 src{rng.uniform(0, 800), rng.uniform(0, 800)};
        Point2 dst = inst.truth.apply(src);
        dst.x += rng.normal(0.0, noise_sigma);
        dst.y += rng.normal(0.0, noise_sigma);
        inst.inlier_indices.push_back(static_cast<int>(inst.corrs.size()));
        inst.corrs.push_back({src, dst, 1.0});
    }
    for (int i = 0; i < n_outliers; ++i) {
        const Point2 src{rng.uniform(0, 800), rng.uniform(0, 800)};
        const Point2 dst{rng.uniform(-2000, 2000), rng.uniform(-2000, 2000)};
        inst.corrs.push_back({src, dst, 1.0});
    }
    return inst;
}

}  // namespace

TEST_CASE("ransac_fit recovers a planted affine among outliers") {
    const PlantedInstance inst = plant_affine_instance(101, 80, 120, 0.2);
    RansacParams params;
    params.reproj_threshold = 3.0;
    params.seed = 7;
    const FitResult fit = ransac_fit(inst.corrs, GeometryModel::affine, params);
    int recovered = 0;
    for (int idx : inst.inlier_indices) {
        const Point2 mapped = apply_transform(fit.transform, inst.corrs[idx].src);
        if (distance(mapped, inst.corrs[idx].dst) <= 3.0) ++recovered;
    }
    CHECK(recovered == static_cast<int>(inst.inlier_indices.size()));
}

TEST_CASE("ransac_fit with total consensus matches the exact fit") {
    Rng rng(53);
    const AffineTransform truth = random_affine(rng);
    std::vector<Correspondence> corrs;
    std::vector<Point2> src_pts, dst_pts;
    for (int i = 0; i < 10; ++i) {
        const Point2 src{rng.uniform(0, 300), rng.uniform(0, 300)};
        const Point2 dst = truth.apply(src);
        corrs.push_back({src, dst, 1.0});
        src_pts.push_back(src);
        dst_pts.push_back(dst);
    }
    RansacParams params;
    params.reproj_threshold = 3.0;
    params.min_inliers = 6;
    params.seed = 99;
    const FitResult fit = ransac_fit(corrs, GeometryModel::affine, params);
    CHECK(fit.inlier_count == 10);
    const AffineTransform direct = fit_affine_lsq(src_pts, dst_pts);
    const auto& got = std::get<AffineTransform>(fit.transform);
    for (int i = 0; i < 6; ++i) CHECK(std::abs(got.m[i] - direct.m[i]) < 1e-9);
}

TEST_CASE("ransac_fit below the inlier gate") {
    Rng rng(61);
    const AffineTransform truth = random_affine(rng);
    std::vector<Correspondence> corrs;
    for (int i = 0; i < 5; ++i) {
        const Point2 src{rng.uniform(0, 100), rng.uniform(0, 100)};
        corrs.push_back({src, truth.apply(src), 1.0});
    }
    RansacParams params;
    params.min_inliers = 6;
    CHECK_THROWS_AS(ransac_fit(corrs, GeometryModel::affine, params), BelowInlierGate);
}

TEST_CASE("ransac_fit needs a minimal sample") {
    const std::vector<Correspondence> corrs{{{0, 0}, {1, 1}, 1.0}, {{5, 5}, {6, 6}, 1.0}};
    RansacParams params;
    params.min_inliers = 3;
    CHECK_THROWS_AS(ransac_fit(corrs, GeometryModel::affine, params),
                    InsufficientCorrespondences);
}

TEST_CASE("ransac_fit validates parameters") {
    const PlantedInstance inst = plant_affine_instance(3, 10, 0, 0.0);
    RansacParams params;
    params.min_inliers = 2;  // below the minimal affine sample
    CHECK_THROWS_AS(ransac_fit(inst.corrs, GeometryModel::affine, params), std::invalid_argument);
    params.min_inliers = 6;
    params.confidence = 1.5;
    CHECK_THROWS_AS(ransac_fit(inst.corrs, GeometryModel::affine, params), std::invalid_argument);
}

TEST_CASE("ransac_fit is deterministic for a fixed seed") {
    const PlantedInstance inst = plant_affine_instance(71, 60, 90, 0.3);
    RansacParams params;
    params.reproj_threshold = 2.5;
    params.seed = 1234;
    const FitResult a = ransac_fit(inst.corrs, GeometryModel::affine, params);
    const FitResult b = ransac_fit(inst.corrs, GeometryModel::affine, params);
    const auto& ta = std::get<AffineTransform>(a.transform);
    const auto& tb = std::get<AffineTransform>(b.transform);
    for (int i = 0; i < 6; ++i) CHECK(ta.m[i] == tb.m[i]);
    CHECK(a.inlier_count == b.inlier_count);
    CHECK(a.inlier_mask == b.inlier_mask);
    CHECK(a.mean_inlier_residual == b.mean_inlier_residual);
}

TEST_CASE("ransac_fit inlier mask is consistent with the refit transform") {
    for (std::uint64_t seed : {11ULL, 22ULL, 33ULL, 44ULL}) {
        const PlantedInstance inst = plant_affine_instance(seed, 70, 100, 0.4);
        RansacParams params;
        params.reproj_threshold = 3.0;
        params.seed = seed;
        const FitResult fit = ransac_fit(inst.corrs, GeometryModel::affine, params);
        const auto res = residuals(fit.transform, inst.corrs);
        int count = 0;
        for (std::size_t i = 0; i < res.size(); ++i) {
            if (fit.inlier_mask[i]) {
                CHECK(res[i] <= params.reproj_threshold);
                ++count;
            } else {
                CHECK(res[i] > params.reproj_threshold);
            }
        }
        CHECK(count == fit.inlier_count);
        CHECK(count >= params.min_inliers);
    }
}

TEST_CASE("ransac_fit refit does not worsen the best hypothesis residual") {
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        const PlantedInstance inst = plant_affine_instance(seed * 7 + 1, 80, 80, 0.5);
        RansacParams params;
        params.reproj_threshold = 3.0;
        params.seed = seed;
        const FitResult fit = ransac_fit(inst.corrs, GeometryModel::affine, params);
        CHECK(fit.mean_inlier_residual <= fit.hypothesis_mean_residual);

        // And the reported mean matches the final mask.
        const auto res = residuals(fit.transform, inst.corrs);
        double mean = 0.0;
        int count = 0;
        for (std::size_t i = 0; i < res.size(); ++i)
            if (fit.inlier_mask[i]) {
                mean += res[i];
                ++count;
            }
        mean /= count;
        CHECK(fit.mean_inlier_residual == doctest::Approx(mean).epsilon(1e-12));
    }
}

TEST_CASE("ransac_fit homography model on planted projective data") {
    Rng rng(87);
    const Homography truth = random_projective(rng);
    std::vector<Correspondence> corrs;
    for (int i = 0; i < 60; ++i) {
        const Point2 src{rng.uniform(0, 600), rng.uniform(0, 600)};
        corrs.push_back({src, truth.apply(src), 1.0});
    }
    for (int i = 0; i < 40; ++i)
        corrs.push_back({{rng.uniform(0, 600), rng.uniform(0, 600)},
                         {rng.uniform(-1500, 1500), rng.uniform(-1500, 1500)},
                         1.0});
    RansacParams params;
    params.reproj_threshold = 2.0;
    params.min_inliers = 6;
    params.seed = 5;
    const FitResult fit = ransac_fit(corrs, GeometryModel::homography, params);
    CHECK(fit.inlier_count >= 60);
    CHECK(fit.mean_inlier_residual < 1e-6);
}

TEST_CASE("fit equivariance under translation conjugation") {
    Rng rng(95);
    for (int trial = 0; trial < 10; ++trial) {
        const AffineTransform truth = random_affine(rng);
        std::vector<Point2> src = random_points(rng, 20);
        std::vector<Point2> dst;
        for (auto& p : src) {
            Point2 q = truth.apply(p);
            q.x += rng.normal(0.0, 0.5);
            q.y += rng.normal(0.0, 0.5);
            dst.push_back(q);
        }
        const AffineTransform direct = fit_affine_lsq(src, dst);

        const Point2 delta{rng.uniform(-500, 500), rng.uniform(-500, 500)};
        std::vector<Point2> src_shift, dst_shift;
        for (const auto& p : src) src_shift.push_back(p + delta);
        for (const auto& q : dst) dst_shift.push_back(q + delta);
        const AffineTransform shifted = fit_affine_lsq(src_shift, dst_shift);

        // Conjugate by the translation: T(-delta) o shifted o T(delta).
        const AffineTransform t_fwd{{1, 0, delta.x, 0, 1, delta.y}};
        const AffineTransform t_back{{1, 0, -delta.x, 0, 1, -delta.y}};
        const AffineTransform conjugated = t_back.compose(shifted.compose(t_fwd));
        for (int i = 0; i < 6; ++i) CHECK(std::abs(conjugated.m[i] - direct.m[i]) < 1e-9);
    }
}

TEST_CASE("transform serialization round-trips") {
    Rng rng(7);
    const AffineTransform a = random_affine(rng);
    const GeometricTransform ga{a};
    const GeometricTransform parsed_a = parse_transform(serialize_transform(ga));
    const auto& pa = std::get<AffineTransform>(parsed_a);
    for (int i = 0; i < 6; ++i) CHECK(pa.m[i] == a.m[i]);

    const Homography h = random_projective(rng);
    const GeometricTransform gh{h};
    const GeometricTransform parsed_h = parse_transform(serialize_transform(gh));
    const auto& ph = std::get<Homography>(parsed_h);
    for (int i = 0; i < 9; ++i) CHECK(ph.h[i] == h.h[i]);

    CHECK_THROWS_AS(parse_transform("1 2 3 4"), IoError);
}

TEST_CASE("homography normalization handles vanishing h22") {
    Homography h{{0, -1, 0, 1, 0, 0, 0, 0, 0}};  // rotation with zeroed corner
    h.normalize();
    double frob = 0.0;
    for (double v : h.h) frob += v * v;
    CHECK(std::sqrt(frob) == doctest::Approx(1.0));
}

TEST_CASE("compose and invert are consistent") {
    Rng rng(121);
    const AffineTransform a = random_affine(rng);
    const AffineTransform inv = a.inverse();
    const AffineTransform round = a.compose(inv);
    const double expected[6] = {1, 0, 0, 0, 1, 0};
    for (int i = 0; i < 6; ++i) CHECK(std::abs(round.m[i] - expected[i]) < 1e-9);

    const Homography h = random_projective(rng);
    const Homography hinv = h.inverse();
    const Homography hround = h.compose(hinv);
    const Homography id = Homography::identity();
    for (int i = 0; i < 9; ++i) CHECK(std::abs(hround.h[i] - id.h[i]) < 1e-9);
}
