#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "regbench/external_matcher.hpp"
#include "regbench/image_io.hpp"
#include "regbench/matching.hpp"
#include "regbench/rng.hpp"
#include "regbench/synthgen.hpp"

using namespace regbench;
namespace fs = std::filesystem;

namespace {

GrayImage noise_image(std::uint64_t seed, int w, int h) {
    Rng rng(seed);
    GrayImage img(w, h);
    for (auto& v : img.data) v = static_cast<float>(rng.uniform(0.0, 255.0));
    return img;
}

// Texture crop with an integer offset into a larger seeded texture, so two
// crops are exact translates of each other.
GrayImage texture_crop(const GrayImage& texture, int x0, int y0, int w, int h) {
    GrayImage out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.at(x, y) = texture.at(x0 + x, y0 + y);
    return out;
}

double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    return values[values.size() / 2];
}

const std::string kAdapterScript = std::string(REGBENCH_TEST_DIR) + "/adapters/echo_adapter.py";

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("detect_keypoints returns nothing on a constant image") {
    const GrayImage img(64, 64, 128.0f);
    CHECK(detect_keypoints(img, 100).empty());
}

TEST_CASE("detect_keypoints finds the corners of a white square") {
    GrayImage img(64, 64, 0.0f);
    for (int y = 20; y <= 40; ++y)
        for (int x = 20; x <= 40; ++x) img.at(x, y) = 255.0f;

    const auto kps = detect_keypoints(img, 4);
    REQUIRE(kps.size() == 4);
    const Point2 corners[4] = {{20, 20}, {40, 20}, {20, 40}, {40, 40}};
    for (const auto& corner : corners) {
        double best = 1e9;
        for (const auto& kp : kps) best = std::min(best, distance(kp.pt, corner));
        CHECK(best <= 2.0);
    }
}

TEST_CASE("detect_keypoints honors the budget with descending responses") {
    const GrayImage img = render_texture(5, 128, 128);
    const auto kps = detect_keypoints(img, 10);
    REQUIRE(kps.size() == 10);
    for (std::size_t i = 1; i < kps.size(); ++i) CHECK(kps[i - 1].response >= kps[i].response);

    const auto more = detect_keypoints(img, 100000);
    CHECK(more.size() <= 100000);
    CHECK(more.size() > 10);
}

TEST_CASE("identical tiles self-match within half a pixel") {
    const GrayImage img = render_texture(11, 160, 160);
    MatcherSpec spec;
    spec.keypoint_budget = 300;
    const auto matches = match_tiles_builtin(img, img, spec);
    REQUIRE(matches.size() > 20);
    for (const auto& m : matches) {
        CHECK(distance(m.src, m.dst) <= 0.5);
        CHECK(m.confidence >= 0.0);
        CHECK(m.confidence <= 1.0);
    }
}

TEST_CASE("translated tile yields the planted displacement") {
    const GrayImage texture = render_texture(13, 300, 260);
    const GrayImage src = texture_crop(texture, 10, 0, 256, 256);
    const GrayImage dst = texture_crop(texture, 0, 0, 256, 256);
    // Content at src x appears at dst x + 10.
    MatcherSpec spec;
    spec.keypoint_budget = 500;
    const auto matches = match_tiles_builtin(src, dst, spec);
    REQUIRE(matches.size() > 30);
    std::vector<double> dx, dy;
    for (const auto& m : matches) {
        dx.push_back(m.dst.x - m.src.x);
        dy.push_back(m.dst.y - m.src.y);
    }
    CHECK(median(dx) == doctest::Approx(10.0).epsilon(0.05));
    CHECK(std::abs(median(dy)) <= 0.5);
}

TEST_CASE("blank tiles match to nothing") {
    const GrayImage blank(128, 128, 40.0f);
    const GrayImage textured = render_texture(17, 128, 128);
    MatcherSpec spec;
    CHECK(match_tiles_builtin(blank, blank, spec).empty());
    CHECK(match_tiles_builtin(blank, textured, spec).empty());
}

TEST_CASE("disjoint noise images produce a near-empty match set") {
    const GrayImage a = noise_image(19, 200, 200);
    const GrayImage b = noise_image(23, 200, 200);
    MatcherSpec spec;
    spec.keypoint_budget = 400;
    const auto matches = match_tiles_builtin(a, b, spec);
    CHECK(matches.size() <= spec.keypoint_budget / 20);
}

TEST_CASE("contrast inversion collapses the match count") {
    const GrayImage img = render_texture(29, 200, 200);
    GrayImage inverted(img.width, img.height);
    for (std::size_t i = 0; i < img.data.size(); ++i) inverted.data[i] = 255.0f - img.data[i];

    MatcherSpec spec;
    spec.keypoint_budget = 400;
    const auto same = match_tiles_builtin(img, img, spec);
    const auto cross = match_tiles_builtin(img, inverted, spec);
    REQUIRE(same.size() > 50);
    CHECK(static_cast<double>(cross.size()) < 0.2 * static_cast<double>(same.size()));
}

TEST_CASE("match_descriptors is mutual and passes the ratio test") {
    Rng rng(31);
    const int n_src = 40, n_dst = 35;
    std::vector<float> src_desc(n_src * kDescriptorDim), dst_desc(n_dst * kDescriptorDim);
    for (auto& v : src_desc) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    for (auto& v : dst_desc) v = static_cast<float>(rng.uniform(-1.0, 1.0));

    const auto matches = match_descriptors(src_desc, n_src, dst_desc, n_dst);
    auto dist2 = [&](int i, int j) {
        double acc = 0.0;
        for (int d = 0; d < kDescriptorDim; ++d) {
            const double diff = src_desc[i * kDescriptorDim + d] - dst_desc[j * kDescriptorDim + d];
            acc += diff * diff;
        }
        return acc;
    };
    for (const auto& m : matches) {
        // Brute-force nearest neighbours both ways.
        double best_fwd = 1e300, second_fwd = 1e300;
        int best_fwd_j = -1;
        for (int j = 0; j < n_dst; ++j) {
            const double d2 = dist2(m.src_index, j);
            if (d2 < best_fwd) {
                second_fwd = best_fwd;
                best_fwd = d2;
                best_fwd_j = j;
            } else if (d2 < second_fwd) {
                second_fwd = d2;
            }
        }
        CHECK(best_fwd_j == m.dst_index);
        int best_rev_i = -1;
        double best_rev = 1e300;
        for (int i = 0; i < n_src; ++i) {
            const double d2 = dist2(i, m.dst_index);
            if (d2 < best_rev) {
                best_rev = d2;
                best_rev_i = i;
            }
        }
        CHECK(best_rev_i == m.src_index);
        const double ratio = std::sqrt(best_fwd) / std::sqrt(second_fwd);
        CHECK(ratio < 0.9);
        CHECK(m.confidence == doctest::Approx(1.0 - ratio).epsilon(1e-6));
    }
}

TEST_CASE("builtin matching is deterministic") {
    const GrayImage a = render_texture(37, 180, 180);
    const GrayImage b = render_texture(41, 180, 180);
    MatcherSpec spec;
    spec.keypoint_budget = 200;
    const auto m1 = match_tiles_builtin(a, b, spec);
    const auto m2 = match_tiles_builtin(a, b, spec);
    REQUIRE(m1.size() == m2.size());
    for (std::size_t i = 0; i < m1.size(); ++i) {
        CHECK(m1[i].src.x == m2[i].src.x);
        CHECK(m1[i].dst.y == m2[i].dst.y);
        CHECK(m1[i].confidence == m2[i].confidence);
    }
}

TEST_CASE("integer translation of the target shifts matched coordinates") {
    const GrayImage texture = render_texture(43, 320, 320);
    const GrayImage src = texture_crop(texture, 20, 14, 256, 256);
    MatcherSpec spec;
    spec.keypoint_budget = 300;

    for (const auto [tx, ty] : {std::pair{6, 0}, std::pair{0, 9}, std::pair{-5, 7}}) {
        const GrayImage dst = texture_crop(texture, 20 - tx, 14 - ty, 256, 256);
        const auto matches = match_tiles_builtin(src, dst, spec);
        REQUIRE(matches.size() > 20);
        std::vector<double> dxs, dys;
        for (const auto& m : matches) {
            dxs.push_back(m.dst.x - m.src.x);
            dys.push_back(m.dst.y - m.src.y);
        }
        CHECK(std::abs(median(dxs) - tx) <= 0.5);
        CHECK(std::abs(median(dys) - ty) <= 0.5);
    }
}

TEST_CASE("external session round-trips planted correspondences") {
    const fs::path corr_dir = fresh_dir("regbench_adapter_echo");
    {
        std::ofstream out(corr_dir / "r0_c0.txt");
        out << "1.5 2.25 3.125 4.0625 0.875\n";
        out << "10 20 30 40 0.5\n";
    }
    const fs::path tile = corr_dir / "r0_c0.png";
    write_gray_png(tile.string(), GrayImage(32, 32, 100.0f));

    ExternalMatcherSession session("python3 " + kAdapterScript + " " + corr_dir.string(), 30.0);
    const auto matches = session.match(tile.string(), tile.string());
    REQUIRE(matches.size() == 2);
    CHECK(matches[0].src.x == 1.5);
    CHECK(matches[0].dst.y == 4.0625);
    CHECK(matches[0].confidence == 0.875);
    CHECK(matches[1].dst.x == 30.0);

    // Second request on the same session: sequence ids advance.
    const auto again = session.match(tile.string(), tile.string());
    CHECK(again.size() == 2);
}

TEST_CASE("external matcher failures surface as ExternalMatcherFailure") {
    const fs::path corr_dir = fresh_dir("regbench_adapter_fail");
    const fs::path tile = corr_dir / "r0_c0.png";
    write_gray_png(tile.string(), GrayImage(16, 16, 0.0f));

    SUBCASE("malformed header") {
        ExternalMatcherSession session(
            "python3 " + kAdapterScript + " " + corr_dir.string() + " malformed", 30.0);
        CHECK_THROWS_AS(session.match(tile.string(), tile.string()), ExternalMatcherFailure);
    }
    SUBCASE("explicit ERR response") {
        ExternalMatcherSession session(
            "python3 " + kAdapterScript + " " + corr_dir.string() + " error", 30.0);
        CHECK_THROWS_AS(session.match(tile.string(), tile.string()), ExternalMatcherFailure);
    }
    SUBCASE("timeout") {
        ExternalMatcherSession session(
            "python3 " + kAdapterScript + " " + corr_dir.string() + " sleep", 0.4);
        CHECK_THROWS_AS(session.match(tile.string(), tile.string()), ExternalMatcherFailure);
    }
    SUBCASE("dead command") {
        ExternalMatcherSession session("false", 5.0);
        CHECK_THROWS_AS(session.match(tile.string(), tile.string()), ExternalMatcherFailure);
    }
}

TEST_CASE("one-shot external match_tiles honors the MatcherSpec contract") {
    const fs::path corr_dir = fresh_dir("regbench_adapter_oneshot");
    {
        std::ofstream out(corr_dir / "r0_c0_src.txt");
        out << "5 6 7 8 1\n";
    }
    MatcherSpec spec;
    spec.kind = MatcherSpec::Kind::external;
    spec.external_command = "python3 " + kAdapterScript + " " + corr_dir.string();
    const GrayImage tile(24, 24, 10.0f);
    const auto matches = match_tiles(tile, tile, spec);
    REQUIRE(matches.size() == 1);
    CHECK(matches[0].src.x == 5.0);
    CHECK(matches[0].dst.y == 8.0);
}

TEST_CASE("matcher_spec_from_string parses and rejects") {
    const MatcherSpec b = matcher_spec_from_string("builtin");
    CHECK(b.kind == MatcherSpec::Kind::builtin);
    const MatcherSpec e = matcher_spec_from_string("external:python3 x.py");
    CHECK(e.kind == MatcherSpec::Kind::external);
    CHECK(e.external_command == "python3 x.py");
    CHECK(e.label() == "external:python3 x.py");
    CHECK_THROWS_AS(matcher_spec_from_string("sift"), std::invalid_argument);
    CHECK_THROWS_AS(matcher_spec_from_string("external:"), std::invalid_argument);
}
