#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "regbench/rng.hpp"
#include "regbench/tiling.hpp"

using namespace regbench;

TEST_CASE("build_grid 1024 with 512 tiles and 256 overlap") {
    const TileGrid grid = build_grid(1024, 1024, 512, 256);
    CHECK(grid.xs == std::vector<int>{0, 256, 512});
    CHECK(grid.ys == std::vector<int>{0, 256, 512});
    CHECK(grid.tile_count() == 9);
}

TEST_CASE("build_grid image smaller than the tile") {
    const TileGrid grid = build_grid(500, 500, 512, 256);
    CHECK(grid.xs == std::vector<int>{0});
    CHECK(grid.ys == std::vector<int>{0});
}

TEST_CASE("build_grid clamps the final origin") {
    const TileGrid grid = build_grid(1000, 1000, 512, 256);
    CHECK(grid.xs == std::vector<int>{0, 256, 488});
}

TEST_CASE("build_grid validates arguments") {
    CHECK_THROWS_AS(build_grid(100, 100, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(100, 100, 64, 64), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(100, 100, 64, -1), std::invalid_argument);
}

TEST_CASE("grid coverage and the tile-count formula against brute force") {
    for (const int tile : {512, 768}) {
        for (const int overlap : {128, 256}) {
            const int stride = tile - overlap;
            for (int dim = 1; dim <= 3000; ++dim) {
                const TileGrid grid = build_grid(dim, 1, tile, overlap);
                const auto& xs = grid.xs;

                // Formula from the contract.
                const int expected =
                    dim <= tile ? 1 : (dim - tile + stride - 1) / stride + 1;
                REQUIRE(static_cast<int>(xs.size()) == expected);

                // Strictly increasing origins; tiles stay inside the image.
                for (std::size_t i = 1; i < xs.size(); ++i) REQUIRE(xs[i] > xs[i - 1]);
                if (dim > tile)
                    for (int x : xs) REQUIRE(x + tile <= dim);

                // Brute-force coverage: every pixel inside >= 1 tile, and
                // pixels in overlap bands inside >= 2.
                std::vector<int> cover(dim, 0);
                for (int x : xs)
                    for (int i = x; i < std::min(dim, x + tile); ++i) ++cover[i];
                for (int i = 0; i < dim; ++i) REQUIRE(cover[i] >= 1);
                if (dim > tile) {
                    for (std::size_t t = 1; t < xs.size(); ++t) {
                        // Band shared by consecutive tiles.
                        const int band_start = xs[t];
                        const int band_end = std::min(xs[t - 1] + tile, dim);
                        for (int i = band_start; i < band_end; ++i) REQUIRE(cover[i] >= 2);
                    }
                }
            }
        }
    }
}

TEST_CASE("project_to_full_frame offsets and rescales") {
    TilePair pair;
    pair.src_origin = {256, 512};
    pair.dst_origin = {256, 512};
    const std::vector<Correspondence> local{{{10, 20}, {10, 20}, 0.5}};
    const auto full = project_to_full_frame(local, pair, 1.0, 1.0);
    CHECK(full[0].src.x == doctest::Approx(266.0));
    CHECK(full[0].src.y == doctest::Approx(532.0));
    CHECK(full[0].confidence == 0.5);

    TilePair origin_pair;
    const std::vector<Correspondence> zero{{{0, 0}, {0, 0}, 1.0}};
    const auto fixed = project_to_full_frame(zero, origin_pair, 0.5, 0.5);
    CHECK(fixed[0].src.x == 0.0);
    CHECK(fixed[0].src.y == 0.0);

    TilePair scaled_pair;
    scaled_pair.src_origin = {512, 0};
    scaled_pair.dst_origin = {512, 0};
    const std::vector<Correspondence> quarter{{{100, 100}, {100, 100}, 1.0}};
    const auto projected = project_to_full_frame(quarter, scaled_pair, 0.25, 0.25);
    CHECK(projected[0].src.x == doctest::Approx(2448.0));
    CHECK(projected[0].src.y == doctest::Approx(400.0));
}

TEST_CASE("project round-trips back to tile-local coordinates") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        TilePair pair;
        pair.src_origin = {static_cast<double>(rng.bounded_int(2000)),
                           static_cast<double>(rng.bounded_int(2000))};
        pair.dst_origin = {static_cast<double>(rng.bounded_int(2000)),
                           static_cast<double>(rng.bounded_int(2000))};
        const double src_scale = rng.uniform(0.25, 1.0);
        const double dst_scale = rng.uniform(0.25, 1.0);
        const Correspondence local{{rng.uniform(0, 768), rng.uniform(0, 768)},
                                   {rng.uniform(0, 768), rng.uniform(0, 768)},
                                   rng.uniform()};
        const auto full = project_to_full_frame(std::vector<Correspondence>{local}, pair,
                                                src_scale, dst_scale);
        const double back_x = full[0].src.x * src_scale - pair.src_origin.x;
        const double back_y = full[0].src.y * src_scale - pair.src_origin.y;
        CHECK(std::abs(back_x - local.src.x) < 1e-9);
        CHECK(std::abs(back_y - local.src.y) < 1e-9);
        const double dback_x = full[0].dst.x * dst_scale - pair.dst_origin.x;
        CHECK(std::abs(dback_x - local.dst.x) < 1e-9);
    }
}

TEST_CASE("aggregate concatenates in tile order regardless of fill order") {
    // Simulate out-of-order completion: slots are indexed by tile, so the
    // aggregate only depends on the indexed contents.
    std::vector<std::vector<Correspondence>> per_tile(4);
    auto corr = [](double v) { return Correspondence{{v, v}, {v, v}, 1.0}; };
    per_tile[3] = {corr(30)};
    per_tile[0] = {corr(0), corr(1)};
    per_tile[2] = {};
    per_tile[1] = {corr(10)};

    const auto all = aggregate(per_tile);
    REQUIRE(all.size() == 4);
    CHECK(all[0].src.x == 0.0);
    CHECK(all[1].src.x == 1.0);
    CHECK(all[2].src.x == 10.0);
    CHECK(all[3].src.x == 30.0);
}

TEST_CASE("single-tile aggregation is the identity") {
    std::vector<std::vector<Correspondence>> per_tile(1);
    per_tile[0] = {{{1, 2}, {3, 4}, 0.7}, {{5, 6}, {7, 8}, 0.2}};
    const auto all = aggregate(per_tile);
    REQUIRE(all.size() == 2);
    CHECK(all[0].dst.y == 4.0);
    CHECK(all[1].confidence == 0.2);
}

TEST_CASE("crop clamps to image bounds") {
    GrayImage img(10, 8);
    for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<float>(i);
    const GrayImage tile = crop(img, 6, 4, 8, 8);
    CHECK(tile.width == 4);
    CHECK(tile.height == 4);
    CHECK(tile.at(0, 0) == img.at(6, 4));
    CHECK(tile.at(3, 3) == img.at(9, 7));
}

TEST_CASE("tile_set_hash distinguishes lattices") {
    const TileGrid a = build_grid(1024, 1024, 512, 256);
    const TileGrid b = build_grid(1024, 1024, 512, 128);
    const TileGrid c = build_grid(1024, 1024, 512, 256);
    CHECK(tile_set_hash(a, a) != tile_set_hash(b, b));
    CHECK(tile_set_hash(a, a) == tile_set_hash(c, c));
    CHECK(tile_set_hash(a, b) != tile_set_hash(b, a));
}
