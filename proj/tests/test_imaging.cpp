#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "regbench/image.hpp"
#include "regbench/image_io.hpp"
#include "regbench/rng.hpp"

using namespace regbench;
namespace fs = std::filesystem;

namespace {

GrayImage random_image(std::uint64_t seed, int w, int h, float lo = 0.0f, float hi = 255.0f) {
    Rng rng(seed);
    GrayImage img(w, h);
    for (auto& v : img.data) v = static_cast<float>(rng.uniform(lo, hi));
    return img;
}

// Independent percentile oracle: explicit sort + linear interpolation.
double percentile_oracle(std::vector<float> values, double q) {
    std::sort(values.begin(), values.end());
    const double rank = q / 100.0 * (values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(rank);
    const double frac = rank - lo;
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

fs::path temp_dir() {
    const fs::path dir = fs::temp_directory_path() / "regbench_imaging_test";
    fs::create_directories(dir);
    return dir;
}

const std::vector<NormalizationKind> kAllKinds{
    NormalizationKind::identity, NormalizationKind::percentile, NormalizationKind::zscore,
    NormalizationKind::clahe};

}  // namespace

TEST_CASE("constant images are fixed points of every normalization") {
    const GrayImage constant(64, 48, 137.0f);
    for (const auto kind : kAllKinds) {
        const GrayImage out = normalize(constant, kind);
        REQUIRE(out.data.size() == constant.data.size());
        CHECK(out.data == constant.data);
    }
}

TEST_CASE("identity normalization is bit-identical") {
    const GrayImage img = random_image(5, 33, 21);
    const GrayImage out = normalize(img, NormalizationKind::identity);
    CHECK(out.data == img.data);
}

TEST_CASE("percentile normalization on a 10-pixel ramp") {
    GrayImage img(10, 1);
    for (int i = 0; i < 10; ++i) img.data[i] = static_cast<float>(10 * i);

    const double p2 = percentile_oracle(img.data, 2.0);
    const double p98 = percentile_oracle(img.data, 98.0);
    CHECK(p2 == doctest::Approx(1.8));
    CHECK(p98 == doctest::Approx(88.2));

    const GrayImage out = normalize(img, NormalizationKind::percentile);
    CHECK(out.data.front() == 0.0f);   // 0 < p2 clamps low
    CHECK(out.data.back() == 255.0f);  // 90 > p98 clamps high
    for (int i = 0; i < 10; ++i) {
        const double expected =
            std::clamp((10.0 * i - p2) * 255.0 / (p98 - p2), 0.0, 255.0);
        CHECK(out.data[i] == doctest::Approx(expected).epsilon(1e-6));
    }
}

TEST_CASE("percentile value matches the oracle on random images") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const GrayImage img = random_image(seed, 37, 23);
        for (double q : {2.0, 50.0, 98.0})
            CHECK(percentile_value(img, q) == doctest::Approx(percentile_oracle(img.data, q)));
    }
}

TEST_CASE("normalize output stays in range") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const GrayImage img = random_image(seed, 61, 43);
        for (const auto kind : kAllKinds) {
            const GrayImage out = normalize(img, kind);
            for (float v : out.data) {
                CHECK(v >= 0.0f);
                CHECK(v <= 255.0f);
            }
        }
    }
}

TEST_CASE("percentile and zscore preserve pixel ordering") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const GrayImage img = random_image(seed, 41, 29);
        for (const auto kind : {NormalizationKind::percentile, NormalizationKind::zscore}) {
            const GrayImage out = normalize(img, kind);
            // Check ordering over a deterministic sample of pixel pairs.
            Rng rng(seed * 977 + 3);
            for (int k = 0; k < 400; ++k) {
                const auto i = static_cast<std::size_t>(rng.bounded(img.pixel_count()));
                const auto j = static_cast<std::size_t>(rng.bounded(img.pixel_count()));
                if (img.data[i] <= img.data[j]) {
                    CHECK(out.data[i] <= out.data[j]);
                } else {
                    CHECK(out.data[i] >= out.data[j]);
                }
            }
        }
    }
}

TEST_CASE("percentile is idempotent once the histogram spans the full range") {
    // Enough mass at both ends that p2 = 0 and p98 = 255 exactly after the
    // first pass.
    GrayImage img(100, 10);
    Rng rng(77);
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        const double u = rng.uniform();
        if (u < 0.05)
            img.data[i] = 0.0f;
        else if (u > 0.95)
            img.data[i] = 255.0f;
        else
            img.data[i] = static_cast<float>(rng.uniform(0.0, 255.0));
    }
    const GrayImage once = normalize(img, NormalizationKind::percentile);
    const GrayImage twice = normalize(once, NormalizationKind::percentile);
    for (std::size_t i = 0; i < once.data.size(); ++i)
        CHECK(std::abs(twice.data[i] - once.data[i]) <= 1e-9f);
}

TEST_CASE("zscore maps to mean 128 with spread 64 per unit z") {
    GrayImage img(4, 1);
    img.data = {100.0f, 100.0f, 200.0f, 200.0f};  // mean 150, sigma 50
    const GrayImage out = normalize(img, NormalizationKind::zscore);
    CHECK(out.data[0] == doctest::Approx(128.0 - 64.0));
    CHECK(out.data[2] == doctest::Approx(128.0 + 64.0));
}

TEST_CASE("clahe leaves regions independent away from seams") {
    const int w = 256, h = 128;
    GrayImage left_a(w, h), left_b(w, h);
    Rng rng(13);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const float left_value = static_cast<float>(40.0 + 40.0 * rng.uniform());
            if (x < w / 2) {
                left_a.at(x, y) = left_value;
                left_b.at(x, y) = left_value;
            } else {
                left_a.at(x, y) = static_cast<float>(160.0 + 40.0 * rng.uniform());
                left_b.at(x, y) = static_cast<float>(10.0 + 200.0 * rng.uniform());
            }
        }
    }
    const GrayImage out_a = normalize(left_a, NormalizationKind::clahe);
    const GrayImage out_b = normalize(left_b, NormalizationKind::clahe);
    // Tile columns at 32 px; pixels left of the fourth tile center never
    // blend with right-half tiles.
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < 104; ++x) CHECK(out_a.at(x, y) == out_b.at(x, y));
}

TEST_CASE("clahe expands local contrast") {
    GrayImage img(256, 256);
    Rng rng(21);
    for (auto& v : img.data) v = static_cast<float>(100.0 + 30.0 * rng.uniform());
    const GrayImage out = normalize(img, NormalizationKind::clahe);
    const auto [in_min, in_max] = std::minmax_element(img.data.begin(), img.data.end());
    const auto [out_min, out_max] = std::minmax_element(out.data.begin(), out.data.end());
    CHECK(*out_max - *out_min > 1.5f * (*in_max - *in_min));
}

TEST_CASE("resize_long_side caps the long side and reports the scale") {
    GrayImage big(4096, 2048);
    for (std::size_t i = 0; i < big.data.size(); ++i) big.data[i] = static_cast<float>(i % 251);
    const auto [resized, scale] = resize_long_side(big, 1024);
    CHECK(resized.width == 1024);
    CHECK(resized.height == 512);
    CHECK(scale == doctest::Approx(0.25));
}

TEST_CASE("resize_long_side below the cap is a no-op") {
    const GrayImage img = random_image(3, 800, 600);
    const auto [resized, scale] = resize_long_side(img, 2048);
    CHECK(scale == 1.0);
    CHECK(resized.data == img.data);
}

TEST_CASE("resize_long_side rounds the short side") {
    GrayImage img(1536, 1000);
    for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<float>(i % 17);
    const auto [resized, scale] = resize_long_side(img, 1024);
    CHECK(resized.width == 1024);
    CHECK(resized.height == 667);  // round(1000 * 1024 / 1536)
    CHECK(scale == doctest::Approx(1024.0 / 1536.0));
}

TEST_CASE("resize is deterministic") {
    const GrayImage img = random_image(9, 555, 333);
    const GrayImage a = resize_bilinear(img, 200, 120);
    const GrayImage b = resize_bilinear(img, 200, 120);
    CHECK(a.data == b.data);
}

TEST_CASE("to_gray copies a single 8-bit band") {
    Raster raster;
    raster.width = 3;
    raster.height = 1;
    raster.bands = 1;
    raster.bit_depth = 8;
    raster.samples = {0, 128, 255};
    const GrayImage img = to_gray(raster);
    CHECK(img.data[0] == 0.0f);
    CHECK(img.data[1] == 128.0f);
    CHECK(img.data[2] == 255.0f);
}

TEST_CASE("to_gray luma weights") {
    Raster raster;
    raster.width = 2;
    raster.height = 1;
    raster.bands = 3;
    raster.bit_depth = 8;
    raster.samples = {255, 255, 255, 255, 0, 0};  // white, pure red
    const GrayImage img = to_gray(raster);
    CHECK(img.data[0] == doctest::Approx(255.0));
    CHECK(img.data[1] == doctest::Approx(76.245));
}

TEST_CASE("to_gray rescales 16-bit input by min-max") {
    Raster raster;
    raster.width = 3;
    raster.height = 1;
    raster.bands = 1;
    raster.bit_depth = 16;
    raster.samples = {1000, 3000, 5000};
    const GrayImage img = to_gray(raster);
    CHECK(img.data[0] == doctest::Approx(0.0));
    CHECK(img.data[1] == doctest::Approx(127.5));
    CHECK(img.data[2] == doctest::Approx(255.0));
}

TEST_CASE("to_gray rejects unsupported band counts") {
    Raster raster;
    raster.width = 1;
    raster.height = 1;
    raster.bands = 2;
    raster.bit_depth = 8;
    raster.samples = {1, 2};
    CHECK_THROWS_AS(to_gray(raster), UnsupportedBandCount);
}

TEST_CASE("gray PNG round-trip") {
    const fs::path path = temp_dir() / "roundtrip.png";
    GrayImage img = random_image(15, 57, 31);
    // Quantize first so the round-trip is exact.
    for (auto& v : img.data) v = static_cast<float>(std::lround(v));
    write_gray_png(path.string(), img);
    const GrayImage back = read_gray(path.string());
    REQUIRE(back.width == img.width);
    REQUIRE(back.height == img.height);
    CHECK(back.data == img.data);
}

namespace {

void append_u16(std::vector<unsigned char>& bytes, std::uint16_t v) {
    bytes.push_back(v & 0xff);
    bytes.push_back(v >> 8);
}

void append_u32(std::vector<unsigned char>& bytes, std::uint32_t v) {
    bytes.push_back(v & 0xff);
    bytes.push_back((v >> 8) & 0xff);
    bytes.push_back((v >> 16) & 0xff);
    bytes.push_back((v >> 24) & 0xff);
}

void append_ifd_entry(std::vector<unsigned char>& bytes, std::uint16_t tag, std::uint16_t type,
                      std::uint32_t count, std::uint32_t value) {
    append_u16(bytes, tag);
    append_u16(bytes, type);
    append_u32(bytes, count);
    append_u32(bytes, value);
}

// Little-endian, single-strip, uncompressed TIFF.
std::vector<unsigned char> make_tiff(int width, int height, int bands, int bit_depth,
                                     const std::vector<std::uint16_t>& samples) {
    std::vector<unsigned char> bytes{'I', 'I', 42, 0};
    append_u32(bytes, 8);  // IFD offset

    const std::uint16_t n_entries = 8;
    const std::uint32_t ifd_size = 2 + 12 * n_entries + 4;
    const std::uint32_t data_offset = 8 + ifd_size;

    append_u16(bytes, n_entries);
    append_ifd_entry(bytes, 256, 4, 1, static_cast<std::uint32_t>(width));
    append_ifd_entry(bytes, 257, 4, 1, static_cast<std::uint32_t>(height));
    append_ifd_entry(bytes, 258, 3, 1, static_cast<std::uint32_t>(bit_depth));
    append_ifd_entry(bytes, 259, 3, 1, 1);  // uncompressed
    append_ifd_entry(bytes, 273, 4, 1, data_offset);
    append_ifd_entry(bytes, 277, 3, 1, static_cast<std::uint32_t>(bands));
    append_ifd_entry(bytes, 278, 4, 1, static_cast<std::uint32_t>(height));
    append_ifd_entry(bytes, 279, 4, 1,
                     static_cast<std::uint32_t>(samples.size() * (bit_depth / 8)));
    append_u32(bytes, 0);  // no next IFD

    for (std::uint16_t s : samples) {
        if (bit_depth == 8) {
            bytes.push_back(static_cast<unsigned char>(s));
        } else {
            append_u16(bytes, s);
        }
    }
    return bytes;
}

fs::path write_bytes(const std::string& name, const std::vector<unsigned char>& bytes) {
    const fs::path path = temp_dir() / name;
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    return path;
}

}  // namespace

TEST_CASE("reads an 8-bit grayscale TIFF") {
    const auto path = write_bytes("gray8.tif", make_tiff(3, 2, 1, 8, {10, 20, 30, 40, 50, 60}));
    const Raster raster = read_raster(path.string());
    CHECK(raster.width == 3);
    CHECK(raster.height == 2);
    CHECK(raster.bands == 1);
    CHECK(raster.bit_depth == 8);
    CHECK(raster.samples == std::vector<std::uint16_t>{10, 20, 30, 40, 50, 60});
}

TEST_CASE("reads a 16-bit TIFF and min-max rescales") {
    const auto path = write_bytes("gray16.tif", make_tiff(2, 1, 1, 16, {500, 1500}));
    const GrayImage img = read_gray(path.string());
    CHECK(img.data[0] == doctest::Approx(0.0));
    CHECK(img.data[1] == doctest::Approx(255.0));
}

TEST_CASE("reads a 3-band TIFF through the luma weights") {
    const auto path = write_bytes("rgb8.tif", make_tiff(1, 1, 3, 8, {255, 0, 0}));
    const GrayImage img = read_gray(path.string());
    CHECK(img.data[0] == doctest::Approx(76.245));
}

TEST_CASE("rejects TIFFs with unsupported band counts") {
    const auto path = write_bytes("rgba8.tif", make_tiff(1, 1, 4, 8, {1, 2, 3, 4}));
    CHECK_THROWS_AS(read_raster(path.string()), UnsupportedBandCount);
}

TEST_CASE("read_raster raises IoError for missing and malformed files") {
    CHECK_THROWS_AS(read_raster("/nonexistent/nowhere.png"), IoError);
    const auto path = write_bytes("garbage.bin", {'n', 'o', 'p', 'e', '!', '!', '!', '!'});
    CHECK_THROWS_AS(read_raster(path.string()), IoError);
}
