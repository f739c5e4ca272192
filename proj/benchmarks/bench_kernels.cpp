// Times the OpenMP kernels against their serial reference twins on
// synthetic inputs and prints one row per kernel.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "regbench/image.hpp"
#include "regbench/matching.hpp"
#include "regbench/reference.hpp"
#include "regbench/synthgen.hpp"

namespace {

using Clock = std::chrono::steady_clock;

template <typename F>
double time_best_of(int repeats, F&& fn) {
    double best = 1e100;
    for (int r = 0; r < repeats; ++r) {
        const auto start = Clock::now();
        fn();
        const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();
        if (elapsed < best) best = elapsed;
    }
    return best;
}

void report(const std::string& name, double serial_s, double parallel_s) {
    std::printf("%-24s serial %8.3f ms   parallel %8.3f ms   speedup %5.2fx\n", name.c_str(),
                serial_s * 1e3, parallel_s * 1e3, serial_s / parallel_s);
}

}  // namespace

int main(int argc, char** argv) {
    int size = 1536;
    int keypoints = 2000;
    int repeats = 3;
    if (argc > 1) size = std::stoi(argv[1]);
    if (argc > 2) keypoints = std::stoi(argv[2]);

    std::printf("threads: %d, image %dx%d, %d keypoints per side\n\n", omp_get_max_threads(),
                size, size, keypoints);

    const regbench::GrayImage img = regbench::render_texture(7, size, size);

    report("render_texture",
           time_best_of(repeats, [&] { regbench::reference::render_texture(7, size, size); }),
           time_best_of(repeats, [&] { regbench::render_texture(7, size, size); }));

    report("harris_response",
           time_best_of(repeats, [&] { regbench::reference::harris_response(img); }),
           time_best_of(repeats, [&] { regbench::harris_response(img); }));

    report("resize_bilinear",
           time_best_of(repeats,
                        [&] { regbench::reference::resize_bilinear(img, size / 2, size / 2); }),
           time_best_of(repeats, [&] { regbench::resize_bilinear(img, size / 2, size / 2); }));

    report("normalize_clahe",
           time_best_of(repeats, [&] {
               regbench::reference::normalize(img, regbench::NormalizationKind::clahe);
           }),
           time_best_of(repeats, [&] {
               regbench::normalize(img, regbench::NormalizationKind::clahe);
           }));

    report("apply_speckle",
           time_best_of(repeats, [&] { regbench::reference::apply_speckle(img, 0.3, 11); }),
           time_best_of(repeats, [&] { regbench::apply_speckle(img, 0.3, 11); }));

    {
        auto kps = regbench::detect_keypoints(img, keypoints);
        kps = regbench::filter_margin(kps, img);
        const auto desc = regbench::compute_descriptors(kps, img);
        const int n = static_cast<int>(kps.size());
        report("match_descriptors",
               time_best_of(repeats,
                            [&] { regbench::reference::match_descriptors(desc, n, desc, n); }),
               time_best_of(repeats, [&] { regbench::match_descriptors(desc, n, desc, n); }));
    }
    return 0;
}
