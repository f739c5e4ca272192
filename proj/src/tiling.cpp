#include "regbench/tiling.hpp"

#include <algorithm>
#include <stdexcept>

#include "regbench/rng.hpp"

namespace regbench {

namespace {

std::vector<int> axis_origins(int dim, int tile_size, int stride) {
    if (dim <= tile_size) return {0};
    std::vector<int> origins;
    for (int p = 0; p + tile_size < dim; p += stride) origins.push_back(p);
    const int last = dim - tile_size;
    if (origins.empty() || origins.back() < last) origins.push_back(last);
    return origins;
}

}  // namespace

TileGrid build_grid(int width, int height, int tile_size, int overlap) {
    if (tile_size < 1) throw std::invalid_argument("tile_size must be >= 1");
    if (overlap < 0 || overlap >= tile_size)
        throw std::invalid_argument("overlap must satisfy 0 <= overlap < tile_size");
    TileGrid grid;
    grid.tile_size = tile_size;
    grid.overlap = overlap;
    const int stride = tile_size - overlap;
    grid.xs = axis_origins(width, tile_size, stride);
    grid.ys = axis_origins(height, tile_size, stride);
    return grid;
}

GrayImage crop(const GrayImage& img, int x0, int y0, int w, int h) {
    const int x1 = std::min(x0 + w, img.width);
    const int y1 = std::min(y0 + h, img.height);
    x0 = std::max(x0, 0);
    y0 = std::max(y0, 0);
    GrayImage out(std::max(0, x1 - x0), std::max(0, y1 - y0));
    for (int y = y0; y < y1; ++y) {
        const float* src_row = img.data.data() + static_cast<std::size_t>(y) * img.width + x0;
        std::copy(src_row, src_row + out.width,
                  out.data.data() + static_cast<std::size_t>(y - y0) * out.width);
    }
    return out;
}

std::vector<Correspondence> project_to_full_frame(std::span<const Correspondence> local,
                                                  const TilePair& pair, double src_scale,
                                                  double dst_scale) {
    std::vector<Correspondence> out;
    out.reserve(local.size());
    for (const auto& c : local) {
        Correspondence full = c;
        full.src = {(c.src.x + pair.src_origin.x) / src_scale,
                    (c.src.y + pair.src_origin.y) / src_scale};
        full.dst = {(c.dst.x + pair.dst_origin.x) / dst_scale,
                    (c.dst.y + pair.dst_origin.y) / dst_scale};
        out.push_back(full);
    }
    return out;
}

std::vector<Correspondence> aggregate(const std::vector<std::vector<Correspondence>>& per_tile) {
    std::size_t total = 0;
    for (const auto& tile : per_tile) total += tile.size();
    std::vector<Correspondence> out;
    out.reserve(total);
    for (const auto& tile : per_tile) out.insert(out.end(), tile.begin(), tile.end());
    return out;
}

std::uint64_t tile_set_hash(const TileGrid& src_grid, const TileGrid& dst_grid) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto fold = [&h](std::uint64_t v) { h = mix_seed(h, v); };
    for (const TileGrid* grid : {&src_grid, &dst_grid}) {
        fold(static_cast<std::uint64_t>(grid->tile_size));
        fold(static_cast<std::uint64_t>(grid->overlap));
        for (int x : grid->xs) fold(static_cast<std::uint64_t>(x) + 1);
        for (int y : grid->ys) fold(static_cast<std::uint64_t>(y) * 2654435761ULL + 3);
    }
    return h;
}

}  // namespace regbench
