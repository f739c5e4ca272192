#pragma once

#include <span>
#include <vector>

#include "regbench/image.hpp"
#include "regbench/types.hpp"

namespace regbench {

// Overlapping tile lattice over a resized image. Origins are stride-spaced
// with a final origin clamped so the last tile ends exactly at the image
// edge; images smaller than the tile yield a single clamped tile.
struct TileGrid {
    int tile_size = 0;
    int overlap = 0;
    std::vector<int> xs;  // column origins, strictly increasing
    std::vector<int> ys;  // row origins, strictly increasing

    int rows() const { return static_cast<int>(ys.size()); }
    int cols() const { return static_cast<int>(xs.size()); }
    int tile_count() const { return rows() * cols(); }
};

TileGrid build_grid(int width, int height, int tile_size, int overlap);

// One matched tile crop from each image at the same grid index.
struct TilePair {
    int row = 0;
    int col = 0;
    GrayImage src_tile;
    GrayImage dst_tile;
    Point2 src_origin;
    Point2 dst_origin;
};

// Crop clamped to image bounds.
GrayImage crop(const GrayImage& img, int x0, int y0, int w, int h);

// Tile-local correspondences back to full-resolution scene coordinates:
// full = (local + origin) / scale, per side.
std::vector<Correspondence> project_to_full_frame(std::span<const Correspondence> local,
                                                  const TilePair& pair, double src_scale,
                                                  double dst_scale);

// Deterministic reduction: concatenation in ascending (row, col, within-tile)
// order. `per_tile` must already be indexed row-major by (row, col).
std::vector<Correspondence> aggregate(const std::vector<std::vector<Correspondence>>& per_tile);

// Order-independent digest of the tile lattice, mixed into RANSAC seeds.
std::uint64_t tile_set_hash(const TileGrid& src_grid, const TileGrid& dst_grid);

}  // namespace regbench
