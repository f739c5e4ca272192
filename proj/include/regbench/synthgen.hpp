#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "regbench/geometry.hpp"
#include "regbench/image.hpp"
#include "regbench/manifest.hpp"
#include "regbench/types.hpp"

namespace regbench {

// Recipe for one synthetic cross-modal scene pair with exact ground truth.
struct SynthSpec {
    int width = 768;
    int height = 768;
    GeometricTransform planted_transform = AffineTransform::identity();
    double speckle_strength = 0.0;  // multiplicative noise spread
    bool invert_contrast = false;
    std::uint64_t texture_seed = 0;
    int tiepoint_grid = 7;  // points per axis
};

struct SynthPair {
    GrayImage optical;
    GrayImage sar_like;
    std::vector<TiePoint> tiepoints;
    GeometricTransform gt;
};

// Seeded multi-octave value-noise texture with rectangular blob structures;
// dense in corners so the built-in detector has something to find.
GrayImage render_texture(std::uint64_t seed, int width, int height);

// Mean-1 gamma multiplicative speckle, shape 1/strength^2, per-pixel streams.
GrayImage apply_speckle(const GrayImage& img, double strength, std::uint64_t seed);

// Resamples `img` under the transform: out(p) = img(transform^-1(p)).
GrayImage warp_image(const GrayImage& img, const GeometricTransform& transform, int out_width,
                     int out_height);

// optical texture -> warp by the planted transform -> optional contrast
// inversion -> speckle. Tie points sit on a regular grid and satisfy the
// planted transform exactly.
SynthPair generate_pair(const SynthSpec& spec);

struct RetrievalPoolSpec {
    int n_queries = 8;
    int pool_size = 13;
    std::uint64_t seed = 0;
    double speckle_strength = 0.1;
    bool invert_contrast = false;
    int candidate_size = 192;
    int query_margin = 16;
};

struct GeneratedPool {
    struct Query {
        std::string query_id;
        GrayImage query;
        std::vector<GrayImage> candidates;
        int positive_index = -1;
    };
    std::vector<Query> queries;
};

// Each query is a warped, degraded crop of its positive candidate; negatives
// are disjoint seeded textures.
GeneratedPool generate_retrieval_pool(const RetrievalPoolSpec& spec);

// Mild seeded affine (small rotation, near-unit scale, slight shear, bounded
// translation) for planting scene transforms.
AffineTransform random_mild_affine(std::uint64_t seed, double max_translation = 15.0);

// Fixture writers shared by the synth subcommand and the test suites: PNG
// images, tie-point CSV, ground-truth transform file, and manifest records
// with resolved paths.
ScenePairRecord write_pair_fixture(const std::string& dir, const std::string& pair_id,
                                   const SynthPair& pair);
std::vector<RetrievalRecord> write_retrieval_fixture(const std::string& dir,
                                                     const GeneratedPool& pool);
void write_manifest(const std::string& path, const Manifest& manifest);

}  // namespace regbench
