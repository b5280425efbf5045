#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "anomap/pipeline.hpp"
#include "anomap/tensor.hpp"

namespace anomap {

// Two-texture dataset generator. Normal images carry a jittered regular
// lattice of soft dark blobs; abnormal images add rectangular regions packed
// with dense irregular elliptical blobs. Region bounding boxes are written
// next to each abnormal image (lines "x y w h") so a probability map can be
// scored against known ground truth.
struct SyntheticSpec {
    int images_per_class = 20;
    int image_size = 512;

    double blob_radius = 6.0;
    int blob_spacing = 24;
    double blob_jitter = 3.0;

    int min_clusters = 1;
    int max_clusters = 2;
    int min_cluster_size = 160;
    int max_cluster_size = 224;
    double cluster_density = 0.01;  // blob centers per cluster pixel
    double cluster_radius_lo = 4.0;
    double cluster_radius_hi = 10.0;

    double noise = 0.015;
    uint64_t seed = 0;
};

struct SyntheticResult {
    std::string manifest_path;
    std::vector<ManifestEntry> entries;
};

// In-memory texture builders, exposed for tests.
Tensor synth_normal_texture(const SyntheticSpec& spec, Rng& rng);
struct ClusterRegion {
    int x0 = 0, y0 = 0, w = 0, h = 0;
};
std::vector<ClusterRegion> synth_add_clusters(Tensor& gray, const SyntheticSpec& spec, Rng& rng);

// Writes images_per_class normal + images_per_class abnormal RGB images,
// region files for the abnormal ones, and manifest.csv into out_dir.
// Each image carries a mean-one chromatic cast that channel equalization
// inverts, plus Gaussian pixel noise. Same spec and seed, same bytes.
SyntheticResult generate_synthetic(const SyntheticSpec& spec, const std::string& out_dir);

}  // namespace anomap
