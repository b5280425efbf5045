#include "anomap/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "anomap/error.hpp"
#include "anomap/image_io.hpp"
#include "anomap/rng.hpp"

namespace anomap {

namespace {

constexpr double kBackground = 0.88;

void check_spec(const SyntheticSpec& s) {
    if (s.images_per_class < 1)
        throw std::invalid_argument("synth: images_per_class must be >= 1");
    if (s.image_size < 8) throw std::invalid_argument("synth: image_size must be >= 8");
    if (s.blob_radius <= 0.0 || s.blob_spacing < 1 || s.blob_jitter < 0.0)
        throw std::invalid_argument("synth: lattice parameters out of range");
    if (s.min_clusters < 1)
        throw std::invalid_argument("synth: abnormal images need at least one cluster");
    if (s.max_clusters < s.min_clusters)
        throw std::invalid_argument("synth: max_clusters below min_clusters");
    if (s.min_cluster_size < 1 || s.max_cluster_size < s.min_cluster_size)
        throw std::invalid_argument("synth: cluster size range is empty");
    if (s.max_cluster_size > s.image_size)
        throw std::invalid_argument("synth: cluster larger than the image");
    if (s.cluster_density <= 0.0)
        throw std::invalid_argument("synth: cluster_density must be positive");
    if (s.cluster_radius_lo <= 0.0 || s.cluster_radius_hi < s.cluster_radius_lo)
        throw std::invalid_argument("synth: cluster radius range is empty");
    if (s.noise < 0.0) throw std::invalid_argument("synth: noise must be non-negative");
}

// Smooth bump: 1 at the center, 0 at d2 >= 1, continuous slope at the rim.
double bump(double d2) {
    if (d2 >= 1.0) return 0.0;
    double t = 1.0 - d2;
    return t * t;
}

void stamp_disc(Tensor& gray, double cx, double cy, double r, double depth, int x_lo, int x_hi,
                int y_lo, int y_hi) {
    const int size = gray.dim(0);
    int x0 = std::max({0, x_lo, static_cast<int>(std::floor(cx - r))});
    int x1 = std::min({size - 1, x_hi - 1, static_cast<int>(std::ceil(cx + r))});
    int y0 = std::max({0, y_lo, static_cast<int>(std::floor(cy - r))});
    int y1 = std::min({size - 1, y_hi - 1, static_cast<int>(std::ceil(cy + r))});
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            double dx = (x - cx) / r, dy = (y - cy) / r;
            double v = kBackground - depth * bump(dx * dx + dy * dy);
            gray.at(y, x) = std::min(gray.at(y, x), v);  // darkest wins
        }
}

void stamp_ellipse(Tensor& gray, double cx, double cy, double rx, double ry, double theta,
                   double depth, int x_lo, int x_hi, int y_lo, int y_hi) {
    const int size = gray.dim(0);
    const double reach = std::max(rx, ry);
    const double ct = std::cos(theta), st = std::sin(theta);
    int x0 = std::max({0, x_lo, static_cast<int>(std::floor(cx - reach))});
    int x1 = std::min({size - 1, x_hi - 1, static_cast<int>(std::ceil(cx + reach))});
    int y0 = std::max({0, y_lo, static_cast<int>(std::floor(cy - reach))});
    int y1 = std::min({size - 1, y_hi - 1, static_cast<int>(std::ceil(cy + reach))});
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            double dx = x - cx, dy = y - cy;
            double u = (ct * dx + st * dy) / rx;
            double v = (-st * dx + ct * dy) / ry;
            double val = kBackground - depth * bump(u * u + v * v);
            gray.at(y, x) = std::min(gray.at(y, x), val);
        }
}

Image8 to_rgb(const Tensor& gray, const SyntheticSpec& spec, Rng& rng) {
    // Chromatic cast with channel factors that average to exactly one, so
    // gray-world equalization recovers the underlying texture.
    double f[3];
    double sum = 0.0;
    for (double& x : f) {
        x = rng.uniform(0.9, 1.1);
        sum += x;
    }
    for (double& x : f) x *= 3.0 / sum;

    const int size = gray.dim(0);
    Image8 img;
    img.width = size;
    img.height = size;
    img.channels = 3;
    img.data.resize(static_cast<std::size_t>(size) * size * 3);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            double v = gray.at(y, x) + spec.noise * rng.normal();
            for (int c = 0; c < 3; ++c) {
                double ch = std::clamp(v * f[c], 0.0, 1.0);
                img.data[(static_cast<std::size_t>(y) * size + x) * 3 + c] =
                    static_cast<unsigned char>(std::lround(255.0 * ch));
            }
        }
    return img;
}

}  // namespace

Tensor synth_normal_texture(const SyntheticSpec& spec, Rng& rng) {
    check_spec(spec);
    const int size = spec.image_size;
    Tensor gray({size, size});
    std::fill(gray.data.begin(), gray.data.end(), kBackground);

    for (int gy = 0; gy * spec.blob_spacing < size; ++gy)
        for (int gx = 0; gx * spec.blob_spacing < size; ++gx) {
            double cx = gx * spec.blob_spacing + spec.blob_spacing / 2.0 +
                        rng.uniform(-spec.blob_jitter, spec.blob_jitter);
            double cy = gy * spec.blob_spacing + spec.blob_spacing / 2.0 +
                        rng.uniform(-spec.blob_jitter, spec.blob_jitter);
            double r = spec.blob_radius * rng.uniform(0.8, 1.2);
            double depth = rng.uniform(0.45, 0.65);
            stamp_disc(gray, cx, cy, r, depth, 0, size, 0, size);
        }
    return gray;
}

std::vector<ClusterRegion> synth_add_clusters(Tensor& gray, const SyntheticSpec& spec, Rng& rng) {
    check_spec(spec);
    const int size = spec.image_size;
    if (gray.rank() != 2 || gray.dim(0) != size || gray.dim(1) != size)
        throw std::invalid_argument("synth_add_clusters: texture does not match the spec size");

    int n = spec.min_clusters +
            static_cast<int>(rng.uniform_below(
                static_cast<uint64_t>(spec.max_clusters - spec.min_clusters + 1)));
    std::vector<ClusterRegion> regions;
    for (int i = 0; i < n; ++i) {
        ClusterRegion reg;
        reg.w = spec.min_cluster_size +
                static_cast<int>(rng.uniform_below(
                    static_cast<uint64_t>(spec.max_cluster_size - spec.min_cluster_size + 1)));
        reg.h = spec.min_cluster_size +
                static_cast<int>(rng.uniform_below(
                    static_cast<uint64_t>(spec.max_cluster_size - spec.min_cluster_size + 1)));
        reg.x0 = static_cast<int>(rng.uniform_below(static_cast<uint64_t>(size - reg.w + 1)));
        reg.y0 = static_cast<int>(rng.uniform_below(static_cast<uint64_t>(size - reg.h + 1)));

        int blobs = std::max(1, static_cast<int>(spec.cluster_density * reg.w * reg.h));
        for (int b = 0; b < blobs; ++b) {
            double cx = reg.x0 + rng.uniform() * reg.w;
            double cy = reg.y0 + rng.uniform() * reg.h;
            double rx = rng.uniform(spec.cluster_radius_lo, spec.cluster_radius_hi);
            double ry = rng.uniform(spec.cluster_radius_lo, spec.cluster_radius_hi);
            double theta = rng.uniform(0.0, 3.14159265358979323846);
            double depth = rng.uniform(0.5, 0.75);
            stamp_ellipse(gray, cx, cy, rx, ry, theta, depth, reg.x0, reg.x0 + reg.w, reg.y0,
                          reg.y0 + reg.h);
        }
        regions.push_back(reg);
    }
    return regions;
}

SyntheticResult generate_synthetic(const SyntheticSpec& spec, const std::string& out_dir) {
    check_spec(spec);
    std::filesystem::create_directories(out_dir);
    std::filesystem::path dir(out_dir);

    Rng root(spec.seed);
    SyntheticResult result;
    auto emit = [&](int label, int index, Rng rng) {
        char name[64];
        std::snprintf(name, sizeof(name), "%s_%03d", label < 0 ? "normal" : "malignant", index);
        std::string file = std::string(name) + ".png";
        std::string full = (dir / file).string();

        Tensor gray = synth_normal_texture(spec, rng);
        if (label > 0) {
            std::vector<ClusterRegion> regions = synth_add_clusters(gray, spec, rng);
            std::ofstream rf(full + ".regions.txt");
            if (!rf) throw IoError("cannot open for writing: " + full + ".regions.txt");
            for (const ClusterRegion& r : regions)
                rf << r.x0 << ' ' << r.y0 << ' ' << r.w << ' ' << r.h << '\n';
            if (!rf) throw IoError("write failed: " + full + ".regions.txt");
        }
        write_image(full, to_rgb(gray, spec, rng));
        result.entries.push_back({file, label, name});
    };

    for (int i = 0; i < spec.images_per_class; ++i) emit(-1, i, root.fork(i + 1));
    for (int i = 0; i < spec.images_per_class; ++i)
        emit(+1, i, root.fork(spec.images_per_class + i + 1));

    result.manifest_path = (dir / "manifest.csv").string();
    write_manifest(result.manifest_path, result.entries);
    return result;
}

}  // namespace anomap
