#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>
#include <vector>

#include "anomap/image_io.hpp"
#include "anomap/rng.hpp"
#include "anomap/synth.hpp"
#include "doctest.h"

using namespace anomap;

namespace {

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& name) : path(name) {
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

SyntheticSpec small_spec() {
    SyntheticSpec spec;
    spec.images_per_class = 2;
    spec.image_size = 96;
    spec.min_cluster_size = 24;
    spec.max_cluster_size = 40;
    spec.seed = 5;
    return spec;
}

std::vector<char> slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("invalid generator settings are rejected") {
    SyntheticSpec spec = small_spec();
    spec.min_clusters = 0;  // abnormal images must differ from normal ones
    CHECK_THROWS(generate_synthetic(spec, "unused_dir"));

    spec = small_spec();
    spec.max_cluster_size = spec.image_size + 1;
    CHECK_THROWS(generate_synthetic(spec, "unused_dir"));

    spec = small_spec();
    spec.images_per_class = 0;
    CHECK_THROWS(generate_synthetic(spec, "unused_dir"));

    spec = small_spec();
    spec.cluster_radius_hi = spec.cluster_radius_lo - 1.0;
    CHECK_THROWS(generate_synthetic(spec, "unused_dir"));
}

TEST_CASE("normal texture is deterministic and in range") {
    SyntheticSpec spec = small_spec();
    Rng a(3), b(3);
    Tensor t1 = synth_normal_texture(spec, a);
    Tensor t2 = synth_normal_texture(spec, b);
    CHECK(t1.shape == std::vector<int>{96, 96});
    CHECK(t1.data == t2.data);
    for (double v : t1.data) {
        CHECK(v > 0.0);
        CHECK(v <= 0.88);
    }
}

TEST_CASE("clusters darken pixels only inside their recorded boxes") {
    SyntheticSpec spec = small_spec();
    Rng rng(4);
    Tensor base = synth_normal_texture(spec, rng);
    Tensor marked = base;
    std::vector<ClusterRegion> regions = synth_add_clusters(marked, spec, rng);
    REQUIRE(!regions.empty());
    for (const ClusterRegion& r : regions) {
        CHECK(r.x0 >= 0);
        CHECK(r.y0 >= 0);
        CHECK(r.x0 + r.w <= spec.image_size);
        CHECK(r.y0 + r.h <= spec.image_size);
        CHECK(r.w >= spec.min_cluster_size);
        CHECK(r.h <= spec.max_cluster_size);
    }
    auto inside = [&](int y, int x) {
        for (const ClusterRegion& r : regions)
            if (x >= r.x0 && x < r.x0 + r.w && y >= r.y0 && y < r.y0 + r.h) return true;
        return false;
    };
    int changed = 0;
    for (int y = 0; y < spec.image_size; ++y)
        for (int x = 0; x < spec.image_size; ++x) {
            if (marked.at(y, x) != base.at(y, x)) {
                CHECK(inside(y, x));
                CHECK(marked.at(y, x) < base.at(y, x));  // darkening only
                ++changed;
            }
        }
    CHECK(changed > 0);
}

TEST_CASE("generator writes a loadable dataset with region files") {
    TempDir dir("synth_tmp_dir");
    SyntheticSpec spec = small_spec();
    SyntheticResult result = generate_synthetic(spec, dir.path.string());
    REQUIRE(result.entries.size() == 4);

    std::vector<ManifestEntry> entries = read_manifest(result.manifest_path);
    REQUIRE(entries.size() == 4);
    int normals = 0;
    for (const ManifestEntry& e : entries) {
        Image8 img = read_image(e.path);
        CHECK(img.width == spec.image_size);
        CHECK(img.height == spec.image_size);
        CHECK(img.channels == 3);
        bool has_regions = std::filesystem::exists(e.path + ".regions.txt");
        if (e.label < 0) {
            ++normals;
            CHECK_FALSE(has_regions);
        } else {
            REQUIRE(has_regions);
            std::ifstream rf(e.path + ".regions.txt");
            int x, y, w, h, rows = 0;
            while (rf >> x >> y >> w >> h) {
                CHECK(x >= 0);
                CHECK(y >= 0);
                CHECK(x + w <= spec.image_size);
                CHECK(y + h <= spec.image_size);
                ++rows;
            }
            CHECK(rows >= spec.min_clusters);
            CHECK(rows <= spec.max_clusters);
        }
    }
    CHECK(normals == 2);

    std::vector<LabeledImage> images = load_dataset(result.manifest_path);
    CHECK(images.size() == 4);
    for (const LabeledImage& img : images)
        for (double v : img.pixels.data) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
}

TEST_CASE("same seed reproduces identical bytes") {
    TempDir d1("synth_rep_a"), d2("synth_rep_b");
    SyntheticSpec spec = small_spec();
    SyntheticResult r1 = generate_synthetic(spec, d1.path.string());
    SyntheticResult r2 = generate_synthetic(spec, d2.path.string());
    REQUIRE(r1.entries.size() == r2.entries.size());
    for (std::size_t i = 0; i < r1.entries.size(); ++i) {
        std::vector<char> a = slurp(d1.path / std::filesystem::path(r1.entries[i].path));
        std::vector<char> b = slurp(d2.path / std::filesystem::path(r2.entries[i].path));
        CHECK(!a.empty());
        CHECK(a == b);
    }

    SyntheticSpec other = spec;
    other.seed = spec.seed + 1;
    TempDir d3("synth_rep_c");
    SyntheticResult r3 = generate_synthetic(other, d3.path.string());
    std::vector<char> a = slurp(d1.path / std::filesystem::path(r1.entries[0].path));
    std::vector<char> c = slurp(d3.path / std::filesystem::path(r3.entries[0].path));
    CHECK(a != c);
}
