#pragma once

#include <array>
#include <string>
#include <vector>

#include "anomap/tensor.hpp"

namespace anomap {

// 16 first-order statistics of a residue map, fixed order. All entries are
// distributional (permutation-invariant over pixels).
struct FeatureVector {
    std::array<double, 16> v{};

    static constexpr int kDim = 16;
    static const std::array<std::string, 16>& names();

    double& operator[](int i) { return v[static_cast<std::size_t>(i)]; }
    double operator[](int i) const { return v[static_cast<std::size_t>(i)]; }
};

// Residue values are absolute differences of [0,1] images, so the histogram
// range for entropy/uniformity is fixed to [0,1] (values clamped into it).
FeatureVector first_order_stats(const Tensor& residue, int bins = 32);

// Linear-interpolation percentile of a sorted sample, rank = q*(n-1).
double percentile_sorted(const std::vector<double>& sorted, double q);

// Per-dimension standardization statistics from the training set.
// Zero-variance dimensions are flagged; standardize centers them only.
struct FeatureStats {
    std::array<double, 16> mean{};
    std::array<double, 16> sd{};  // population standard deviation
    std::array<bool, 16> degenerate{};
};

FeatureStats compute_feature_stats(const std::vector<FeatureVector>& train);
FeatureVector standardize(const FeatureVector& f, const FeatureStats& s);
std::vector<FeatureVector> standardize(const std::vector<FeatureVector>& fs,
                                       const FeatureStats& s);

struct FeatureRow {
    std::string image_id;
    int patch_id = 0;
    FeatureVector features;
};

// One row per patch: image_id, patch_id, then the 16 named columns.
void write_feature_csv(const std::string& path, const std::vector<FeatureRow>& rows);

}  // namespace anomap
