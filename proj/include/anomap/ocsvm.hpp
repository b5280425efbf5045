#pragma once

#include <string>
#include <vector>

#include "anomap/features.hpp"

namespace anomap {

// Gaussian kernel exp(-||zi - zj||^2 / c).
double rbf_kernel(const FeatureVector& a, const FeatureVector& b, double c);

struct OcSvmConfig {
    double nu = 0.1;  // in (0,1]
    double c = 1.0;   // kernel width, > 0
    double tol = 1e-6;
    long long max_pair_updates = 1'000'000;
};

// Dual solution. Only nonzero multipliers are stored; their sum stays 1.
struct OcSvmModel {
    std::vector<FeatureVector> support_vectors;
    std::vector<double> multipliers;
    double rho = 0.0;
    double nu = 0.0;
    double c = 1.0;
    int training_size = 0;
    double kkt_residual = 0.0;
    long long pair_updates = 0;
};

// Minimizes (1/2) sum_ij lambda_i lambda_j K_ij over the capped simplex
// {0 <= lambda_i <= 1/(nu T), sum lambda = 1} by pairwise coordinate descent
// on the maximal violating pair. Requires T >= 2 and nu*T >= 1.
OcSvmModel fit_ocsvm(const std::vector<FeatureVector>& train, const OcSvmConfig& cfg);

// G(z) = sum_i lambda_i k(sv_i, z) - rho; positive inside the normal region.
double decision(const OcSvmModel& model, const FeatureVector& z);

// +1 (malignant pattern) iff G(z) < 0; the boundary G = 0 counts as normal.
int patch_label(const OcSvmModel& model, const FeatureVector& z);

// (1/2) lambda' K lambda for a candidate multiplier vector; test oracle hook.
double dual_objective(const std::vector<FeatureVector>& z, const std::vector<double>& lambda,
                      double c);

double median_pairwise_sq_dist(const std::vector<FeatureVector>& z);

// Patches of one image, already standardized, with the image-level truth.
struct ImagePatchFeatures {
    std::string image_id;
    int label = 0;  // +1 malignant, -1 normal
    std::vector<FeatureVector> patches;
};

struct GridCell {
    double nu = 0.0;
    double c = 0.0;
    double acc_img = 0.0;
    bool feasible = true;
};

struct SelectionResult {
    OcSvmConfig best;
    OcSvmModel model;
    std::vector<GridCell> table;
};

extern const std::vector<double> kDefaultNuGrid;
// Kernel widths are these multiples of the median pairwise squared distance.
extern const std::vector<double> kDefaultCMultipliers;

// Fits one model per (nu, c) cell on the patches of normal images, labels
// every patch, scores image-level accuracy (image malignant iff any patch
// is), and returns the best cell. Ties prefer smaller nu, then smaller c.
// Cells with nu*T < 1 are recorded as infeasible and skipped.
SelectionResult select_hyperparameters(const std::vector<ImagePatchFeatures>& images,
                                       const std::vector<double>& nu_grid,
                                       const std::vector<double>& c_grid,
                                       const OcSvmConfig& base = {});

}  // namespace anomap
