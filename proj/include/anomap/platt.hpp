#pragma once

#include <vector>

#include "anomap/tensor.hpp"

namespace anomap {

// Single sigmoid unit p = sigmoid(a*G + b) mapping decision values to
// malignant-pattern probabilities. Malignant patches have negative decision
// values, so a trains negative on separable data.
struct PlattModel {
    double a = 0.0;
    double b = 0.0;
};

struct PlattTrainConfig {
    int epochs = 25;
    double val_fraction = 0.10;
    int batch_size = 32;
    AdamConfig adam;
    uint64_t seed = 0;
};

struct PlattFit {
    PlattModel model;  // best-validation parameters
    std::vector<double> train_bce;  // per epoch, after that epoch's updates
    std::vector<double> val_bce;
    int best_epoch = 0;  // 0 = untrained initialization
};

// labels are patch labels in {-1,+1}; +1 (malignant pattern) maps to target 1.
// Needs both classes present. With fewer than 10 samples the validation split
// is empty and selection falls back to training cross-entropy.
PlattFit fit_platt(const std::vector<double>& decisions, const std::vector<int>& labels,
                   const PlattTrainConfig& cfg = {});

double probability(const PlattModel& model, double decision);

}  // namespace anomap
