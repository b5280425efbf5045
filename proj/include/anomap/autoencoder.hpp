#pragma once

#include <array>
#include <string>
#include <vector>

#include "anomap/autograd.hpp"
#include "anomap/rng.hpp"
#include "anomap/ssim.hpp"
#include "anomap/tensor.hpp"

namespace anomap {

// Fully convolutional autoencoder, 7 conv layers of 3x3 kernels. Encoder
// convs output 16, 8, 8 channels, each followed by ReLU and a 2x2 max-pool;
// decoder convs output 8, 8, 16 channels (ReLU, then 2x2 upsample) and a
// final 1-channel sigmoid conv. Spatial dims must be divisible by 8; the
// bottleneck is 8 channels at 1/8 resolution.
struct AutoencoderModel {
    std::array<LayerParams, 3> encoder;
    std::array<LayerParams, 4> decoder;
};

AutoencoderModel build_model(uint64_t seed);

enum class LossKind { Ssim, Mse };

struct TrainConfig {
    int epochs = 100;
    double val_fraction = 0.10;
    int batch_size = 32;
    bool augment = true;
    LossKind loss = LossKind::Ssim;
    AdamConfig adam;
    SsimConfig ssim;
    uint64_t seed = 0;
};

struct TrainReport {
    std::vector<double> train_loss;  // per epoch, over the augmented batches
    std::vector<double> val_loss;    // per epoch, always the structural loss
                                     // (epoch selection metric for both loss
                                     // kinds); mirrors train_loss when the
                                     // validation split is empty
    int best_epoch = 0;              // 1-based; epoch whose snapshot was kept
};

// Trains in place on true-normal patches ({H,W} grayscale in [0,1], square,
// dims divisible by 8, all the same size). Keeps the parameters of the epoch
// with the lowest validation loss. Fresh augmentation is drawn every epoch
// for the training split only.
TrainReport train(AutoencoderModel& model, const std::vector<Tensor>& patches,
                  const TrainConfig& cfg);

// x -> D(E(x)); any {H,W} with both dims divisible by 8. Output in (0,1).
Tensor reconstruct(const AutoencoderModel& model, const Tensor& patch);

// |x - D(E(x))| elementwise.
Tensor residue(const AutoencoderModel& model, const Tensor& patch);

// Sum of squared residue values; the separation statistic for loss A/B runs.
double residue_energy(const AutoencoderModel& model, const Tensor& patch);

// Graph plumbing, exposed for the training loop and gradient tests.
struct ModelNodes {
    std::array<Graph::NodeId, 7> kernels{};
    std::array<Graph::NodeId, 7> biases{};
};
ModelNodes add_params(Graph& g, const AutoencoderModel& model);
// x is a {1,H,W} node; returns the {1,H,W} reconstruction node.
Graph::NodeId forward_node(Graph& g, const ModelNodes& params, Graph::NodeId x);

// Augmentation: rotation by an angle uniform in [0,180) degrees (bilinear,
// mirrored borders), then a coin-flip vertical reflection, then a coin-flip
// horizontal flip, in that order. Square patches only.
Tensor augment(const Tensor& patch, Rng& rng);
Tensor rotate_bilinear(const Tensor& patch, double degrees);
Tensor flip_vertical(const Tensor& patch);    // reverses row order
Tensor flip_horizontal(const Tensor& patch);  // reverses column order

// Versioned checkpoint; loading validates every layer shape.
void save_autoencoder(const std::string& path, const AutoencoderModel& model);
AutoencoderModel load_autoencoder(const std::string& path);

// Raw parameter block inside a larger container (the pipeline bundle embeds
// one). read_model validates shapes the same way load_autoencoder does.
class BinaryWriter;
class BinaryReader;
void write_model(BinaryWriter& w, const AutoencoderModel& model);
AutoencoderModel read_model(BinaryReader& r);

}  // namespace anomap
