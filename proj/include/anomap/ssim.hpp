#pragma once

#include <vector>

#include "anomap/autograd.hpp"
#include "anomap/tensor.hpp"

namespace anomap {

// Structural similarity over a sliding Gaussian window. Inputs are expected
// in [0,1], so the dynamic range defaults to 1.
struct SsimConfig {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 1.0;
    double alpha = 1.0;  // luminance exponent
    double beta = 1.0;   // contrast exponent
    double gamma = 1.0;  // structure exponent

    double c1() const { return (k1 * dynamic_range) * (k1 * dynamic_range); }
    double c2() const { return (k2 * dynamic_range) * (k2 * dynamic_range); }
    double c3() const { return c2() / 2.0; }
};

// Normalized (sums to 1) sampled Gaussian.
std::vector<double> gaussian_kernel_1d(int size, double sigma);
// Outer product of the 1-d kernel with itself, {size,size}.
Tensor gaussian_window(int size, double sigma);

// Mean similarity over the valid region (windows fully inside the image).
// Computes the three-factor luminance/contrast/structure product directly;
// independent of the graph-based loss below. Accepts {H,W} or {1,H,W}.
double ssim_index(const Tensor& a, const Tensor& b, const SsimConfig& cfg = {});

double mse(const Tensor& a, const Tensor& b);

// Differentiable losses; pred/target are {H,W} or {1,H,W} nodes, result {1}.
// ssim_loss_node builds 1 - mean SSIM map using the collapsed two-factor
// form, which equals the three-factor product at unit exponents.
Graph::NodeId ssim_loss_node(Graph& g, Graph::NodeId pred, Graph::NodeId target,
                             const SsimConfig& cfg = {});
Graph::NodeId mse_loss_node(Graph& g, Graph::NodeId pred, Graph::NodeId target);

// 1 - ssim via a throwaway graph (no gradients).
double ssim_loss(const Tensor& pred, const Tensor& target, const SsimConfig& cfg = {});

}  // namespace anomap
