#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "anomap/rng.hpp"

namespace anomap {

// Dense row-major N-d array of doubles. Activations are {C,H,W}, gray
// patches {H,W}, conv kernels {O,I,kH,kW}, biases {O}.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s, double fill = 0.0);

    static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape); }

    std::size_t size() const { return data.size(); }
    int rank() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

    double& at(int y, int x);
    double at(int y, int x) const;
    double& at(int c, int y, int x);
    double at(int c, int y, int x) const;

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    bool all_finite() const;
};

std::string shape_str(const std::vector<int>& shape);

// Kernel {out_ch, in_ch, kh, kw} plus per-output-channel bias.
struct LayerParams {
    Tensor kernel;
    Tensor bias;
};

// Fills t with samples uniform on [-L, L], L = sqrt(6 / (fan_in + fan_out)).
void xavier_fill(Tensor& t, int fan_in, int fan_out, Rng& rng);

// Xavier-initialized conv kernel with zero bias. Fans follow the usual
// convention fan_in = in_ch*kh*kw, fan_out = out_ch*kh*kw.
LayerParams xavier_conv(int out_ch, int in_ch, int kh, int kw, Rng& rng);

struct AdamConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    Tensor m;
    Tensor v;
    long long step = 0;

    AdamState() = default;
    explicit AdamState(const Tensor& param)
        : m(param.shape), v(param.shape) {}
};

// Standard bias-corrected Adam update, applied in place.
void adam_step(Tensor& param, const Tensor& grad, AdamState& state,
               const AdamConfig& cfg);

}  // namespace anomap
