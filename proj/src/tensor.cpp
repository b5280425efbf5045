#include "anomap/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace anomap {

Tensor::Tensor(std::vector<int> s, double fill) : shape(std::move(s)) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw std::invalid_argument("tensor dimension must be positive, got " + shape_str(shape));
        n *= static_cast<std::size_t>(d);
    }
    data.assign(n, fill);
}

double& Tensor::at(int y, int x) {
    return data[static_cast<std::size_t>(y) * shape[1] + x];
}

double Tensor::at(int y, int x) const {
    return data[static_cast<std::size_t>(y) * shape[1] + x];
}

double& Tensor::at(int c, int y, int x) {
    return data[(static_cast<std::size_t>(c) * shape[1] + y) * shape[2] + x];
}

double Tensor::at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c) * shape[1] + y) * shape[2] + x];
}

bool Tensor::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << ")";
    return os.str();
}

void xavier_fill(Tensor& t, int fan_in, int fan_out, Rng& rng) {
    if (fan_in <= 0 || fan_out <= 0)
        throw std::invalid_argument("xavier_fill: fans must be positive");
    double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& v : t.data) v = rng.uniform(-limit, limit);
}

LayerParams xavier_conv(int out_ch, int in_ch, int kh, int kw, Rng& rng) {
    LayerParams p;
    p.kernel = Tensor({out_ch, in_ch, kh, kw});
    p.bias = Tensor({out_ch});
    xavier_fill(p.kernel, in_ch * kh * kw, out_ch * kh * kw, rng);
    return p;
}

void adam_step(Tensor& param, const Tensor& grad, AdamState& state,
               const AdamConfig& cfg) {
    if (!param.same_shape(grad))
        throw std::invalid_argument("adam_step: param shape " + shape_str(param.shape) +
                                    " does not match grad shape " + shape_str(grad.shape));
    if (state.m.size() != param.size()) state = AdamState(param);
    ++state.step;
    double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < param.size(); ++i) {
        double g = grad.data[i];
        state.m.data[i] = cfg.beta1 * state.m.data[i] + (1.0 - cfg.beta1) * g;
        state.v.data[i] = cfg.beta2 * state.v.data[i] + (1.0 - cfg.beta2) * g * g;
        double mhat = state.m.data[i] / c1;
        double vhat = state.v.data[i] / c2;
        param.data[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
}

}  // namespace anomap
