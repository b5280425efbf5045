#include "anomap/platt.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "anomap/rng.hpp"

namespace anomap {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double bce(const PlattModel& m, const std::vector<double>& g, const std::vector<double>& t,
           const std::vector<std::size_t>& idx) {
    double acc = 0.0;
    for (std::size_t i : idx) {
        double p = std::clamp(sigmoid(m.a * g[i] + m.b), 1e-12, 1.0 - 1e-12);
        acc -= t[i] * std::log(p) + (1.0 - t[i]) * std::log(1.0 - p);
    }
    return acc / static_cast<double>(idx.size());
}

}  // namespace

PlattFit fit_platt(const std::vector<double>& decisions, const std::vector<int>& labels,
                   const PlattTrainConfig& cfg) {
    const std::size_t n = decisions.size();
    if (n != labels.size())
        throw std::invalid_argument("fit_platt: decision/label count mismatch");
    if (n < 2) throw std::invalid_argument("fit_platt: need at least 2 samples");
    bool has_pos = false, has_neg = false;
    for (int l : labels) {
        if (l > 0) has_pos = true;
        else has_neg = true;
    }
    if (!has_pos || !has_neg)
        throw std::invalid_argument("fit_platt: both labels required, got a single class");

    std::vector<double> targets(n);
    for (std::size_t i = 0; i < n; ++i) targets[i] = labels[i] > 0 ? 1.0 : 0.0;

    Rng rng(cfg.seed);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);

    const std::size_t n_val = static_cast<std::size_t>(static_cast<double>(n) * cfg.val_fraction);
    std::vector<std::size_t> val_idx(order.begin(), order.begin() + n_val);
    std::vector<std::size_t> train_idx(order.begin() + n_val, order.end());
    const std::vector<std::size_t>& select_idx = val_idx.empty() ? train_idx : val_idx;

    Tensor param({2});  // (a, b), zero-initialized
    AdamState state(param);
    PlattFit fit;
    fit.model = PlattModel{0.0, 0.0};
    double best = bce(fit.model, decisions, targets, select_idx);
    fit.best_epoch = 0;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng.shuffle(train_idx);
        for (std::size_t start = 0; start < train_idx.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            std::size_t stop = std::min(train_idx.size(),
                                        start + static_cast<std::size_t>(cfg.batch_size));
            Tensor grad({2});
            for (std::size_t k = start; k < stop; ++k) {
                std::size_t i = train_idx[k];
                double p = sigmoid(param.data[0] * decisions[i] + param.data[1]);
                double d = p - targets[i];
                grad.data[0] += d * decisions[i];
                grad.data[1] += d;
            }
            double inv = 1.0 / static_cast<double>(stop - start);
            grad.data[0] *= inv;
            grad.data[1] *= inv;
            adam_step(param, grad, state, cfg.adam);
        }
        PlattModel cur{param.data[0], param.data[1]};
        fit.train_bce.push_back(bce(cur, decisions, targets, train_idx));
        fit.val_bce.push_back(val_idx.empty() ? fit.train_bce.back()
                                              : bce(cur, decisions, targets, val_idx));
        double score = fit.val_bce.back();
        if (score < best) {
            best = score;
            fit.model = cur;
            fit.best_epoch = epoch;
        }
    }
    if (!std::isfinite(fit.model.a) || !std::isfinite(fit.model.b))
        throw std::runtime_error("fit_platt: parameters diverged");
    return fit;
}

double probability(const PlattModel& model, double decision) {
    return sigmoid(model.a * decision + model.b);
}

}  // namespace anomap
