#include "anomap/ocsvm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "anomap/error.hpp"

namespace anomap {

namespace {

double sq_dist(const FeatureVector& a, const FeatureVector& b) {
    double s = 0.0;
    for (int d = 0; d < FeatureVector::kDim; ++d) {
        double diff = a[d] - b[d];
        s += diff * diff;
    }
    return s;
}

}  // namespace

double rbf_kernel(const FeatureVector& a, const FeatureVector& b, double c) {
    return std::exp(-sq_dist(a, b) / c);
}

OcSvmModel fit_ocsvm(const std::vector<FeatureVector>& train, const OcSvmConfig& cfg) {
    const int t = static_cast<int>(train.size());
    if (t < 2) throw std::invalid_argument("fit_ocsvm: need at least 2 training vectors");
    if (!(cfg.nu > 0.0 && cfg.nu <= 1.0))
        throw std::invalid_argument("fit_ocsvm: nu must be in (0,1]");
    if (!(cfg.c > 0.0)) throw std::invalid_argument("fit_ocsvm: kernel width must be positive");
    if (cfg.nu * t < 1.0)
        throw std::invalid_argument("fit_ocsvm: nu*T < 1 leaves the simplex infeasible");

    const double upper = 1.0 / (cfg.nu * t);
    std::vector<double> kmat(static_cast<std::size_t>(t) * t);
    for (int i = 0; i < t; ++i) {
        kmat[static_cast<std::size_t>(i) * t + i] = 1.0;
        for (int j = i + 1; j < t; ++j) {
            double v = rbf_kernel(train[static_cast<std::size_t>(i)],
                                  train[static_cast<std::size_t>(j)], cfg.c);
            kmat[static_cast<std::size_t>(i) * t + j] = v;
            kmat[static_cast<std::size_t>(j) * t + i] = v;
        }
    }

    std::vector<double> lambda(static_cast<std::size_t>(t), 1.0 / t);
    std::vector<double> grad(static_cast<std::size_t>(t), 0.0);  // K * lambda
    for (int i = 0; i < t; ++i) {
        const double* row = kmat.data() + static_cast<std::size_t>(i) * t;
        double acc = 0.0;
        for (int j = 0; j < t; ++j) acc += row[j] * lambda[static_cast<std::size_t>(j)];
        grad[static_cast<std::size_t>(i)] = acc;
    }

    const double bound_eps = 1e-12;
    long long updates = 0;
    double violation = 0.0;
    while (true) {
        // Mass can move toward the smallest gradient with headroom (up) from
        // the largest gradient still holding mass (down).
        int up = -1, down = -1;
        for (int i = 0; i < t; ++i) {
            double li = lambda[static_cast<std::size_t>(i)];
            double gi = grad[static_cast<std::size_t>(i)];
            if (li < upper - bound_eps && (up < 0 || gi < grad[static_cast<std::size_t>(up)]))
                up = i;
            if (li > bound_eps && (down < 0 || gi > grad[static_cast<std::size_t>(down)]))
                down = i;
        }
        violation = grad[static_cast<std::size_t>(down)] - grad[static_cast<std::size_t>(up)];
        if (up < 0 || down < 0 || violation <= cfg.tol) break;
        if (updates >= cfg.max_pair_updates)
            throw DataError("fit_ocsvm: no convergence after " + std::to_string(updates) +
                            " pair updates, KKT residual " + std::to_string(violation));

        const double* kup = kmat.data() + static_cast<std::size_t>(up) * t;
        const double* kdn = kmat.data() + static_cast<std::size_t>(down) * t;
        double curv = std::max(kup[up] + kdn[down] - 2.0 * kup[down], 1e-12);
        double delta = std::min({violation / curv, upper - lambda[static_cast<std::size_t>(up)],
                                 lambda[static_cast<std::size_t>(down)]});
        lambda[static_cast<std::size_t>(up)] += delta;
        lambda[static_cast<std::size_t>(down)] -= delta;
        for (int j = 0; j < t; ++j)
            grad[static_cast<std::size_t>(j)] += delta * (kup[j] - kdn[j]);
        ++updates;
    }

    // rho makes G vanish on free support vectors (Eq. holds for any one;
    // averaging damps roundoff). All multipliers at a bound: average over
    // every support vector instead.
    double rho = 0.0;
    int free_count = 0;
    for (int i = 0; i < t; ++i) {
        double li = lambda[static_cast<std::size_t>(i)];
        if (li > bound_eps && li < upper - bound_eps) {
            rho += grad[static_cast<std::size_t>(i)];
            ++free_count;
        }
    }
    if (free_count > 0) {
        rho /= free_count;
    } else {
        int sv_count = 0;
        for (int i = 0; i < t; ++i) {
            if (lambda[static_cast<std::size_t>(i)] > bound_eps) {
                rho += grad[static_cast<std::size_t>(i)];
                ++sv_count;
            }
        }
        rho /= sv_count;
    }

    OcSvmModel model;
    model.nu = cfg.nu;
    model.c = cfg.c;
    model.rho = rho;
    model.training_size = t;
    model.kkt_residual = std::max(violation, 0.0);
    model.pair_updates = updates;
    for (int i = 0; i < t; ++i) {
        if (lambda[static_cast<std::size_t>(i)] > 0.0) {
            model.support_vectors.push_back(train[static_cast<std::size_t>(i)]);
            model.multipliers.push_back(lambda[static_cast<std::size_t>(i)]);
        }
    }
    return model;
}

double decision(const OcSvmModel& model, const FeatureVector& z) {
    double acc = 0.0;
    for (std::size_t i = 0; i < model.support_vectors.size(); ++i)
        acc += model.multipliers[i] * rbf_kernel(model.support_vectors[i], z, model.c);
    return acc - model.rho;
}

int patch_label(const OcSvmModel& model, const FeatureVector& z) {
    return decision(model, z) < 0.0 ? +1 : -1;
}

double dual_objective(const std::vector<FeatureVector>& z, const std::vector<double>& lambda,
                      double c) {
    if (z.size() != lambda.size())
        throw std::invalid_argument("dual_objective: vector/multiplier count mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        acc += lambda[i] * lambda[i];  // K_ii = 1
        for (std::size_t j = i + 1; j < z.size(); ++j)
            acc += 2.0 * lambda[i] * lambda[j] * rbf_kernel(z[i], z[j], c);
    }
    return 0.5 * acc;
}

double median_pairwise_sq_dist(const std::vector<FeatureVector>& z) {
    if (z.size() < 2)
        throw std::invalid_argument("median_pairwise_sq_dist: need at least 2 vectors");
    std::vector<double> d;
    d.reserve(z.size() * (z.size() - 1) / 2);
    for (std::size_t i = 0; i < z.size(); ++i)
        for (std::size_t j = i + 1; j < z.size(); ++j) d.push_back(sq_dist(z[i], z[j]));
    std::sort(d.begin(), d.end());
    return percentile_sorted(d, 0.5);
}

const std::vector<double> kDefaultNuGrid = {0.01, 0.05, 0.1, 0.2, 0.3, 0.5};
const std::vector<double> kDefaultCMultipliers = {0.125, 0.5, 2.0, 8.0, 32.0};

SelectionResult select_hyperparameters(const std::vector<ImagePatchFeatures>& images,
                                       const std::vector<double>& nu_grid,
                                       const std::vector<double>& c_grid,
                                       const OcSvmConfig& base) {
    if (nu_grid.empty() || c_grid.empty())
        throw std::invalid_argument("select_hyperparameters: empty grid");
    if (images.empty())
        throw std::invalid_argument("select_hyperparameters: no images");

    std::vector<FeatureVector> normal_patches;
    for (const ImagePatchFeatures& img : images)
        if (img.label < 0)
            normal_patches.insert(normal_patches.end(), img.patches.begin(), img.patches.end());
    if (normal_patches.size() < 2)
        throw std::invalid_argument("select_hyperparameters: need at least 2 normal patches");

    std::vector<double> nus = nu_grid;
    std::vector<double> cs = c_grid;
    std::sort(nus.begin(), nus.end());
    std::sort(cs.begin(), cs.end());

    SelectionResult result;
    bool have_best = false;
    double best_acc = -1.0;
    // Ascending sweep plus strict ">" implements the tie-break toward
    // smaller nu, then smaller c.
    for (double nu : nus) {
        for (double c : cs) {
            GridCell cell{nu, c, 0.0, true};
            if (nu * static_cast<double>(normal_patches.size()) < 1.0) {
                cell.feasible = false;
                result.table.push_back(cell);
                continue;
            }
            OcSvmConfig cfg = base;
            cfg.nu = nu;
            cfg.c = c;
            OcSvmModel model = fit_ocsvm(normal_patches, cfg);

            int correct = 0;
            for (const ImagePatchFeatures& img : images) {
                int pred = -1;
                for (const FeatureVector& p : img.patches)
                    if (patch_label(model, p) > 0) {
                        pred = +1;
                        break;
                    }
                if (pred == img.label) ++correct;
            }
            cell.acc_img = static_cast<double>(correct) / static_cast<double>(images.size());
            result.table.push_back(cell);

            if (cell.acc_img > best_acc) {
                best_acc = cell.acc_img;
                result.best = cfg;
                result.model = std::move(model);
                have_best = true;
            }
        }
    }
    if (!have_best)
        throw std::invalid_argument("select_hyperparameters: every grid cell infeasible");
    return result;
}

}  // namespace anomap
