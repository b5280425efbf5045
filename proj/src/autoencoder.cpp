#include "anomap/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "anomap/error.hpp"
#include "anomap/serialize.hpp"

namespace anomap {

namespace {

struct LayerSpec {
    int out_ch;
    int in_ch;
};
// Encoder then decoder, fixed wiring.
constexpr LayerSpec kLayers[7] = {{16, 1}, {8, 16}, {8, 8}, {8, 8}, {8, 8}, {16, 8}, {1, 16}};

constexpr char kMagic[4] = {'A', 'E', 'C', 'K'};
constexpr uint32_t kVersion = 1;

LayerParams& layer(AutoencoderModel& m, int i) {
    return i < 3 ? m.encoder[static_cast<std::size_t>(i)]
                 : m.decoder[static_cast<std::size_t>(i - 3)];
}

const LayerParams& layer(const AutoencoderModel& m, int i) {
    return i < 3 ? m.encoder[static_cast<std::size_t>(i)]
                 : m.decoder[static_cast<std::size_t>(i - 3)];
}

void check_patch(const Tensor& patch, const char* who) {
    if (patch.rank() != 2)
        throw std::invalid_argument(std::string(who) + ": expected a {H,W} patch, got " +
                                    shape_str(patch.shape));
    if (patch.dim(0) % 8 != 0 || patch.dim(1) % 8 != 0)
        throw std::invalid_argument(std::string(who) + ": spatial dims must be divisible by 8, got " +
                                    shape_str(patch.shape));
}

Tensor as3d(const Tensor& patch) {
    Tensor t = patch;
    t.shape = {1, patch.dim(0), patch.dim(1)};
    return t;
}

int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i = std::abs(i) % period;
    return i < n ? i : period - i;
}

Graph::NodeId loss_node(Graph& g, Graph::NodeId out, Graph::NodeId target,
                        const TrainConfig& cfg) {
    return cfg.loss == LossKind::Ssim ? ssim_loss_node(g, out, target, cfg.ssim)
                                      : mse_loss_node(g, out, target);
}

// Validation always scores structural loss, whatever loss trains the model;
// epoch selection is by structural quality for both arms.
double eval_loss(const AutoencoderModel& model, const Tensor& patch, const TrainConfig& cfg) {
    Graph g;
    ModelNodes mn = add_params(g, model);
    Graph::NodeId x = g.leaf(as3d(patch));
    Graph::NodeId out = forward_node(g, mn, x);
    return g.value(ssim_loss_node(g, out, x, cfg.ssim)).data[0];
}

}  // namespace

AutoencoderModel build_model(uint64_t seed) {
    Rng rng(seed);
    AutoencoderModel m;
    for (int i = 0; i < 7; ++i)
        layer(m, i) = xavier_conv(kLayers[i].out_ch, kLayers[i].in_ch, 3, 3, rng);
    return m;
}

ModelNodes add_params(Graph& g, const AutoencoderModel& model) {
    ModelNodes mn;
    for (int i = 0; i < 7; ++i) {
        mn.kernels[static_cast<std::size_t>(i)] = g.leaf(layer(model, i).kernel);
        mn.biases[static_cast<std::size_t>(i)] = g.leaf(layer(model, i).bias);
    }
    return mn;
}

Graph::NodeId forward_node(Graph& g, const ModelNodes& params, Graph::NodeId x) {
    auto conv = [&](Graph::NodeId in, int i) {
        return g.conv2d(in, params.kernels[static_cast<std::size_t>(i)],
                        params.biases[static_cast<std::size_t>(i)]);
    };
    Graph::NodeId h = x;
    for (int i = 0; i < 3; ++i) h = g.maxpool2x2(g.relu(conv(h, i)));
    for (int i = 3; i < 6; ++i) h = g.upsample2x2(g.relu(conv(h, i)));
    return g.sigmoid(conv(h, 6));
}

Tensor reconstruct(const AutoencoderModel& model, const Tensor& patch) {
    check_patch(patch, "reconstruct");
    Graph g;
    ModelNodes mn = add_params(g, model);
    Graph::NodeId out = forward_node(g, mn, g.leaf(as3d(patch)));
    Tensor result = g.value(out);
    result.shape = {patch.dim(0), patch.dim(1)};
    return result;
}

Tensor residue(const AutoencoderModel& model, const Tensor& patch) {
    Tensor r = reconstruct(model, patch);
    for (std::size_t i = 0; i < r.size(); ++i) r.data[i] = std::abs(patch.data[i] - r.data[i]);
    return r;
}

double residue_energy(const AutoencoderModel& model, const Tensor& patch) {
    Tensor r = residue(model, patch);
    double acc = 0.0;
    for (double v : r.data) acc += v * v;
    return acc;
}

Tensor rotate_bilinear(const Tensor& patch, double degrees) {
    if (patch.rank() != 2)
        throw std::invalid_argument("rotate_bilinear: expected {H,W}, got " +
                                    shape_str(patch.shape));
    const int h = patch.dim(0), w = patch.dim(1);
    const double rad = degrees * std::numbers::pi / 180.0;
    const double cs = std::cos(rad), sn = std::sin(rad);
    const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
    Tensor out({h, w});
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            // Inverse map: where does this output pixel sample the input?
            double dx = x - cx, dy = y - cy;
            double xs = cs * dx + sn * dy + cx;
            double ys = -sn * dx + cs * dy + cy;
            double xf = std::floor(xs), yf = std::floor(ys);
            double fx = xs - xf, fy = ys - yf;
            int x0 = reflect_index(static_cast<int>(xf), w);
            int x1 = reflect_index(static_cast<int>(xf) + 1, w);
            int y0 = reflect_index(static_cast<int>(yf), h);
            int y1 = reflect_index(static_cast<int>(yf) + 1, h);
            double top = patch.at(y0, x0) * (1.0 - fx) + patch.at(y0, x1) * fx;
            double bot = patch.at(y1, x0) * (1.0 - fx) + patch.at(y1, x1) * fx;
            out.at(y, x) = top * (1.0 - fy) + bot * fy;
        }
    }
    return out;
}

Tensor flip_vertical(const Tensor& patch) {
    if (patch.rank() != 2)
        throw std::invalid_argument("flip_vertical: expected {H,W}, got " + shape_str(patch.shape));
    const int h = patch.dim(0), w = patch.dim(1);
    Tensor out({h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.at(y, x) = patch.at(h - 1 - y, x);
    return out;
}

Tensor flip_horizontal(const Tensor& patch) {
    if (patch.rank() != 2)
        throw std::invalid_argument("flip_horizontal: expected {H,W}, got " +
                                    shape_str(patch.shape));
    const int h = patch.dim(0), w = patch.dim(1);
    Tensor out({h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.at(y, x) = patch.at(y, w - 1 - x);
    return out;
}

Tensor augment(const Tensor& patch, Rng& rng) {
    if (patch.rank() != 2 || patch.dim(0) != patch.dim(1))
        throw std::invalid_argument("augment: expected a square {N,N} patch, got " +
                                    shape_str(patch.shape));
    // Fixed draw order keeps augmentation reproducible: angle, then the two
    // coin flips, drawn every call whether or not they fire.
    Tensor out = rotate_bilinear(patch, rng.uniform(0.0, 180.0));
    bool vflip = rng.uniform() < 0.5;
    bool hflip = rng.uniform() < 0.5;
    if (vflip) out = flip_vertical(out);
    if (hflip) out = flip_horizontal(out);
    return out;
}

TrainReport train(AutoencoderModel& model, const std::vector<Tensor>& patches,
                  const TrainConfig& cfg) {
    if (patches.empty()) throw std::invalid_argument("train: empty training set");
    if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
    if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    if (!(cfg.val_fraction >= 0.0 && cfg.val_fraction < 1.0))
        throw std::invalid_argument("train: val_fraction must be in [0,1)");
    for (const Tensor& p : patches) {
        check_patch(p, "train");
        if (!p.same_shape(patches.front()))
            throw std::invalid_argument("train: mixed patch shapes " +
                                        shape_str(patches.front().shape) + " vs " +
                                        shape_str(p.shape));
        if (cfg.augment && p.dim(0) != p.dim(1))
            throw std::invalid_argument("train: augmentation needs square patches, got " +
                                        shape_str(p.shape));
    }

    Rng rng(cfg.seed);
    std::vector<std::size_t> order(patches.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    const std::size_t n_val =
        static_cast<std::size_t>(static_cast<double>(patches.size()) * cfg.val_fraction);
    std::vector<std::size_t> val_idx(order.begin(), order.begin() + n_val);
    std::vector<std::size_t> train_idx(order.begin() + n_val, order.end());
    if (train_idx.empty()) throw std::invalid_argument("train: validation split ate every patch");

    Tensor* params[14];
    for (int i = 0; i < 7; ++i) {
        params[2 * i] = &layer(model, i).kernel;
        params[2 * i + 1] = &layer(model, i).bias;
    }
    std::vector<AdamState> states;
    states.reserve(14);
    for (Tensor* p : params) states.emplace_back(*p);

    TrainReport report;
    double best = std::numeric_limits<double>::infinity();
    AutoencoderModel best_model = model;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng.shuffle(train_idx);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < train_idx.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            std::size_t stop = std::min(train_idx.size(),
                                        start + static_cast<std::size_t>(cfg.batch_size));
            std::vector<Tensor> grads;
            grads.reserve(14);
            for (Tensor* p : params) grads.emplace_back(p->shape);

            for (std::size_t k = start; k < stop; ++k) {
                Tensor sample = cfg.augment ? augment(patches[train_idx[k]], rng)
                                            : patches[train_idx[k]];
                Graph g;
                ModelNodes mn = add_params(g, model);
                Graph::NodeId x = g.leaf(as3d(sample));
                Graph::NodeId out = forward_node(g, mn, x);
                Graph::NodeId loss = loss_node(g, out, x, cfg);
                g.backward(loss);
                loss_sum += g.value(loss).data[0];
                for (int i = 0; i < 7; ++i) {
                    const Tensor& gk = g.grad(mn.kernels[static_cast<std::size_t>(i)]);
                    const Tensor& gb = g.grad(mn.biases[static_cast<std::size_t>(i)]);
                    Tensor& ak = grads[static_cast<std::size_t>(2 * i)];
                    Tensor& ab = grads[static_cast<std::size_t>(2 * i + 1)];
                    for (std::size_t j = 0; j < gk.size(); ++j) ak.data[j] += gk.data[j];
                    for (std::size_t j = 0; j < gb.size(); ++j) ab.data[j] += gb.data[j];
                }
            }
            double inv = 1.0 / static_cast<double>(stop - start);
            for (int i = 0; i < 14; ++i) {
                for (double& v : grads[static_cast<std::size_t>(i)].data) v *= inv;
                adam_step(*params[i], grads[static_cast<std::size_t>(i)],
                          states[static_cast<std::size_t>(i)], cfg.adam);
            }
        }
        double train_loss = loss_sum / static_cast<double>(train_idx.size());
        double val_loss = train_loss;
        if (!val_idx.empty()) {
            double acc = 0.0;
            for (std::size_t i : val_idx) acc += eval_loss(model, patches[i], cfg);
            val_loss = acc / static_cast<double>(val_idx.size());
        }
        if (!std::isfinite(train_loss) || !std::isfinite(val_loss))
            throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch));
        report.train_loss.push_back(train_loss);
        report.val_loss.push_back(val_loss);
        if (val_loss < best) {
            best = val_loss;
            best_model = model;
            report.best_epoch = epoch;
        }
    }
    model = best_model;
    return report;
}

void write_model(BinaryWriter& w, const AutoencoderModel& model) {
    for (int i = 0; i < 7; ++i) {
        w.tensor(layer(model, i).kernel);
        w.tensor(layer(model, i).bias);
    }
}

AutoencoderModel read_model(BinaryReader& r) {
    AutoencoderModel m;
    for (int i = 0; i < 7; ++i) {
        Tensor kernel = r.tensor();
        Tensor bias = r.tensor();
        std::vector<int> want_k = {kLayers[i].out_ch, kLayers[i].in_ch, 3, 3};
        std::vector<int> want_b = {kLayers[i].out_ch};
        if (kernel.shape != want_k)
            throw DataError("checkpoint layer " + std::to_string(i) + " kernel shape " +
                            shape_str(kernel.shape) + ", expected " + shape_str(want_k));
        if (bias.shape != want_b)
            throw DataError("checkpoint layer " + std::to_string(i) + " bias shape " +
                            shape_str(bias.shape) + ", expected " + shape_str(want_b));
        layer(m, i).kernel = std::move(kernel);
        layer(m, i).bias = std::move(bias);
    }
    return m;
}

void save_autoencoder(const std::string& path, const AutoencoderModel& model) {
    BinaryWriter w(path);
    w.magic(kMagic);
    w.u32(kVersion);
    write_model(w, model);
    w.close();
}

AutoencoderModel load_autoencoder(const std::string& path) {
    BinaryReader r(path);
    r.expect_magic(kMagic);
    uint32_t version = r.u32();
    if (version != kVersion)
        throw VersionError("unsupported checkpoint version " + std::to_string(version) + " in " +
                           path);
    return read_model(r);
}

}  // namespace anomap
