#include "anomap/ssim.hpp"

#include <cmath>
#include <stdexcept>

namespace anomap {

namespace {

// View a {H,W} or {1,H,W} tensor as a 2-d plane.
const Tensor& plane(const Tensor& t, const char* who) {
    if (t.rank() == 2) return t;
    if (t.rank() == 3 && t.dim(0) == 1) return t;
    throw std::invalid_argument(std::string(who) + ": expected {H,W} or {1,H,W}, got " +
                                shape_str(t.shape));
}

int plane_h(const Tensor& t) { return t.dim(t.rank() - 2); }
int plane_w(const Tensor& t) { return t.dim(t.rank() - 1); }

// Valid-region separable filtering, rows then columns.
std::vector<double> filter_valid(const std::vector<double>& img, int h, int w,
                                 const std::vector<double>& k) {
    const int n = static_cast<int>(k.size());
    const int ow = w - n + 1, oh = h - n + 1;
    std::vector<double> rows(static_cast<std::size_t>(h) * ow, 0.0);
    for (int y = 0; y < h; ++y) {
        const double* src = img.data() + static_cast<std::size_t>(y) * w;
        double* dst = rows.data() + static_cast<std::size_t>(y) * ow;
        for (int i = 0; i < n; ++i) {
            double kv = k[static_cast<std::size_t>(i)];
            for (int x = 0; x < ow; ++x) dst[x] += kv * src[x + i];
        }
    }
    std::vector<double> out(static_cast<std::size_t>(oh) * ow, 0.0);
    for (int i = 0; i < n; ++i) {
        double kv = k[static_cast<std::size_t>(i)];
        for (int y = 0; y < oh; ++y) {
            const double* src = rows.data() + static_cast<std::size_t>(y + i) * ow;
            double* dst = out.data() + static_cast<std::size_t>(y) * ow;
            for (int x = 0; x < ow; ++x) dst[x] += kv * src[x];
        }
    }
    return out;
}

double pow_term(double base, double expo) {
    if (expo == 1.0) return base;
    return std::pow(base, expo);
}

Graph::NodeId blur_node(Graph& g, Graph::NodeId x, const std::vector<double>& k) {
    return g.col_conv_valid(g.row_conv_valid(x, k), k);
}

Graph::NodeId as_plane_node(Graph& g, Graph::NodeId x, const char* who) {
    const Tensor& t = g.value(x);
    if (t.rank() == 2) return x;
    if (t.rank() == 3 && t.dim(0) == 1) return g.reshape(x, {t.dim(1), t.dim(2)});
    throw std::invalid_argument(std::string(who) + ": expected {H,W} or {1,H,W}, got " +
                                shape_str(t.shape));
}

}  // namespace

std::vector<double> gaussian_kernel_1d(int size, double sigma) {
    if (size < 1 || sigma <= 0.0)
        throw std::invalid_argument("gaussian_kernel_1d: size must be >=1 and sigma positive");
    std::vector<double> k(static_cast<std::size_t>(size));
    const double c = (size - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        double d = i - c;
        k[static_cast<std::size_t>(i)] = std::exp(-(d * d) / (2.0 * sigma * sigma));
        sum += k[static_cast<std::size_t>(i)];
    }
    for (double& v : k) v /= sum;
    return k;
}

Tensor gaussian_window(int size, double sigma) {
    std::vector<double> k = gaussian_kernel_1d(size, sigma);
    Tensor w({size, size});
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            w.at(y, x) = k[static_cast<std::size_t>(y)] * k[static_cast<std::size_t>(x)];
    return w;
}

double ssim_index(const Tensor& a, const Tensor& b, const SsimConfig& cfg) {
    const Tensor& pa = plane(a, "ssim_index");
    const Tensor& pb = plane(b, "ssim_index");
    if (!pa.same_shape(pb))
        throw std::invalid_argument("ssim_index: shape " + shape_str(a.shape) + " vs " +
                                    shape_str(b.shape));
    const int h = plane_h(pa), w = plane_w(pa);
    if (h < cfg.window || w < cfg.window)
        throw std::invalid_argument("ssim_index: image " + shape_str(a.shape) +
                                    " smaller than window " + std::to_string(cfg.window));

    const std::vector<double> k = gaussian_kernel_1d(cfg.window, cfg.sigma);
    const std::size_t n = static_cast<std::size_t>(h) * w;
    std::vector<double> xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
        double x = pa.data[i], y = pb.data[i];
        xx[i] = x * x;
        yy[i] = y * y;
        xy[i] = x * y;
    }
    std::vector<double> mu_x = filter_valid(pa.data, h, w, k);
    std::vector<double> mu_y = filter_valid(pb.data, h, w, k);
    std::vector<double> m_xx = filter_valid(xx, h, w, k);
    std::vector<double> m_yy = filter_valid(yy, h, w, k);
    std::vector<double> m_xy = filter_valid(xy, h, w, k);

    const double c1 = cfg.c1(), c2 = cfg.c2(), c3 = cfg.c3();
    double acc = 0.0;
    for (std::size_t i = 0; i < mu_x.size(); ++i) {
        double mx = mu_x[i], my = mu_y[i];
        double vx = std::max(0.0, m_xx[i] - mx * mx);
        double vy = std::max(0.0, m_yy[i] - my * my);
        double cov = m_xy[i] - mx * my;
        double sx = std::sqrt(vx), sy = std::sqrt(vy);
        double lum = (2.0 * mx * my + c1) / (mx * mx + my * my + c1);
        double con = (2.0 * sx * sy + c2) / (vx + vy + c2);
        double str = (cov + c3) / (sx * sy + c3);
        acc += pow_term(lum, cfg.alpha) * pow_term(con, cfg.beta) * pow_term(str, cfg.gamma);
    }
    return acc / static_cast<double>(mu_x.size());
}

double mse(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b))
        throw std::invalid_argument("mse: shape " + shape_str(a.shape) + " vs " +
                                    shape_str(b.shape));
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a.data[i] - b.data[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

Graph::NodeId ssim_loss_node(Graph& g, Graph::NodeId pred, Graph::NodeId target,
                             const SsimConfig& cfg) {
    Graph::NodeId x = as_plane_node(g, pred, "ssim_loss_node");
    Graph::NodeId y = as_plane_node(g, target, "ssim_loss_node");
    const Tensor& tx = g.value(x);
    if (!tx.same_shape(g.value(y)))
        throw std::invalid_argument("ssim_loss_node: shape " + shape_str(g.value(pred).shape) +
                                    " vs " + shape_str(g.value(target).shape));
    if (tx.dim(0) < cfg.window || tx.dim(1) < cfg.window)
        throw std::invalid_argument("ssim_loss_node: image " + shape_str(tx.shape) +
                                    " smaller than window " + std::to_string(cfg.window));

    const std::vector<double> k = gaussian_kernel_1d(cfg.window, cfg.sigma);
    const double c1 = cfg.c1(), c2 = cfg.c2();

    Graph::NodeId mu_x = blur_node(g, x, k);
    Graph::NodeId mu_y = blur_node(g, y, k);
    Graph::NodeId m_xx = blur_node(g, g.mul(x, x), k);
    Graph::NodeId m_yy = blur_node(g, g.mul(y, y), k);
    Graph::NodeId m_xy = blur_node(g, g.mul(x, y), k);

    Graph::NodeId mu_x2 = g.mul(mu_x, mu_x);
    Graph::NodeId mu_y2 = g.mul(mu_y, mu_y);
    Graph::NodeId mu_xy = g.mul(mu_x, mu_y);
    Graph::NodeId var_sum = g.sub(g.add(m_xx, m_yy), g.add(mu_x2, mu_y2));
    Graph::NodeId cov = g.sub(m_xy, mu_xy);

    Graph::NodeId num = g.mul(g.affine(mu_xy, 2.0, c1), g.affine(cov, 2.0, c2));
    Graph::NodeId den = g.mul(g.affine(g.add(mu_x2, mu_y2), 1.0, c1), g.affine(var_sum, 1.0, c2));
    Graph::NodeId index = g.mean_all(g.div(num, den));
    return g.affine(index, -1.0, 1.0);
}

Graph::NodeId mse_loss_node(Graph& g, Graph::NodeId pred, Graph::NodeId target) {
    Graph::NodeId d = g.sub(pred, target);
    return g.mean_all(g.mul(d, d));
}

double ssim_loss(const Tensor& pred, const Tensor& target, const SsimConfig& cfg) {
    Graph g;
    Graph::NodeId loss = ssim_loss_node(g, g.leaf(pred), g.leaf(target), cfg);
    return g.value(loss).data[0];
}

}  // namespace anomap
