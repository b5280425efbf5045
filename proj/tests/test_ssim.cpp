#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>

#include "anomap/rng.hpp"
#include "anomap/ssim.hpp"
#include "doctest.h"
#include "gradcheck.hpp"

using namespace anomap;
using anomap::testing::gradcheck;

namespace {

Tensor random_image(int h, int w, Rng& rng, double lo = 0.05, double hi = 0.95) {
    Tensor t({h, w});
    for (double& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

}  // namespace

TEST_CASE("gaussian kernel is normalized, symmetric, and peaked at the center") {
    std::vector<double> k = gaussian_kernel_1d(11, 1.5);
    REQUIRE(k.size() == 11);
    double sum = 0.0;
    for (double v : k) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    for (int i = 0; i < 5; ++i) CHECK(k[i] == doctest::Approx(k[10 - i]).epsilon(1e-12));
    for (int i = 0; i < 5; ++i) CHECK(k[i] < k[i + 1]);

    Tensor w = gaussian_window(11, 1.5);
    CHECK(w.shape == std::vector<int>{11, 11});
    double wsum = 0.0;
    for (double v : w.data) wsum += v;
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("identical images score exactly one") {
    Rng rng(1);
    Tensor a = random_image(16, 16, rng);
    CHECK(std::abs(ssim_index(a, a) - 1.0) < 1e-9);
    CHECK(std::abs(ssim_loss(a, a)) < 1e-9);
}

TEST_CASE("flat images reduce to the luminance factor") {
    Tensor a({16, 16}, 0.25), b({16, 16}, 0.75);
    SsimConfig cfg;
    double c1 = cfg.c1();
    double expect = (2.0 * 0.25 * 0.75 + c1) / (0.25 * 0.25 + 0.75 * 0.75 + c1);
    CHECK(ssim_index(a, b) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(ssim_index(a, b) == doctest::Approx(0.60007).epsilon(1e-3));
}

TEST_CASE("similarity is symmetric") {
    Rng rng(2);
    Tensor a = random_image(20, 15, rng), b = random_image(20, 15, rng);
    CHECK(std::abs(ssim_index(a, b) - ssim_index(b, a)) < 1e-12);
}

TEST_CASE("similarity stays within [-1, 1] and drops under noise") {
    Rng rng(3);
    Tensor a = random_image(24, 24, rng);
    Tensor noisy = a;
    for (double& v : noisy.data) v = std::clamp(v + rng.normal(0.0, 0.1), 0.0, 1.0);
    double s = ssim_index(a, noisy);
    CHECK(s < 1.0);
    CHECK(s >= -1.0);
    CHECK(ssim_loss(a, noisy) == doctest::Approx(1.0 - s).epsilon(1e-9));
}

TEST_CASE("non-unit exponents keep symmetry and the perfect score") {
    // Fractional exponents assume positive terms, so compare positively
    // correlated images (a vs a brightened copy), not independent noise.
    Rng rng(4);
    SsimConfig cfg;
    cfg.alpha = 2.0;
    cfg.beta = 0.5;
    cfg.gamma = 1.5;
    Tensor a = random_image(16, 16, rng);
    Tensor b = a;
    for (double& v : b.data) v = 0.5 + 0.4 * v;
    CHECK(std::abs(ssim_index(a, b, cfg) - ssim_index(b, a, cfg)) < 1e-12);
    CHECK(ssim_index(a, b, cfg) < 1.0);
    CHECK(ssim_index(a, a, cfg) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("graph loss equals one minus the index at unit exponents") {
    Rng rng(5);
    Tensor a = random_image(18, 14, rng), b = random_image(18, 14, rng);
    Graph g;
    Graph::NodeId loss = ssim_loss_node(g, g.leaf(a), g.leaf(b));
    CHECK(g.value(loss).data[0] == doctest::Approx(1.0 - ssim_index(a, b)).epsilon(1e-9));
}

TEST_CASE("graph loss accepts {1,H,W} activations") {
    Rng rng(6);
    Tensor a = random_image(13, 13, rng);
    Tensor a3 = a;
    a3.shape = {1, 13, 13};
    Graph g;
    Graph::NodeId loss = ssim_loss_node(g, g.leaf(a3), g.leaf(a));
    CHECK(std::abs(g.value(loss).data[0]) < 1e-9);
}

TEST_CASE("ssim loss gradient matches finite differences") {
    Rng rng(7);
    std::vector<Tensor> leaves{random_image(13, 13, rng), random_image(13, 13, rng)};
    auto build = [](Graph& g, const std::vector<Graph::NodeId>& in) {
        return ssim_loss_node(g, in[0], in[1]);
    };
    CHECK(gradcheck(leaves, build, 1e-5).max_rel_err < 1e-6);
}

TEST_CASE("mse and its graph form agree and the gradient checks out") {
    Rng rng(8);
    Tensor a = random_image(9, 9, rng), b = random_image(9, 9, rng);
    double direct = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a.data[i] - b.data[i];
        direct += d * d;
    }
    direct /= static_cast<double>(a.size());
    CHECK(mse(a, b) == doctest::Approx(direct).epsilon(1e-12));

    Graph g;
    Graph::NodeId loss = mse_loss_node(g, g.leaf(a), g.leaf(b));
    CHECK(g.value(loss).data[0] == doctest::Approx(direct).epsilon(1e-12));

    auto build = [](Graph& g2, const std::vector<Graph::NodeId>& in) {
        return mse_loss_node(g2, in[0], in[1]);
    };
    CHECK(gradcheck({a, b}, build).max_rel_err < 1e-6);
}

TEST_CASE("images smaller than the window are rejected") {
    Tensor a({8, 8}, 0.5), b({8, 8}, 0.5);
    CHECK_THROWS(ssim_index(a, b));
    Tensor c({16, 16}, 0.5);
    CHECK_THROWS(ssim_index(a, c));
}
