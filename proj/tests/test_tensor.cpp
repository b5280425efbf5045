#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>

#include "anomap/autograd.hpp"
#include "anomap/rng.hpp"
#include "anomap/tensor.hpp"
#include "doctest.h"
#include "gradcheck.hpp"

using namespace anomap;
using anomap::testing::avoid_kinks;
using anomap::testing::gradcheck;
using anomap::testing::GradCheckResult;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (double& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

}  // namespace

TEST_CASE("tensor shape accounting and accessors") {
    Tensor t({2, 3, 4});
    CHECK(t.size() == 24);
    CHECK(t.rank() == 3);
    CHECK(t.dim(2) == 4);
    t.at(1, 2, 3) = 7.0;
    CHECK(t.data[23] == 7.0);
    CHECK(shape_str(t.shape) == "(2x3x4)");
    CHECK_THROWS(Tensor({2, 0, 3}));
}

TEST_CASE("rng streams are deterministic and forks are independent") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());

    Rng root(7);
    Rng f1 = root.fork(1), f1_again = root.fork(1), f2 = root.fork(2);
    CHECK(f1.uniform() == f1_again.uniform());
    CHECK(f1.seed() != f2.seed());

    Rng u(3);
    for (int i = 0; i < 1000; ++i) {
        double x = u.uniform();
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
        CHECK(u.uniform_below(5) < 5);
    }
}

TEST_CASE("shuffle is a seeded permutation") {
    std::vector<int> v1{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, v2 = v1, sorted = v1;
    Rng a(11), b(11);
    a.shuffle(v1);
    b.shuffle(v2);
    CHECK(v1 == v2);
    std::sort(v2.begin(), v2.end());
    CHECK(v2 == sorted);
}

TEST_CASE("xavier bounds follow the fan sizes") {
    Rng rng(5);
    LayerParams layer = xavier_conv(16, 8, 3, 3, rng);
    CHECK(layer.kernel.shape == std::vector<int>{16, 8, 3, 3});
    CHECK(layer.bias.shape == std::vector<int>{16});
    double limit = std::sqrt(6.0 / (8 * 9 + 16 * 9));
    for (double v : layer.kernel.data) {
        CHECK(std::abs(v) <= limit);
    }
    for (double v : layer.bias.data) CHECK(v == 0.0);
}

TEST_CASE("first adam step matches the closed form") {
    AdamConfig cfg;
    Tensor p({3});
    p.data = {1.0, -2.0, 0.5};
    Tensor g({3});
    g.data = {0.3, -0.1, 0.0};
    AdamState st(p);
    Tensor before = p;
    adam_step(p, g, st, cfg);
    for (int i = 0; i < 3; ++i) {
        // At t=1 the bias-corrected moments are g and g^2.
        double expect = before.data[i] -
                        cfg.lr * g.data[i] / (std::sqrt(g.data[i] * g.data[i]) + cfg.eps);
        CHECK(p.data[i] == doctest::Approx(expect).epsilon(1e-12));
    }
    CHECK(st.step == 1);
}

TEST_CASE("adam converges on a quadratic") {
    Tensor p({1});
    p.data = {5.0};
    AdamState st(p);
    AdamConfig cfg;
    cfg.lr = 0.05;
    for (int i = 0; i < 2000; ++i) {
        Tensor g({1});
        g.data = {2.0 * p.data[0]};
        adam_step(p, g, st, cfg);
    }
    CHECK(std::abs(p.data[0]) < 1e-3);
}

TEST_CASE("elementwise op gradients match finite differences") {
    Rng rng(101);
    auto leaves = std::vector<Tensor>{random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)};
    leaves[1].data[0] = 1.3;  // keep div away from 0

    auto build_add = [](Graph& g, const std::vector<Graph::NodeId>& in) {
        return g.sum_all(g.mul(g.add(in[0], in[1]), in[0]));
    };
    CHECK(gradcheck(leaves, build_add).max_rel_err < 1e-6);

    auto build_div = [](Graph& g, const std::vector<Graph::NodeId>& in) {
        return g.mean_all(g.div(in[0], in[1]));
    };
    std::vector<Tensor> div_leaves = leaves;
    for (double& v : div_leaves[1].data) v = 1.0 + std::abs(v);
    CHECK(gradcheck(div_leaves, build_div).max_rel_err < 1e-6);

    auto build_affine = [](Graph& g, const std::vector<Graph::NodeId>& in) {
        return g.sum_all(g.affine(g.sub(in[0], in[1]), 2.5, -0.75));
    };
    CHECK(gradcheck(leaves, build_affine).max_rel_err < 1e-6);
}

TEST_CASE("mul with aliased operands accumulates both contributions") {
    Graph g;
    Tensor x({2});
    x.data = {3.0, -1.5};
    Graph::NodeId id = g.leaf(x);
    g.backward(g.sum_all(g.mul(id, id)));
    CHECK(g.grad(id).data[0] == doctest::Approx(6.0));
    CHECK(g.grad(id).data[1] == doctest::Approx(-3.0));
}

TEST_CASE("activation gradients match finite differences") {
    Rng rng(202);
    Tensor x = random_tensor({4, 6}, rng);
    avoid_kinks(x);

    auto build_relu = [](Graph& g, const std::vector<Graph::NodeId>& in) {
        return g.sum_all(g.relu(in[0]));
    };
    CHECK(gradcheck({x}, build_relu).max_rel_err < 1e-6);

    auto build_sig = [](Graph& g, const std::vector<Graph::NodeId>& in) {
        return g.sum_all(g.sigmoid(in[0]));
    };
    CHECK(gradcheck({x}, build_sig).max_rel_err < 1e-6);
}

TEST_CASE("conv2d gradients match finite differences for all inputs") {
    Rng rng(303);
    Tensor x = random_tensor({2, 5, 4}, rng);
    Tensor k = random_tensor({3, 2, 3, 3}, rng, -0.5, 0.5);
    Tensor b = random_tensor({3}, rng, -0.2, 0.2);

    auto build = [](Graph& g, const std::vector<Graph::NodeId>& in) {
        return g.sum_all(g.mul(g.conv2d(in[0], in[1], in[2]), g.conv2d(in[0], in[1], in[2])));
    };
    GradCheckResult r = gradcheck({x, k, b}, build);
    CHECK(r.max_rel_err < 1e-6);
    CHECK(r.checked == 2 * 5 * 4 + 3 * 2 * 3 * 3 + 3);
}

TEST_CASE("conv2d zero padding leaves the shape unchanged") {
    Graph g;
    Tensor x({1, 4, 6}, 1.0);
    Tensor k({2, 1, 3, 3}, 0.0);
    k.at(0, 0, 1) = 1.0;  // first kernel: identity tap at the center
    Tensor b({2});
    Graph::NodeId y = g.conv2d(g.leaf(x), g.leaf(k), g.leaf(b));
    CHECK(g.value(y).shape == std::vector<int>{2, 4, 6});
    CHECK(g.value(y).at(0, 2, 3) == doctest::Approx(1.0));
}

TEST_CASE("maxpool halves dimensions and routes gradient to the argmax") {
    Graph g;
    Tensor x({1, 2, 2});
    x.data = {1.0, 4.0, 2.0, 3.0};
    Graph::NodeId in = g.leaf(x);
    Graph::NodeId out = g.maxpool2x2(in);
    CHECK(g.value(out).shape == std::vector<int>{1, 1, 1});
    CHECK(g.value(out).data[0] == 4.0);
    g.backward(g.sum_all(out));
    CHECK(g.grad(in).data == std::vector<double>{0.0, 1.0, 0.0, 0.0});

    Rng rng(404);
    Tensor big = random_tensor({2, 6, 4}, rng);
    // Distinct entries keep the argmax stable under the probe.
    for (std::size_t i = 0; i < big.size(); ++i) big.data[i] += 0.01 * static_cast<double>(i);
    auto build = [](Graph& g2, const std::vector<Graph::NodeId>& in2) {
        return g2.sum_all(g2.mul(g2.maxpool2x2(in2[0]), g2.maxpool2x2(in2[0])));
    };
    CHECK(gradcheck({big}, build, 1e-6).max_rel_err < 1e-5);
}

TEST_CASE("upsample duplicates cells and sums gradients per block") {
    Graph g;
    Tensor x({1, 1, 2});
    x.data = {1.0, 2.0};
    Graph::NodeId in = g.leaf(x);
    Graph::NodeId out = g.upsample2x2(in);
    CHECK(g.value(out).shape == std::vector<int>{1, 2, 4});
    CHECK(g.value(out).data == std::vector<double>{1.0, 1.0, 2.0, 2.0, 1.0, 1.0, 2.0, 2.0});
    g.backward(g.sum_all(out));
    CHECK(g.grad(in).data == std::vector<double>{4.0, 4.0});
}

TEST_CASE("pool then upsample round-trips shape") {
    Rng rng(505);
    Tensor x = random_tensor({3, 8, 8}, rng);
    Graph g;
    Graph::NodeId y = g.upsample2x2(g.maxpool2x2(g.leaf(x)));
    CHECK(g.value(y).shape == x.shape);
}

TEST_CASE("separable valid filters match direct computation and gradcheck") {
    Rng rng(606);
    Tensor x = random_tensor({4, 5}, rng);
    std::vector<double> kernel{0.25, 0.5, 0.25};

    Graph g;
    Graph::NodeId rows = g.row_conv_valid(g.leaf(x), kernel);
    CHECK(g.value(rows).shape == std::vector<int>{4, 3});
    double direct = kernel[0] * x.at(1, 0) + kernel[1] * x.at(1, 1) + kernel[2] * x.at(1, 2);
    CHECK(g.value(rows).at(1, 0) == doctest::Approx(direct));

    auto build = [&kernel](Graph& g2, const std::vector<Graph::NodeId>& in) {
        Graph::NodeId a = g2.col_conv_valid(g2.row_conv_valid(in[0], kernel), kernel);
        return g2.sum_all(g2.mul(a, a));
    };
    CHECK(gradcheck({x}, build).max_rel_err < 1e-6);
}

TEST_CASE("backward on a non-scalar is rejected") {
    Graph g;
    Graph::NodeId x = g.leaf(Tensor({2, 2}, 1.0));
    CHECK_THROWS(g.backward(x));
}

TEST_CASE("reshape preserves data order and total size") {
    Graph g;
    Tensor x({2, 3});
    for (std::size_t i = 0; i < 6; ++i) x.data[i] = static_cast<double>(i);
    Graph::NodeId y = g.reshape(g.leaf(x), {3, 2});
    CHECK(g.value(y).shape == std::vector<int>{3, 2});
    CHECK(g.value(y).data == x.data);
    CHECK_THROWS(g.reshape(g.leaf(x), {4, 2}));
}
