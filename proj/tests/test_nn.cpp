#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "tearnet/nn/adam.hpp"
#include "tearnet/nn/layers.hpp"
#include "tearnet/nn/loss.hpp"
#include "tearnet/nn/networks.hpp"

using namespace tearnet;
using namespace tearnet::nn;

namespace {

double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// Central finite difference of a scalar functional with respect to one entry.
template <typename F>
double central_diff(F&& f, double& slot, double h = 1e-5) {
    const double saved = slot;
    slot = saved + h;
    const double hi = f();
    slot = saved - h;
    const double lo = f();
    slot = saved;
    return (hi - lo) / (2.0 * h);
}

}  // namespace

TEST_CASE("dense_forward matches the stated examples") {
    // identity weights, identity activation
    DenseLayer<double> id(2, 2, Activation::identity);
    id.weights = {1, 0, 0, 1};
    Tensor x({2}, {1.0, 2.0});
    auto y = dense_forward(x, id, Activation::identity);
    REQUIRE(y[0] == 1.0);
    REQUIRE(y[1] == 2.0);

    // LeakyReLU on a negative pre-activation
    DenseLayer<double> neg(1, 1, Activation::leaky_relu, 0.01);
    neg.weights = {-1.0};
    auto y2 = dense_forward(Tensor({1}, {1.0}), neg, Activation::leaky_relu);
    REQUIRE(y2[0] == Catch::Approx(-0.01).margin(1e-15));

    // shape mismatch is a configuration error
    REQUIRE_THROWS_AS(dense_forward(Tensor({3}, {1., 2., 3.}), id, Activation::identity),
                      ShapeError);
}

TEST_CASE("dense_forward equals a scalar-loop matvec oracle") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> dist(-2, 2);
    DenseLayer<double> layer(4, 3, Activation::leaky_relu, 0.01);
    for (auto& w : layer.weights) w = dist(rng);
    for (auto& b : layer.bias) b = dist(rng);
    Tensor x({4});
    for (auto& v : x.data) v = dist(rng);

    auto y = dense_forward(x, layer, Activation::leaky_relu);
    for (std::size_t o = 0; o < 3; ++o) {
        double acc = layer.bias[o];
        for (std::size_t i = 0; i < 4; ++i) acc += layer.weights[o * 4 + i] * x[i];
        if (acc < 0) acc *= 0.01;
        REQUIRE(std::abs(y[o] - acc) < 1e-12);
    }
}

TEST_CASE("conv block examples") {
    SECTION("zeros propagate through conv + bn") {
        ConvBlock<double> block(1, 2, 3);
        std::mt19937_64 rng(3);
        block.init(rng);  // random kernels, zero bias, beta = 0
        TensorT<double> x({1, 6, 6}, 0.0);
        auto y = conv_block_forward(x, block, true);
        for (double v : y.data) REQUIRE(v == Catch::Approx(0.0).margin(1e-12));
    }
    SECTION("1x1 unit kernel with bn disabled is the identity") {
        ConvBlock<double> block(1, 1, 1);
        block.bn_enabled = false;
        block.kernels = {1.0};
        TensorT<double> x({1, 4, 4});
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> dist(0.1, 2.0);  // positive: leaky is identity
        for (auto& v : x.data) v = dist(rng);
        auto y = conv_block_forward(x, block, false);
        for (std::size_t i = 0; i < x.numel(); ++i) REQUIRE(y[i] == Catch::Approx(x[i]));
    }
    SECTION("channel mismatch throws") {
        ConvBlock<double> block(2, 1, 3);
        TensorT<double> x({1, 6, 6}, 0.0);
        REQUIRE_THROWS_AS(conv_block_forward(x, block, false), ShapeError);
    }
}

TEST_CASE("conv block matches a quadruple-loop oracle") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> dist(-1, 1);
    ConvBlock<double> block(2, 3, 3);
    block.bn_enabled = false;
    for (auto& v : block.kernels) v = dist(rng);
    for (auto& v : block.bias) v = dist(rng);
    TensorT<double> x({2, 6, 6});
    for (auto& v : x.data) v = dist(rng);

    auto y = conv_block_forward(x, block, false);

    const std::size_t H = 6, W = 6;
    for (std::size_t o = 0; o < 3; ++o)
        for (std::size_t i = 0; i < H; ++i)
            for (std::size_t j = 0; j < W; ++j) {
                double acc = block.bias[o];
                for (std::size_t c = 0; c < 2; ++c)
                    for (int ki = -1; ki <= 1; ++ki)
                        for (int kj = -1; kj <= 1; ++kj) {
                            const int ii = static_cast<int>(i) + ki;
                            const int jj = static_cast<int>(j) + kj;
                            if (ii < 0 || ii >= static_cast<int>(H) || jj < 0 ||
                                jj >= static_cast<int>(W))
                                continue;
                            acc += block.kernels[((o * 2 + c) * 3 + (ki + 1)) * 3 + (kj + 1)] *
                                   x.data[(c * H + static_cast<std::size_t>(ii)) * W +
                                          static_cast<std::size_t>(jj)];
                        }
                acc = acc > 0 ? acc : 0.01 * acc;
                REQUIRE(std::abs(y.data[(o * H + i) * W + j] - acc) < 1e-10);
            }
}

TEST_CASE("conv block spatial dims are preserved") {
    ConvBlock<double> block(1, 4, 3);
    std::mt19937_64 rng(2);
    block.init(rng);
    TensorT<double> x({1, 9, 7}, 0.5);
    auto y = conv_block_forward(x, block, true);
    REQUIRE(y.dims == std::vector<std::size_t>{4, 9, 7});
}

TEST_CASE("loss_mse_l2 examples and oracle") {
    Tensor p({4}, {1, 2, 3, 4});
    REQUIRE(loss_mse_l2(p, p, {}, 0.0) == 0.0);

    std::vector<double> reg = {3.0};
    REQUIRE(loss_mse_l2(p, p, {&reg}, 1e-5) == Catch::Approx(9e-5).epsilon(1e-12));

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> dist(-1, 1);
    Tensor a({8}), b({8});
    for (auto& v : a.data) v = dist(rng);
    for (auto& v : b.data) v = dist(rng);
    std::vector<double> xi = {dist(rng), dist(rng), dist(rng)};
    double expect = 0.0;
    for (int i = 0; i < 8; ++i) expect += (a[i] - b[i]) * (a[i] - b[i]);
    expect /= 8.0;
    double pen = 0.0;
    for (double v : xi) pen += v * v;
    expect += 2.5e-4 * pen;
    REQUIRE(std::abs(loss_mse_l2(a, b, {&xi}, 2.5e-4) - expect) < 1e-12);

    REQUIRE_THROWS_AS(loss_mse_l2(Tensor({2}), Tensor({3}), {}, 0.0), ShapeError);
}

TEST_CASE("backward basics") {
    // loss = (w*x)^2 with x = 1, w = 3: dL/dw = 2w = 6
    DenseLayer<double> l(1, 1, Activation::identity);
    l.weights = {3.0};
    double x = 1.0, y = 0.0;
    l.forward(&x, 1, &y);
    REQUIRE(y == 3.0);
    const double dy = 2.0 * y;  // d/dy of y^2
    double dx = 0.0;
    l.backward(&dy, 1, &dx);
    REQUIRE(l.gweights[0] == Catch::Approx(6.0));

    // a parameter the loss does not depend on gets zero gradient
    DenseLayer<double> l2(1, 1, Activation::identity);
    l2.weights = {5.0};
    double zero_in = 0.0;
    l2.forward(&zero_in, 1, &y);
    l2.backward(&dy, 1, &dx);
    REQUIRE(l2.gweights[0] == 0.0);

    // backward before forward is a usage error
    DenseLayer<double> l3(2, 2, Activation::identity);
    std::vector<double> g(4, 1.0);
    REQUIRE_THROWS_AS(l3.backward(g.data(), 2, nullptr), UsageError);
}

// Finite-difference oracle over every layer type. The scalar functional is a
// fixed random linear probe of the outputs so gradients stay O(1).
TEST_CASE("dense layer gradients match central finite differences") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> dist(-1, 1);
    for (int draw = 0; draw < 20; ++draw) {
        const std::size_t n = 3, in = 4, out = 5;
        DenseLayer<double> layer(in, out,
                                 draw % 2 ? Activation::leaky_relu : Activation::identity);
        layer.init(rng);
        for (auto& b : layer.bias) b = dist(rng);
        std::vector<double> x(n * in), probe(n * out);
        for (auto& v : x) v = dist(rng);
        for (auto& v : probe) v = dist(rng);

        auto functional = [&]() {
            std::vector<double> y(n * out);
            DenseLayer<double> copy = layer;
            copy.forward(x.data(), n, y.data());
            double s = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) s += probe[i] * y[i];
            return s;
        };

        std::vector<double> y(n * out);
        layer.forward(x.data(), n, y.data());
        std::vector<double> dx(n * in);
        layer.zero_grad();
        layer.backward(probe.data(), n, dx.data());

        for (std::size_t i = 0; i < layer.weights.size(); ++i)
            REQUIRE(rel_err(layer.gweights[i], central_diff(functional, layer.weights[i])) <
                    1e-5);
        for (std::size_t i = 0; i < layer.bias.size(); ++i)
            REQUIRE(rel_err(layer.gbias[i], central_diff(functional, layer.bias[i])) < 1e-5);
        for (std::size_t i = 0; i < x.size(); ++i)
            REQUIRE(rel_err(dx[i], central_diff(functional, x[i])) < 1e-5);
    }
}

TEST_CASE("conv block gradients match central finite differences") {
    std::mt19937_64 rng(777);
    std::uniform_real_distribution<double> dist(-1, 1);
    for (int draw = 0; draw < 20; ++draw) {
        const std::size_t n = 2, cin = 2, cout = 3, H = 5, W = 4;
        const bool training = draw % 2 == 0;
        ConvBlock<double> block(cin, cout, 3);
        block.bn_enabled = (draw % 3 != 0);
        block.init(rng);
        for (auto& v : block.bias) v = dist(rng);
        for (auto& v : block.bn_gamma) v = 1.0 + 0.3 * dist(rng);
        for (auto& v : block.bn_beta) v = dist(rng);
        for (auto& v : block.bn_running_mean) v = 0.2 * dist(rng);
        for (auto& v : block.bn_running_var) v = 1.0 + 0.3 * dist(rng);

        std::vector<double> x(n * cin * H * W), probe(n * cout * H * W);
        for (auto& v : x) v = dist(rng);
        for (auto& v : probe) v = dist(rng);

        auto functional = [&]() {
            ConvBlock<double> copy = block;  // keep running stats untouched
            std::vector<double> y(n * cout * H * W);
            copy.forward(x.data(), n, H, W, y.data(), training);
            double s = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) s += probe[i] * y[i];
            return s;
        };

        ConvBlock<double> work = block;
        std::vector<double> y(n * cout * H * W), dx(n * cin * H * W);
        work.forward(x.data(), n, H, W, y.data(), training);
        work.zero_grad();
        work.backward(probe.data(), n, H, W, dx.data());

        auto check = [&](double analytic, double* slot) {
            REQUIRE(rel_err(analytic, central_diff(functional, *slot)) < 1e-5);
        };
        for (std::size_t i = 0; i < block.kernels.size(); ++i)
            check(work.gkernels[i], &block.kernels[i]);
        for (std::size_t i = 0; i < block.bias.size(); ++i) check(work.gbias[i], &block.bias[i]);
        if (block.bn_enabled) {
            for (std::size_t i = 0; i < cout; ++i) check(work.gbn_gamma[i], &block.bn_gamma[i]);
            for (std::size_t i = 0; i < cout; ++i) check(work.gbn_beta[i], &block.bn_beta[i]);
        }
        for (std::size_t i = 0; i < x.size(); ++i) check(dx[i], &x[i]);
    }
}

TEST_CASE("mlp gradients match central finite differences") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> dist(-1, 1);
    Mlp<double> net(3, {6, 6, 4}, /*activate_last=*/true);
    net.init(rng);
    const std::size_t n = 4;
    std::vector<double> x(n * 3), probe(n * 4);
    for (auto& v : x) v = dist(rng);
    for (auto& v : probe) v = dist(rng);

    auto functional = [&]() {
        Mlp<double> copy = net;
        std::vector<double> y(n * 4);
        copy.forward(x.data(), n, y.data());
        double s = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) s += probe[i] * y[i];
        return s;
    };

    std::vector<double> y(n * 4), dx(n * 3);
    net.forward(x.data(), n, y.data());
    net.zero_grad();
    net.backward(probe.data(), n, dx.data());

    std::vector<ParamRef<double>> params;
    net.collect_params(params, "mlp", false);
    std::vector<ParamRef<double>> ref_params;
    for (auto& p : params) {
        for (std::size_t i = 0; i < p.value->size(); ++i)
            REQUIRE(rel_err((*p.grad)[i], central_diff(functional, (*p.value)[i])) < 1e-5);
    }
    (void)ref_params;
    for (std::size_t i = 0; i < x.size(); ++i)
        REQUIRE(rel_err(dx[i], central_diff(functional, x[i])) < 1e-5);
}

TEST_CASE("adam first-step magnitude and zero-gradient behavior") {
    // zero gradient, zeroed moments: parameter unchanged
    std::vector<double> w = {1.25}, g = {0.0};
    std::vector<ParamRef<double>> params{{&w, &g, false, "w"}};
    Adam<double> opt;
    opt.lr = 1e-3;
    opt.reset(params);
    opt.step(params);
    REQUIRE(w[0] == 1.25);

    // nonzero moments decay under zero gradient
    opt.m[0][0] = 1.0;
    opt.v[0][0] = 1.0;
    opt.step(params);
    REQUIRE(opt.m[0][0] == Catch::Approx(0.9));
    REQUIRE(opt.v[0][0] == Catch::Approx(0.999));

    // first step from zeroed moments moves by ~lr * sign(grad)
    std::vector<double> w2 = {0.0}, g2 = {0.37};
    std::vector<ParamRef<double>> params2{{&w2, &g2, false, "w2"}};
    Adam<double> opt2;
    opt2.lr = 1e-3;
    opt2.reset(params2);
    opt2.step(params2);
    REQUIRE(w2[0] == Catch::Approx(-1e-3).epsilon(1e-6));
}

TEST_CASE("adam matches an independent recurrence over 10 steps") {
    // quadratic loss L = 0.5 * a w^2, grad = a w
    const double a = 3.0, lr = 0.05;
    std::vector<double> w = {1.0}, g = {0.0};
    std::vector<ParamRef<double>> params{{&w, &g, false, "w"}};
    Adam<double> opt;
    opt.lr = lr;
    opt.reset(params);

    // reference recurrence, written independently
    double rw = 1.0, rm = 0.0, rv = 0.0;
    for (int t = 1; t <= 10; ++t) {
        g[0] = a * w[0];
        opt.step(params);

        const double rg = a * rw;
        rm = 0.9 * rm + 0.1 * rg;
        rv = 0.999 * rv + 0.001 * rg * rg;
        const double mhat = rm / (1.0 - std::pow(0.9, t));
        const double vhat = rv / (1.0 - std::pow(0.999, t));
        rw -= lr * mhat / (std::sqrt(vhat) + 1e-8);
        REQUIRE(std::abs(w[0] - rw) < 1e-12);
    }
}

TEST_CASE("adam aborts on non-finite gradients") {
    std::vector<double> w = {1.0}, g = {std::numeric_limits<double>::quiet_NaN()};
    std::vector<ParamRef<double>> params{{&w, &g, false, "w"}};
    Adam<double> opt;
    opt.reset(params);
    REQUIRE_THROWS_AS(opt.step(params), OptimError);
}

TEST_CASE("hyperparameter validation") {
    TrainHyper h;
    h.validate();
    h.leaky_slope = 1.5;
    REQUIRE_THROWS_AS(h.validate(), std::invalid_argument);
}
