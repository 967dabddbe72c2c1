#include <doctest.h>

#include <cmath>
#include <random>

#include "pdg/autodiff.hpp"

using namespace pdg::ad;

namespace {

Tensor scalar(double v) { return Tensor::Constant(1, 1, v); }

double d_dx(const std::function<Var(const Var &)> &f, double x0) {
    Tape t;
    const Var x = t.leaf(scalar(x0));
    t.backward(sum(f(x)));
    return t.grad(x)(0, 0);
}

} // namespace

TEST_CASE("elementary derivatives") {
    CHECK(d_dx([](const Var &x) { return square(x); }, 3.0) == doctest::Approx(6.0));
    CHECK(d_dx([](const Var &x) { return tanh(x); }, 0.0) == doctest::Approx(1.0));
    CHECK(d_dx([](const Var &x) { return sigmoid(x); }, 0.0) == doctest::Approx(0.25));
    CHECK(d_dx([](const Var &x) { return sqrt(x); }, 4.0) == doctest::Approx(0.25));
}

TEST_CASE("composite gradient against central differences") {
    auto f = [](double x) { return std::exp(-x * x); };
    for (double x0 : {-1.3, -0.2, 0.4, 2.1}) {
        const double g = d_dx([](const Var &x) { return exp(-square(x)); }, x0);
        const double h = 1e-5;
        const double fd = (f(x0 + h) - f(x0 - h)) / (2 * h);
        CHECK(std::abs(g - fd) / std::abs(fd) < 1e-6);
    }
}

TEST_CASE("subgradient conventions") {
    CHECK(d_dx([](const Var &x) { return relu(x); }, 0.0) == 0.0);
    CHECK(d_dx([](const Var &x) { return relu(x); }, 0.5) == 1.0);
    CHECK(d_dx([](const Var &x) { return clamp(x, -1.0, 1.0); }, 1.0) == 0.0);
    CHECK(d_dx([](const Var &x) { return clamp(x, -1.0, 1.0); }, -1.0) == 0.0);
    CHECK(d_dx([](const Var &x) { return clamp(x, -1.0, 1.0); }, 2.0) == 0.0);
    CHECK(d_dx([](const Var &x) { return clamp(x, -1.0, 1.0); }, 0.3) == 1.0);

    Tape t;
    const Var z = t.leaf(Tensor::Zero(2, 3));
    t.backward(sum(norm2(z)));
    CHECK(t.grad(z).isZero(0.0));
}

TEST_CASE("two uses of one node add their gradients") {
    Tape t;
    const Var x = t.leaf(scalar(2.0));
    const Var y = x * 3.0;
    t.backward(sum(y * y + y));
    // d/dx (9x^2 + 3x) = 18x + 3
    CHECK(t.grad(x)(0, 0) == doctest::Approx(39.0));
}

TEST_CASE("broadcast reductions") {
    Tape t;
    const Var a = t.leaf(Tensor::Ones(3, 4));
    const Var row = t.leaf(Tensor::Ones(1, 4));
    const Var col = t.leaf(Tensor::Ones(3, 1));
    const Var s = t.leaf(scalar(2.0));
    t.backward(sum((a + row) * col * s));
    CHECK(t.grad(row) == Tensor::Constant(1, 4, 3.0 * 2.0));
    CHECK(t.grad(col) == Tensor::Constant(3, 1, 4.0 * 2.0 * 2.0));
    CHECK(t.grad(s)(0, 0) == doctest::Approx(24.0));
}

TEST_CASE("shape errors name the operation") {
    Tape t;
    const Var a = t.constant(Tensor::Zero(3, 4));
    const Var b = t.constant(Tensor::Zero(2, 4));
    CHECK_THROWS_WITH_AS((void)add(a, b), doctest::Contains("add"), ShapeError);
    CHECK_THROWS_AS((void)matmul(a, b), ShapeError);
    CHECK_THROWS_AS((void)slice(a, 3, 2), ShapeError);
    CHECK_THROWS_AS(t.backward(a), ShapeError);
}

TEST_CASE("parameters: independent ones get exactly zero gradient") {
    ParameterStore store;
    store.add("used", Tensor::Constant(2, 2, 0.5));
    store.add("unused", Tensor::Constant(2, 2, 0.5));
    Tape t;
    const Var u = t.param(store, "used");
    (void)t.param(store, "unused");
    t.backward(sum(square(u)), &store);
    CHECK(store.at("used").grad == Tensor::Constant(2, 2, 1.0));
    CHECK(store.at("unused").grad.isZero(0.0));
}

TEST_CASE("constant branches do not receive gradients") {
    Tape t;
    const Var c = t.constant(scalar(4.0));
    const Var x = t.leaf(scalar(1.0));
    CHECK_FALSE(c.requires_grad());
    t.backward(sum(c * x));
    CHECK(t.grad(x)(0, 0) == 4.0);
    CHECK(t.grad(c).isZero(0.0));
}

TEST_CASE("replaying a tape gives identical values") {
    auto run = [] {
        Tape t;
        std::mt19937_64 rng(1);
        std::normal_distribution<double> n;
        Tensor w(4, 4);
        for (Eigen::Index i = 0; i < w.size(); ++i)
            w.data()[i] = n(rng);
        const Var x = t.leaf(w);
        return (tanh(matmul(x, x)) + sigmoid(x)).value();
    };
    CHECK(run() == run());
}

TEST_CASE("adam") {
    SUBCASE("zero gradient leaves parameters unchanged") {
        ParameterStore s;
        s.add("p", Tensor::Constant(2, 2, 1.5));
        adam_step(s, 1e-3);
        CHECK(s.at("p").value == Tensor::Constant(2, 2, 1.5));
    }
    SUBCASE("first step is -lr * sign(g)") {
        ParameterStore s;
        s.add("p", Tensor::Zero(1, 2));
        s.at("p").grad << 3.0, -0.01;
        adam_step(s, 1e-3);
        CHECK(s.at("p").value(0, 0) == doctest::Approx(-1e-3).epsilon(1e-6));
        CHECK(s.at("p").value(0, 1) == doctest::Approx(1e-3).epsilon(1e-4));
        CHECK(s.at("p").grad.isZero(0.0));
        CHECK(s.step == 1);
    }
    SUBCASE("constant gradient steps approach lr") {
        ParameterStore s;
        s.add("p", Tensor::Zero(1, 1));
        double prev = 0.0, last_step = 0.0;
        for (int i = 0; i < 2000; ++i) {
            s.at("p").grad(0, 0) = 0.7;
            adam_step(s, 1e-2);
            last_step = prev - s.at("p").value(0, 0);
            prev = s.at("p").value(0, 0);
        }
        CHECK(last_step == doctest::Approx(1e-2).epsilon(1e-6));
    }
}
