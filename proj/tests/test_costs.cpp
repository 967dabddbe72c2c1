#include <doctest.h>

#include <cmath>
#include <random>

#include "pdg/costs.hpp"

using namespace pdg;

namespace {

SpacecraftState<double> at(double r1, double r2, double r3, double v3 = 0.0, double m = 1700.0) {
    SpacecraftState<double> x;
    x << r1, r2, r3, 0.0, 0.0, v3, m;
    return x;
}

SpacecraftState<double> random_state(std::mt19937_64 &rng) {
    std::uniform_real_distribution<double> pos(-80, 80), vel(-10, 10), mass(1700, 1905);
    SpacecraftState<double> x;
    x << pos(rng), pos(rng), pos(rng), vel(rng), vel(rng), vel(rng), mass(rng);
    return x;
}

} // namespace

TEST_CASE("terminal cost reference values") {
    const CostWeights w;
    const PhysicalParams p;
    CHECK(terminal_cost(at(0, 0, 0), w, p) == doctest::Approx(10.0).epsilon(1e-15));
    CHECK(terminal_cost(at(0, 0, 0, 0, 1905), w, p) == doctest::Approx(10.0 * std::exp(-1.0)).epsilon(1e-15));
    CHECK(terminal_cost(at(0, 0, 0, 0, 1905), w, p) == doctest::Approx(3.6788).epsilon(1e-4));
    const double floor = 10.0 * std::exp(-1.0);
    CHECK(terminal_cost(at(0, 0, 0, 1.0, 1905), w, p) - floor == doctest::Approx(100.0));
    CHECK(terminal_cost(at(0, 0, 0, -1.0, 1905), w, p) - floor == doctest::Approx(10.0));
}

TEST_CASE("v3 == 0 takes the non-positive branch") {
    const CostWeights w;
    CHECK(vz_coefficient(0.0, w) == w.c_vz_neg);
    CHECK(vz_coefficient(1e-300, w) == w.c_vz_pos);
}

TEST_CASE("terminal cost gradient") {
    const CostWeights w;
    const PhysicalParams p;
    const Vec7<double> g0 = terminal_cost_gradient(at(0, 0, 0), w, p);
    CHECK(g0.head<6>().isZero(0.0));
    CHECK(g0(idx::m) == doctest::Approx(-10.0 / 205.0));
    CHECK(terminal_cost_gradient(at(3, 0, 0), w, p)(idx::r1) == doctest::Approx(15.0));

    std::mt19937_64 rng(11);
    for (int c = 0; c < 100; ++c) {
        SpacecraftState<double> x = random_state(rng);
        const Vec7<double> g = terminal_cost_gradient(x, w, p);
        Vec7<double> fd;
        for (int i = 0; i < 7; ++i) {
            const double h = 1e-5 * std::max(1.0, std::abs(x(i)));
            SpacecraftState<double> xp = x, xm = x;
            xp(i) += h;
            xm(i) -= h;
            fd(i) = (terminal_cost(xp, w, p) - terminal_cost(xm, w, p)) / (2 * h);
        }
        CHECK((g - fd).norm() / g.norm() < 1e-6);
    }
}

TEST_CASE("glide slope cost") {
    const CostWeights w;
    const double gs = M_PI / 4.0;
    CHECK(std::abs(glide_slope_cost(at(10, 0, 10), w, gs)) < 1e-12);
    CHECK(glide_slope_cost(at(0, 0, 10), w, gs) == doctest::Approx(0.5));
    CHECK(glide_slope_cost(at(10, 0, 0), w, gs) == doctest::Approx(100.0));

    // continuous across the cone surface
    const double eps = 1e-7;
    const double in = glide_slope_cost(at(10, 0, 10 + eps), w, gs);
    const double out = glide_slope_cost(at(10, 0, 10 - eps), w, gs);
    CHECK(std::abs(in - out) < 1e-12);
}

TEST_CASE("running cost") {
    const CostWeights w;
    const double gs = M_PI / 4.0;
    const ThrustCommand<double> t(0, 0, 4970);
    CHECK(running_cost(at(10, 0, 10), t, w, gs) == doctest::Approx(2.7335).epsilon(1e-9));

    CostWeights zero;
    zero.q_plus = zero.q_minus = zero.q_ctrl = 0.0;
    CHECK(running_cost(at(5, 3, 1), t, zero, gs) == 0.0);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> lat(-2485, 2485), norm(4970, 13340);
    for (int c = 0; c < 200; ++c) {
        const double a = lat(rng), b = lat(rng), n = norm(rng);
        const ThrustCommand<double> th(a, b, std::sqrt(n * n - a * a - b * b));
        CHECK(running_cost(random_state(rng), th, w, gs) >= w.q_ctrl * 4970.0 - 1e-12);
    }
}

TEST_CASE("hamiltonian structure") {
    const CostWeights w;
    const PhysicalParams p;
    std::mt19937_64 rng(9);
    std::normal_distribution<double> n(0, 10);
    for (int c = 0; c < 50; ++c) {
        const auto x = random_state(rng);
        const ThrustCommand<double> t(n(rng) * 50, n(rng) * 50, 6000 + n(rng) * 100);
        Vec7<double> vx;
        for (int i = 0; i < 7; ++i)
            vx(i) = n(rng);
        CHECK(hamiltonian(x, t, Vec7<double>::Zero().eval(), p, w) == doctest::Approx(w.q_ctrl * t.norm()));
        const double base = hamiltonian(x, t, vx, p, w) - w.q_ctrl * t.norm();
        const Vec7<double> vx2 = 2.0 * vx;
        CHECK(hamiltonian(x, t, vx2, p, w) - w.q_ctrl * t.norm() == doctest::Approx(2.0 * base));

        // dH/dT ignores Vx[0..2]: changing them shifts H by a thrust-independent amount
        Vec7<double> vx3 = vx;
        vx3.head<3>() += Eigen::Vector3d(n(rng), n(rng), n(rng));
        const ThrustCommand<double> t2 = t * 1.3;
        const double d1 = hamiltonian(x, t, vx3, p, w) - hamiltonian(x, t, vx, p, w);
        const double d2 = hamiltonian(x, t2, vx3, p, w) - hamiltonian(x, t2, vx, p, w);
        CHECK(d1 == doctest::Approx(d2).epsilon(1e-9));
    }
}

TEST_CASE("zero velocity gradient puts the argmin at the lower norm bound") {
    const CostWeights w;
    const PhysicalParams p;
    std::mt19937_64 rng(2);
    const auto x = random_state(rng);
    Vec7<double> vx = Vec7<double>::Zero();
    vx.head<3>() << 1.0, -2.0, 0.5;
    double best = 1e300, best_norm = 0.0;
    for (int i = 0; i <= 20; ++i)
        for (int j = 0; j <= 20; ++j)
            for (int k = 0; k <= 40; ++k) {
                const double a = -2485 + 4970.0 * i / 20, b = -2485 + 4970.0 * j / 20;
                const double nrm = 4970 + (13340 - 4970.0) * k / 40;
                const ThrustCommand<double> t(a, b, std::sqrt(nrm * nrm - a * a - b * b));
                const double h = hamiltonian(x, t, vx, p, w);
                if (h < best) {
                    best = h;
                    best_norm = nrm;
                }
            }
    CHECK(best_norm == doctest::Approx(4970.0));
}

TEST_CASE("weight validation") {
    CostWeights w;
    CHECK_NOTHROW(w.validate());
    w.Qx = -1;
    CHECK_THROWS_AS(w.validate(), ConfigError);
    w = CostWeights{};
    w.c_vz_pos = 0.5;
    CHECK_THROWS_AS(w.validate(), ConfigError);
}
