#include <doctest.h>

#include <cmath>

#include "pdg/novas.hpp"

using namespace pdg;

namespace {

const PhysicalParams kP;
const CostWeights kW;

SpacecraftState<double> some_state() {
    SpacecraftState<double> x;
    x << 12.0, -7.0, 55.0, 0.5, -1.0, -6.0, 1850.0;
    return x;
}

} // namespace

TEST_CASE("scalar projection") {
    CHECK(project(5.0, 0.0, 10.0) == 5.0);
    CHECK(project(-3.0, 0.0, 10.0) == 0.0);
    CHECK(project(99.0, 0.0, 10.0) == 10.0);
    CHECK_THROWS_AS((void)project(1.0, 2.0, 1.0), ConfigError);
}

TEST_CASE("constraint box at the reference angle") {
    const ConstraintSet cs(kP);
    CHECK(cs.rho3() == doctest::Approx(4970.0).epsilon(1e-12));
    CHECK(cs.norm_lo() == doctest::Approx(4970.0));
    CHECK(cs.norm_hi() == 13340.0);
    CHECK(cs.lateral_bound() == 2485.0);
    CHECK_THROWS_AS(ConstraintSet(4970.0, 13340.0, 0.2), ConfigError);
    // theta = pi/6 pushes rho3 above rho1
    const ConstraintSet narrow(4970.0, 13340.0, M_PI / 6.0);
    CHECK(narrow.norm_lo() == doctest::Approx(4970.0 * std::sqrt(2.0)));
}

TEST_CASE("degenerate distribution samples its projected mean") {
    const ConstraintSet cs(kP);
    Rng rng(1);
    NovasDistribution d;
    d.mu = {9000.0, -50.0, 20000.0};
    d.sigma.setZero();
    const ConstrainedSamples s = sample_constrained(d, cs, 16, rng);
    const Eigen::Vector3d expected = cs.project(d.mu);
    for (Eigen::Index m = 0; m < 16; ++m) {
        CHECK(s.projected.row(m).transpose() == expected);
        CHECK(s.deltas.row(m).transpose() == expected - d.mu);
    }
}

TEST_CASE("lift") {
    CHECK(lift_to_thrust(Eigen::Vector3d(0, 0, 4970)) == ThrustCommand<double>(0, 0, 4970));
    const ThrustCommand<double> t = lift_to_thrust(Eigen::Vector3d(2485, 2485, 4970));
    CHECK(t(2) == doctest::Approx(4970.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(t.norm() == doctest::Approx(4970.0).epsilon(1e-12));
    CHECK_THROWS_AS((void)lift_to_thrust(Eigen::Vector3d(4000, 4000, 4970)), DomainError);
}

TEST_CASE("projected samples satisfy the thrust constraints after lifting") {
    const ConstraintSet cs(kP);
    Rng rng(7);
    std::uniform_real_distribution<double> mu(-3e4, 3e4), sd(0.0, 2e4);
    const double c = std::cos(kP.theta);
    for (int trial = 0; trial < 200; ++trial) {
        NovasDistribution d;
        d.mu = {mu(rng), mu(rng), mu(rng)};
        d.sigma = {sd(rng), sd(rng), sd(rng)};
        const SampleMatrix t = lift_rows(sample_constrained(d, cs, 500, rng).projected);
        for (Eigen::Index m = 0; m < t.rows(); ++m) {
            const double n = t.row(m).norm();
            REQUIRE(n >= kP.rho1 - 1e-9);
            REQUIRE(n <= kP.rho2 + 1e-9);
            REQUIRE(t(m, 2) >= n * c - 1e-9);
        }
    }
}

TEST_CASE("shape weights") {
    const Eigen::VectorXd flat = Eigen::VectorXd::Constant(8, 3.0);
    CHECK((shape_weights(flat, ShapeFunction::exponential).array() - 1.0 / 8).abs().maxCoeff() < 1e-15);

    Eigen::VectorXd f(4);
    f << 0.0, 1.0, 2.0, 3.0;
    const Eigen::VectorXd w = shape_weights(f, ShapeFunction::exponential);
    CHECK(w.sum() == doctest::Approx(1.0));
    CHECK((w.array() >= 0).all());
    CHECK(w(3) / w(2) == doctest::Approx(std::exp(1.0)));

    // the max-shift path gives the same normalized weights
    Eigen::VectorXd wide(3);
    wide << 0.0, 800.0, 799.0;
    const Eigen::VectorXd ww = shape_weights(wide, ShapeFunction::exponential);
    CHECK(ww.allFinite());
    CHECK(ww(1) / ww(2) == doctest::Approx(std::exp(1.0)));
    CHECK(ww(0) < 1e-300);

    Eigen::VectorXd bad(2);
    bad << 1.0, std::nan("");
    CHECK_THROWS_WITH_AS((void)shape_weights(bad, ShapeFunction::exponential), doctest::Contains("sample 1"),
                         DomainError);
}

TEST_CASE("uniform objective moves the mean to the sample mean") {
    const ConstraintSet cs(kP);
    NovasConfig cfg;
    cfg.samples = 50;
    Rng rng(3), replay(3);
    const NovasDistribution d = cfg.initial_distribution();
    NovasStepTrace trace;
    const NovasDistribution next =
        novas_step([](const SampleMatrix &t) { return Eigen::VectorXd::Zero(t.rows()).eval(); }, d, cs, cfg, rng,
                   &trace);
    const ConstrainedSamples s = sample_constrained(d, cs, cfg.samples, replay);
    CHECK((next.mu - s.projected.colwise().mean().transpose()).norm() < 1e-9);
    CHECK((trace.weights.array() - 1.0 / cfg.samples).abs().maxCoeff() < 1e-15);
}

TEST_CASE("update stays in the sample hull and sigma keeps its floor") {
    const ConstraintSet cs(kP);
    NovasConfig cfg;
    Rng rng(5);
    const Vec7<double> vx = (Vec7<double>() << 1, 2, 3, -40, 10, 60, 20).finished();
    const auto x = some_state();
    const NovasObjective obj = [&](const SampleMatrix &t) { return hamiltonian_rows(x, vx, t, kP, kW); };
    NovasDistribution d = cfg.initial_distribution();
    for (int it = 0; it < 15; ++it) {
        NovasStepTrace trace;
        d = novas_step(obj, d, cs, cfg, rng, &trace);
        const auto &pr = trace.samples.projected;
        for (int j = 0; j < 3; ++j) {
            CHECK(d.mu(j) >= pr.col(j).minCoeff() - 1e-9);
            CHECK(d.mu(j) <= pr.col(j).maxCoeff() + 1e-9);
        }
        CHECK((d.sigma.array() >= std::sqrt(cfg.eps_var) - 1e-12).all());
    }
}

TEST_CASE("hamiltonian_rows matches the scalar Hamiltonian") {
    const ConstraintSet cs(kP);
    Rng rng(8);
    const Vec7<double> vx = (Vec7<double>() << 1, -2, 3, -4, 5, -6, 7).finished();
    const SampleMatrix t = lift_rows(sample_constrained(NovasConfig{}.initial_distribution(), cs, 30, rng).projected);
    const Eigen::VectorXd h = hamiltonian_rows(some_state(), vx, t, kP, kW);
    for (Eigen::Index m = 0; m < t.rows(); ++m) {
        const ThrustCommand<double> tm = t.row(m).transpose();
        CHECK(h(m) == doctest::Approx(hamiltonian(some_state(), tm, vx, kP, kW)).epsilon(1e-12));
    }
}

TEST_CASE("quadratic recovery of an interior norm") {
    const ConstraintSet cs(kP);
    NovasConfig cfg;
    const NovasObjective obj = [](const SampleMatrix &t) -> Eigen::VectorXd {
        return (t.rowwise().norm().array() - 9000.0).square().matrix();
    };
    double total = 0.0;
    double first = 0.0;
    for (int seed = 0; seed < 20; ++seed) {
        Rng rng(static_cast<std::uint64_t>(seed));
        NovasDistribution d = cfg.initial_distribution();
        for (int it = 0; it < 20; ++it) {
            d = novas_step(obj, d, cs, cfg, rng);
            if (it == 0)
                first += std::abs(d.mu(2) - 9000.0);
        }
        total += std::abs(d.mu(2) - 9000.0);
    }
    CHECK(total < first);
    CHECK(total / 20 < 0.01 * (kP.rho2 - kP.rho1));
}

TEST_CASE("layer with zero value gradient picks the minimum norm") {
    const ConstraintSet cs(kP);
    CostWeights w;
    w.q_ctrl = 0.05;
    NovasConfig cfg;
    cfg.iterations = 20;
    Rng rng(4);
    const NovasLayerResult r = novas_layer(some_state(), Vec7<double>::Zero(), kP, w, cs, cfg, std::nullopt, rng);
    CHECK(r.thrust.norm() == doctest::Approx(cs.norm_lo()).epsilon(0.01));
}

TEST_CASE("layer output is feasible and deterministic") {
    const ConstraintSet cs(kP);
    NovasConfig cfg;
    const Vec7<double> vx = (Vec7<double>() << 3, 1, 4, -15, 9, 26, -5).finished();
    Rng a(42), b(42);
    const NovasLayerResult ra = novas_layer(some_state(), vx, kP, kW, cs, cfg, std::nullopt, a);
    const NovasLayerResult rb = novas_layer(some_state(), vx, kP, kW, cs, cfg, std::nullopt, b);
    CHECK(ra.thrust == rb.thrust);
    const double n = ra.thrust.norm();
    CHECK(n >= kP.rho1 - 1e-9);
    CHECK(n <= kP.rho2 + 1e-9);
    CHECK(ra.thrust(2) >= n * std::cos(kP.theta) - 1e-9);
    CHECK(n == doctest::Approx(ra.mu(2)).epsilon(1e-12));
}

TEST_CASE("one iteration equals one step plus lift") {
    const ConstraintSet cs(kP);
    NovasConfig cfg;
    cfg.iterations = 1;
    const Vec7<double> vx = (Vec7<double>() << 0, 0, 0, -10, 4, 30, 2).finished();
    const Eigen::Vector3d warm(100.0, -200.0, 6000.0);
    Rng a(9), b(9);
    const NovasLayerResult r = novas_layer(some_state(), vx, kP, kW, cs, cfg, warm, a);
    const NovasDistribution d = novas_step(
        [&](const SampleMatrix &t) { return hamiltonian_rows(some_state(), vx, t, kP, kW); },
        layer_start(cfg, warm), cs, cfg, b);
    CHECK(r.mu == d.mu);
    CHECK(r.thrust == lift_to_thrust(d.mu));
    CHECK(layer_start(cfg, warm).sigma == cfg.init_std);
}
