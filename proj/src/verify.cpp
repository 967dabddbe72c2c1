#include "pdg/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "pdg/fbsde.hpp"
#include "pdg/harness.hpp"

namespace pdg::verify {

using ad::Tensor;
using ad::Var;

namespace {

class Timer {
  public:
    [[nodiscard]] double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

CheckResult finish(std::string name, bool passed, double measured, double limit, const std::string &detail,
                   const Timer &timer) {
    return {std::move(name), passed, measured, limit, detail, timer.seconds()};
}

Tensor gaussian(Eigen::Index rows, Eigen::Index cols, Rng &rng, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    Tensor t(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i)
            t(i, j) = n(rng);
    return t;
}

Tensor uniform(Eigen::Index rows, Eigen::Index cols, double lo, double hi, Rng &rng) {
    std::uniform_real_distribution<double> u(lo, hi);
    Tensor t(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i)
            t(i, j) = u(rng);
    return t;
}

double rel_err(const Eigen::VectorXd &a, const Eigen::VectorXd &b) {
    const double scale = std::max({a.norm(), b.norm(), 1e-300});
    return (a - b).norm() / scale;
}

using GraphFn = std::function<Var(ad::Tape &, const std::vector<Var> &)>;

/// Tape gradient vs central differences of sum(f(inputs) * W) for random W.
double gradcheck(const GraphFn &f, const std::vector<Tensor> &inputs, Rng &rng) {
    Tensor weights;
    {
        ad::Tape probe;
        std::vector<Var> leaves;
        for (const Tensor &in : inputs)
            leaves.push_back(probe.constant(in));
        const Var out = f(probe, leaves);
        weights = gaussian(out.rows(), out.cols(), rng);
    }
    auto eval = [&](const std::vector<Tensor> &xs) {
        ad::Tape t;
        std::vector<Var> leaves;
        for (const Tensor &in : xs)
            leaves.push_back(t.constant(in));
        return (f(t, leaves).value().array() * weights.array()).sum();
    };

    ad::Tape tape;
    std::vector<Var> leaves;
    for (const Tensor &in : inputs)
        leaves.push_back(tape.leaf(in));
    const Var loss = ad::sum(f(tape, leaves) * tape.constant(weights));
    tape.backward(loss);

    std::vector<double> analytic, numeric;
    std::vector<Tensor> xs = inputs;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const Tensor g = tape.grad(leaves[i]);
        for (Eigen::Index j = 0; j < inputs[i].size(); ++j) {
            const double x0 = inputs[i].data()[j];
            const double h = 1e-6 * std::max(1.0, std::abs(x0));
            xs[i].data()[j] = x0 + h;
            const double fp = eval(xs);
            xs[i].data()[j] = x0 - h;
            const double fm = eval(xs);
            xs[i].data()[j] = x0;
            analytic.push_back(g.data()[j]);
            numeric.push_back((fp - fm) / (2.0 * h));
        }
    }
    return rel_err(Eigen::Map<Eigen::VectorXd>(analytic.data(), static_cast<Eigen::Index>(analytic.size())),
                   Eigen::Map<Eigen::VectorXd>(numeric.data(), static_cast<Eigen::Index>(numeric.size())));
}

/// Random airborne states: position in +-80, velocity in +-10, mass in [m_dry, m_init].
Tensor random_states(int batch, const PhysicalParams &p, Rng &rng) {
    Tensor x(batch, kStateDim);
    x.leftCols(3) = uniform(batch, 3, -80.0, 80.0, rng);
    x.col(idx::r3) = uniform(batch, 1, 5.0, 80.0, rng);
    x.middleCols(idx::v1, 3) = uniform(batch, 3, -10.0, 10.0, rng);
    x.col(idx::m) = uniform(batch, 1, p.m_dry, p.m_init, rng);
    return x;
}

} // namespace

CheckResult check_constraints(std::uint64_t seed, int samples) {
    const Timer timer;
    const PhysicalParams p;
    const ConstraintSet cs(p);
    Rng rng = make_stream(seed, Stream::novas_sampling, 0xC1);
    std::uniform_real_distribution<double> mu_lat(-2e4, 2e4), mu_norm(-2e4, 3e4), spread(1.0, 1e4);
    const int per_dist = 1000;
    const double cos_theta = std::cos(p.theta);
    long long violations = 0;
    double worst = 0.0;
    for (int done = 0; done < samples; done += per_dist) {
        NovasDistribution d;
        d.mu = {mu_lat(rng), mu_lat(rng), mu_norm(rng)};
        d.sigma = {spread(rng), spread(rng), spread(rng)};
        const ConstrainedSamples s = sample_constrained(d, cs, std::min(per_dist, samples - done), rng);
        const SampleMatrix thrust = lift_rows(s.projected);
        for (Eigen::Index i = 0; i < thrust.rows(); ++i) {
            const double n = thrust.row(i).norm();
            const double v = std::max({p.rho1 - n, n - p.rho2, n * cos_theta - thrust(i, 2), 0.0});
            worst = std::max(worst, v);
            violations += v > 1e-9;
        }
    }
    std::ostringstream os;
    os << samples << " controls, " << violations << " violations, worst excess " << worst << " N";
    return finish("constraints", violations == 0, worst, 1e-9, os.str(), timer);
}

CheckResult check_novas_recovery(std::uint64_t seed, int seeds) {
    const Timer timer;
    const PhysicalParams p;
    const ConstraintSet cs(p);
    NovasConfig cfg;
    cfg.samples = 200;
    cfg.step_size = 1.0;
    const int iterations = 20;
    const double target = 9000.0;
    const NovasObjective objective = [target](const SampleMatrix &thrust) -> Eigen::VectorXd {
        return (thrust.rowwise().norm().array() - target).square().matrix();
    };
    double total = 0.0;
    double worst = 0.0;
    for (int s = 0; s < seeds; ++s) {
        Rng rng = make_stream(seed, Stream::novas_sampling, 0xC2, static_cast<std::uint64_t>(s));
        NovasDistribution d = cfg.initial_distribution();
        for (int it = 0; it < iterations; ++it)
            d = novas_step(objective, d, cs, cfg, rng);
        const double err = std::abs(d.mu(2) - target);
        total += err;
        worst = std::max(worst, err);
    }
    const double mean = total / seeds;
    const double limit = 0.01 * (cs.norm_hi() - cs.norm_lo());
    std::ostringstream os;
    os << "mean |mu3 - 9000| = " << mean << " N over " << seeds << " seeds (worst " << worst << ")";
    return finish("novas_recovery", mean < limit, mean, limit, os.str(), timer);
}

CheckResult check_hamiltonian_oracle(std::uint64_t seed, int cases) {
    const Timer timer;
    const PhysicalParams p;
    const CostWeights w;
    const ConstraintSet cs(p);
    NovasConfig cfg;
    cfg.samples = 200;
    cfg.iterations = 20;

    const int n = 41;
    SampleMatrix grid(n * n * n, 3);
    const Eigen::Vector3d lo = cs.lower(), hi = cs.upper();
    for (int i = 0, r = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k, ++r)
                grid.row(r) << lo(0) + (hi(0) - lo(0)) * i / (n - 1), lo(1) + (hi(1) - lo(1)) * j / (n - 1),
                    lo(2) + (hi(2) - lo(2)) * k / (n - 1);
    const SampleMatrix grid_thrust = lift_rows(grid);

    Rng case_rng = make_stream(seed, Stream::novas_sampling, 0xC3);
    int failures = 0;
    double worst = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < cases; ++c) {
        const Vec7<double> x = random_states(1, p, case_rng).row(0).transpose();
        const Vec7<double> vx = uniform(7, 1, -100.0, 100.0, case_rng);
        const Eigen::VectorXd h = hamiltonian_rows(x, vx, grid_thrust, p, w);
        const double h_min = h.minCoeff();
        const double margin = 0.005 * (h.maxCoeff() - h_min);
        Rng rng = make_stream(seed, Stream::novas_sampling, 0xC4, static_cast<std::uint64_t>(c));
        const NovasLayerResult r = novas_layer(x, vx, p, w, cs, cfg, std::nullopt, rng);
        const double excess = (hamiltonian(x, r.thrust, vx, p, w) - h_min) / std::max(margin, 1e-300);
        worst = std::max(worst, excess);
        failures += excess > 1.0;
    }
    std::ostringstream os;
    os << failures << " of " << cases << " cases above grid minimum + 0.5% of range; worst excess "
       << worst << " x margin";
    return finish("hamiltonian_oracle", failures == 0, failures, 0, os.str(), timer);
}

CheckResult check_gradients_per_op(std::uint64_t seed) {
    const Timer timer;
    Rng rng = make_stream(seed, Stream::init, 0xC5);
    const PhysicalParams p;
    const CostWeights w;
    NovasConfig ncfg;
    ncfg.samples = 20;
    const ConstraintSet cs(p);

    auto away_from_zero = [&](Eigen::Index r, Eigen::Index c) {
        Tensor t = uniform(r, c, 0.2, 2.0, rng);
        Tensor sign = uniform(r, c, -1.0, 1.0, rng);
        return Tensor(t.array() * sign.array().sign());
    };

    struct Case {
        std::string name;
        GraphFn f;
        std::vector<Tensor> in;
    };
    const Tensor a = gaussian(3, 4, rng);
    Tensor mu_rows(3, 3);
    mu_rows << 100.0, -200.0, 6000.0, -1500.0, 300.0, 9000.0, 2000.0, 2400.0, 5000.0;
    std::vector<Case> cases = {
        {"add", [](ad::Tape &, const std::vector<Var> &v) { return v[0] + v[1]; }, {a, gaussian(3, 4, rng)}},
        {"add_row", [](ad::Tape &, const std::vector<Var> &v) { return v[0] + v[1]; }, {a, gaussian(1, 4, rng)}},
        {"add_col", [](ad::Tape &, const std::vector<Var> &v) { return v[0] + v[1]; }, {a, gaussian(3, 1, rng)}},
        {"sub_scalar", [](ad::Tape &, const std::vector<Var> &v) { return v[0] - v[1]; }, {a, gaussian(1, 1, rng)}},
        {"mul", [](ad::Tape &, const std::vector<Var> &v) { return v[0] * v[1]; }, {a, gaussian(3, 4, rng)}},
        {"mul_col", [](ad::Tape &, const std::vector<Var> &v) { return v[0] * v[1]; }, {a, gaussian(3, 1, rng)}},
        {"div", [](ad::Tape &, const std::vector<Var> &v) { return v[0] / v[1]; }, {a, away_from_zero(3, 4)}},
        {"div_col", [](ad::Tape &, const std::vector<Var> &v) { return v[0] / v[1]; }, {a, away_from_zero(3, 1)}},
        {"scalar_ops", [](ad::Tape &, const std::vector<Var> &v) { return -(v[0] * 2.5 + 1.0); }, {a}},
        {"matmul", [](ad::Tape &, const std::vector<Var> &v) { return ad::matmul(v[0], v[1]); },
         {a, gaussian(4, 2, rng)}},
        {"tanh", [](ad::Tape &, const std::vector<Var> &v) { return ad::tanh(v[0]); }, {a}},
        {"sigmoid", [](ad::Tape &, const std::vector<Var> &v) { return ad::sigmoid(v[0]); }, {a}},
        {"relu", [](ad::Tape &, const std::vector<Var> &v) { return ad::relu(v[0]); }, {away_from_zero(3, 4)}},
        {"exp", [](ad::Tape &, const std::vector<Var> &v) { return ad::exp(v[0]); }, {a}},
        {"sqrt", [](ad::Tape &, const std::vector<Var> &v) { return ad::sqrt(v[0]); }, {uniform(3, 4, 0.5, 3.0, rng)}},
        {"square", [](ad::Tape &, const std::vector<Var> &v) { return ad::square(v[0]); }, {a}},
        {"norm2", [](ad::Tape &, const std::vector<Var> &v) { return ad::norm2(v[0]); }, {a}},
        {"clamp", [](ad::Tape &, const std::vector<Var> &v) { return ad::clamp(v[0], -0.7, 0.9); },
         {uniform(3, 4, -0.6, 0.8, rng)}},
        {"concat_slice",
         [](ad::Tape &, const std::vector<Var> &v) { return ad::concat({ad::slice(v[0], 1, 2), v[1]}); },
         {a, gaussian(3, 2, rng)}},
        {"reductions",
         [](ad::Tape &, const std::vector<Var> &v) {
             return ad::concat({ad::row_sum(v[0]), ad::row_sum(v[0]) * ad::sum(v[0]) + ad::mean(v[0])});
         },
         {a}},
        {"lift_to_thrust", [](ad::Tape &, const std::vector<Var> &v) { return lift_to_thrust(v[0]); },
         {mu_rows}},
        {"terminal_cost", [&](ad::Tape &, const std::vector<Var> &v) { return terminal_cost(v[0], w, p); },
         {random_states(4, p, rng)}},
        {"terminal_cost_gradient",
         [&](ad::Tape &, const std::vector<Var> &v) { return terminal_cost_gradient(v[0], w, p); },
         {random_states(4, p, rng)}},
        {"running_cost",
         [&](ad::Tape &, const std::vector<Var> &v) { return running_cost(v[0], v[1], w, p.gamma_gs); },
         {random_states(4, p, rng), uniform(4, 3, 1000.0, 5000.0, rng)}},
    };

    // Final NOVAS step with fixed samples: gradients w.r.t. state and Vx.
    {
        const int batch = 3;
        std::vector<NovasStepTrace> traces(batch);
        for (int b = 0; b < batch; ++b) {
            NovasDistribution d = ncfg.initial_distribution();
            traces[static_cast<std::size_t>(b)].mu_prev = d.mu;
            traces[static_cast<std::size_t>(b)].samples = sample_constrained(d, cs, ncfg.samples, rng);
        }
        const std::vector<bool> active{true, false, true};
        cases.push_back({"novas_final_step",
                         [=](ad::Tape &, const std::vector<Var> &v) {
                             return novas_final_step(v[0], v[1], traces, active, p, w, ncfg);
                         },
                         {random_states(batch, p, rng), gaussian(batch, 7, rng, 2.0)}});
    }

    double worst = 0.0;
    std::string worst_name;
    std::ostringstream os;
    for (const Case &c : cases) {
        const double e = gradcheck(c.f, c.in, rng);
        if (e > worst || worst_name.empty()) {
            worst = e;
            worst_name = c.name;
        }
    }
    os << cases.size() << " ops, max rel err " << worst << " (" << worst_name << ")";
    return finish("gradcheck_ops", worst < 1e-6, worst, 1e-6, os.str(), timer);
}

CheckResult check_gradients_rollout(std::uint64_t seed) {
    const Timer timer;
    RolloutSettings s;
    s.steps = 5;
    s.novas.samples = 20;
    s.novas.iterations = 2;
    s.seed = seed;
    s.scaling = InputScaling::from(s.physics);
    Rng pos_rng = make_stream(seed, Stream::initial_positions, 0xC6);
    const Eigen::MatrixXd x0 = initial_states(s.physics, 2, pos_rng);
    ad::ParameterStore store = init_params(s.net, seed);

    RolloutSettings record_settings = s;
    record_settings.keep_novas_traces = true;
    ad::Tape tape;
    TapedRollout taped = forward_pass(tape, store, x0, record_settings);
    store.zero_grad();
    tape.backward(taped.loss, &store);

    RolloutSettings replay = s;
    replay.noise = &taped.record.noise;
    replay.novas_replay = &taped.record.novas_traces;
    const double replay_diff = std::abs(forward_pass(store, x0, replay).loss - taped.record.loss);

    std::vector<double> analytic, numeric;
    for (auto &[name, e] : store.entries()) {
        for (Eigen::Index j = 0; j < e.value.size(); ++j) {
            const double v0 = e.value.data()[j];
            const double h = 1e-5 * std::max(1.0, std::abs(v0));
            e.value.data()[j] = v0 + h;
            const double fp = forward_pass(store, x0, replay).loss;
            e.value.data()[j] = v0 - h;
            const double fm = forward_pass(store, x0, replay).loss;
            e.value.data()[j] = v0;
            analytic.push_back(e.grad.data()[j]);
            numeric.push_back((fp - fm) / (2.0 * h));
        }
    }
    const double err =
        rel_err(Eigen::Map<Eigen::VectorXd>(analytic.data(), static_cast<Eigen::Index>(analytic.size())),
                Eigen::Map<Eigen::VectorXd>(numeric.data(), static_cast<Eigen::Index>(numeric.size())));
    std::ostringstream os;
    os << analytic.size() << " parameters, rel err " << err << ", replay loss diff " << replay_diff;
    return finish("gradcheck_rollout", err < 1e-4, err, 1e-4, os.str(), timer);
}

CheckResult check_sde_variance(std::uint64_t seed, int paths) {
    const Timer timer;
    PhysicalParams p;
    p.alpha = 0.0;
    p.t_f = 1.0;
    const int steps = p.num_steps();
    const double m0 = p.m_init;
    const ThrustCommand<double> hover(0.0, 0.0, m0 * p.g(2));
    Rng rng = make_stream(seed, Stream::rollout_noise, 0xC7);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double sdt = std::sqrt(p.dt);
    Eigen::MatrixXd dv(paths, 3);
    for (int b = 0; b < paths; ++b) {
        SpacecraftState<double> x;
        x << 0.0, 0.0, p.r3_init, p.v_init, m0;
        for (int k = 0; k < steps; ++k) {
            const Vec3<double> dw(sdt * normal(rng), sdt * normal(rng), sdt * normal(rng));
            x = em_step(x, hover, dw, p);
        }
        dv.row(b) = (x.segment<3>(idx::v1) - p.v_init).transpose();
    }
    const Eigen::RowVector3d mean = dv.colwise().mean();
    const Eigen::RowVector3d var = (dv.rowwise() - mean).array().square().colwise().sum() / (paths - 1.0);
    double worst = 0.0;
    std::ostringstream os;
    os << "relative variance error per channel:";
    for (int j = 0; j < 3; ++j) {
        const double expected = std::pow(p.gamma_diag(j) / m0, 2) * p.t_f;
        const double e = std::abs(var(j) / expected - 1.0);
        worst = std::max(worst, e);
        os << ' ' << e;
    }
    return finish("sde_variance", worst < 0.05, worst, 0.05, os.str(), timer);
}

CheckResult check_bsde_identity() {
    const Timer timer;
    RolloutSettings s;
    s.physics.gamma_diag.setZero();
    s.physics.t_f = 12.0;
    s.scaling = InputScaling::from(s.physics);
    const int batch = 4;
    s.control_override = [](int b, int k) {
        return Eigen::Vector3d(150.0 * (b - 1.5), -80.0 * b, 3500.0 + 400.0 * b + 5.0 * k);
    };
    Eigen::MatrixXd x0(batch, kStateDim);
    for (int b = 0; b < batch; ++b)
        x0.row(b) << 20.0 * b, -30.0 + 25.0 * b, s.physics.r3_init, s.physics.v_init.transpose(), s.physics.m_init;
    const ad::ParameterStore store = init_params(s.net, 7);
    const RolloutRecord rec = forward_pass(store, x0, s);
    const int n = rec.steps();

    double worst = 0.0;
    int landed = 0;
    for (int b = 0; b < batch; ++b) {
        SpacecraftState<double> x = x0.row(b).transpose();
        double cost = 0.0;
        for (int k = 0; k < n; ++k) {
            if (x(idx::r3) <= s.physics.h_tol)
                break;
            const ThrustCommand<double> u = s.control_override(b, k);
            cost += running_cost(x, u, s.weights, s.physics.gamma_gs) * s.physics.dt;
            const Vec3<double> no_noise = Vec3<double>::Zero();
            x = em_step(x, u, no_noise, s.physics);
        }
        landed += x(idx::r3) <= s.physics.h_tol;
        worst = std::max(worst, std::abs(rec.values(b, 0) - (rec.values(b, n) + cost)));
        worst = std::max(worst, (rec.states.back().row(b).transpose() - x).cwiseAbs().maxCoeff());
    }
    std::ostringstream os;
    os << "max |V0 - (VN + sum l dt)| and state mismatch " << worst << " (" << landed << " of " << batch
       << " landed)";
    return finish("bsde_identity", worst <= 1e-10, worst, 1e-10, os.str(), timer);
}

CheckResult check_first_exit(std::uint64_t seed) {
    const Timer timer;
    const double h_tol = 1e-3;
    long long bad = 0, checked = 0;

    // Every altitude sequence of length 9 over {above, at, below} the tolerance.
    const double levels[3] = {h_tol + 0.5, h_tol, h_tol - 0.5};
    const int len = 9;
    std::vector<double> alt(len);
    int total = 1;
    for (int i = 0; i < len; ++i)
        total *= 3;
    for (int code = 0; code < total; ++code) {
        int c = code;
        for (int i = 0; i < len; ++i, c /= 3)
            alt[static_cast<std::size_t>(i)] = levels[c % 3];
        int expected = len - 1;
        for (int i = 0; i < len; ++i)
            if (!(alt[static_cast<std::size_t>(i)] > h_tol)) {
                expected = i;
                break;
            }
        bad += first_exit_index(alt, h_tol, len - 1) != expected;
        ++checked;
    }

    // Rollouts under a spread of fixed thrust levels: some land, some do not.
    RolloutSettings s;
    s.physics.t_f = 15.0;
    s.seed = seed;
    s.scaling = InputScaling::from(s.physics);
    const int batch = 24;
    s.control_override = [](int b, int) { return Eigen::Vector3d(0.0, 0.0, 5000.0 + 350.0 * b); };
    Rng pos_rng = make_stream(seed, Stream::initial_positions, 0xC8);
    const Eigen::MatrixXd x0 = initial_states(s.physics, batch, pos_rng);
    const RolloutRecord rec = forward_pass(init_params(s.net, seed), x0, s);
    const int n = rec.steps();
    int landed = 0;
    for (int b = 0; b < batch; ++b) {
        int first = n;
        for (int k = 0; k <= n; ++k)
            if (!(rec.state(b, k)(idx::r3) > s.physics.h_tol)) {
                first = k;
                break;
            }
        landed += first < n || !(rec.state(b, n)(idx::r3) > s.physics.h_tol);
        bad += rec.exit_index[static_cast<std::size_t>(b)] != first;
        for (int k = 0; k < n; ++k) {
            const int m = rec.masks(b, k);
            bad += m != exit_mask(rec.state(b, k)(idx::r3), s.physics.h_tol);
            if (k > 0)
                bad += m > rec.masks(b, k - 1);
            if (m == 0) {
                bad += rec.state(b, k + 1) != rec.state(b, k);
                bad += rec.values(b, k + 1) != rec.values(b, k);
            }
            checked += 4;
        }
    }
    std::ostringstream os;
    os << checked << " checks, " << bad << " failures, " << landed << " of " << batch << " rollouts landed";
    const bool mixed = landed > 0 && landed < batch;
    if (!mixed)
        os << " (rollouts did not cover both outcomes)";
    return finish("first_exit", bad == 0 && mixed, static_cast<double>(bad), 0, os.str(), timer);
}

CheckResult check_cone_sampling(std::uint64_t seed, int samples) {
    const Timer timer;
    const double rad = 80.0;
    Rng rng = make_stream(seed, Stream::initial_positions, 0xC9);
    const auto [r1, r2] = sample_initial_positions(samples, rad, rng);
    std::vector<double> r(static_cast<std::size_t>(samples));
    double outside = 0.0;
    for (int i = 0; i < samples; ++i) {
        r[static_cast<std::size_t>(i)] = std::hypot(r1(i), r2(i));
        outside = std::max(outside, r1(i) * r1(i) + r2(i) * r2(i) - rad * rad);
    }
    std::sort(r.begin(), r.end());
    double d = 0.0;
    const double n = samples;
    for (int i = 0; i < samples; ++i) {
        const double f = std::pow(r[static_cast<std::size_t>(i)] / rad, 2);
        d = std::max({d, (i + 1) / n - f, f - i / n});
    }
    const double critical = 1.628 / std::sqrt(n);
    std::ostringstream os;
    os << "KS D = " << d << " vs 1% critical " << critical << ", max r^2 - rad^2 = " << outside;
    return finish("cone_sampling", d < critical && outside <= 1e-12, d, critical, os.str(), timer);
}

bool is_suite(const std::string &suite) {
    return suite == "constraints" || suite == "novas" || suite == "gradcheck" || suite == "sde" || suite == "all";
}

std::vector<CheckResult> run_suite(const std::string &suite, std::uint64_t seed) {
    if (!is_suite(suite))
        throw std::invalid_argument("unknown suite '" + suite + "' (expected novas|gradcheck|sde|constraints|all)");
    const bool all = suite == "all";
    std::vector<CheckResult> out;
    if (all || suite == "constraints")
        out.push_back(check_constraints(seed));
    if (all || suite == "novas") {
        out.push_back(check_novas_recovery(seed));
        out.push_back(check_hamiltonian_oracle(seed));
    }
    if (all || suite == "gradcheck") {
        out.push_back(check_gradients_per_op(seed));
        out.push_back(check_gradients_rollout(seed));
    }
    if (all || suite == "sde") {
        out.push_back(check_sde_variance(seed));
        out.push_back(check_bsde_identity());
        out.push_back(check_first_exit(seed));
        out.push_back(check_cone_sampling(seed));
    }
    return out;
}

} // namespace pdg::verify
