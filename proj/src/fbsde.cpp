#include "pdg/fbsde.hpp"

#include <cmath>
#include <fstream>
#include <memory>

#include <json.hpp>

#include "pdg/checkpoint.hpp"
#include "pdg/harness.hpp"

namespace pdg {

using ad::Tensor;
using ad::Tape;
using ad::Var;

RolloutError::RolloutError(const std::string &what, int b, int k)
    : std::runtime_error(what + " (batch " + std::to_string(b) + ", step " + std::to_string(k) + ")"), batch(b),
      step(k) {}

// ---------------------------------------------------------------------------
// Graph costs

namespace {

Var col(const Var &x, int c) { return ad::slice(x, c, 1); }

} // namespace

Var terminal_cost(const Var &x, const CostWeights &w, const PhysicalParams &p) {
    Tape &t = *x.tape();
    Tensor cz(x.rows(), 1);
    for (Eigen::Index b = 0; b < x.rows(); ++b)
        cz(b, 0) = w.Qvz * vz_coefficient(x.value()(b, idx::v3), w);
    const double span = p.m_init - p.m_dry;
    return ad::square(col(x, idx::r1)) * w.Qx + ad::square(col(x, idx::r2)) * w.Qy +
           ad::square(col(x, idx::r3)) * w.Qz + ad::square(col(x, idx::v1)) * w.Qvx +
           ad::square(col(x, idx::v2)) * w.Qvy + ad::square(col(x, idx::v3)) * t.constant(cz) +
           ad::exp((col(x, idx::m) - p.m_dry) * (-1.0 / span)) * w.Qm;
}

Var terminal_cost_gradient(const Var &x, const CostWeights &w, const PhysicalParams &p) {
    Tape &t = *x.tape();
    Tensor cz(x.rows(), 1);
    for (Eigen::Index b = 0; b < x.rows(); ++b)
        cz(b, 0) = 2.0 * w.Qvz * vz_coefficient(x.value()(b, idx::v3), w);
    const double span = p.m_init - p.m_dry;
    return ad::concat({col(x, idx::r1) * (2.0 * w.Qx), col(x, idx::r2) * (2.0 * w.Qy),
                       col(x, idx::r3) * (2.0 * w.Qz), col(x, idx::v1) * (2.0 * w.Qvx),
                       col(x, idx::v2) * (2.0 * w.Qvy), col(x, idx::v3) * t.constant(cz),
                       ad::exp((col(x, idx::m) - p.m_dry) * (-1.0 / span)) * (-w.Qm / span)});
}

Var running_cost(const Var &x, const Var &thrust, const CostWeights &w, double gamma_gs) {
    Tape &t = *x.tape();
    const Var delta = ad::norm2(ad::slice(x, idx::r1, 2)) * std::tan(gamma_gs) - col(x, idx::r3);
    Tensor q(x.rows(), 1);
    for (Eigen::Index b = 0; b < x.rows(); ++b)
        q(b, 0) = delta.value()(b, 0) > 0.0 ? w.q_plus : w.q_minus;
    return ad::square(delta) * t.constant(q) + ad::norm2(thrust) * w.q_ctrl;
}

double compute_loss(const Eigen::VectorXd &v_n, const Eigen::MatrixXd &vx_n, const Eigen::MatrixXd &x_n,
                    const CostWeights &w, const PhysicalParams &p) {
    const Eigen::Index batch = v_n.size();
    double total = 0.0;
    for (Eigen::Index b = 0; b < batch; ++b) {
        const Vec7<double> x = x_n.row(b).transpose();
        const double v_star = pdg::terminal_cost(x, w, p);
        const Vec7<double> vx_star = pdg::terminal_cost_gradient(x, w, p);
        const Vec7<double> vx = vx_n.row(b).transpose();
        total += (v_n(b) - v_star) * (v_n(b) - v_star) + (vx - vx_star).squaredNorm() + v_star * v_star +
                 vx_star.squaredNorm();
    }
    return total / static_cast<double>(batch);
}

Var compute_loss(const Var &v_n, const Var &vx_n, const Var &x_n, const CostWeights &w, const PhysicalParams &p) {
    const Var v_star = terminal_cost(x_n, w, p);
    const Var vx_star = terminal_cost_gradient(x_n, w, p);
    const Var total = ad::sum(ad::square(v_n - v_star)) + ad::sum(ad::square(vx_n - vx_star)) +
                      ad::sum(ad::square(v_star)) + ad::sum(ad::square(vx_star));
    return total * (1.0 / static_cast<double>(v_n.rows()));
}

// ---------------------------------------------------------------------------
// NOVAS final step on the tape

Var novas_final_step(const Var &x, const Var &vx, const std::vector<NovasStepTrace> &traces,
                     const std::vector<bool> &active, const PhysicalParams &p, const CostWeights &w,
                     const NovasConfig &cfg) {
    const Eigen::Index batch = x.rows();
    if (vx.rows() != batch || vx.cols() != kStateDim || x.cols() != kStateDim ||
        static_cast<Eigen::Index>(traces.size()) != batch || static_cast<Eigen::Index>(active.size()) != batch)
        throw ad::ShapeError("novas_final_step", x.value(), vx.value(), "expected B x 7 inputs and B traces");

    struct Saved {
        std::vector<SampleMatrix> thrusts;
        std::vector<Eigen::VectorXd> weights;
    };
    auto saved = std::make_shared<Saved>();
    saved->thrusts.resize(static_cast<std::size_t>(batch));
    saved->weights.resize(static_cast<std::size_t>(batch));

    Tensor out(batch, 3);
    for (Eigen::Index b = 0; b < batch; ++b) {
        const auto bi = static_cast<std::size_t>(b);
        const NovasStepTrace &tr = traces[bi];
        if (!active[bi]) {
            out.row(b) = tr.mu_prev.transpose();
            continue;
        }
        const Vec7<double> xb = x.value().row(b).transpose();
        const Vec7<double> vxb = vx.value().row(b).transpose();
        saved->thrusts[bi] = lift_rows(tr.samples.projected);
        const Eigen::VectorXd h = hamiltonian_rows(xb, vxb, saved->thrusts[bi], p, w);
        saved->weights[bi] = shape_weights(-h, cfg.shape);
        out.row(b) = (tr.mu_prev + cfg.step_size * (tr.samples.deltas.transpose() * saved->weights[bi])).transpose();
    }

    const double step = cfg.step_size;
    const double alpha = p.alpha;
    const Eigen::Vector3d g = p.g;
    return x.tape()->push(
        "novas_final_step", std::move(out), {x, vx},
        [x, vx, traces, active, saved, step, alpha, g](ad::Tape &t, const Tensor &grad_mu) {
            const Tensor &xv = t.value(x.id());
            const Tensor &vxv = t.value(vx.id());
            Tensor gx = Tensor::Zero(xv.rows(), xv.cols());
            Tensor gvx = Tensor::Zero(vxv.rows(), vxv.cols());
            for (Eigen::Index b = 0; b < xv.rows(); ++b) {
                const auto bi = static_cast<std::size_t>(b);
                if (!active[bi])
                    continue;
                const Eigen::VectorXd &s = saved->weights[bi];
                const SampleMatrix &thr = saved->thrusts[bi];
                // d loss / d S_m, then through the normalized exponential.
                const Eigen::VectorXd gs = step * (traces[bi].samples.deltas * grad_mu.row(b).transpose());
                const Eigen::VectorXd gf = s.array() * (gs.array() - s.dot(gs));
                const Eigen::VectorXd gh = -gf;
                const double m = xv(b, idx::m);
                const double gh_sum = gh.sum();
                const Eigen::VectorXd norms = thr.rowwise().norm();
                const Eigen::Vector3d thrust_sum = thr.transpose() * gh;
                // H = Vx_r.v + Vx_v.(T/m - g) + (q - alpha Vx_m)|T|
                gvx.block<1, 3>(b, idx::r1) = gh_sum * xv.block<1, 3>(b, idx::v1);
                gvx.block<1, 3>(b, idx::v1) = (thrust_sum / m - gh_sum * g).transpose();
                gvx(b, idx::m) = -alpha * gh.dot(norms);
                gx.block<1, 3>(b, idx::v1) = gh_sum * vxv.block<1, 3>(b, idx::r1);
                gx(b, idx::m) = -vxv.block<1, 3>(b, idx::v1).dot(thrust_sum.transpose()) / (m * m);
            }
            t.accumulate(x, gx);
            t.accumulate(vx, gvx);
        });
}

Var lift_to_thrust(const Var &mu) {
    const Var m1 = col(mu, 0);
    const Var m2 = col(mu, 1);
    const Var m3 = col(mu, 2);
    return ad::concat({m1, m2, ad::sqrt(ad::square(m3) - ad::square(m1) - ad::square(m2))});
}

// ---------------------------------------------------------------------------
// Rollout

namespace {

struct Carried {
    Var x;
    Var value;
    LstmState lstm;
};

class RolloutCore {
  public:
    RolloutCore(const Eigen::MatrixXd &x0, const RolloutSettings &s)
        : s_(s), batch_(static_cast<int>(x0.rows())), steps_(s.resolved_steps()), cs_(s.physics) {
        if (x0.cols() != kStateDim)
            throw ad::ShapeError("forward_pass: initial states must be B x 7, got " + std::to_string(x0.cols()) +
                                 " columns");
        if (s.noise && static_cast<int>(s.noise->size()) != steps_)
            throw ad::ShapeError("forward_pass: replayed noise must have one entry per step");
        const auto b_count = static_cast<std::size_t>(batch_);
        for (int b = 0; b < batch_; ++b) {
            noise_rngs_.push_back(make_stream(s.seed, Stream::rollout_noise, s.stream, static_cast<std::uint64_t>(b)));
            novas_rngs_.push_back(
                make_stream(s.seed, Stream::novas_sampling, s.stream, static_cast<std::uint64_t>(b)));
        }
        warm_.assign(b_count, std::nullopt);
        rec_.states.reserve(static_cast<std::size_t>(steps_) + 1);
        rec_.values.resize(batch_, steps_ + 1);
        rec_.masks.resize(batch_, steps_);
        rec_.below_dry_mass.assign(b_count, false);
        rec_.states.push_back(x0);
        check_states(x0, 0);
    }

    [[nodiscard]] int steps() const { return steps_; }
    RolloutRecord &record() { return rec_; }

    Carried start(const BoundModel &model, const Var &x0) {
        const InitialHeads heads = init_heads(model, model.normalize(x0));
        rec_.values.col(0) = heads.value.value();
        return {x0, heads.value, heads.state};
    }

    Carried step(const BoundModel &model, const Carried &in, int k);

    void finish(const BoundModel &model, const Carried &last, Var *vx_out) {
        const LstmOutput out = lstm_step(model, model.normalize(last.x), last.lstm);
        rec_.vx_preds.push_back(out.vx.value());
        if (vx_out)
            *vx_out = out.vx;
        rec_.exit_index.resize(static_cast<std::size_t>(batch_));
        std::vector<double> altitude(static_cast<std::size_t>(steps_) + 1);
        for (int b = 0; b < batch_; ++b) {
            for (int k = 0; k <= steps_; ++k)
                altitude[static_cast<std::size_t>(k)] = rec_.states[static_cast<std::size_t>(k)](b, idx::r3);
            rec_.exit_index[static_cast<std::size_t>(b)] = first_exit_index(altitude, s_.physics.h_tol, steps_);
        }
    }

  private:
    void check_states(const Eigen::MatrixXd &x, int k) {
        for (int b = 0; b < batch_; ++b) {
            if (!x.row(b).allFinite())
                throw RolloutError("non-finite state", b, k);
            if (!(x(b, idx::m) > 0.0))
                throw DomainError("non-positive spacecraft mass at batch " + std::to_string(b) + ", step " +
                                  std::to_string(k));
            if (x(b, idx::m) < s_.physics.m_dry)
                rec_.below_dry_mass[static_cast<std::size_t>(b)] = true;
        }
    }

    Eigen::MatrixXd draw_noise(int k) {
        if (s_.noise)
            return (*s_.noise)[static_cast<std::size_t>(k)];
        std::normal_distribution<double> normal(0.0, 1.0);
        const double sdt = std::sqrt(s_.physics.dt);
        Eigen::MatrixXd dw(batch_, 3);
        for (int b = 0; b < batch_; ++b)
            for (int j = 0; j < 3; ++j)
                dw(b, j) = sdt * normal(noise_rngs_[static_cast<std::size_t>(b)]);
        return dw;
    }

    Var thrust_for_step(const BoundModel &model, const Var &x, const Var &vx, const Eigen::VectorXi &mask, int k);

    const RolloutSettings &s_;
    int batch_;
    int steps_;
    ConstraintSet cs_;
    std::vector<Rng> noise_rngs_;
    std::vector<Rng> novas_rngs_;
    std::vector<std::optional<Eigen::Vector3d>> warm_;
    RolloutRecord rec_;
};

Var RolloutCore::thrust_for_step(const BoundModel &model, const Var &x, const Var &vx, const Eigen::VectorXi &mask,
                                 int k) {
    Tape &t = model.tape();
    if (s_.control_override) {
        Tensor thrust(batch_, 3);
        for (int b = 0; b < batch_; ++b)
            thrust.row(b) = s_.control_override(b, k).transpose();
        return t.constant(std::move(thrust));
    }
    std::vector<NovasStepTrace> traces(static_cast<std::size_t>(batch_));
    std::vector<bool> active(static_cast<std::size_t>(batch_));
    for (int b = 0; b < batch_; ++b)
        active[static_cast<std::size_t>(b)] = mask(b) != 0;
    if (s_.novas_replay) {
        if (static_cast<int>(s_.novas_replay->size()) != steps_ ||
            static_cast<int>((*s_.novas_replay)[static_cast<std::size_t>(k)].size()) != batch_)
            throw ad::ShapeError("forward_pass: replayed NOVAS traces must be N entries of B traces");
        traces = (*s_.novas_replay)[static_cast<std::size_t>(k)];
    }
    const Tensor &xv = x.value();
    const Tensor &vxv = vx.value();
#pragma omp parallel for schedule(dynamic)
    for (int b = 0; b < batch_; ++b) {
        const auto bi = static_cast<std::size_t>(b);
        NovasStepTrace &tr = traces[bi];
        if (s_.novas_replay)
            continue;
        if (!active[bi]) {
            tr.mu_prev = warm_[bi].value_or(s_.novas.init_mean);
            continue;
        }
        const Vec7<double> xb = xv.row(b).transpose();
        const Vec7<double> vxb = vxv.row(b).transpose();
        const NovasDistribution d =
            novas_warmup(xb, vxb, s_.physics, s_.weights, cs_, s_.novas, warm_[bi], novas_rngs_[bi]);
        tr.mu_prev = d.mu;
        tr.samples = sample_constrained(d, cs_, s_.novas.samples, novas_rngs_[bi]);
    }
    const Var mu = novas_final_step(x, vx, traces, active, s_.physics, s_.weights, s_.novas);
    if (s_.keep_novas_traces)
        rec_.novas_traces.push_back(traces);
    for (int b = 0; b < batch_; ++b)
        warm_[static_cast<std::size_t>(b)] = mu.value().row(b).transpose();
    return lift_to_thrust(mu);
}

Carried RolloutCore::step(const BoundModel &model, const Carried &in, int k) {
    Tape &t = model.tape();
    const PhysicalParams &p = s_.physics;
    const double dt = p.dt;
    const Tensor &xv = in.x.value();

    Eigen::VectorXi mask(batch_);
    for (int b = 0; b < batch_; ++b)
        mask(b) = exit_mask(xv(b, idx::r3), p.h_tol);
    rec_.masks.col(k) = mask;
    const Eigen::MatrixXd dw = draw_noise(k);
    rec_.noise.push_back(dw);

    const LstmOutput lstm = lstm_step(model, model.normalize(in.x), in.lstm);
    rec_.vx_preds.push_back(lstm.vx.value());
    const Var thrust = thrust_for_step(model, in.x, lstm.vx, mask, k);
    rec_.controls.push_back(thrust.value());

    // drift f(x, T)
    const Var vel = ad::slice(in.x, idx::v1, 3);
    const Var mass = ad::slice(in.x, idx::m, 1);
    const Var accel = thrust / mass - t.constant(p.g.transpose());
    const Var mass_rate = ad::norm2(thrust) * (-p.alpha);
    const Var drift = ad::concat({vel, accel, mass_rate});

    // Sigma(x) dW: velocity rows Gamma dW / m, mass row -alpha 1^T Gamma dW
    const Eigen::MatrixXd gamma_dw = dw.array().rowwise() * p.gamma_diag.transpose().array();
    const Var vel_noise = t.constant(gamma_dw) / mass;
    const Var sigma_dw = ad::concat({t.constant(Tensor::Zero(batch_, 3)), vel_noise,
                                     t.constant(gamma_dw.rowwise().sum() * (-p.alpha))});

    const Var mask_col = t.constant(mask.cast<double>());
    const Var x_next = in.x + (drift * dt + sigma_dw) * mask_col;
    const Var l = running_cost(in.x, thrust, s_.weights, p.gamma_gs);
    const Var v_next = in.value + (l * (-dt) + ad::row_sum(lstm.vx * sigma_dw)) * mask_col;

    check_states(x_next.value(), k + 1);
    for (int b = 0; b < batch_; ++b)
        if (!std::isfinite(v_next.value()(b, 0)))
            throw RolloutError("non-finite value process", b, k + 1);
    rec_.states.push_back(x_next.value());
    rec_.values.col(k + 1) = v_next.value();
    return {x_next, v_next, lstm.state};
}

} // namespace

TapedRollout forward_pass(ad::Tape &tape, const ad::ParameterStore &store, const Eigen::MatrixXd &x0,
                          const RolloutSettings &settings) {
    RolloutCore core(x0, settings);
    const BoundModel model = BoundModel::bind(tape, store, settings.net, settings.scaling);
    Carried c = core.start(model, tape.constant(x0));
    for (int k = 0; k < core.steps(); ++k)
        c = core.step(model, c, k);
    Var vx_n;
    core.finish(model, c, &vx_n);
    TapedRollout out{std::move(core.record()), {}};
    out.loss = compute_loss(c.value, vx_n, c.x, settings.weights, settings.physics);
    out.record.loss = out.loss.item();
    return out;
}

RolloutRecord forward_pass(const ad::ParameterStore &store, const Eigen::MatrixXd &x0,
                           const RolloutSettings &settings) {
    RolloutCore core(x0, settings);
    auto rebind = [&](ad::Tape &t, const Carried &c) {
        Carried out{t.constant(c.x.value()), t.constant(c.value.value()), {}};
        for (std::size_t l = 0; l < c.lstm.h.size(); ++l) {
            out.lstm.h.push_back(t.constant(c.lstm.h[l].value()));
            out.lstm.c.push_back(t.constant(c.lstm.c[l].value()));
        }
        return out;
    };
    auto tape = std::make_unique<ad::Tape>();
    BoundModel model = BoundModel::bind_constant(*tape, store, settings.net, settings.scaling);
    Carried c = core.start(model, tape->constant(x0));
    for (int k = 0; k < core.steps(); ++k) {
        auto next = std::make_unique<ad::Tape>();
        model = BoundModel::bind_constant(*next, store, settings.net, settings.scaling);
        c = rebind(*next, c);
        tape = std::move(next);
        c = core.step(model, c, k);
    }
    core.finish(model, c, nullptr);
    RolloutRecord rec = std::move(core.record());
    rec.loss = compute_loss(rec.values.col(rec.steps()), rec.vx_preds.back(), rec.states.back(), settings.weights,
                            settings.physics);
    return rec;
}

// ---------------------------------------------------------------------------
// Training

double TrainConfig::lr_at(int iteration) const {
    double lr = lr_schedule.front().second;
    for (const auto &[it, value] : lr_schedule)
        if (iteration >= it)
            lr = value;
    return lr;
}

void TrainConfig::validate() const {
    if (batch < 1)
        throw ConfigError("train.batch must be >= 1");
    if (iterations < 0)
        throw ConfigError("train.iterations must be >= 0");
    if (checkpoint_every < 1)
        throw ConfigError("train.checkpoint_every must be >= 1");
    if (lr_schedule.empty() || lr_schedule.front().first != 0)
        throw ConfigError("train.lr_schedule must start at iteration 0");
    for (std::size_t i = 1; i < lr_schedule.size(); ++i)
        if (lr_schedule[i].first <= lr_schedule[i - 1].first)
            throw ConfigError("train.lr_schedule iterations must be increasing");
    for (const auto &[_, lr] : lr_schedule)
        if (!(lr > 0.0))
            throw ConfigError("train.lr_schedule rates must be positive");
    if (!(v_safe > 0.0))
        throw ConfigError("eval.v_safe must be positive");
    rollout.physics.validate();
    rollout.weights.validate();
    rollout.novas.validate();
}

Eigen::MatrixXd initial_states(const PhysicalParams &p, int batch, Rng &rng) {
    const auto [r1, r2] = sample_initial_positions(batch, p.rad, rng);
    Eigen::MatrixXd x0(batch, kStateDim);
    for (int b = 0; b < batch; ++b)
        x0.row(b) << r1(b), r2(b), p.r3_init, p.v_init(0), p.v_init(1), p.v_init(2), p.m_init;
    return x0;
}

namespace {

IterationMetrics batch_metrics(int iter, double lr, const RolloutRecord &rec, const PhysicalParams &p,
                               double v_safe) {
    const EvalStats stats = summarize(rec, p, v_safe);
    return {iter, rec.loss, lr, stats.mean_exit_time_s, stats.frac_safe, stats.mean_fuel_kg};
}

} // namespace

TrainResult train(const TrainConfig &cfg, const std::filesystem::path &out_dir,
                  const std::optional<std::filesystem::path> &resume,
                  const std::function<void(const IterationMetrics &)> &on_iteration) {
    cfg.validate();
    std::filesystem::create_directories(out_dir);

    TrainResult result;
    int start = 0;
    std::uint64_t seed = cfg.seed;
    if (resume) {
        Checkpoint ckpt = load_checkpoint(*resume);
        check_params(ckpt.params, cfg.rollout.net);
        result.params = std::move(ckpt.params);
        start = static_cast<int>(ckpt.iteration);
        seed = ckpt.seed;
    } else {
        result.params = init_params(cfg.rollout.net, seed);
    }

    const std::filesystem::path ckpt_path = out_dir / "checkpoint.bin";
    std::ofstream log(out_dir / "metrics.jsonl", std::ios::app);
    if (!log)
        throw std::runtime_error("cannot open '" + (out_dir / "metrics.jsonl").string() + "' for appending");

    auto save = [&](int completed) {
        Checkpoint ckpt;
        ckpt.iteration = static_cast<std::uint64_t>(completed);
        ckpt.seed = seed;
        ckpt.params = result.params;
        ckpt.metadata = cfg.rollout.scaling.to_metadata();
        save_checkpoint(ckpt, ckpt_path);
        result.last_checkpoint = ckpt_path;
    };

    for (int it = start; it < cfg.iterations; ++it) {
        Rng pos_rng = make_stream(seed, Stream::initial_positions, static_cast<std::uint64_t>(it));
        const Eigen::MatrixXd x0 = initial_states(cfg.rollout.physics, cfg.batch, pos_rng);
        RolloutSettings settings = cfg.rollout;
        settings.seed = seed;
        settings.stream = static_cast<std::uint64_t>(it);

        ad::Tape tape;
        TapedRollout r = forward_pass(tape, result.params, x0, settings);
        if (!std::isfinite(r.record.loss))
            throw RolloutError("non-finite training loss", -1, it);
        const double lr = cfg.lr_at(it);
        tape.backward(r.loss, &result.params);
        ad::adam_step(result.params, lr);

        const IterationMetrics m = batch_metrics(it, lr, r.record, cfg.rollout.physics, cfg.v_safe);
        result.metrics.push_back(m);
        nlohmann::json row = {{"iter", m.iter},
                              {"loss", m.loss},
                              {"lr", m.lr},
                              {"mean_exit_time_s", m.mean_exit_time_s},
                              {"safe_frac", m.safe_frac},
                              {"mean_fuel_kg", m.mean_fuel_kg}};
        log << row.dump() << '\n' << std::flush;
        if (on_iteration)
            on_iteration(m);
        if ((it + 1) % cfg.checkpoint_every == 0 || it + 1 == cfg.iterations)
            save(it + 1);
    }
    if (result.last_checkpoint.empty())
        save(std::max(start, cfg.iterations));
    return result;
}

} // namespace pdg
