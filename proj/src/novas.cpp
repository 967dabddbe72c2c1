#include "pdg/novas.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace pdg {

void NovasConfig::validate() const {
    if (samples < 2)
        throw ConfigError("novas.samples must be >= 2");
    if (iterations < 1)
        throw ConfigError("novas.iterations must be >= 1");
    if (!(step_size > 0.0))
        throw ConfigError("novas.step_size must be positive");
    if (!(eps_var > 0.0))
        throw ConfigError("novas.eps_var must be positive");
    if (!init_mean.allFinite() || !(init_std.array() >= 0.0).all())
        throw ConfigError("novas: initial mean must be finite and initial std non-negative");
}

ConstraintSet::ConstraintSet(double rho1, double rho2, double theta) : rho1_(rho1), rho2_(rho2), theta_(theta) {
    if (!(rho1 > 0.0 && rho1 < rho2))
        throw ConfigError("constraint set: require 0 < rho1 < rho2");
    if (!(theta >= M_PI / 6.0 && theta < M_PI / 2.0))
        throw ConfigError("constraint set: theta must lie in [pi/6, pi/2)");
    const double s = std::sin(theta);
    rho3_ = std::sqrt(rho1 * rho1 / (2.0 * s * s));
    if (norm_lo() > norm_hi())
        throw ConfigError("constraint set: empty thrust-norm interval [max(rho1, rho3), rho2]");
}

Eigen::Vector3d ConstraintSet::project(const Eigen::Vector3d &x) const {
    return x.cwiseMax(lower()).cwiseMin(upper());
}

double project(double x, double lo, double hi) {
    if (lo > hi)
        throw ConfigError("project: empty interval [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return std::min(std::max(x, lo), hi);
}

ConstrainedSamples sample_constrained(const NovasDistribution &dist, const ConstraintSet &cs, int samples, Rng &rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const Eigen::Vector3d lo = cs.lower();
    const Eigen::Vector3d hi = cs.upper();
    ConstrainedSamples out{SampleMatrix(samples, 3), SampleMatrix(samples, 3)};
    for (int m = 0; m < samples; ++m) {
        for (int d = 0; d < 3; ++d) {
            const double raw = dist.mu(d) + dist.sigma(d) * normal(rng);
            const double clipped = std::min(std::max(raw, lo(d)), hi(d));
            out.projected(m, d) = clipped;
            out.deltas(m, d) = clipped - dist.mu(d);
        }
    }
    return out;
}

ThrustCommand<double> lift_to_thrust(const Eigen::Vector3d &row) {
    const double radicand = row(2) * row(2) - row(0) * row(0) - row(1) * row(1);
    if (radicand < 0.0 || !std::isfinite(radicand))
        throw DomainError("lift_to_thrust: negative radicand " + std::to_string(radicand) +
                          " (input was not projected into the constraint box)");
    return {row(0), row(1), std::sqrt(radicand)};
}

SampleMatrix lift_rows(const SampleMatrix &rows) {
    SampleMatrix t(rows.rows(), 3);
    for (Eigen::Index m = 0; m < rows.rows(); ++m)
        t.row(m) = lift_to_thrust(rows.row(m).transpose()).transpose();
    return t;
}

Eigen::VectorXd shape_weights(const Eigen::VectorXd &fitness, ShapeFunction shape) {
    for (Eigen::Index m = 0; m < fitness.size(); ++m)
        if (!std::isfinite(fitness(m)))
            throw DomainError("novas: non-finite objective value at sample " + std::to_string(m));
    Eigen::VectorXd shifted = fitness.array() - fitness.minCoeff();
    // exp overflows near 709; a max shift gives the same normalized weights.
    if (shifted.maxCoeff() > 700.0)
        shifted = fitness.array() - fitness.maxCoeff();
    Eigen::VectorXd s;
    switch (shape) {
    case ShapeFunction::exponential:
        s = shifted.array().exp();
        break;
    }
    return s / s.sum();
}

NovasDistribution novas_step(const NovasObjective &objective, const NovasDistribution &dist, const ConstraintSet &cs,
                             const NovasConfig &cfg, Rng &rng, NovasStepTrace *trace) {
    ConstrainedSamples smp = sample_constrained(dist, cs, cfg.samples, rng);
    const Eigen::VectorXd values = objective(lift_rows(smp.projected));
    if (values.size() != cfg.samples)
        throw DomainError("novas: objective returned " + std::to_string(values.size()) + " values for " +
                          std::to_string(cfg.samples) + " samples");
    const Eigen::VectorXd weights = shape_weights(-values, cfg.shape);

    NovasDistribution next;
    next.mu = dist.mu + cfg.step_size * (smp.deltas.transpose() * weights);
    const SampleMatrix centered = smp.projected.rowwise() - next.mu.transpose();
    next.sigma = ((centered.array().square().colwise() * weights.array()).colwise().sum().transpose() + cfg.eps_var)
                     .sqrt();
    if (trace) {
        trace->mu_prev = dist.mu;
        trace->samples = std::move(smp);
        trace->weights = weights;
    }
    return next;
}

Eigen::VectorXd hamiltonian_rows(const SpacecraftState<double> &x, const Vec7<double> &vx,
                                 const SampleMatrix &thrusts, const PhysicalParams &p, const CostWeights &w) {
    detail::require_positive_mass(x(idx::m));
    const double inv_m = 1.0 / x(idx::m);
    const Eigen::Vector3d vx_v = vx.segment<3>(idx::v1);
    const double constant = vx.head<3>().dot(x.segment<3>(idx::v1)) - vx_v.dot(p.g);
    const double norm_coeff = w.q_ctrl - vx(idx::m) * p.alpha;
    const Eigen::VectorXd norms = thrusts.rowwise().norm();
    return ((thrusts * vx_v).array() * inv_m + norms.array() * norm_coeff + constant).matrix();
}

NovasDistribution layer_start(const NovasConfig &cfg, const std::optional<Eigen::Vector3d> &warm_mu) {
    NovasDistribution d = cfg.initial_distribution();
    if (warm_mu)
        d.mu = *warm_mu;
    return d;
}

NovasDistribution novas_warmup(const SpacecraftState<double> &x, const Vec7<double> &vx, const PhysicalParams &p,
                               const CostWeights &w, const ConstraintSet &cs, const NovasConfig &cfg,
                               const std::optional<Eigen::Vector3d> &warm_mu, Rng &rng) {
    const NovasObjective objective = [&](const SampleMatrix &t) { return hamiltonian_rows(x, vx, t, p, w); };
    NovasDistribution d = layer_start(cfg, warm_mu);
    for (int n = 0; n + 1 < cfg.iterations; ++n)
        d = novas_step(objective, d, cs, cfg, rng);
    return d;
}

NovasLayerResult novas_layer(const SpacecraftState<double> &x, const Vec7<double> &vx, const PhysicalParams &p,
                             const CostWeights &w, const ConstraintSet &cs, const NovasConfig &cfg,
                             const std::optional<Eigen::Vector3d> &warm_mu, Rng &rng) {
    const NovasObjective objective = [&](const SampleMatrix &t) { return hamiltonian_rows(x, vx, t, p, w); };
    NovasDistribution d = novas_warmup(x, vx, p, w, cs, cfg, warm_mu, rng);
    d = novas_step(objective, d, cs, cfg, rng);
    return {lift_to_thrust(d.mu), d.mu};
}

} // namespace pdg
