#pragma once

#include <functional>
#include <optional>

#include <Eigen/Dense>

#include "pdg/costs.hpp"
#include "pdg/dynamics.hpp"
#include "pdg/rng.hpp"

namespace pdg {

using SampleMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3>;

/// Per-dimension Gaussian over (T1, T2, |T|).
struct NovasDistribution {
    Eigen::Vector3d mu{0.0, 0.0, 5000.0};
    Eigen::Vector3d sigma{500.0, 500.0, 1000.0};
};

enum class ShapeFunction { exponential };

struct NovasConfig {
    int samples = 200;      ///< M
    int iterations = 10;    ///< inner-loop iterations
    double step_size = 1.0; ///< alpha
    double eps_var = 1e5;   ///< variance floor; sigma >= sqrt(eps_var)
    ShapeFunction shape = ShapeFunction::exponential;
    Eigen::Vector3d init_mean{0.0, 0.0, 5000.0};
    Eigen::Vector3d init_std{500.0, 500.0, 1000.0};

    [[nodiscard]] NovasDistribution initial_distribution() const { return {init_mean, init_std}; }
    void validate() const;
};

/// Box on (T1, T2, |T|) whose image under lift_to_thrust satisfies both the
/// thrust-norm bounds and the pointing constraint.
class ConstraintSet {
  public:
    ConstraintSet(double rho1, double rho2, double theta);
    explicit ConstraintSet(const PhysicalParams &p) : ConstraintSet(p.rho1, p.rho2, p.theta) {}

    [[nodiscard]] double rho1() const { return rho1_; }
    [[nodiscard]] double rho2() const { return rho2_; }
    [[nodiscard]] double theta() const { return theta_; }
    [[nodiscard]] double rho3() const { return rho3_; }
    [[nodiscard]] double lateral_bound() const { return rho1_ / 2.0; }
    [[nodiscard]] double norm_lo() const { return std::max(rho1_, rho3_); }
    [[nodiscard]] double norm_hi() const { return rho2_; }
    [[nodiscard]] Eigen::Vector3d lower() const { return {-lateral_bound(), -lateral_bound(), norm_lo()}; }
    [[nodiscard]] Eigen::Vector3d upper() const { return {lateral_bound(), lateral_bound(), norm_hi()}; }

    /// Clamp each coordinate into the box.
    [[nodiscard]] Eigen::Vector3d project(const Eigen::Vector3d &x) const;

  private:
    double rho1_, rho2_, theta_, rho3_;
};

/// Clamp to [lo, hi]; throws ConfigError when lo > hi.
[[nodiscard]] double project(double x, double lo, double hi);

struct ConstrainedSamples {
    SampleMatrix projected; ///< M x 3, inside the constraint box
    SampleMatrix deltas;    ///< projected - mu (mean used for sampling)
};

/// Draw M per-dimension Gaussian samples and project them into the box.
ConstrainedSamples sample_constrained(const NovasDistribution &dist, const ConstraintSet &cs, int samples, Rng &rng);

/// (x1, x2, x3) -> (x1, x2, sqrt(x3^2 - x1^2 - x2^2)); |T| equals x3.
[[nodiscard]] ThrustCommand<double> lift_to_thrust(const Eigen::Vector3d &row);

/// Row-wise lift of a sample matrix.
[[nodiscard]] SampleMatrix lift_rows(const SampleMatrix &rows);

/// Normalized shape-function weights for objective values F (to be maximized):
/// F - min(F), exp, normalize. Falls back to a max shift when exp would overflow.
/// Throws DomainError naming the first non-finite entry.
[[nodiscard]] Eigen::VectorXd shape_weights(const Eigen::VectorXd &fitness, ShapeFunction shape);

/// Objective to minimize, evaluated on M lifted thrusts (M x 3) -> M values.
using NovasObjective = std::function<Eigen::VectorXd(const SampleMatrix &thrusts)>;

/// Everything one update consumed, so the final iteration can be replayed on a tape.
struct NovasStepTrace {
    Eigen::Vector3d mu_prev;
    ConstrainedSamples samples;
    Eigen::VectorXd weights;
};

NovasDistribution novas_step(const NovasObjective &objective, const NovasDistribution &dist, const ConstraintSet &cs,
                             const NovasConfig &cfg, Rng &rng, NovasStepTrace *trace = nullptr);

/// Hamiltonian of one state evaluated on M lifted thrust rows.
[[nodiscard]] Eigen::VectorXd hamiltonian_rows(const SpacecraftState<double> &x, const Vec7<double> &vx,
                                               const SampleMatrix &thrusts, const PhysicalParams &p,
                                               const CostWeights &w);

/// Starting distribution for one layer call: warm-started mean (if given) and
/// the configured initial spread.
[[nodiscard]] NovasDistribution layer_start(const NovasConfig &cfg, const std::optional<Eigen::Vector3d> &warm_mu);

/// Runs `iterations - 1` Hamiltonian-minimizing steps starting from layer_start.
NovasDistribution novas_warmup(const SpacecraftState<double> &x, const Vec7<double> &vx, const PhysicalParams &p,
                               const CostWeights &w, const ConstraintSet &cs, const NovasConfig &cfg,
                               const std::optional<Eigen::Vector3d> &warm_mu, Rng &rng);

struct NovasLayerResult {
    ThrustCommand<double> thrust;
    Eigen::Vector3d mu; ///< optimum in (T1, T2, |T|) space, the next warm start
};

/// Full layer evaluated numerically (no tape).
NovasLayerResult novas_layer(const SpacecraftState<double> &x, const Vec7<double> &vx, const PhysicalParams &p,
                             const CostWeights &w, const ConstraintSet &cs, const NovasConfig &cfg,
                             const std::optional<Eigen::Vector3d> &warm_mu, Rng &rng);

} // namespace pdg
