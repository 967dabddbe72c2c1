#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pdg/autodiff.hpp"
#include "pdg/costs.hpp"
#include "pdg/dynamics.hpp"
#include "pdg/network.hpp"
#include "pdg/novas.hpp"

namespace pdg {

/// Non-finite state or value during a rollout, or a non-finite training loss.
class RolloutError : public std::runtime_error {
  public:
    RolloutError(const std::string &what, int batch, int step);
    int batch = -1;
    int step = -1;
};

/// Batched trajectories of one forward pass. Time-indexed vectors hold one
/// B-row matrix per step.
struct RolloutRecord {
    std::vector<Eigen::MatrixXd> states;   ///< N+1 entries, B x 7
    std::vector<Eigen::MatrixXd> controls; ///< N entries, B x 3
    Eigen::MatrixXd values;                ///< B x (N+1)
    std::vector<Eigen::MatrixXd> vx_preds; ///< N+1 entries, B x 7
    Eigen::MatrixXi masks;                 ///< B x N
    std::vector<int> exit_index;           ///< per batch element, N when never exited
    std::vector<Eigen::MatrixXd> noise;    ///< N entries, B x 3, N(0, dt) draws
    std::vector<bool> below_dry_mass;      ///< diagnostic: mass fell under m_dry somewhere
    /// Final-iteration NOVAS inputs per step (N entries of B traces); only
    /// filled when RolloutSettings::keep_novas_traces is set.
    std::vector<std::vector<NovasStepTrace>> novas_traces;
    double loss = 0.0;

    [[nodiscard]] int batch() const { return static_cast<int>(values.rows()); }
    [[nodiscard]] int steps() const { return static_cast<int>(controls.size()); }
    [[nodiscard]] Vec7<double> state(int b, int k) const { return states[static_cast<std::size_t>(k)].row(b); }
};

/// Everything a rollout needs besides parameters and initial states.
struct RolloutSettings {
    PhysicalParams physics;
    CostWeights weights;
    NovasConfig novas;
    NetworkConfig net;
    InputScaling scaling;
    int steps = 0;               ///< N; 0 means physics.num_steps()
    std::uint64_t seed = 0;      ///< master seed
    std::uint64_t stream = 0;    ///< stream index, the training iteration
    /// Replaces the NOVAS layer with a fixed thrust schedule (b, k) -> T.
    std::function<Eigen::Vector3d(int b, int k)> control_override;
    /// Replays recorded noise instead of drawing it (N entries, B x 3).
    const std::vector<Eigen::MatrixXd> *noise = nullptr;
    /// Replays recorded final-iteration NOVAS inputs instead of running the
    /// warm-up and sampling. The differentiable part is recomputed.
    const std::vector<std::vector<NovasStepTrace>> *novas_replay = nullptr;
    bool keep_novas_traces = false;

    [[nodiscard]] int resolved_steps() const { return steps > 0 ? steps : physics.num_steps(); }
};

struct TapedRollout {
    RolloutRecord record;
    ad::Var loss;
};

/// Differentiable forward pass on `tape` with parameters bound to `store`.
TapedRollout forward_pass(ad::Tape &tape, const ad::ParameterStore &store, const Eigen::MatrixXd &x0,
                          const RolloutSettings &settings);

/// Tape-free forward pass with bounded memory (evaluation).
RolloutRecord forward_pass(const ad::ParameterStore &store, const Eigen::MatrixXd &x0,
                           const RolloutSettings &settings);

/// Mean over the batch of |V - V*|^2 + |Vx - Vx*|^2 + |V*|^2 + |Vx*|^2 with
/// V* = terminal_cost(x_N) and Vx* = its gradient.
[[nodiscard]] double compute_loss(const Eigen::VectorXd &v_n, const Eigen::MatrixXd &vx_n, const Eigen::MatrixXd &x_n,
                                  const CostWeights &w, const PhysicalParams &p);
[[nodiscard]] ad::Var compute_loss(const ad::Var &v_n, const ad::Var &vx_n, const ad::Var &x_n, const CostWeights &w,
                                   const PhysicalParams &p);

// Graph versions of the cost functions on B-row tensors.
[[nodiscard]] ad::Var terminal_cost(const ad::Var &x, const CostWeights &w, const PhysicalParams &p);
[[nodiscard]] ad::Var terminal_cost_gradient(const ad::Var &x, const CostWeights &w, const PhysicalParams &p);
[[nodiscard]] ad::Var running_cost(const ad::Var &x, const ad::Var &thrust, const CostWeights &w, double gamma_gs);

/// Differentiable final NOVAS iteration: weights from -H at fixed projected
/// samples, then mu_prev + alpha * sum_m S_m * delta_m. Rows with
/// active[b] == false pass mu_prev through unchanged.
[[nodiscard]] ad::Var novas_final_step(const ad::Var &x, const ad::Var &vx, const std::vector<NovasStepTrace> &traces,
                                       const std::vector<bool> &active, const PhysicalParams &p, const CostWeights &w,
                                       const NovasConfig &cfg);

/// (mu1, mu2, sqrt(mu3^2 - mu1^2 - mu2^2)) row-wise on the tape.
[[nodiscard]] ad::Var lift_to_thrust(const ad::Var &mu);

struct TrainConfig {
    int batch = 128;
    int iterations = 7000;
    std::vector<std::pair<int, double>> lr_schedule{{0, 5e-4}, {3000, 1e-4}};
    int checkpoint_every = 500;
    std::uint64_t seed = 0;
    double v_safe = 1.52;
    RolloutSettings rollout;

    /// Learning rate in effect at `iteration`.
    [[nodiscard]] double lr_at(int iteration) const;
    void validate() const;
};

struct IterationMetrics {
    int iter = 0;
    double loss = 0.0;
    double lr = 0.0;
    double mean_exit_time_s = 0.0;
    double safe_frac = 0.0;
    double mean_fuel_kg = 0.0;
};

struct TrainResult {
    ad::ParameterStore params;
    std::vector<IterationMetrics> metrics;
    std::filesystem::path last_checkpoint;
};

/// Batch of initial states for one iteration: fixed altitude, velocity and
/// mass, (r1, r2) sampled on the cone base.
[[nodiscard]] Eigen::MatrixXd initial_states(const PhysicalParams &p, int batch, Rng &rng);

/// Runs (or resumes) training. Appends one JSON line per iteration to
/// out_dir/metrics.jsonl and writes out_dir/checkpoint.bin every
/// checkpoint_every iterations and at the end. Throws RolloutError on a
/// non-finite loss; the last good checkpoint is left in place.
TrainResult train(const TrainConfig &cfg, const std::filesystem::path &out_dir,
                  const std::optional<std::filesystem::path> &resume = std::nullopt,
                  const std::function<void(const IterationMetrics &)> &on_iteration = {});

} // namespace pdg
