#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pdg/fbsde.hpp"

namespace pdg {

enum class LandingCategory { NotLanded, SafelyLanded, Crashed };

[[nodiscard]] std::string to_string(LandingCategory c);

struct LandingOutcome {
    LandingCategory category = LandingCategory::NotLanded;
    int exit_index = 0;
    double exit_time = 0.0;       ///< s
    double touchdown_speed = 0.0; ///< |v| at the exit index, m/s
    double fuel_used = 0.0;       ///< m(0) - m(exit), kg
    Eigen::Vector3d final_position = Eigen::Vector3d::Zero();
};

/// Area-uniform points on the disk of radius `rad`: radius rad*sqrt(u1), angle 2*pi*u2.
[[nodiscard]] std::pair<Eigen::VectorXd, Eigen::VectorXd> sample_initial_positions(int batch, double rad, Rng &rng);

/// Same map from explicit uniforms (u1, u2) in [0, 1].
[[nodiscard]] std::pair<double, double> disk_point(double rad, double u1, double u2);

/// Classifies one trajectory of N+1 states: not landed if altitude never
/// reaches h_tol, else safe when |v| at first exit is at most v_safe.
[[nodiscard]] LandingOutcome classify_landing(const std::vector<Vec7<double>> &trajectory, const PhysicalParams &p,
                                              double v_safe);
[[nodiscard]] LandingOutcome classify_landing(const RolloutRecord &record, int b, const PhysicalParams &p,
                                              double v_safe);

struct EvalSettings {
    RolloutSettings rollout; ///< physics.t_f is the test horizon
    int batch = 1024;
    std::uint64_t seed = 0;
    double v_safe = 1.52;
    /// Stream index for initial positions and noise; distinct from any
    /// training iteration so evaluation uses held-out draws.
    std::uint64_t stream = 1ull << 40;
};

struct EvalStats {
    int batch = 0;
    double t_f = 0.0;
    int novas_iters = 0;
    int novas_samples = 0;
    double frac_not_landed = 0.0;
    double frac_safe = 0.0;
    double frac_crashed = 0.0;
    double mean_fuel_kg = 0.0;
    double mean_exit_time_s = 0.0;
    std::uint64_t seed = 0;
    std::vector<LandingOutcome> outcomes;
    /// Rollouts whose fuel use is below -3 sigma of the accumulated mass noise.
    int negative_fuel_flags = 0;
};

/// Summary statistics over a finished batch of rollouts. The three fractions
/// are computed so that (not_landed + safe) + crashed == 1 exactly.
[[nodiscard]] EvalStats summarize(const RolloutRecord &record, const PhysicalParams &p, double v_safe);

/// Runs `batch` independent tape-free rollouts from cone-base initial states.
EvalStats evaluate(const ad::ParameterStore &params, const EvalSettings &settings, RolloutRecord *keep = nullptr);

[[nodiscard]] nlohmann::json summary_json(const EvalStats &stats);

inline constexpr const char *kTrajectoryHeader = "t,r1,r2,r3,v1,v2,v3,m,T1,T2,T3,Tnorm,mask,value";

/// Writes rollout_<b>.csv (N+1 rows each) and summary.json into out_dir.
/// Row N has no control of its own: it repeats the last applied control and
/// its mask is the airborne flag of the final state.
void export_rollouts(const RolloutRecord &record, const EvalStats &stats, const PhysicalParams &p,
                     const std::filesystem::path &out_dir);

struct TrajectoryRow {
    double t;
    Vec7<double> x;
    Eigen::Vector3d thrust;
    double thrust_norm;
    int mask;
    double value;
};

/// Reads a CSV written by export_rollouts; throws std::runtime_error naming file and row.
[[nodiscard]] std::vector<TrajectoryRow> read_trajectory_csv(const std::filesystem::path &path);

} // namespace pdg
