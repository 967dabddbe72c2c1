#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pdg::verify {

struct CheckResult {
    std::string name;
    bool passed = false;
    double measured = 0.0; ///< the quantity compared against `limit`
    double limit = 0.0;
    std::string detail;
    double seconds = 0.0;
};

/// 10^6 sampled-and-projected NOVAS controls from random distributions, lifted
/// to thrust; counts violations of the norm and pointing bounds beyond 1e-9.
CheckResult check_constraints(std::uint64_t seed, int samples = 1'000'000);

/// Minimizes (|T| - 9000)^2 with M=200, alpha=1, 20 iterations; mean
/// |mu3 - 9000| over 20 seeds against 1% of the admissible norm range.
CheckResult check_novas_recovery(std::uint64_t seed, int seeds = 20);

/// NOVAS layer (M=200, 20 iterations) against the minimum over a 41^3 grid
/// of the feasible box, for random (state, Vx) pairs.
CheckResult check_hamiltonian_oracle(std::uint64_t seed, int cases = 100);

/// Central differences against tape gradients for every primitive op.
CheckResult check_gradients_per_op(std::uint64_t seed);

/// Central differences against tape gradients of the rollout loss w.r.t. all
/// network parameters (B=2, 5 steps, M=20, 2 NOVAS iterations), with noise
/// and NOVAS samples replayed so the perturbed passes see the same draws.
CheckResult check_gradients_rollout(std::uint64_t seed);

/// alpha = 0, hover thrust: velocity variance at t = 1 s over 10^5 paths
/// against (Gamma_ii / m0)^2 t.
CheckResult check_sde_variance(std::uint64_t seed, int paths = 100'000);

/// Gamma = 0 and a fixed control schedule: V[0] - V[N] against an
/// independently accumulated running cost.
CheckResult check_bsde_identity();

/// Exhaustive synthetic altitude sequences plus frozen-rollout checks.
CheckResult check_first_exit(std::uint64_t seed);

/// Kolmogorov-Smirnov statistic of sampled radii against (r/rad)^2.
CheckResult check_cone_sampling(std::uint64_t seed, int samples = 100'000);

/// Suite names: constraints, novas, gradcheck, sde, all. Throws
/// std::invalid_argument for anything else.
std::vector<CheckResult> run_suite(const std::string &suite, std::uint64_t seed);

[[nodiscard]] bool is_suite(const std::string &suite);

} // namespace pdg::verify
