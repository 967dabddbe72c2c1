// Acceptance checks: one PASS/FAIL line per criterion. Exit status covers 1-9;
// the stretch check (10) is reported but never fails the run.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <numeric>
#include <string>
#include <vector>

#include "pdg/checkpoint.hpp"
#include "pdg/config.hpp"
#include "pdg/verify.hpp"

using namespace pdg;

namespace {

constexpr std::uint64_t kSeed = 0;
constexpr std::uint64_t kTrainSeed = 1;

// runtime budgets [s]
constexpr double kConstraintsBudget = 60.0;
constexpr double kRecoveryBudget = 10.0;
constexpr double kOracleBudget = 300.0;
constexpr double kGradBudget = 120.0;
constexpr double kSdeBudget = 60.0;
constexpr double kTrainBudget = 7200.0;

// criterion 9
constexpr double kLossRatio = 0.7;
constexpr double kSafeGain = 0.30;
constexpr int kHeldOut = 256;
constexpr double kHeldOutHorizon = 20.0;
constexpr std::uint64_t kHeldOutStream = 1ull << 41;

const char *kScaledConfig = R"(
[physics]
t_f = 10.0
dt = 0.1

[novas]
samples = 100
iterations = 5

[train]
batch = 64
iterations = 500
checkpoint_every = 100
)";

struct Line {
    int id;
    bool gating;
    bool passed;
    std::string text;
};

std::vector<Line> lines;

void report(int id, bool passed, const std::string &text, bool gating = true) {
    lines.push_back({id, gating, passed, text});
    std::printf("%s  criterion %d  %s\n", passed ? "PASS" : "FAIL", id, text.c_str());
    std::fflush(stdout);
}

template <typename... A> std::string fmt(const char *f, A... a) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, a...);
    return buf;
}

void timed(int id, const std::string &label, const verify::CheckResult &r, double budget) {
    const bool ok = r.passed && r.seconds <= budget;
    report(id, ok,
           label + fmt(": measured %.4g, limit %.4g, %.1f s", r.measured, r.limit, r.seconds) +
               (r.seconds > budget ? " (over time budget)" : "") + (r.detail.empty() ? "" : "; " + r.detail));
}

double mean(const std::vector<double> &v, std::size_t from, std::size_t to) {
    return std::accumulate(v.begin() + static_cast<long>(from), v.begin() + static_cast<long>(to), 0.0) /
           static_cast<double>(to - from);
}

void scaled_training() {
    const RunConfig cfg = parse_config(kScaledConfig, "scaled");
    TrainConfig tc = cfg.training();
    tc.seed = kTrainSeed;
    const auto dir = std::filesystem::temp_directory_path() / "pdg_acceptance_train";
    std::filesystem::remove_all(dir);

    const auto t0 = std::chrono::steady_clock::now();
    const TrainResult trained = train(tc, dir);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::vector<double> loss;
    for (const auto &m : trained.metrics)
        loss.push_back(m.loss);
    const double first = mean(loss, 0, 20);
    const double last = mean(loss, loss.size() - 50, loss.size());
    const bool loss_ok = last <= kLossRatio * first && seconds <= kTrainBudget;

    EvalSettings es = cfg.evaluation();
    es.rollout = tc.rollout;
    es.rollout.physics.t_f = kHeldOutHorizon;
    es.rollout.steps = 0;
    es.batch = kHeldOut;
    es.seed = kTrainSeed;
    es.stream = kHeldOutStream;
    const EvalStats after = evaluate(trained.params, es);
    const EvalStats before = evaluate(init_params(tc.rollout.net, kTrainSeed), es);
    const double gain = after.frac_safe - before.frac_safe;
    report(9, loss_ok && gain >= kSafeGain,
           fmt("scaled training: (a) %s loss ratio last50/first20 %.4g, limit %.2g, %.0f s; "
               "(b) %s safe fraction trained %.4f vs untrained %.4f, gain limit %.2f "
               "(trained: not landed %.4f, crashed %.4f, mean exit %.2f s)",
               loss_ok ? "PASS" : "FAIL", last / first, kLossRatio, seconds, gain >= kSafeGain ? "PASS" : "FAIL",
               after.frac_safe, before.frac_safe, kSafeGain, after.frac_not_landed, after.frac_crashed,
               after.mean_exit_time_s));
    std::filesystem::remove_all(dir);
}

void stretch() {
    const char *ckpt = std::getenv("PDG_ACCEPT_STRETCH_CKPT");
    if (!ckpt) {
        report(10, false, "stretch: not run (set PDG_ACCEPT_STRETCH_CKPT to a full-configuration checkpoint)", false);
        return;
    }
    const RunConfig cfg;
    const Checkpoint ck = load_checkpoint(ckpt);
    EvalSettings es = cfg.evaluation();
    es.rollout.scaling = InputScaling::from_metadata(ck.metadata);
    std::vector<double> safe;
    for (int iters : {10, 20}) {
        es.rollout.novas.iterations = iters;
        safe.push_back(evaluate(ck.params, es).frac_safe);
    }
    report(10, safe[1] >= safe[0], fmt("stretch: safe fraction %.4f at 10 NOVAS iterations, %.4f at 20 (not gating)",
                                       safe[0], safe[1]),
           false);
}

} // namespace

int main() {
    timed(1, "constraint satisfaction", verify::check_constraints(kSeed), kConstraintsBudget);
    timed(2, "NOVAS recovery", verify::check_novas_recovery(kSeed), kRecoveryBudget);
    timed(3, "Hamiltonian oracle", verify::check_hamiltonian_oracle(kSeed), kOracleBudget);
    {
        const verify::CheckResult op = verify::check_gradients_per_op(kSeed);
        const verify::CheckResult roll = verify::check_gradients_rollout(kSeed);
        const bool ok = op.passed && roll.passed && op.seconds + roll.seconds <= kGradBudget;
        report(4, ok,
               fmt("gradient fidelity: per-op %.3g (limit %.0e), rollout %.3g (limit %.0e), %.1f s", op.measured,
                   op.limit, roll.measured, roll.limit, op.seconds + roll.seconds));
    }
    timed(5, "SDE variance", verify::check_sde_variance(kSeed), kSdeBudget);
    timed(6, "BSDE identity", verify::check_bsde_identity(), 1e9);
    timed(7, "first-exit semantics", verify::check_first_exit(kSeed), 1e9);
    timed(8, "cone sampling KS", verify::check_cone_sampling(kSeed), 1e9);
    scaled_training();
    stretch();

    bool ok = true;
    for (const Line &l : lines)
        ok = ok && (l.passed || !l.gating);
    std::printf("%s\n", ok ? "acceptance: all gating criteria passed" : "acceptance: some gating criteria failed");
    return ok ? 0 : 1;
}
