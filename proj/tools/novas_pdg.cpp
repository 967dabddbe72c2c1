// novas_pdg: train, evaluate and verify the FBSDE landing controller.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "pdg/checkpoint.hpp"
#include "pdg/config.hpp"
#include "pdg/verify.hpp"

namespace {

enum Exit { kOk = 0, kRuntime = 1, kConfig = 2, kCheckpoint = 3 };

pdg::RunConfig load(const std::string &path) {
    if (path.empty())
        return pdg::parse_config("", "<defaults>", pdg::process_env());
    return pdg::load_config(path);
}

pdg::Checkpoint load_compatible(const std::string &path, const pdg::NetworkConfig &net) {
    pdg::Checkpoint ckpt = pdg::load_checkpoint(path);
    try {
        pdg::check_params(ckpt.params, net);
    } catch (const pdg::ad::ShapeError &e) {
        throw pdg::CheckpointError(path + ": " + e.what());
    }
    return ckpt;
}

int run_train(const std::string &config, const std::string &resume, const std::string &out,
              const std::optional<std::uint64_t> &seed) {
    pdg::RunConfig cfg = load(config);
    if (seed)
        cfg.seed = *seed;
    if (!out.empty())
        cfg.out_dir = out;
    std::optional<std::filesystem::path> resume_path;
    if (!resume.empty()) {
        resume_path = resume;
        (void)load_compatible(resume, cfg.net);
    }
    pdg::write_resolved_config(cfg, std::filesystem::path(cfg.out_dir) / "config.resolved.toml");
    const auto result = pdg::train(cfg.training(), cfg.out_dir, resume_path, [](const pdg::IterationMetrics &m) {
        std::printf("iter %5d  loss %.6g  lr %.1e  exit %.2fs  safe %.3f  fuel %.2fkg\n", m.iter, m.loss, m.lr,
                    m.mean_exit_time_s, m.safe_frac, m.mean_fuel_kg);
        std::fflush(stdout);
    });
    std::cout << "checkpoint: " << result.last_checkpoint.string() << '\n';
    return kOk;
}

int run_eval(const std::string &config, const std::string &checkpoint, const std::string &out,
             const std::optional<int> &batch, const std::optional<double> &tf, const std::optional<int> &iters,
             const std::optional<int> &samples, const std::optional<std::uint64_t> &seed) {
    pdg::RunConfig cfg = load(config);
    if (batch)
        cfg.eval.batch = *batch;
    if (tf)
        cfg.eval.t_f = *tf;
    if (iters)
        cfg.eval.novas_iters = *iters;
    if (samples)
        cfg.eval.novas_samples = *samples;
    if (seed)
        cfg.seed = *seed;
    if (!out.empty())
        cfg.out_dir = out;
    cfg.validate();

    const pdg::Checkpoint ckpt = load_compatible(checkpoint, cfg.net);
    pdg::EvalSettings settings = cfg.evaluation();
    try {
        settings.rollout.scaling = pdg::InputScaling::from_metadata(ckpt.metadata);
    } catch (const pdg::ad::ShapeError &e) {
        throw pdg::CheckpointError(checkpoint + ": " + e.what());
    }
    pdg::write_resolved_config(cfg, std::filesystem::path(cfg.out_dir) / "config.resolved.toml");

    pdg::RolloutRecord record;
    const pdg::EvalStats stats = pdg::evaluate(ckpt.params, settings, &record);
    pdg::export_rollouts(record, stats, settings.rollout.physics, cfg.out_dir);

    std::printf("B=%d  t_f=%.1fs  NOVAS %d iters x %d samples\n", stats.batch, stats.t_f, stats.novas_iters,
                stats.novas_samples);
    std::printf("  %-14s %8.4f\n  %-14s %8.4f\n  %-14s %8.4f\n", "not landed", stats.frac_not_landed,
                "safely landed", stats.frac_safe, "crashed", stats.frac_crashed);
    std::printf("  mean fuel %.3f kg, mean exit time %.3f s\n", stats.mean_fuel_kg, stats.mean_exit_time_s);
    if (stats.negative_fuel_flags > 0)
        std::printf("  warning: %d rollouts gained mass beyond 3 sigma of the mass noise\n",
                    stats.negative_fuel_flags);
    return kOk;
}

int run_verify(const std::string &suite, std::uint64_t seed) {
    if (!pdg::verify::is_suite(suite)) {
        std::cerr << "error: unknown suite '" << suite << "' (expected novas|gradcheck|sde|constraints|all)\n";
        return kConfig;
    }
    bool ok = true;
    for (const auto &r : pdg::verify::run_suite(suite, seed)) {
        std::printf("%s %-20s %s [%.2fs]\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str(),
                    r.seconds);
        ok = ok && r.passed;
    }
    return ok ? kOk : kRuntime;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"FBSDE powered-descent guidance with a NOVAS control layer"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "worker threads (0 = runtime default)")->check(CLI::NonNegativeNumber);

    std::string config, resume, out, checkpoint, suite = "all";
    std::optional<std::uint64_t> seed;
    std::optional<int> batch, iters, samples;
    std::optional<double> tf;

    auto *train = app.add_subcommand("train", "train the value-gradient network");
    train->add_option("--config", config, "config file")->required();
    train->add_option("--resume", resume, "checkpoint to resume from");
    train->add_option("--out", out, "output directory");
    train->add_option("--seed", seed, "master seed");

    auto *eval = app.add_subcommand("eval", "Monte-Carlo landing evaluation and trajectory export");
    eval->add_option("--config", config, "config file")->required();
    eval->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
    eval->add_option("--batch", batch, "number of rollouts (default 1024)");
    eval->add_option("--tf", tf, "test horizon in seconds (default 40)");
    eval->add_option("--novas-iters", iters, "NOVAS inner iterations (default 20)");
    eval->add_option("--novas-samples", samples, "NOVAS samples (default 200)");
    eval->add_option("--out", out, "output directory");
    eval->add_option("--seed", seed, "master seed");

    auto *verify = app.add_subcommand("verify", "run the numerical property suites");
    verify->add_option("--suite", suite, "novas|gradcheck|sde|constraints|all");
    verify->add_option("--seed", seed, "master seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

#ifdef _OPENMP
    if (threads > 0)
        omp_set_num_threads(threads);
#endif

    try {
        if (*train)
            return run_train(config, resume, out, seed);
        if (*eval)
            return run_eval(config, checkpoint, out, batch, tf, iters, samples, seed);
        return run_verify(suite, seed.value_or(0));
    } catch (const pdg::ConfigError &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const pdg::CheckpointError &e) {
        std::cerr << "checkpoint error: " << e.what() << '\n';
        return kCheckpoint;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
}
