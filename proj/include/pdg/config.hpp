#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "pdg/fbsde.hpp"
#include "pdg/harness.hpp"

namespace pdg {

/// Test-time overrides applied on top of the training rollout settings.
struct EvalConfig {
    int batch = 1024;
    double t_f = 40.0;
    int novas_iters = 20;
    int novas_samples = 200;
    double v_safe = 1.52;
};

/// Everything a CLI run needs. Defaults reproduce the reference configuration.
struct RunConfig {
    PhysicalParams physics;
    CostWeights weights;
    NovasConfig novas;
    NetworkConfig net;
    int train_batch = 128;
    int train_iterations = 7000;
    std::vector<std::pair<int, double>> lr_schedule{{0, 5e-4}, {3000, 1e-4}};
    int checkpoint_every = 500;
    EvalConfig eval;
    std::uint64_t seed = 0;
    std::string out_dir = "runs/default";

    [[nodiscard]] TrainConfig training() const;
    [[nodiscard]] EvalSettings evaluation() const;
    /// Throws ConfigError naming the offending key.
    void validate() const;
};

/// Looks up an environment variable; empty optional when unset.
using EnvLookup = std::function<std::optional<std::string>(const std::string &name)>;

[[nodiscard]] EnvLookup process_env();

inline constexpr const char *kEnvPrefix = "PDG_";

/// Parses `[section]` / `key = value` text. Scalars, quoted strings and flat
/// `[a, b, c]` arrays are accepted; `#` starts a comment. After the text,
/// any PDG_<SECTION>_<KEY> variable found through `env` overrides the key.
/// `source` only labels error messages.
[[nodiscard]] RunConfig parse_config(const std::string &text, const std::string &source = "<string>",
                                     const EnvLookup &env = {});

/// Reads and parses a file; a missing file is a ConfigError naming the path.
[[nodiscard]] RunConfig load_config(const std::filesystem::path &path, const EnvLookup &env = process_env());

/// Fully resolved config in the same format, every key present.
[[nodiscard]] std::string to_config_text(const RunConfig &cfg);

void write_resolved_config(const RunConfig &cfg, const std::filesystem::path &path);

} // namespace pdg
