#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include "pdg/config.hpp"

using namespace pdg;

namespace {

EnvLookup fake_env(std::map<std::string, std::string> vars) {
    return [vars = std::move(vars)](const std::string &name) -> std::optional<std::string> {
        const auto it = vars.find(name);
        if (it == vars.end())
            return std::nullopt;
        return it->second;
    };
}

} // namespace

TEST_CASE("defaults are the reference configuration") {
    const RunConfig c = parse_config("");
    CHECK(c.physics.g(2) == 3.7144);
    CHECK(c.physics.alpha == 4.85e-4);
    CHECK(c.physics.rho1 == 4970.0);
    CHECK(c.physics.rho2 == 13340.0);
    CHECK(c.physics.m_dry == 1700.0);
    CHECK(c.physics.m_init == 1905.0);
    CHECK(c.physics.dt == 0.05);
    CHECK(c.physics.t_f == 20.0);
    CHECK(c.physics.rad == 80.0);
    CHECK(c.physics.v_init(2) == -10.0);
    CHECK(c.weights.q_ctrl == CostWeights{}.q_ctrl);
    CHECK(c.novas.samples == 200);
    CHECK(c.novas.iterations == 10);
    CHECK(c.novas.eps_var == 1e5);
    CHECK(c.net.lstm_layers == 2);
    CHECK(c.net.hidden == 16);
    CHECK(c.train_iterations == 7000);
    CHECK(c.lr_schedule == std::vector<std::pair<int, double>>{{0, 5e-4}, {3000, 1e-4}});
    CHECK(c.eval.batch == 1024);
    CHECK(c.eval.t_f == 40.0);
    CHECK(c.eval.novas_iters == 20);
    CHECK(c.eval.v_safe == 1.52);
}

TEST_CASE("values, comments and arrays") {
    const RunConfig c = parse_config("# scaled run\n"
                                     "[physics]\n"
                                     "t_f = 10.0  # seconds\n"
                                     "dt = 0.1\n"
                                     "gamma_diag = [0, 0, 2e-4]\n"
                                     "[train]\n"
                                     "lr_schedule = [0, 1e-3, 100, 2e-4]\n"
                                     "[run]\n"
                                     "out_dir = \"runs/x\"\n"
                                     "seed = 12\n");
    CHECK(c.physics.num_steps() == 100);
    CHECK(c.physics.gamma_diag(2) == 2e-4);
    CHECK(c.lr_schedule.size() == 2);
    CHECK(c.training().lr_at(150) == 2e-4);
    CHECK(c.out_dir == "runs/x");
    CHECK(c.seed == 12);
    CHECK(c.training().rollout.resolved_steps() == 100);
    CHECK(c.evaluation().rollout.physics.t_f == 40.0);
    CHECK(c.evaluation().rollout.novas.iterations == 20);
}

TEST_CASE("environment overrides file values") {
    const RunConfig c =
        parse_config("[novas]\nsamples = 50\n", "t.toml", fake_env({{"PDG_NOVAS_SAMPLES", "64"}, {"PDG_RUN_SEED", "7"}}));
    CHECK(c.novas.samples == 64);
    CHECK(c.seed == 7);
    CHECK_THROWS_WITH_AS((void)parse_config("", "t", fake_env({{"PDG_NOVAS_SAMPLES", "many"}})),
                         doctest::Contains("PDG_NOVAS_SAMPLES"), ConfigError);
}

TEST_CASE("errors carry source and line") {
    CHECK_THROWS_WITH_AS((void)parse_config("[physics]\n\nbogus = 1\n", "a.toml"), doctest::Contains("a.toml:3:"),
                         ConfigError);
    CHECK_THROWS_WITH_AS((void)parse_config("[physics]\nbogus = 1\n"), doctest::Contains("physics.bogus"),
                         ConfigError);
    CHECK_THROWS_WITH_AS((void)parse_config("[novas]\nsamples = 1.5\n", "b.toml"), doctest::Contains("b.toml:2:"),
                         ConfigError);
    CHECK_THROWS_AS((void)parse_config("[physics\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_config("[physics]\ndt\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_config("[physics]\ntheta = 0.3\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_config("[physics]\ndt = 0.03\n"), ConfigError);
}

TEST_CASE("resolved config round trip") {
    RunConfig c;
    c.physics.t_f = 12.5;
    c.physics.dt = 0.1;
    c.novas.init_std = {1.0 / 3.0, 2.0, 700.0};
    c.lr_schedule = {{0, 1e-3}, {50, 3e-4}};
    c.out_dir = "somewhere else";
    c.seed = 1ull << 40;
    const std::string text = to_config_text(c);
    const RunConfig back = parse_config(text);
    CHECK(back.physics.t_f == c.physics.t_f);
    CHECK(back.novas.init_std == c.novas.init_std);
    CHECK(back.lr_schedule == c.lr_schedule);
    CHECK(back.out_dir == c.out_dir);
    CHECK(back.seed == c.seed);
    CHECK(to_config_text(back) == text);
}

TEST_CASE("missing file names the path") {
    const auto p = std::filesystem::temp_directory_path() / "pdg_no_such_config.toml";
    std::filesystem::remove(p);
    CHECK_THROWS_WITH_AS((void)load_config(p, {}), doctest::Contains(p.string().c_str()), ConfigError);

    std::ofstream(p) << "[eval]\nbatch = 8\n";
    CHECK(load_config(p, {}).eval.batch == 8);
    std::filesystem::remove(p);
}
