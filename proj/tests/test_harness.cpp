#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "pdg/harness.hpp"

using namespace pdg;

namespace {

std::vector<Vec7<double>> descent(const std::vector<double> &altitude, double touchdown_v3) {
    std::vector<Vec7<double>> traj;
    for (std::size_t k = 0; k < altitude.size(); ++k) {
        Vec7<double> x;
        x << 1.0, 2.0, altitude[k], 0.0, 0.0, altitude[k] <= 1e-3 ? touchdown_v3 : -3.0, 1905.0 - 2.0 * k;
        traj.push_back(x);
    }
    return traj;
}

EvalSettings small_eval(int batch) {
    EvalSettings e;
    e.rollout.physics.t_f = 0.5;
    e.rollout.physics.dt = 0.05;
    e.rollout.novas.samples = 20;
    e.rollout.novas.iterations = 2;
    e.rollout.scaling = InputScaling::from(e.rollout.physics);
    e.batch = batch;
    e.seed = 5;
    return e;
}

} // namespace

TEST_CASE("disk map boundaries") {
    const auto [x0, y0] = disk_point(80.0, 0.0, 0.3);
    CHECK(x0 == 0.0);
    CHECK(y0 == 0.0);
    const auto [x1, y1] = disk_point(80.0, 1.0, 0.0);
    CHECK(x1 == 80.0);
    CHECK(y1 == 0.0);
    const auto [x2, y2] = disk_point(80.0, 0.25, 0.25);
    CHECK(std::hypot(x2, y2) == doctest::Approx(40.0));
    CHECK(std::abs(x2) < 1e-12);

    Rng rng(3);
    const auto [r1, r2] = sample_initial_positions(500, 80.0, rng);
    CHECK(((r1.array().square() + r2.array().square()).sqrt() <= 80.0).all());
    CHECK_THROWS_AS((void)sample_initial_positions(4, 0.0, rng), ConfigError);
}

TEST_CASE("landing classification") {
    const PhysicalParams p;
    const double v_safe = 1.52;
    SUBCASE("slow touchdown is safe") {
        const LandingOutcome o = classify_landing(descent({80, 40, 5, 0.0, 0.0}, -1.0), p, v_safe);
        CHECK(o.category == LandingCategory::SafelyLanded);
        CHECK(o.exit_index == 3);
        CHECK(o.exit_time == doctest::Approx(3 * p.dt));
        CHECK(o.touchdown_speed == doctest::Approx(1.0));
        CHECK(o.fuel_used == doctest::Approx(6.0));
    }
    SUBCASE("fast touchdown is a crash") {
        CHECK(classify_landing(descent({80, 40, 0.0}, -2.0), p, v_safe).category == LandingCategory::Crashed);
    }
    SUBCASE("threshold is inclusive") {
        CHECK(classify_landing(descent({80, 0.0}, -1.52), p, v_safe).category == LandingCategory::SafelyLanded);
    }
    SUBCASE("holding at 5 m never lands") {
        const LandingOutcome o = classify_landing(descent({80, 40, 5, 5, 5}, -1.0), p, v_safe);
        CHECK(o.category == LandingCategory::NotLanded);
        CHECK(o.exit_index == 4);
    }
    SUBCASE("landing on the final step counts") {
        const LandingOutcome o = classify_landing(descent({80, 40, 5, 0.0}, -0.5), p, v_safe);
        CHECK(o.category == LandingCategory::SafelyLanded);
        CHECK(o.exit_index == 3);
    }
    CHECK(to_string(LandingCategory::Crashed) == "crashed");
}

TEST_CASE("evaluation fractions, reproducibility and thrust bounds") {
    const auto params = init_params(NetworkConfig{}, 1);
    const EvalSettings e = small_eval(6);
    RolloutRecord rec;
    const EvalStats a = evaluate(params, e, &rec);
    const EvalStats b = evaluate(params, e);
    CHECK((a.frac_not_landed + a.frac_safe) + a.frac_crashed == 1.0);
    CHECK(a.frac_not_landed == b.frac_not_landed);
    CHECK(a.mean_fuel_kg == b.mean_fuel_kg);
    CHECK(a.outcomes.size() == 6);

    const PhysicalParams &p = e.rollout.physics;
    for (int k = 0; k < rec.steps(); ++k)
        for (int bi = 0; bi < rec.batch(); ++bi) {
            if (!rec.masks(bi, k))
                continue;
            const Eigen::Vector3d t = rec.controls[static_cast<std::size_t>(k)].row(bi).transpose();
            CHECK(t.norm() >= p.rho1 - 1e-9);
            CHECK(t.norm() <= p.rho2 + 1e-9);
            CHECK(t(2) >= t.norm() * std::cos(p.theta) - 1e-9);
        }

    const nlohmann::json j = summary_json(a);
    for (const char *key : {"B", "t_f", "novas_iters", "novas_samples", "frac_not_landed", "frac_safe", "frac_crashed",
                            "mean_fuel_kg", "mean_exit_time_s", "seed"})
        CHECK(j.contains(key));
}

TEST_CASE("export and read back") {
    const auto params = init_params(NetworkConfig{}, 2);
    EvalSettings e = small_eval(2);
    e.rollout.physics.t_f = 0.5;
    RolloutRecord rec;
    const EvalStats stats = evaluate(params, e, &rec);
    REQUIRE(rec.steps() == 10);
    const auto dir = std::filesystem::temp_directory_path() / "pdg_export_test";
    std::filesystem::remove_all(dir);
    export_rollouts(rec, stats, e.rollout.physics, dir);
    CHECK(std::filesystem::exists(dir / "summary.json"));
    for (int b = 0; b < 2; ++b) {
        const auto rows = read_trajectory_csv(dir / ("rollout_" + std::to_string(b) + ".csv"));
        REQUIRE(rows.size() == 11);
        for (int k = 0; k <= 10; ++k) {
            CHECK((rows[static_cast<std::size_t>(k)].x - rec.state(b, k)).cwiseAbs().maxCoeff() <= 1e-12);
            CHECK(rows[static_cast<std::size_t>(k)].value == rec.values(b, k));
            CHECK(rows[static_cast<std::size_t>(k)].t == doctest::Approx(k * 0.05));
        }
        CHECK(rows[3].thrust == rec.controls[3].row(b).transpose());
    }

    std::ofstream(dir / "bad.csv") << kTrajectoryHeader << "\n0,1,2,3,4,5,6,7,8,9,10,11,1,0\n0,1,2,oops\n";
    CHECK_THROWS_WITH((void)read_trajectory_csv(dir / "bad.csv"), doctest::Contains("row 3"));
    std::filesystem::remove_all(dir);
}
