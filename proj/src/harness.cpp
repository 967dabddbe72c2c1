#include "pdg/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <tuple>

namespace pdg {

std::string to_string(LandingCategory c) {
    switch (c) {
    case LandingCategory::NotLanded:
        return "not_landed";
    case LandingCategory::SafelyLanded:
        return "safely_landed";
    case LandingCategory::Crashed:
        return "crashed";
    }
    return "unknown";
}

std::pair<double, double> disk_point(double rad, double u1, double u2) {
    const double r = rad * std::sqrt(u1);
    const double a = 2.0 * M_PI * u2;
    return {r * std::cos(a), r * std::sin(a)};
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> sample_initial_positions(int batch, double rad, Rng &rng) {
    if (!(rad > 0.0))
        throw ConfigError("sample_initial_positions: rad must be positive");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Eigen::VectorXd r1(batch), r2(batch);
    for (int b = 0; b < batch; ++b) {
        const double u1 = unit(rng);
        const double u2 = unit(rng);
        std::tie(r1(b), r2(b)) = disk_point(rad, u1, u2);
    }
    return {r1, r2};
}

LandingOutcome classify_landing(const std::vector<Vec7<double>> &trajectory, const PhysicalParams &p,
                                double v_safe) {
    if (trajectory.empty())
        throw std::invalid_argument("classify_landing: empty trajectory");
    const int n = static_cast<int>(trajectory.size()) - 1;
    std::vector<double> altitude(trajectory.size());
    for (std::size_t k = 0; k < trajectory.size(); ++k)
        altitude[k] = trajectory[k](idx::r3);
    LandingOutcome out;
    out.exit_index = first_exit_index(altitude, p.h_tol, n);
    const Vec7<double> &xe = trajectory[static_cast<std::size_t>(out.exit_index)];
    out.exit_time = out.exit_index * p.dt;
    out.touchdown_speed = xe.segment<3>(idx::v1).norm();
    out.fuel_used = trajectory.front()(idx::m) - xe(idx::m);
    out.final_position = xe.head<3>();
    if (exit_mask(xe(idx::r3), p.h_tol))
        out.category = LandingCategory::NotLanded;
    else
        out.category = out.touchdown_speed <= v_safe ? LandingCategory::SafelyLanded : LandingCategory::Crashed;
    return out;
}

LandingOutcome classify_landing(const RolloutRecord &record, int b, const PhysicalParams &p, double v_safe) {
    std::vector<Vec7<double>> traj;
    traj.reserve(record.states.size());
    for (const auto &s : record.states)
        traj.push_back(s.row(b).transpose());
    return classify_landing(traj, p, v_safe);
}

EvalStats summarize(const RolloutRecord &record, const PhysicalParams &p, double v_safe) {
    EvalStats s;
    s.batch = record.batch();
    s.t_f = record.steps() * p.dt;
    int n_not = 0, n_safe = 0;
    double fuel = 0.0, exit_time = 0.0;
    const double mass_noise_rate = p.alpha * p.gamma_diag.norm();
    for (int b = 0; b < s.batch; ++b) {
        LandingOutcome o = classify_landing(record, b, p, v_safe);
        n_not += o.category == LandingCategory::NotLanded;
        n_safe += o.category == LandingCategory::SafelyLanded;
        fuel += o.fuel_used;
        exit_time += o.exit_time;
        if (o.fuel_used < -3.0 * mass_noise_rate * std::sqrt(o.exit_time))
            ++s.negative_fuel_flags;
        s.outcomes.push_back(o);
    }
    if (s.batch > 0) {
        const double n = static_cast<double>(s.batch);
        s.frac_not_landed = n_not / n;
        s.frac_safe = n_safe / n;
        s.frac_crashed = 1.0 - (s.frac_not_landed + s.frac_safe);
        s.mean_fuel_kg = fuel / n;
        s.mean_exit_time_s = exit_time / n;
    }
    return s;
}

EvalStats evaluate(const ad::ParameterStore &params, const EvalSettings &settings, RolloutRecord *keep) {
    if (settings.batch < 1)
        throw ConfigError("eval.batch must be >= 1");
    const PhysicalParams &p = settings.rollout.physics;
    Rng pos_rng = make_stream(settings.seed, Stream::initial_positions, settings.stream);
    const Eigen::MatrixXd x0 = initial_states(p, settings.batch, pos_rng);
    RolloutSettings rs = settings.rollout;
    rs.seed = settings.seed;
    rs.stream = settings.stream;
    RolloutRecord rec = forward_pass(params, x0, rs);
    EvalStats stats = summarize(rec, p, settings.v_safe);
    stats.novas_iters = rs.novas.iterations;
    stats.novas_samples = rs.novas.samples;
    stats.seed = settings.seed;
    if (keep)
        *keep = std::move(rec);
    return stats;
}

nlohmann::json summary_json(const EvalStats &s) {
    return {{"B", s.batch},
            {"t_f", s.t_f},
            {"novas_iters", s.novas_iters},
            {"novas_samples", s.novas_samples},
            {"frac_not_landed", s.frac_not_landed},
            {"frac_safe", s.frac_safe},
            {"frac_crashed", s.frac_crashed},
            {"mean_fuel_kg", s.mean_fuel_kg},
            {"mean_exit_time_s", s.mean_exit_time_s},
            {"seed", s.seed}};
}

namespace {

void write_or_throw(std::ofstream &out, const std::filesystem::path &path) {
    if (!out)
        throw std::runtime_error("failed writing '" + path.string() + "'");
}

} // namespace

void export_rollouts(const RolloutRecord &record, const EvalStats &stats, const PhysicalParams &p,
                     const std::filesystem::path &out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
        throw std::runtime_error("cannot create '" + out_dir.string() + "': " + ec.message());
    const int n = record.steps();
    char buf[32];
    auto put = [&](std::ostream &os, double v) {
        // shortest round-trip representation
        auto [end, err] = std::to_chars(buf, buf + sizeof buf, v);
        os.write(buf, end - buf);
    };
    for (int b = 0; b < record.batch(); ++b) {
        const auto path = out_dir / ("rollout_" + std::to_string(b) + ".csv");
        std::ofstream out(path);
        write_or_throw(out, path);
        out << kTrajectoryHeader << '\n';
        for (int k = 0; k <= n; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            const auto &x = record.states[kk];
            const int kc = std::min(k, n - 1);
            Eigen::Vector3d thrust = Eigen::Vector3d::Zero();
            if (kc >= 0)
                thrust = record.controls[static_cast<std::size_t>(kc)].row(b).transpose();
            const int mask = k < n ? record.masks(b, k) : exit_mask(x(b, idx::r3), p.h_tol);
            put(out, k * p.dt);
            for (int j = 0; j < 7; ++j) {
                out << ',';
                put(out, x(b, j));
            }
            for (int j = 0; j < 3; ++j) {
                out << ',';
                put(out, thrust(j));
            }
            out << ',';
            put(out, thrust.norm());
            out << ',' << mask << ',';
            put(out, record.values(b, k));
            out << '\n';
        }
        write_or_throw(out, path);
    }
    const auto summary = out_dir / "summary.json";
    std::ofstream js(summary);
    write_or_throw(js, summary);
    js << summary_json(stats).dump(2) << '\n';
    write_or_throw(js, summary);
}

std::vector<TrajectoryRow> read_trajectory_csv(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line) || line != kTrajectoryHeader)
        throw std::runtime_error(path.string() + ": row 1: unexpected header");
    std::vector<TrajectoryRow> rows;
    int row_no = 1;
    while (std::getline(in, line)) {
        ++row_no;
        if (line.empty())
            continue;
        double f[14];
        const char *ptr = line.data();
        const char *end = line.data() + line.size();
        for (int j = 0; j < 14; ++j) {
            auto [next, err] = std::from_chars(ptr, end, f[j]);
            const bool last = j == 13;
            if (err != std::errc() || (!last && (next == end || *next != ',')) || (last && next != end))
                throw std::runtime_error(path.string() + ": row " + std::to_string(row_no) + ": malformed field " +
                                         std::to_string(j + 1));
            ptr = next + 1;
        }
        TrajectoryRow r;
        r.t = f[0];
        for (int j = 0; j < 7; ++j)
            r.x(j) = f[1 + j];
        r.thrust = Eigen::Vector3d(f[8], f[9], f[10]);
        r.thrust_norm = f[11];
        r.mask = static_cast<int>(f[12]);
        r.value = f[13];
        rows.push_back(r);
    }
    return rows;
}

} // namespace pdg
