#include "pdg/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

namespace pdg {

namespace {

std::string trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
    char buf[32];
    auto [end, err] = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, end);
    if (s.find_first_of(".eEn") == std::string::npos)
        s += ".0";
    return s;
}

double parse_double(const std::string &key, const std::string &text) {
    const std::string t = trim(text);
    double v = 0.0;
    auto [ptr, err] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || err != std::errc() || ptr != t.data() + t.size())
        throw ConfigError(key + ": expected a number, got '" + t + "'");
    return v;
}

long long parse_int(const std::string &key, const std::string &text) {
    const std::string t = trim(text);
    long long v = 0;
    auto [ptr, err] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || err != std::errc() || ptr != t.data() + t.size())
        throw ConfigError(key + ": expected an integer, got '" + t + "'");
    return v;
}

std::vector<std::string> parse_list(const std::string &key, const std::string &text) {
    const std::string t = trim(text);
    if (t.size() < 2 || t.front() != '[' || t.back() != ']')
        throw ConfigError(key + ": expected an array like [a, b, c], got '" + t + "'");
    std::vector<std::string> items;
    std::stringstream ss(t.substr(1, t.size() - 2));
    std::string item;
    while (std::getline(ss, item, ','))
        if (!trim(item).empty())
            items.push_back(trim(item));
    return items;
}

std::string parse_string(const std::string &key, const std::string &text) {
    const std::string t = trim(text);
    if (t.size() < 2 || t.front() != '"' || t.back() != '"')
        throw ConfigError(key + ": expected a quoted string, got '" + t + "'");
    return t.substr(1, t.size() - 2);
}

/// One configurable key: how to set it from text and how to print it.
struct Field {
    std::string section;
    std::string name;
    std::function<void(RunConfig &, const std::string &key, const std::string &text)> set;
    std::function<std::string(const RunConfig &)> get;
};

template <typename Sub> Field real(const std::string &sec, const std::string &name, Sub RunConfig::*sub, double Sub::*m) {
    return {sec, name,
            [sub, m](RunConfig &c, const std::string &k, const std::string &t) { (c.*sub).*m = parse_double(k, t); },
            [sub, m](const RunConfig &c) { return fmt((c.*sub).*m); }};
}

template <typename Sub> Field integer(const std::string &sec, const std::string &name, Sub RunConfig::*sub, int Sub::*m) {
    return {sec, name,
            [sub, m](RunConfig &c, const std::string &k, const std::string &t) {
                (c.*sub).*m = static_cast<int>(parse_int(k, t));
            },
            [sub, m](const RunConfig &c) { return std::to_string((c.*sub).*m); }};
}

Field integer(const std::string &sec, const std::string &name, int RunConfig::*m) {
    return {sec, name,
            [m](RunConfig &c, const std::string &k, const std::string &t) { c.*m = static_cast<int>(parse_int(k, t)); },
            [m](const RunConfig &c) { return std::to_string(c.*m); }};
}

template <typename Sub>
Field vec3(const std::string &sec, const std::string &name, Sub RunConfig::*sub, Eigen::Vector3d Sub::*m) {
    return {sec, name,
            [sub, m](RunConfig &c, const std::string &k, const std::string &t) {
                const auto items = parse_list(k, t);
                if (items.size() != 3)
                    throw ConfigError(k + ": expected 3 entries, got " + std::to_string(items.size()));
                for (int i = 0; i < 3; ++i)
                    ((c.*sub).*m)(i) = parse_double(k, items[static_cast<std::size_t>(i)]);
            },
            [sub, m](const RunConfig &c) {
                const Eigen::Vector3d &v = (c.*sub).*m;
                return "[" + fmt(v(0)) + ", " + fmt(v(1)) + ", " + fmt(v(2)) + "]";
            }};
}

const std::vector<Field> &fields() {
    static const std::vector<Field> table = [] {
        using P = PhysicalParams;
        using W = CostWeights;
        using N = NovasConfig;
        using E = EvalConfig;
        const auto ph = &RunConfig::physics;
        const auto cw = &RunConfig::weights;
        const auto nv = &RunConfig::novas;
        const auto ev = &RunConfig::eval;
        std::vector<Field> f = {
            vec3("physics", "g", ph, &P::g),
            real("physics", "alpha", ph, &P::alpha),
            vec3("physics", "gamma_diag", ph, &P::gamma_diag),
            real("physics", "rho1", ph, &P::rho1),
            real("physics", "rho2", ph, &P::rho2),
            real("physics", "theta", ph, &P::theta),
            real("physics", "gamma_gs", ph, &P::gamma_gs),
            real("physics", "m_dry", ph, &P::m_dry),
            real("physics", "m_init", ph, &P::m_init),
            real("physics", "h_tol", ph, &P::h_tol),
            real("physics", "dt", ph, &P::dt),
            real("physics", "t_f", ph, &P::t_f),
            real("physics", "rad", ph, &P::rad),
            real("physics", "r3_init", ph, &P::r3_init),
            vec3("physics", "v_init", ph, &P::v_init),
            real("costs", "Qx", cw, &W::Qx),
            real("costs", "Qy", cw, &W::Qy),
            real("costs", "Qz", cw, &W::Qz),
            real("costs", "Qvx", cw, &W::Qvx),
            real("costs", "Qvy", cw, &W::Qvy),
            real("costs", "Qvz", cw, &W::Qvz),
            real("costs", "Qm", cw, &W::Qm),
            real("costs", "c_vz_pos", cw, &W::c_vz_pos),
            real("costs", "c_vz_neg", cw, &W::c_vz_neg),
            real("costs", "q_plus", cw, &W::q_plus),
            real("costs", "q_minus", cw, &W::q_minus),
            real("costs", "q_ctrl", cw, &W::q_ctrl),
            integer("novas", "samples", nv, &N::samples),
            integer("novas", "iterations", nv, &N::iterations),
            real("novas", "step_size", nv, &N::step_size),
            real("novas", "eps_var", nv, &N::eps_var),
            {"novas", "shape",
             [](RunConfig &c, const std::string &k, const std::string &t) {
                 if (parse_string(k, t) != "exp")
                     throw ConfigError(k + ": only \"exp\" is supported");
                 c.novas.shape = ShapeFunction::exponential;
             },
             [](const RunConfig &) { return std::string("\"exp\""); }},
            vec3("novas", "init_mean", nv, &N::init_mean),
            vec3("novas", "init_std", nv, &N::init_std),
            integer("network", "lstm_layers", &RunConfig::net, &NetworkConfig::lstm_layers),
            integer("network", "hidden", &RunConfig::net, &NetworkConfig::hidden),
            integer("network", "dense_hidden", &RunConfig::net, &NetworkConfig::dense_hidden),
            integer("train", "batch", &RunConfig::train_batch),
            integer("train", "iterations", &RunConfig::train_iterations),
            integer("train", "checkpoint_every", &RunConfig::checkpoint_every),
            {"train", "lr_schedule",
             [](RunConfig &c, const std::string &k, const std::string &t) {
                 // flat pairs: [iter0, lr0, iter1, lr1, ...]
                 const auto items = parse_list(k, t);
                 if (items.empty() || items.size() % 2 != 0)
                     throw ConfigError(k + ": expected [iter, lr, iter, lr, ...]");
                 c.lr_schedule.clear();
                 for (std::size_t i = 0; i < items.size(); i += 2)
                     c.lr_schedule.emplace_back(static_cast<int>(parse_int(k, items[i])),
                                                parse_double(k, items[i + 1]));
             },
             [](const RunConfig &c) {
                 std::string s = "[";
                 for (std::size_t i = 0; i < c.lr_schedule.size(); ++i)
                     s += (i ? ", " : "") + std::to_string(c.lr_schedule[i].first) + ", " +
                          fmt(c.lr_schedule[i].second);
                 return s + "]";
             }},
            integer("eval", "batch", ev, &E::batch),
            real("eval", "t_f", ev, &E::t_f),
            integer("eval", "novas_iters", ev, &E::novas_iters),
            integer("eval", "novas_samples", ev, &E::novas_samples),
            real("eval", "v_safe", ev, &E::v_safe),
            {"run", "seed",
             [](RunConfig &c, const std::string &k, const std::string &t) {
                 const std::string s = trim(t);
                 std::uint64_t v = 0;
                 auto [ptr, err] = std::from_chars(s.data(), s.data() + s.size(), v);
                 if (s.empty() || err != std::errc() || ptr != s.data() + s.size())
                     throw ConfigError(k + ": expected a non-negative integer, got '" + s + "'");
                 c.seed = v;
             },
             [](const RunConfig &c) { return std::to_string(c.seed); }},
            {"run", "out_dir",
             [](RunConfig &c, const std::string &k, const std::string &t) { c.out_dir = parse_string(k, t); },
             [](const RunConfig &c) { return "\"" + c.out_dir + "\""; }},
        };
        return f;
    }();
    return table;
}

const Field *find_field(const std::string &section, const std::string &name) {
    for (const Field &f : fields())
        if (f.section == section && f.name == name)
            return &f;
    return nullptr;
}

std::string env_name(const Field &f) {
    std::string s = std::string(kEnvPrefix) + f.section + "_" + f.name;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::toupper(ch); });
    return s;
}

std::string strip_comment(const std::string &line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"')
            quoted = !quoted;
        else if (line[i] == '#' && !quoted)
            return line.substr(0, i);
    }
    return line;
}

} // namespace

TrainConfig RunConfig::training() const {
    TrainConfig t;
    t.batch = train_batch;
    t.iterations = train_iterations;
    t.lr_schedule = lr_schedule;
    t.checkpoint_every = checkpoint_every;
    t.seed = seed;
    t.v_safe = eval.v_safe;
    t.rollout.physics = physics;
    t.rollout.weights = weights;
    t.rollout.novas = novas;
    t.rollout.net = net;
    t.rollout.scaling = InputScaling::from(physics);
    return t;
}

EvalSettings RunConfig::evaluation() const {
    EvalSettings e;
    e.rollout = training().rollout;
    e.rollout.physics.t_f = eval.t_f;
    e.rollout.novas.iterations = eval.novas_iters;
    e.rollout.novas.samples = eval.novas_samples;
    e.batch = eval.batch;
    e.seed = seed;
    e.v_safe = eval.v_safe;
    return e;
}

void RunConfig::validate() const {
    training().validate();
    if (net.lstm_layers < 1 || net.hidden < 1 || net.dense_hidden < 1)
        throw ConfigError("network: lstm_layers, hidden and dense_hidden must be >= 1");
    if (eval.batch < 1)
        throw ConfigError("eval.batch must be >= 1");
    if (!(eval.v_safe > 0.0))
        throw ConfigError("eval.v_safe must be positive");
    PhysicalParams test_physics = physics;
    test_physics.t_f = eval.t_f;
    try {
        test_physics.validate();
    } catch (const ConfigError &e) {
        throw ConfigError(std::string("eval.t_f: ") + e.what());
    }
    NovasConfig test_novas = novas;
    test_novas.iterations = eval.novas_iters;
    test_novas.samples = eval.novas_samples;
    try {
        test_novas.validate();
    } catch (const ConfigError &e) {
        throw ConfigError(std::string("eval: ") + e.what());
    }
    if (out_dir.empty())
        throw ConfigError("run.out_dir must not be empty");
}

EnvLookup process_env() {
    return [](const std::string &name) -> std::optional<std::string> {
        if (const char *v = std::getenv(name.c_str()))
            return std::string(v);
        return std::nullopt;
    };
}

RunConfig parse_config(const std::string &text, const std::string &source, const EnvLookup &env) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line_no = 0;
    auto where = [&] { return source + ":" + std::to_string(line_no) + ": "; };
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(strip_comment(raw));
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(where() + "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(where() + "expected key = value");
        const std::string name = trim(line.substr(0, eq));
        const Field *f = find_field(section, name);
        if (!f)
            throw ConfigError(where() + "unknown key '" + (section.empty() ? name : section + "." + name) + "'");
        try {
            f->set(cfg, section + "." + name, line.substr(eq + 1));
        } catch (const ConfigError &e) {
            throw ConfigError(where() + e.what());
        }
    }
    if (env) {
        for (const Field &f : fields()) {
            const std::string var = env_name(f);
            if (auto v = env(var)) {
                try {
                    f.set(cfg, f.section + "." + f.name, *v);
                } catch (const ConfigError &e) {
                    throw ConfigError(var + ": " + e.what());
                }
            }
        }
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::filesystem::path &path, const EnvLookup &env) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read config file '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string(), env);
}

std::string to_config_text(const RunConfig &cfg) {
    std::string out;
    std::string section;
    for (const Field &f : fields()) {
        if (f.section != section) {
            out += (section.empty() ? "" : "\n") + ("[" + f.section + "]\n");
            section = f.section;
        }
        out += f.name + " = " + f.get(cfg) + "\n";
    }
    return out;
}

void write_resolved_config(const RunConfig &cfg, const std::filesystem::path &path) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    out << to_config_text(cfg);
    if (!out)
        throw std::runtime_error("failed writing '" + path.string() + "'");
}

} // namespace pdg
