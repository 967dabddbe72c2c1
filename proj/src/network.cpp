#include "pdg/network.hpp"

#include <cmath>

#include "pdg/rng.hpp"

namespace pdg {

using ad::Tensor;
using ad::Var;

Eigen::RowVectorXd InputScaling::offset() const {
    Eigen::RowVectorXd o = Eigen::RowVectorXd::Zero(kStateDim);
    o(idx::m) = m_dry;
    return o;
}

Eigen::RowVectorXd InputScaling::scale() const {
    Eigen::RowVectorXd s(kStateDim);
    s << 1.0 / pos_scale, 1.0 / pos_scale, 1.0 / pos_scale, 1.0 / vel_scale, 1.0 / vel_scale, 1.0 / vel_scale,
        1.0 / (m_init - m_dry);
    return s;
}

std::map<std::string, double> InputScaling::to_metadata() const {
    return {{"norm.pos_scale", pos_scale},
            {"norm.vel_scale", vel_scale},
            {"norm.m_dry", m_dry},
            {"norm.m_init", m_init}};
}

InputScaling InputScaling::from_metadata(const std::map<std::string, double> &meta) {
    auto get = [&](const char *key) {
        auto it = meta.find(key);
        if (it == meta.end())
            throw ad::ShapeError(std::string("checkpoint metadata lacks '") + key + "'");
        return it->second;
    };
    return {get("norm.pos_scale"), get("norm.vel_scale"), get("norm.m_dry"), get("norm.m_init")};
}

namespace {

struct Shape {
    std::string name;
    Eigen::Index rows, cols;
    double bound; ///< uniform init half-width
};

std::vector<Shape> parameter_shapes(const NetworkConfig &cfg) {
    std::vector<Shape> shapes;
    const double lstm_bound = 1.0 / std::sqrt(static_cast<double>(cfg.hidden));
    for (int l = 0; l < cfg.lstm_layers; ++l) {
        const std::string p = "lstm" + std::to_string(l);
        const int in = l == 0 ? kStateDim : cfg.hidden;
        shapes.push_back({p + ".wx", in, 4 * cfg.hidden, lstm_bound});
        shapes.push_back({p + ".wh", cfg.hidden, 4 * cfg.hidden, lstm_bound});
        shapes.push_back({p + ".b", 1, 4 * cfg.hidden, lstm_bound});
    }
    shapes.push_back({"head.w", cfg.hidden, kStateDim, lstm_bound});
    shapes.push_back({"head.b", 1, kStateDim, lstm_bound});
    auto dense = [&](const std::string &net, int out) {
        const double b1 = 1.0 / std::sqrt(static_cast<double>(kStateDim));
        const double b2 = 1.0 / std::sqrt(static_cast<double>(cfg.dense_hidden));
        shapes.push_back({net + ".w1", kStateDim, cfg.dense_hidden, b1});
        shapes.push_back({net + ".b1", 1, cfg.dense_hidden, b1});
        shapes.push_back({net + ".w2", cfg.dense_hidden, out, b2});
        shapes.push_back({net + ".b2", 1, out, b2});
    };
    dense("v0", 1);
    for (int l = 0; l < cfg.lstm_layers; ++l) {
        dense("h0_" + std::to_string(l), cfg.hidden);
        dense("c0_" + std::to_string(l), cfg.hidden);
    }
    return shapes;
}

} // namespace

ad::ParameterStore init_params(const NetworkConfig &cfg, std::uint64_t seed) {
    Rng rng = make_stream(seed, Stream::init);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    ad::ParameterStore store;
    for (const Shape &s : parameter_shapes(cfg)) {
        Tensor t(s.rows, s.cols);
        for (Eigen::Index j = 0; j < t.cols(); ++j)
            for (Eigen::Index i = 0; i < t.rows(); ++i)
                t(i, j) = s.bound * unit(rng);
        store.add(s.name, std::move(t));
    }
    // forget-gate bias +1
    for (int l = 0; l < cfg.lstm_layers; ++l)
        store.at("lstm" + std::to_string(l) + ".b").value.middleCols(cfg.hidden, cfg.hidden).array() += 1.0;
    return store;
}

void check_params(const ad::ParameterStore &store, const NetworkConfig &cfg) {
    const auto shapes = parameter_shapes(cfg);
    if (shapes.size() != store.entries().size())
        throw ad::ShapeError("model: expected " + std::to_string(shapes.size()) + " parameter tensors, found " +
                             std::to_string(store.entries().size()));
    for (const Shape &s : shapes) {
        if (!store.contains(s.name))
            throw ad::ShapeError("model: missing parameter '" + s.name + "'");
        const Tensor &v = store.at(s.name).value;
        if (v.rows() != s.rows || v.cols() != s.cols)
            throw ad::ShapeError("model parameter '" + s.name + "'", v, Tensor(s.rows, s.cols),
                                 "stored shape differs from configured shape");
    }
}

BoundModel BoundModel::bind(ad::Tape &tape, const ad::ParameterStore &store, const NetworkConfig &cfg,
                            const InputScaling &scaling) {
    check_params(store, cfg);
    BoundModel m;
    m.tape_ = &tape;
    m.cfg_ = cfg;
    for (const auto &[name, _] : store.entries())
        m.vars_.emplace(name, tape.param(store, name));
    m.offset_ = tape.constant(scaling.offset());
    m.scale_ = tape.constant(scaling.scale());
    return m;
}

BoundModel BoundModel::bind_constant(ad::Tape &tape, const ad::ParameterStore &store, const NetworkConfig &cfg,
                                     const InputScaling &scaling) {
    check_params(store, cfg);
    BoundModel m;
    m.tape_ = &tape;
    m.cfg_ = cfg;
    for (const auto &[name, e] : store.entries())
        m.vars_.emplace(name, tape.constant(e.value));
    m.offset_ = tape.constant(scaling.offset());
    m.scale_ = tape.constant(scaling.scale());
    return m;
}

const Var &BoundModel::operator[](const std::string &name) const {
    auto it = vars_.find(name);
    if (it == vars_.end())
        throw ad::ShapeError("model: unknown parameter '" + name + "'");
    return it->second;
}

Var BoundModel::normalize(const Var &states) const {
    if (states.cols() != kStateDim)
        throw ad::ShapeError("normalize", states.value(), offset_.value(), "network input must be the 7-state");
    return (states - offset_) * scale_;
}

Var dense_head(const BoundModel &model, const std::string &net, const Var &x_norm) {
    const Var hidden = ad::relu(ad::matmul(x_norm, model[net + ".w1"]) + model[net + ".b1"]);
    return ad::matmul(hidden, model[net + ".w2"]) + model[net + ".b2"];
}

InitialHeads init_heads(const BoundModel &model, const Var &x0_norm) {
    InitialHeads out;
    out.value = dense_head(model, "v0", x0_norm);
    for (int l = 0; l < model.config().lstm_layers; ++l) {
        out.state.h.push_back(dense_head(model, "h0_" + std::to_string(l), x0_norm));
        out.state.c.push_back(dense_head(model, "c0_" + std::to_string(l), x0_norm));
    }
    return out;
}

LstmOutput lstm_step(const BoundModel &model, const Var &x_norm, const LstmState &state) {
    const int hdim = model.config().hidden;
    if (x_norm.cols() != kStateDim)
        throw ad::ShapeError("lstm_step: input must be the 7-state, got " + std::to_string(x_norm.cols()) +
                             " columns");
    LstmOutput out;
    Var input = x_norm;
    for (int l = 0; l < model.config().lstm_layers; ++l) {
        const std::string p = "lstm" + std::to_string(l);
        const Var gates =
            ad::matmul(input, model[p + ".wx"]) + ad::matmul(state.h[static_cast<std::size_t>(l)], model[p + ".wh"]);
        const Var pre = gates + model[p + ".b"];
        const Var i = ad::sigmoid(ad::slice(pre, 0, hdim));
        const Var f = ad::sigmoid(ad::slice(pre, hdim, hdim));
        const Var g = ad::tanh(ad::slice(pre, 2 * hdim, hdim));
        const Var o = ad::sigmoid(ad::slice(pre, 3 * hdim, hdim));
        const Var c = f * state.c[static_cast<std::size_t>(l)] + i * g;
        const Var h = o * ad::tanh(c);
        out.state.h.push_back(h);
        out.state.c.push_back(c);
        input = h;
    }
    out.vx = ad::matmul(input, model["head.w"]) + model["head.b"];
    return out;
}

} // namespace pdg
