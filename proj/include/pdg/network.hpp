#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pdg/autodiff.hpp"
#include "pdg/dynamics.hpp"

namespace pdg {

/// Fixed affine scaling applied to states before they enter any network:
/// positions / pos_scale, velocities / vel_scale, mass -> (m - m_dry) / (m_init - m_dry).
struct InputScaling {
    double pos_scale = 80.0;
    double vel_scale = 10.0;
    double m_dry = 1700.0;
    double m_init = 1905.0;

    [[nodiscard]] static InputScaling from(const PhysicalParams &p) { return {p.rad, 10.0, p.m_dry, p.m_init}; }
    [[nodiscard]] Eigen::RowVectorXd offset() const;
    [[nodiscard]] Eigen::RowVectorXd scale() const;
    [[nodiscard]] std::map<std::string, double> to_metadata() const;
    [[nodiscard]] static InputScaling from_metadata(const std::map<std::string, double> &meta);
};

struct NetworkConfig {
    int lstm_layers = 2;
    int hidden = 16;       ///< LSTM hidden and cell width
    int dense_hidden = 16; ///< hidden width of the initial-state heads
};

inline constexpr int kStateDim = 7;

/// Parameter names: "lstm<i>.wx", "lstm<i>.wh", "lstm<i>.b" (gate order i, f, g, o),
/// "head.w", "head.b", and "<net>.w1/.b1/.w2/.b2" for net in v0, h0_<i>, c0_<i>.
[[nodiscard]] ad::ParameterStore init_params(const NetworkConfig &cfg, std::uint64_t seed);

/// Throws ShapeError when a store does not hold exactly the parameters of `cfg`.
void check_params(const ad::ParameterStore &store, const NetworkConfig &cfg);

/// The parameters of one model bound to a particular tape.
class BoundModel {
  public:
    /// Differentiable binding (training).
    static BoundModel bind(ad::Tape &tape, const ad::ParameterStore &store, const NetworkConfig &cfg,
                           const InputScaling &scaling);
    /// Constant binding (evaluation; no gradients are recorded).
    static BoundModel bind_constant(ad::Tape &tape, const ad::ParameterStore &store, const NetworkConfig &cfg,
                                    const InputScaling &scaling);

    [[nodiscard]] const ad::Var &operator[](const std::string &name) const;
    [[nodiscard]] const NetworkConfig &config() const { return cfg_; }
    [[nodiscard]] ad::Tape &tape() const { return *tape_; }

    /// Scaled network input for raw B x 7 states.
    [[nodiscard]] ad::Var normalize(const ad::Var &states) const;

  private:
    ad::Tape *tape_ = nullptr;
    NetworkConfig cfg_;
    std::map<std::string, ad::Var> vars_;
    ad::Var offset_, scale_;
};

struct LstmState {
    std::vector<ad::Var> h; ///< one B x hidden tensor per layer
    std::vector<ad::Var> c;
};

struct InitialHeads {
    ad::Var value; ///< B x 1
    LstmState state;
};

/// Two-layer ReLU network 7 -> dense_hidden -> out, applied to normalized input.
[[nodiscard]] ad::Var dense_head(const BoundModel &model, const std::string &net, const ad::Var &x_norm);

/// V0 and the initial LSTM hidden/cell states from the normalized initial state.
[[nodiscard]] InitialHeads init_heads(const BoundModel &model, const ad::Var &x0_norm);

struct LstmOutput {
    ad::Var vx; ///< B x 7 predicted value gradient
    LstmState state;
};

/// One stacked-LSTM step on a normalized B x 7 state; no time input.
[[nodiscard]] LstmOutput lstm_step(const BoundModel &model, const ad::Var &x_norm, const LstmState &state);

} // namespace pdg
