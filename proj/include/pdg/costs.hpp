#pragma once

#include <cmath>

#include "pdg/dynamics.hpp"

namespace pdg {

/// Weights of the terminal cost, glide-slope running cost and L1 thrust cost.
struct CostWeights {
    double Qx = 2.5, Qy = 2.5, Qz = 2.5;
    double Qvx = 5.0, Qvy = 5.0, Qvz = 10.0;
    double Qm = 10.0;
    double c_vz_pos = 10.0; ///< vertical-velocity weight when v3 > 0
    double c_vz_neg = 1.0;  ///< vertical-velocity weight when v3 <= 0
    double q_plus = 1.0;    ///< glide-slope weight outside the cone
    double q_minus = 0.005; ///< glide-slope weight inside the cone
    double q_ctrl = 0.00055;

    void validate() const;
};

/// Vertical-velocity coefficient; v3 == 0 takes the "<= 0" branch.
[[nodiscard]] inline double vz_coefficient(double v3, const CostWeights &w) {
    return v3 > 0.0 ? w.c_vz_pos : w.c_vz_neg;
}

template <typename Scalar>
Scalar terminal_cost(const SpacecraftState<Scalar> &x, const CostWeights &w, const PhysicalParams &p) {
    using std::exp;
    const double span = p.m_init - p.m_dry;
    const double cz = vz_coefficient(static_cast<double>(x(idx::v3)), w);
    return Scalar(w.Qx) * x(idx::r1) * x(idx::r1) + Scalar(w.Qy) * x(idx::r2) * x(idx::r2) +
           Scalar(w.Qz) * x(idx::r3) * x(idx::r3) + Scalar(w.Qvx) * x(idx::v1) * x(idx::v1) +
           Scalar(w.Qvy) * x(idx::v2) * x(idx::v2) + Scalar(w.Qvz * cz) * x(idx::v3) * x(idx::v3) +
           Scalar(w.Qm) * exp(-(x(idx::m) - Scalar(p.m_dry)) / Scalar(span));
}

template <typename Scalar>
Vec7<Scalar> terminal_cost_gradient(const SpacecraftState<Scalar> &x, const CostWeights &w,
                                    const PhysicalParams &p) {
    using std::exp;
    const double span = p.m_init - p.m_dry;
    const double cz = vz_coefficient(static_cast<double>(x(idx::v3)), w);
    Vec7<Scalar> g;
    g(idx::r1) = Scalar(2.0 * w.Qx) * x(idx::r1);
    g(idx::r2) = Scalar(2.0 * w.Qy) * x(idx::r2);
    g(idx::r3) = Scalar(2.0 * w.Qz) * x(idx::r3);
    g(idx::v1) = Scalar(2.0 * w.Qvx) * x(idx::v1);
    g(idx::v2) = Scalar(2.0 * w.Qvy) * x(idx::v2);
    g(idx::v3) = Scalar(2.0 * w.Qvz * cz) * x(idx::v3);
    g(idx::m) = -Scalar(w.Qm / span) * exp(-(x(idx::m) - Scalar(p.m_dry)) / Scalar(span));
    return g;
}

/// Signed distance-like cone violation tan(gamma) * |r_xy| - r3 (positive outside).
template <typename Scalar> Scalar glide_slope_violation(const SpacecraftState<Scalar> &x, double gamma_gs) {
    using std::sqrt;
    return Scalar(std::tan(gamma_gs)) * sqrt(x(idx::r1) * x(idx::r1) + x(idx::r2) * x(idx::r2)) - x(idx::r3);
}

template <typename Scalar>
Scalar glide_slope_cost(const SpacecraftState<Scalar> &x, const CostWeights &w, double gamma_gs) {
    const Scalar delta = glide_slope_violation(x, gamma_gs);
    const double q = delta > Scalar(0) ? w.q_plus : w.q_minus;
    return Scalar(q) * delta * delta;
}

/// Instantaneous running cost: glide-slope penalty plus q_ctrl * |T|_2.
template <typename Scalar>
Scalar running_cost(const SpacecraftState<Scalar> &x, const ThrustCommand<Scalar> &thrust, const CostWeights &w,
                    double gamma_gs) {
    return glide_slope_cost(x, w, gamma_gs) + Scalar(w.q_ctrl) * thrust.norm();
}

/// Control-dependent Hamiltonian Vx^T f(x, T) + q_ctrl |T|. The trace term is
/// omitted since the noise does not multiply the control.
template <typename Scalar>
Scalar hamiltonian(const SpacecraftState<Scalar> &x, const ThrustCommand<Scalar> &thrust, const Vec7<Scalar> &vx,
                   const PhysicalParams &p, const CostWeights &w) {
    return vx.dot(drift(x, thrust, p)) + Scalar(w.q_ctrl) * thrust.norm();
}

} // namespace pdg
