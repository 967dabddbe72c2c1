#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace pdg {

template <typename Scalar> using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar> using Vec7 = Eigen::Matrix<Scalar, 7, 1>;
template <typename Scalar> using Mat73 = Eigen::Matrix<Scalar, 7, 3>;

/// Spacecraft state laid out as [r (3), v (3), m]; r3 is altitude, positive up.
template <typename Scalar = double> using SpacecraftState = Vec7<Scalar>;

/// Thrust vector in newtons.
template <typename Scalar = double> using ThrustCommand = Vec3<Scalar>;

namespace idx {
inline constexpr int r1 = 0, r2 = 1, r3 = 2;
inline constexpr int v1 = 3, v2 = 4, v3 = 5;
inline constexpr int m = 6;
} // namespace idx

/// Thrown for inputs outside an operation's mathematical domain
/// (non-positive mass, negative radicand, ...).
class DomainError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

/// Thrown for invalid configuration values.
class ConfigError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

struct PhysicalParams {
    Vec3<double> g{0.0, 0.0, 3.7144};         ///< gravity magnitude vector [m/s^2], subtracted
    double alpha = 4.85e-4;                   ///< fuel-rate coefficient [s/m]
    Vec3<double> gamma_diag{1e-4, 1e-4, 1e-4}; ///< diagonal of the 3x3 noise matrix
    double rho1 = 4.97e3;                     ///< thrust-norm lower bound [N]
    double rho2 = 1.334e4;                    ///< thrust-norm upper bound [N]
    double theta = M_PI / 4.0;                ///< max pointing angle [rad]
    double gamma_gs = M_PI / 4.0;             ///< min glide-slope angle [rad]
    double m_dry = 1700.0;
    double m_init = 1905.0;
    double h_tol = 1e-3;                      ///< landing altitude tolerance [m]
    double dt = 0.05;
    double t_f = 20.0;
    double rad = 80.0;                        ///< cone-base radius [m]
    double r3_init = 80.0;
    Vec3<double> v_init{0.0, 0.0, -10.0};

    /// Number of Euler-Maruyama steps, t_f / dt rounded; throws if not integral.
    [[nodiscard]] int num_steps() const;

    /// Throws ConfigError naming the first violated invariant.
    void validate() const;
};

namespace detail {
template <typename Scalar> void require_positive_mass(const Scalar &m) {
    using std::isfinite;
    if (!(m > Scalar(0)))
        throw DomainError("non-positive spacecraft mass: " + std::to_string(static_cast<double>(m)));
}
} // namespace detail

/// Deterministic part of the dynamics: (v, T/m - g, -alpha*|T|).
template <typename Scalar>
Vec7<Scalar> drift(const SpacecraftState<Scalar> &x, const ThrustCommand<Scalar> &thrust,
                   const PhysicalParams &p) {
    detail::require_positive_mass(x(idx::m));
    Vec7<Scalar> f;
    f.template head<3>() = x.template segment<3>(idx::v1);
    f.template segment<3>(idx::v1) = thrust / x(idx::m) - p.g.cast<Scalar>();
    f(idx::m) = -Scalar(p.alpha) * thrust.norm();
    return f;
}

/// Sigma(x) = H(x) * Gamma: zero position rows, Gamma/m on velocity rows and
/// -alpha * 1^T Gamma on the mass row.
template <typename Scalar>
Mat73<Scalar> diffusion(const SpacecraftState<Scalar> &x, const PhysicalParams &p) {
    detail::require_positive_mass(x(idx::m));
    Mat73<Scalar> s = Mat73<Scalar>::Zero();
    for (int j = 0; j < 3; ++j) {
        s(idx::v1 + j, j) = Scalar(p.gamma_diag(j)) / x(idx::m);
        s(idx::m, j) = -Scalar(p.alpha) * Scalar(p.gamma_diag(j));
    }
    return s;
}

/// One Euler-Maruyama step with an explicit step size; `dw` holds N(0, dt) draws.
template <typename Scalar>
SpacecraftState<Scalar> em_step(const SpacecraftState<Scalar> &x, const ThrustCommand<Scalar> &thrust,
                                const Vec3<Scalar> &dw, double dt, const PhysicalParams &p) {
    return x + drift(x, thrust, p) * Scalar(dt) + diffusion(x, p) * dw;
}

template <typename Scalar>
SpacecraftState<Scalar> em_step(const SpacecraftState<Scalar> &x, const ThrustCommand<Scalar> &thrust,
                                const Vec3<Scalar> &dw, const PhysicalParams &p) {
    return em_step(x, thrust, dw, p.dt, p);
}

/// 1 while airborne (r3 > h_tol), 0 once at or below the tolerance.
[[nodiscard]] inline int exit_mask(double r3, double h_tol) { return r3 > h_tol ? 1 : 0; }

template <typename Scalar> [[nodiscard]] int exit_mask(const SpacecraftState<Scalar> &x, double h_tol) {
    return exit_mask(static_cast<double>(x(idx::r3)), h_tol);
}

/// Smallest k with altitude[k] <= h_tol, or n_steps if the trajectory never exits.
[[nodiscard]] int first_exit_index(std::span<const double> altitude, double h_tol, int n_steps);

} // namespace pdg
