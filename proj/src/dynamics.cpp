#include "pdg/dynamics.hpp"

#include <cmath>

namespace pdg {

int PhysicalParams::num_steps() const {
    const double ratio = t_f / dt;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio))
        throw ConfigError("physics.t_f / physics.dt must be integral, got " + std::to_string(ratio));
    return static_cast<int>(rounded);
}

void PhysicalParams::validate() const {
    auto require = [](bool ok, const char *msg) {
        if (!ok)
            throw ConfigError(msg);
    };
    require(rho1 > 0.0 && rho1 < rho2, "physics: require 0 < rho1 < rho2");
    require(theta >= M_PI / 6.0 && theta < M_PI / 2.0, "physics.theta must lie in [pi/6, pi/2)");
    require(gamma_gs >= 0.0 && gamma_gs < M_PI / 2.0, "physics.gamma_gs must lie in [0, pi/2)");
    require(dt > 0.0, "physics.dt must be positive");
    require(t_f > 0.0, "physics.t_f must be positive");
    require(h_tol > 0.0, "physics.h_tol must be positive");
    require(m_dry > 0.0 && m_dry < m_init, "physics: require 0 < m_dry < m_init");
    require(alpha >= 0.0, "physics.alpha must be non-negative");
    require(rad > 0.0, "physics.rad must be positive");
    require((gamma_diag.array() >= 0.0).all(), "physics.gamma entries must be non-negative");
    require(g.allFinite() && v_init.allFinite() && std::isfinite(r3_init), "physics: non-finite vector");
    (void)num_steps();
}

int first_exit_index(std::span<const double> altitude, double h_tol, int n_steps) {
    const auto limit = std::min<std::size_t>(altitude.size(), static_cast<std::size_t>(n_steps) + 1);
    for (std::size_t k = 0; k < limit; ++k)
        if (altitude[k] <= h_tol)
            return static_cast<int>(k);
    return n_steps;
}

} // namespace pdg
