#include "pdg/costs.hpp"

namespace pdg {

void CostWeights::validate() const {
    const double all[] = {Qx, Qy, Qz, Qvx, Qvy, Qvz, Qm, c_vz_pos, c_vz_neg, q_plus, q_minus, q_ctrl};
    for (double v : all)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw ConfigError("costs: every weight must be finite and non-negative");
    if (!(c_vz_pos > c_vz_neg))
        throw ConfigError("costs: require c_vz_pos > c_vz_neg");
    if (!(q_plus >= 10.0 * q_minus))
        throw ConfigError("costs: require q_plus >= 10 * q_minus");
}

} // namespace pdg
