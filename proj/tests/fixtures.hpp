#ifndef AGGFLEX_TESTS_FIXTURES_HPP
#define AGGFLEX_TESTS_FIXTURES_HPP

#include <algorithm>
#include <vector>

#include "aggflex/flexibility.hpp"
#include "aggflex/multibattery.hpp"
#include "aggflex/oracles.hpp"
#include "aggflex/rng.hpp"

namespace aggflex::testing {

/// Random nonempty virtual battery on a grid, built around a feasible
/// seed profile with slack on both energy limits. Unlike the EV-spec
/// encoding (whose lower limit pins the final energy), these have
/// full-dimensional geometry even on two periods.
inline FlexibilitySet random_virtual_battery(const ChargingGrid& grid, Rng& rng) {
    const int T = grid.periods();
    const double delta = grid.delta_hours();
    const double rate = rng.uniform(0.5, 2.0);
    const double up_slack = rng.uniform(0.05, 0.5);
    const double lo_slack = rng.uniform(0.05, 0.5);
    Eigen::VectorXd x_upper(T), x_lower(T);
    double acc = 0.0;
    for (int t = 0; t < T; ++t) {
        acc += delta * rate * rng.uniform(0.0, 1.0);
        x_upper(t) = acc + up_slack;
        x_lower(t) = std::max(0.0, acc - lo_slack);
    }
    Eigen::VectorXd h(4 * T);
    h << x_upper, -x_lower, Eigen::VectorXd::Constant(T, rate), Eigen::VectorXd::Zero(T);
    return flexibility_set_from_rhs(h, grid);
}

/// Vertex set of B = mu + sum_k sigma_k B_k through the homothet
/// H-representations and the Minkowski oracle (desk scale only).
inline VPolytope model_vertices(const MultiBatteryModel& model, const SolverConfig& config = {}) {
    std::vector<HPolytope> parts;
    for (int k = 0; k < model.k(); ++k) {
        const Eigen::VectorXd shift =
            k == 0 ? model.mu_total() : Eigen::VectorXd::Zero(model.T).eval();
        parts.push_back(model.scaled_battery(k, shift));
    }
    return minkowski_sum_oracle(parts, config);
}

} // namespace aggflex::testing

#endif
