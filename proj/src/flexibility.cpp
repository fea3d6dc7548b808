#include "aggflex/flexibility.hpp"

#include <algorithm>
#include <cmath>

#include "aggflex/errors.hpp"
#include "aggflex/rng.hpp"

namespace aggflex {

bool FlexibilitySet::contains_power_profile(const Eigen::VectorXd& u, const ChargingGrid& grid,
                                            double tol) const {
    if (grid.representation() == Representation::PowerSpace) {
        return is_member(polytope, u, tol);
    }
    return is_member(polytope, grid.to_energy(u), tol);
}

void validate_spec(const EvSpec& spec, const ChargingGrid& grid) {
    const int T = grid.periods();
    require(spec.arrival >= 0 && spec.arrival < T, ErrorKind::Index,
            "arrival period outside the horizon");
    require(spec.departure >= 0 && spec.departure < T, ErrorKind::Index,
            "departure period outside the horizon");
    require(spec.departure >= spec.arrival, ErrorKind::Index, "departure before arrival");
    require(spec.max_rate >= 0.0, ErrorKind::Domain, "negative charging rate");
    require(spec.energy >= 0.0, ErrorKind::Domain, "negative energy demand");
    const double cap = grid.delta_hours() * spec.max_rate * (spec.departure - spec.arrival);
    require(spec.energy <= cap * (1.0 + 1e-12) + 1e-12, ErrorKind::InfeasibleSpec,
            "energy demand exceeds what the window can deliver");
}

namespace {

/// h = (x_upper, -x_lower, u_upper, -u_lower) per the piecewise window
/// formulas. x is indexed t = 1..T while u is indexed t = 0..T-1.
Eigen::VectorXd assemble_rhs(const EvSpec& spec, const ChargingGrid& grid) {
    const int T = grid.periods();
    const double delta = grid.delta_hours();
    const double R = spec.max_rate;
    const double E = spec.energy;
    const int a = spec.arrival;
    const int d = spec.departure;

    Eigen::VectorXd h(4 * T);
    for (int t = 1; t <= T; ++t) {
        const double x_upper = t >= a ? std::min(E, delta * R * (t - a)) : 0.0;
        double x_lower = 0.0;
        if (t >= a && t <= d) {
            x_lower = std::max(0.0, E - delta * R * (d - t));
        } else if (t > d) {
            x_lower = E;
        }
        h(t - 1) = x_upper;
        h(T + t - 1) = -x_lower;
    }
    for (int t = 0; t < T; ++t) {
        const double u_upper = (t >= a && t <= d) ? R : 0.0;
        h(2 * T + t) = u_upper;
        h(3 * T + t) = 0.0; // -u_lower with u_lower = 0
    }
    return h;
}

} // namespace

FlexibilitySet build_flexibility_set(const EvSpec& spec, const ChargingGrid& grid,
                                     const SolverConfig& config) {
    validate_spec(spec, grid);
    FlexibilitySet set;
    set.spec = spec;
    set.h = assemble_rhs(spec, grid);
    set.polytope = HPolytope(grid.constraint_matrix(), set.h);
    if (!is_nonempty(set.polytope, config)) {
        throw_error(ErrorKind::InfeasibleSpec, "EV spec encodes an empty flexibility set");
    }
    return set;
}

FlexibilitySet flexibility_set_from_rhs(const Eigen::VectorXd& h, const ChargingGrid& grid,
                                        const SolverConfig& config) {
    require(h.size() == 4 * grid.periods(), ErrorKind::DimensionMismatch,
            "right-hand side must have 4T entries");
    FlexibilitySet set;
    set.h = h;
    set.polytope = HPolytope(grid.constraint_matrix(), h);
    if (!is_nonempty(set.polytope, config)) {
        throw_error(ErrorKind::InfeasibleSpec, "right-hand side encodes an empty set");
    }
    return set;
}

ScenarioRanges ScenarioRanges::scaled(int periods, double delta_hours) {
    const double horizon = periods * delta_hours;
    ScenarioRanges r;
    r.arrival_lo_h = 0.0;
    r.arrival_hi_h = horizon / 4.0;
    r.departure_lo_h = 3.0 * horizon / 4.0;
    r.departure_hi_h = horizon;
    return r;
}

std::vector<EvSpec> sample_scenario(int n, std::uint64_t seed, const ChargingGrid& grid,
                                    const ScenarioRanges& ranges) {
    require(n >= 1, ErrorKind::Config, "scenario needs at least one EV");
    const double horizon = grid.periods() * grid.delta_hours();
    require(ranges.arrival_lo_h <= ranges.arrival_hi_h, ErrorKind::Config,
            "inverted arrival range");
    require(ranges.departure_lo_h <= ranges.departure_hi_h, ErrorKind::Config,
            "inverted departure range");
    require(ranges.rate_lo_kw <= ranges.rate_hi_kw, ErrorKind::Config, "inverted rate range");
    require(ranges.rate_lo_kw >= 0.0, ErrorKind::Config, "negative charging rate range");
    require(ranges.arrival_lo_h >= 0.0 && ranges.departure_hi_h <= horizon + 1e-9,
            ErrorKind::Config, "sampling windows outside the horizon");
    require(ranges.arrival_hi_h <= ranges.departure_lo_h, ErrorKind::Config,
            "arrival window must not extend past the departure window");

    const double delta = grid.delta_hours();
    const int T = grid.periods();
    auto to_period = [&](double hours) {
        const int idx = static_cast<int>(std::floor(hours / delta));
        return std::clamp(idx, 0, T - 1);
    };

    Rng rng(seed);
    std::vector<EvSpec> specs;
    specs.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        EvSpec spec;
        spec.arrival = to_period(rng.uniform(ranges.arrival_lo_h, ranges.arrival_hi_h));
        spec.departure = to_period(rng.uniform(ranges.departure_lo_h, ranges.departure_hi_h));
        spec.max_rate = rng.uniform(ranges.rate_lo_kw, ranges.rate_hi_kw);
        const double cap = delta * spec.max_rate * (spec.departure - spec.arrival);
        spec.energy = rng.uniform(0.0, cap);
        specs.push_back(spec);
    }
    return specs;
}

Eigen::VectorXd unmanaged_profile(const EvSpec& spec, const ChargingGrid& grid) {
    validate_spec(spec, grid);
    const int T = grid.periods();
    const double delta = grid.delta_hours();
    Eigen::VectorXd u = Eigen::VectorXd::Zero(T);
    double residual = spec.energy;
    for (int t = spec.arrival; t < T && residual > 0.0; ++t) {
        const double full = delta * spec.max_rate;
        if (residual >= full) {
            u(t) = spec.max_rate;
            residual -= full;
        } else {
            u(t) = residual / delta;
            residual = 0.0;
        }
    }
    return u;
}

} // namespace aggflex
