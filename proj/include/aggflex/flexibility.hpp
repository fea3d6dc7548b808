#ifndef AGGFLEX_FLEXIBILITY_HPP
#define AGGFLEX_FLEXIBILITY_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "aggflex/grid.hpp"
#include "aggflex/polytope.hpp"

namespace aggflex {

/// One EV's charging requirement: connection window [arrival, departure]
/// (period indices), maximum charging rate (kW) and energy demand (kWh).
struct EvSpec {
    int arrival = 0;
    int departure = 0;
    double max_rate = 0.0; // kW
    double energy = 0.0;   // kWh
};

/// A virtual battery { u : A u <= h } on a grid, where A is the grid's
/// constraint matrix and h = (x_upper, -x_lower, u_upper, -u_lower).
/// `spec` is present when the set came from an EV encoding; sets can also
/// be built directly from a right-hand side (generic virtual batteries).
struct FlexibilitySet {
    std::optional<EvSpec> spec;
    Eigen::VectorXd h; // 4T
    HPolytope polytope;

    /// Membership of a power profile regardless of the grid representation.
    bool contains_power_profile(const Eigen::VectorXd& u, const ChargingGrid& grid,
                                double tol) const;
};

void validate_spec(const EvSpec& spec, const ChargingGrid& grid);

/// Encodes the spec's window, rate and energy limits into the 4T-vector h
/// and checks nonemptiness with a phase-1 LP.
FlexibilitySet build_flexibility_set(const EvSpec& spec, const ChargingGrid& grid,
                                     const SolverConfig& config = {});

/// Flexibility set from a raw right-hand side (nonemptiness checked).
FlexibilitySet flexibility_set_from_rhs(const Eigen::VectorXd& h, const ChargingGrid& grid,
                                        const SolverConfig& config = {});

/// Sampling windows in hours measured from the start of the horizon.
/// Defaults reproduce the daytime workplace scenario: a 12 h horizon
/// beginning 7 AM, arrivals in the first quarter, departures in the last
/// quarter, rates uniform on [7, 13] kW and energy uniform on
/// [0, delta * R * (d - a)].
struct ScenarioRanges {
    double arrival_lo_h = 0.0;
    double arrival_hi_h = 3.0;
    double departure_lo_h = 9.0;
    double departure_hi_h = 12.0;
    double rate_lo_kw = 7.0;
    double rate_hi_kw = 13.0;

    /// Same fractional windows ([0, 1/4] and [3/4, 1]) on any horizon.
    static ScenarioRanges scaled(int periods, double delta_hours);
};

/// Deterministic scenario of n EV specs for a grid; identical seeds give
/// identical scenarios. Clock times snap to period indices by floor.
std::vector<EvSpec> sample_scenario(int n, std::uint64_t seed, const ChargingGrid& grid,
                                    const ScenarioRanges& ranges = {});

/// Greedy max-rate charging profile: full rate from arrival until the
/// residual demand fits one partial period, then zero.
Eigen::VectorXd unmanaged_profile(const EvSpec& spec, const ChargingGrid& grid);

} // namespace aggflex

#endif
