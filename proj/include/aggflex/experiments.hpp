#ifndef AGGFLEX_EXPERIMENTS_HPP
#define AGGFLEX_EXPERIMENTS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "aggflex/flexibility.hpp"
#include "aggflex/multibattery.hpp"

namespace aggflex {

struct PeakShaveExact {
    double peak_kw = 0.0;                      // J*
    Eigen::VectorXd aggregate;                 // u* = sum of profiles
    std::vector<Eigen::VectorXd> profiles;     // witness u_i in U_i
};

/// min_t { t : -t <= sum_i u_i(tau) <= t, u_i in U_i } as one LP with
/// N*T + 1 variables; the witness decomposition comes with the solution.
PeakShaveExact peak_shave_exact(const std::vector<FlexibilitySet>& flex_sets,
                                const ChargingGrid& grid, const SolverConfig& config = {});

struct PeakShaveModel {
    double peak_kw = 0.0;                      // J(K)
    Eigen::VectorXd aggregate;                 // u = mu + sum sigma_k v_k
    std::vector<Eigen::VectorXd> v_tilde;      // base-set coordinates
};

/// min ||u||_inf over the multi-battery set, in base coordinates so the
/// result can be disaggregated afterwards.
PeakShaveModel peak_shave_multibattery(const MultiBatteryModel& model,
                                       const SolverConfig& config = {});

/// 100 * (J_K - J_star) / J_star. Both near zero gives 0 by convention;
/// zero J_star with positive J_K throws DegenerateBaseline.
double suboptimality_gap(double j_k, double j_star);

struct TrialResult {
    int trial = 0;
    std::uint64_t seed = 0;
    int K = 0;
    Variant variant = Variant::Joint;
    NormKind norm = NormKind::L2;
    double j_star_kw = 0.0;
    double j_k_kw = 0.0;
    double gap_percent = 0.0;
    double surrogate_objective = 0.0;
    double cluster_ms = 0.0;
    double solve_ms = 0.0;
    double shave_ms = 0.0;
    std::string status = "ok";
};

struct GapSummary {
    int K = 0;
    double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
    int count = 0;
};

struct BatchConfig {
    int trials = 20;
    int n_evs = 20;
    int periods = 12;
    double delta_hours = 2.0 / 3.0;
    std::vector<int> k_values = {1, 2, 3, 4};
    std::uint64_t master_seed = 0;
    Variant variant = Variant::Joint;
    NormKind norm = NormKind::L2;
    Representation representation = Representation::EnergySpace;
    KmeansOptions kmeans;
    SolverConfig solver;
    int jobs = 0;           // 0: all hardware threads; 1: serial
    bool use_table_ranges = false; // true: the 12 h workplace windows as-is
};

struct BatchResult {
    std::vector<TrialResult> rows;  // sorted by (trial, K)
    std::vector<GapSummary> summary;
};

/// Scenario ranges used by a batch: the fixed workplace windows when
/// use_table_ranges is set, otherwise the fractional windows scaled to
/// the grid.
ScenarioRanges batch_ranges(const BatchConfig& config);

/// Per-trial pipeline: sample a scenario, build the sets, solve the exact
/// peak shave once, then per K cluster / approximate / shave. Trials run
/// concurrently with per-trial seeds; failures are recorded per row and
/// never abort the batch. Deterministic for a fixed master seed.
BatchResult run_batch(const BatchConfig& config);

/// Quartiles with linear interpolation between order statistics.
double quantile_linear(std::vector<double> values, double p);

} // namespace aggflex

#endif
