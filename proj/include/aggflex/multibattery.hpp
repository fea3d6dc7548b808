#ifndef AGGFLEX_MULTIBATTERY_HPP
#define AGGFLEX_MULTIBATTERY_HPP

#include <optional>
#include <vector>

#include "aggflex/clustering.hpp"
#include "aggflex/flexibility.hpp"
#include "aggflex/grid.hpp"
#include "aggflex/polytope.hpp"
#include "aggflex/rng.hpp"

namespace aggflex {

enum class Variant { Joint, ClusterWise };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

/// Multi-battery flexibility set mu + sum_k sigma_k B_k, stored in power
/// space regardless of the representation used to solve for it.
struct MultiBatteryModel {
    std::vector<HPolytope> bases;     // B_k = { u : H u <= b_k }
    std::vector<Eigen::VectorXd> mu;  // K translation vectors, sum = mu
    Eigen::VectorXd sigma;            // K scalings >= 0
    std::vector<int> cluster_sizes;   // |C_k|
    std::vector<int> assignments;     // EV -> cluster
    int T = 0;
    double delta_hours = 0.0;

    int k() const { return static_cast<int>(bases.size()); }
    Eigen::VectorXd mu_total() const;

    /// H-representation of the k-th scaled battery mu_tilde + sigma_k B_k.
    HPolytope scaled_battery(int k, const Eigen::VectorXd& mu_tilde) const;
};

/// Affine disaggregation data from the containment conditions:
/// u_i = gamma_i + sum_k Gamma[k][i] v_k for base points v_k.
struct DisaggregationMap {
    std::vector<Eigen::VectorXd> gamma;              // N
    std::vector<std::vector<Eigen::MatrixXd>> Gamma; // [k][i], T x T
    std::vector<std::vector<Eigen::MatrixXd>> Lambda; // [k][i], 4T x 4T certificates
};

struct ApproximationResult {
    MultiBatteryModel model;
    DisaggregationMap map;
    double surrogate_objective = 0.0; // without the L(H) factor
    SolveStatus status = SolveStatus::NumericFailure;
    double solve_ms = 0.0;
    Variant variant = Variant::Joint;
    NormKind norm = NormKind::L2;
    Representation representation = Representation::EnergySpace;
};

/// Assembles the conservative convex program(s): one joint program, or K
/// independent cluster-wise programs. Constraint matrix and surrogate
/// objective use the grid's representation.
std::vector<ConicProgram> build_approx_programs(const std::vector<FlexibilitySet>& flex_sets,
                                                const Clustering& clustering,
                                                const ChargingGrid& grid, NormKind norm,
                                                Variant variant = Variant::Joint);

/// Solves the approximation and assembles the model, the disaggregation
/// map and the certificates, mapped back to power space. Optimal status
/// implies the containment conditions were re-verified numerically.
ApproximationResult solve_approximation(const std::vector<FlexibilitySet>& flex_sets,
                                        const Clustering& clustering, const ChargingGrid& grid,
                                        NormKind norm, Variant variant = Variant::Joint,
                                        const SolverConfig& config = {});

/// Surrogate bound sum_k ||H mu_k + (sigma_k - |C_k|) b_k|| recomputed in
/// power space; multiplied by L(H) it upper-bounds d_H(B, U).
double hausdorff_surrogate(const ApproximationResult& result);

/// Base-set coordinates of an aggregate profile u in B, or nullopt when
/// u is not a member (the feasibility LP is exact for membership).
std::optional<std::vector<Eigen::VectorXd>> decompose_into_bases(const Eigen::VectorXd& u,
                                                                 const MultiBatteryModel& model,
                                                                 const SolverConfig& config = {});

/// Per-EV profiles u_i = gamma_i + sum_k Gamma[k][i] v_k. Pure
/// arithmetic; throws Precondition when some v_k is outside its base set.
std::vector<Eigen::VectorXd> disaggregate(const std::vector<Eigen::VectorXd>& v_tilde,
                                          const ApproximationResult& result,
                                          double membership_tol = 1e-8);

/// Random interior-ish points of every base set (convex mixes of support
/// vertices along random directions); used by verification sampling.
std::vector<Eigen::VectorXd> random_base_points(const MultiBatteryModel& model, Rng& rng,
                                                const SolverConfig& config = {});

/// Re-checks the containment conditions of a result against the sets in
/// power space: the two sum conditions at tol_sum, the per-EV certificate
/// conditions at tol_cert (both scaled by the data magnitude).
bool verify_approximation(const ApproximationResult& result,
                          const std::vector<FlexibilitySet>& flex_sets,
                          const ChargingGrid& grid, double tol_sum = 1e-7,
                          double tol_cert = 1e-6);

/// Rebuilds the Lambda certificates of a loaded result (serialized
/// without them) by one stacked containment LP per EV. Returns false
/// when some containment cannot be certified.
bool rederive_certificates(ApproximationResult& result,
                           const std::vector<FlexibilitySet>& flex_sets,
                           const ChargingGrid& grid, const SolverConfig& config = {});

} // namespace aggflex

#endif
