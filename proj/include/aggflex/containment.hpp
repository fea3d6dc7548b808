#ifndef AGGFLEX_CONTAINMENT_HPP
#define AGGFLEX_CONTAINMENT_HPP

#include <optional>

#include "aggflex/polytope.hpp"

namespace aggflex {

/// Witness of gamma + Gamma X being contained in Y:
///   Lambda >= 0,  Lambda H_x = H_y Gamma,  Lambda h_x <= h_y - H_y gamma.
/// The conditions are necessary and sufficient when X is nonempty, so a
/// certificate exists exactly when the containment holds.
struct ContainmentCertificate {
    Eigen::MatrixXd Lambda; // m_y x m_x, nonnegative
    Eigen::VectorXd gamma;  // n_y
    Eigen::MatrixXd Gamma;  // n_y x n_x
};

/// Searches for a certificate by one feasibility LP (zero objective).
/// Returns std::nullopt when the containment does not hold. Throws
/// EmptyInputSet when X is empty (the hypothesis of the equivalence).
std::optional<ContainmentCertificate> check_ah_in_h(const Eigen::VectorXd& gamma,
                                                    const Eigen::MatrixXd& Gamma,
                                                    const HPolytope& X, const HPolytope& Y,
                                                    const SolverConfig& config = {});

/// Pure-arithmetic re-check of the three certificate conditions at the
/// given tolerance, scaled by 1 + max|H_y| for the matrix equation and
/// 1 + max|h_y| for the right-hand-side inequality.
bool verify_certificate(const ContainmentCertificate& cert, const HPolytope& X,
                        const HPolytope& Y, double tol);

} // namespace aggflex

#endif
