#ifndef AGGFLEX_POLYTOPE_HPP
#define AGGFLEX_POLYTOPE_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "aggflex/conic_program.hpp"

namespace aggflex {

/// Convex polytope in half-space representation, { y : A y <= b }.
struct HPolytope {
    Eigen::SparseMatrix<double> A;
    Eigen::VectorXd b;
    std::string label;

    HPolytope() = default;
    HPolytope(Eigen::SparseMatrix<double> A_in, Eigen::VectorXd b_in, std::string label_in = {});
    HPolytope(const Eigen::MatrixXd& A_in, Eigen::VectorXd b_in, std::string label_in = {});

    Eigen::Index dim() const { return A.cols(); }
    Eigen::Index rows() const { return A.rows(); }

    /// Axis-aligned box given per-axis [lo, hi] bounds.
    static HPolytope box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                         std::string label = {});
};

/// Vertex representation used by the desk-scale oracles; the vertex list
/// is kept minimal (no vertex lies in the hull of the others).
struct VPolytope {
    std::vector<Eigen::VectorXd> vertices;

    Eigen::Index dim() const { return vertices.empty() ? 0 : vertices.front().size(); }
};

/// Exact membership test: max(A y - b) <= tol.
bool is_member(const HPolytope& P, const Eigen::VectorXd& y, double tol);

/// Adds the rows of A y <= b as inequalities on block `y` of a program.
void add_membership_rows(ConicProgram& prog, BlockId y, const HPolytope& P);

/// max over P of direction'y via one LP. Throws Unbounded / Infeasible.
double support_function(const HPolytope& P, const Eigen::VectorXd& direction,
                        const SolverConfig& config = {});

/// A maximizer of direction'y over P (same LP as support_function).
Eigen::VectorXd support_point(const HPolytope& P, const Eigen::VectorXd& direction,
                              const SolverConfig& config = {});

/// True when { y : A y <= b } has a feasible point (phase-1 LP).
bool is_nonempty(const HPolytope& P, const SolverConfig& config = {});

/// A feasible point of P. Throws Infeasible when P is empty.
Eigen::VectorXd any_point(const HPolytope& P, const SolverConfig& config = {});

} // namespace aggflex

#endif
