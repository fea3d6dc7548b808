#ifndef AGGFLEX_IPM_HPP
#define AGGFLEX_IPM_HPP

#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace aggflex::ipm {

/// Interior-point settings. Defaults follow the usual conic-solver
/// tolerances; the gateway tightens or relaxes them per configuration.
struct Settings {
    double feastol = 1e-8;
    double abstol = 1e-8;
    double reltol = 1e-8;
    double feastol_inacc = 1e-4;
    double abstol_inacc = 5e-5;
    double reltol_inacc = 5e-5;
    double step_scale = 0.99;  // fraction of the max step taken
    double static_reg = 7e-8;  // quasi-definite regularization of the KKT matrix
    double sigma_min = 1e-4;
    double sigma_max = 0.9999;
    double step_min = 1e-6;
    double step_max = 0.999;
    double safeguard = 500.0;  // backtrack when pres grows by this factor
    double linsys_acc = 1e-14;
    double refine_decrease = 6.0;
    int refine_iters = 9;
    int max_iters = 100;
};

enum class ExitCode {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    CloseToOptimal,
    CloseToPrimalInfeasible,
    CloseToDualInfeasible,
    MaxIterations,
    NumericalProblems,
};

struct Result {
    ExitCode code = ExitCode::NumericalProblems;
    Eigen::VectorXd x;
    Eigen::VectorXd y;
    Eigen::VectorXd z;
    Eigen::VectorXd s;
    double primal_objective = 0.0;
    double dual_objective = 0.0;
    double duality_gap = 0.0;
    int iterations = 0;

    bool usable() const {
        return code == ExitCode::Optimal || code == ExitCode::CloseToOptimal;
    }
};

/// Optional elimination hint for block-structured problems: one group id
/// per variable (entries of x), per equality row and per cone row, in
/// that KKT order. Rows/variables of one group are eliminated together
/// and group -1 (the coupling border) last, which keeps the factor fill
/// local to the blocks. Empty vectors mean plain AMD ordering.
struct EliminationGroups {
    std::vector<int> variables;
    std::vector<int> equalities;
    std::vector<int> cone_rows;

    bool empty() const { return variables.empty() && equalities.empty() && cone_rows.empty(); }
};

/// Solves   minimize    c'x
///          subject to  A x = b
///                      G x + s = h,   s in K
/// where K is the product of the nonnegative orthant of dimension
/// `num_nonneg` followed by second-order cones with the given dimensions
/// (cone rows of G follow that order). Homogeneous self-dual embedding
/// with Nesterov-Todd scaling and Mehrotra predictor-corrector steps;
/// the KKT systems are factored with a sparse LDL^T under static
/// regularization and solved with iterative refinement.
Result solve(const Eigen::SparseMatrix<double>& G,
             const Eigen::SparseMatrix<double>& A,
             const Eigen::VectorXd& c,
             const Eigen::VectorXd& h,
             const Eigen::VectorXd& b,
             Eigen::Index num_nonneg,
             const std::vector<Eigen::Index>& soc_dims,
             const Settings& settings = {},
             const EliminationGroups& groups = {});

} // namespace aggflex::ipm

#endif
