#include "aggflex/polytope.hpp"

#include <utility>

#include "aggflex/errors.hpp"

namespace aggflex {

void add_membership_rows(ConicProgram& prog, BlockId y, const HPolytope& P) {
    std::vector<std::vector<Term>> rows(static_cast<size_t>(P.rows()));
    for (int col = 0; col < P.A.outerSize(); ++col) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(P.A, col); it; ++it) {
            rows[static_cast<size_t>(it.row())].push_back(Term{y, col, it.value()});
        }
    }
    for (Eigen::Index r = 0; r < P.rows(); ++r) {
        prog.add_inequality(rows[static_cast<size_t>(r)], P.b(r));
    }
}

HPolytope::HPolytope(Eigen::SparseMatrix<double> A_in, Eigen::VectorXd b_in, std::string label_in)
    : A(std::move(A_in)), b(std::move(b_in)), label(std::move(label_in)) {
    require(A.rows() == b.size(), ErrorKind::DimensionMismatch,
            "polytope rows of A and entries of b differ");
    A.makeCompressed();
}

HPolytope::HPolytope(const Eigen::MatrixXd& A_in, Eigen::VectorXd b_in, std::string label_in)
    : HPolytope(Eigen::SparseMatrix<double>(A_in.sparseView()), std::move(b_in),
                std::move(label_in)) {}

HPolytope HPolytope::box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, std::string label) {
    require(lo.size() == hi.size(), ErrorKind::DimensionMismatch, "box bounds length mismatch");
    const Eigen::Index n = lo.size();
    Eigen::SparseMatrix<double> A(2 * n, n);
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd b(2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        require(lo(i) <= hi(i), ErrorKind::Domain, "box with inverted bounds");
        trip.emplace_back(i, i, 1.0);
        b(i) = hi(i);
        trip.emplace_back(n + i, i, -1.0);
        b(n + i) = -lo(i);
    }
    A.setFromTriplets(trip.begin(), trip.end());
    return HPolytope(std::move(A), std::move(b), std::move(label));
}

bool is_member(const HPolytope& P, const Eigen::VectorXd& y, double tol) {
    require(y.size() == P.dim(), ErrorKind::DimensionMismatch,
            "point dimension does not match the polytope");
    require(tol >= 0.0, ErrorKind::Domain, "membership tolerance must be nonnegative");
    const Eigen::VectorXd residual = P.A * y - P.b;
    return residual.maxCoeff() <= tol;
}

double support_function(const HPolytope& P, const Eigen::VectorXd& direction,
                        const SolverConfig& config) {
    require(direction.size() == P.dim(), ErrorKind::DimensionMismatch,
            "direction dimension does not match the polytope");
    ConicProgram prog;
    const BlockId y = prog.add_block("y", P.dim());
    for (Eigen::Index i = 0; i < P.dim(); ++i) {
        prog.add_linear_cost(y, i, -direction(i));
    }
    add_membership_rows(prog, y, P);
    const Solution sol = solve_linear_program(prog, config);
    switch (sol.status) {
        case SolveStatus::Optimal:
            return -sol.objective;
        case SolveStatus::Unbounded:
            throw_error(ErrorKind::Unbounded, "support function unbounded in this direction");
        case SolveStatus::Infeasible:
            throw_error(ErrorKind::Infeasible, "support function of an empty polytope");
        default:
            throw_error(ErrorKind::Solver, "support function LP failed numerically");
    }
}

Eigen::VectorXd support_point(const HPolytope& P, const Eigen::VectorXd& direction,
                              const SolverConfig& config) {
    require(direction.size() == P.dim(), ErrorKind::DimensionMismatch,
            "direction dimension does not match the polytope");
    ConicProgram prog;
    const BlockId y = prog.add_block("y", P.dim());
    for (Eigen::Index i = 0; i < P.dim(); ++i) {
        prog.add_linear_cost(y, i, -direction(i));
    }
    add_membership_rows(prog, y, P);
    const Solution sol = solve_linear_program(prog, config);
    switch (sol.status) {
        case SolveStatus::Optimal:
            return sol.block(y);
        case SolveStatus::Unbounded:
            throw_error(ErrorKind::Unbounded, "support point unbounded in this direction");
        case SolveStatus::Infeasible:
            throw_error(ErrorKind::Infeasible, "support point of an empty polytope");
        default:
            throw_error(ErrorKind::Solver, "support point LP failed numerically");
    }
}

bool is_nonempty(const HPolytope& P, const SolverConfig& config) {
    ConicProgram prog;
    const BlockId y = prog.add_block("y", P.dim());
    add_membership_rows(prog, y, P);
    const Solution sol = solve_linear_program(prog, config);
    if (sol.status == SolveStatus::Optimal) {
        return true;
    }
    if (sol.status == SolveStatus::Infeasible) {
        return false;
    }
    throw_error(ErrorKind::Solver, "feasibility LP failed numerically");
}

Eigen::VectorXd any_point(const HPolytope& P, const SolverConfig& config) {
    ConicProgram prog;
    const BlockId y = prog.add_block("y", P.dim());
    add_membership_rows(prog, y, P);
    const Solution sol = solve_linear_program(prog, config);
    if (sol.status == SolveStatus::Optimal) {
        return sol.block(y);
    }
    if (sol.status == SolveStatus::Infeasible) {
        throw_error(ErrorKind::Infeasible, "polytope is empty");
    }
    throw_error(ErrorKind::Solver, "feasibility LP failed numerically");
}

} // namespace aggflex
