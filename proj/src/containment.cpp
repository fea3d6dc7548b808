#include "aggflex/containment.hpp"

#include "aggflex/errors.hpp"

namespace aggflex {

std::optional<ContainmentCertificate> check_ah_in_h(const Eigen::VectorXd& gamma,
                                                    const Eigen::MatrixXd& Gamma,
                                                    const HPolytope& X, const HPolytope& Y,
                                                    const SolverConfig& config) {
    const Eigen::Index nx = X.dim();
    const Eigen::Index ny = Y.dim();
    const Eigen::Index mx = X.rows();
    const Eigen::Index my = Y.rows();
    require(Gamma.rows() == ny && Gamma.cols() == nx, ErrorKind::DimensionMismatch,
            "Gamma must map X's space into Y's space");
    require(gamma.size() == ny, ErrorKind::DimensionMismatch, "gamma dimension mismatch");

    if (!is_nonempty(X, config)) {
        throw_error(ErrorKind::EmptyInputSet, "containment check requires a nonempty X");
    }

    const Eigen::MatrixXd Hx = Eigen::MatrixXd(X.A);
    const Eigen::MatrixXd Hy = Eigen::MatrixXd(Y.A);
    const Eigen::MatrixXd HyGamma = Hy * Gamma;
    const Eigen::VectorXd rhs_bound = Y.b - Hy * gamma;

    ConicProgram prog;
    const BlockId L = prog.add_block("Lambda", my, mx); // column-major flattening
    prog.set_nonnegative(L);

    // Lambda H_x = H_y Gamma, entry by entry.
    for (Eigen::Index c = 0; c < nx; ++c) {
        for (Eigen::Index r = 0; r < my; ++r) {
            std::vector<Term> row;
            for (Eigen::Index j = 0; j < mx; ++j) {
                if (Hx(j, c) != 0.0) {
                    row.push_back(Term{L, prog.flat(L, r, j), Hx(j, c)});
                }
            }
            prog.add_equality(row, HyGamma(r, c));
        }
    }
    // Lambda h_x <= h_y - H_y gamma, row by row.
    for (Eigen::Index r = 0; r < my; ++r) {
        std::vector<Term> row;
        for (Eigen::Index j = 0; j < mx; ++j) {
            if (X.b(j) != 0.0) {
                row.push_back(Term{L, prog.flat(L, r, j), X.b(j)});
            }
        }
        prog.add_inequality(row, rhs_bound(r));
    }

    const Solution sol = solve_linear_program(prog, config);
    if (sol.status == SolveStatus::Infeasible) {
        return std::nullopt;
    }
    require(sol.status == SolveStatus::Optimal, ErrorKind::Solver,
            "containment feasibility LP failed numerically");

    ContainmentCertificate cert;
    cert.Lambda = sol.matrix(L, my, mx);
    cert.gamma = gamma;
    cert.Gamma = Gamma;
    return cert;
}

bool verify_certificate(const ContainmentCertificate& cert, const HPolytope& X,
                        const HPolytope& Y, double tol) {
    require(cert.Lambda.rows() == Y.rows() && cert.Lambda.cols() == X.rows(),
            ErrorKind::DimensionMismatch, "certificate shape mismatch");
    require(cert.Gamma.rows() == Y.dim() && cert.Gamma.cols() == X.dim(),
            ErrorKind::DimensionMismatch, "certificate shape mismatch");
    require(cert.gamma.size() == Y.dim(), ErrorKind::DimensionMismatch,
            "certificate shape mismatch");

    const Eigen::MatrixXd Hx = Eigen::MatrixXd(X.A);
    const Eigen::MatrixXd Hy = Eigen::MatrixXd(Y.A);

    if (cert.Lambda.minCoeff() < -tol) {
        return false;
    }
    const double hy_scale = 1.0 + Hy.cwiseAbs().maxCoeff();
    const Eigen::MatrixXd eq_residual = cert.Lambda * Hx - Hy * cert.Gamma;
    if (eq_residual.cwiseAbs().maxCoeff() > tol * hy_scale) {
        return false;
    }
    const double rhs_scale = 1.0 + Y.b.cwiseAbs().maxCoeff();
    const Eigen::VectorXd violation = cert.Lambda * X.b - (Y.b - Hy * cert.gamma);
    return violation.maxCoeff() <= tol * rhs_scale;
}

} // namespace aggflex
