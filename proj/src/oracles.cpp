#include "aggflex/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "aggflex/errors.hpp"

namespace aggflex {

namespace {

constexpr double kDedupTol = 1e-9;

void require_desk_scale(Eigen::Index n) {
    require(n <= 3, ErrorKind::DimensionTooLarge,
            "exact oracle limited to dimension <= 3, got " + std::to_string(n));
}

/// True when `point` is a convex combination of `others` (feasibility LP).
bool in_convex_hull(const Eigen::VectorXd& point, const std::vector<Eigen::VectorXd>& others,
                    const SolverConfig& config) {
    if (others.empty()) {
        return false;
    }
    ConicProgram prog;
    const auto m = static_cast<Eigen::Index>(others.size());
    const BlockId lambda = prog.add_block("lambda", m);
    prog.set_nonnegative(lambda);
    std::vector<Term> sum_row;
    for (Eigen::Index j = 0; j < m; ++j) {
        sum_row.push_back(Term{lambda, j, 1.0});
    }
    prog.add_equality(sum_row, 1.0);
    for (Eigen::Index r = 0; r < point.size(); ++r) {
        std::vector<Term> row;
        for (Eigen::Index j = 0; j < m; ++j) {
            row.push_back(Term{lambda, j, others[static_cast<size_t>(j)](r)});
        }
        prog.add_equality(row, point(r));
    }
    const Solution sol = solve_linear_program(prog, config);
    if (sol.status == SolveStatus::Optimal) {
        return true;
    }
    if (sol.status == SolveStatus::Infeasible) {
        return false;
    }
    throw_error(ErrorKind::Solver, "convex-hull membership LP failed");
}

std::vector<Eigen::VectorXd> dedup_points(const std::vector<Eigen::VectorXd>& points) {
    std::vector<Eigen::VectorXd> out;
    for (const Eigen::VectorXd& p : points) {
        bool seen = false;
        for (const Eigen::VectorXd& q : out) {
            if ((p - q).norm() <= kDedupTol) {
                seen = true;
                break;
            }
        }
        if (!seen) {
            out.push_back(p);
        }
    }
    return out;
}

/// Keeps only the extreme points of a finite point set.
std::vector<Eigen::VectorXd> extreme_points(std::vector<Eigen::VectorXd> points,
                                            const SolverConfig& config) {
    points = dedup_points(points);
    if (points.size() <= 1) {
        return points;
    }
    std::vector<Eigen::VectorXd> kept;
    for (size_t i = 0; i < points.size(); ++i) {
        std::vector<Eigen::VectorXd> others;
        others.reserve(points.size() - 1);
        for (size_t j = 0; j < points.size(); ++j) {
            if (j != i) {
                others.push_back(points[j]);
            }
        }
        if (!in_convex_hull(points[i], others, config)) {
            kept.push_back(points[i]);
        }
    }
    // Degenerate duplicates could drop everything; never return an empty
    // hull for a nonempty input.
    if (kept.empty()) {
        kept.push_back(points.front());
    }
    return kept;
}

void sorted_canonical(std::vector<Eigen::VectorXd>& points) {
    std::sort(points.begin(), points.end(), [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
        for (Eigen::Index i = 0; i < a.size(); ++i) {
            if (a(i) != b(i)) {
                return a(i) < b(i);
            }
        }
        return false;
    });
}

} // namespace

VPolytope enumerate_vertices(const HPolytope& P, const SolverConfig& config) {
    const Eigen::Index n = P.dim();
    require_desk_scale(n);
    require(n >= 1, ErrorKind::Domain, "polytope without dimensions");

    if (!is_nonempty(P, config)) {
        throw_error(ErrorKind::Infeasible, "vertex enumeration of an empty polytope");
    }
    // Boundedness probe along +/- each axis.
    for (Eigen::Index i = 0; i < n; ++i) {
        for (double sgn : {1.0, -1.0}) {
            Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
            d(i) = sgn;
            support_function(P, d, config); // throws Unbounded when unbounded
        }
    }

    const Eigen::MatrixXd A = Eigen::MatrixXd(P.A);
    const Eigen::Index m = P.rows();
    const double feas_scale = 1.0 + P.b.lpNorm<Eigen::Infinity>();

    std::vector<Eigen::VectorXd> candidates;
    std::vector<Eigen::Index> idx(static_cast<size_t>(n), 0);
    // enumerate all n-subsets of {0..m-1}
    std::function<void(Eigen::Index, Eigen::Index)> visit = [&](Eigen::Index start,
                                                                Eigen::Index depth) {
        if (depth == n) {
            Eigen::MatrixXd As(n, n);
            Eigen::VectorXd bs(n);
            for (Eigen::Index k = 0; k < n; ++k) {
                As.row(k) = A.row(idx[static_cast<size_t>(k)]);
                bs(k) = P.b(idx[static_cast<size_t>(k)]);
            }
            Eigen::FullPivLU<Eigen::MatrixXd> lu(As);
            if (!lu.isInvertible()) {
                return;
            }
            const Eigen::VectorXd y = lu.solve(bs);
            if ((A * y - P.b).maxCoeff() <= kDedupTol * feas_scale) {
                candidates.push_back(y);
            }
            return;
        }
        for (Eigen::Index i = start; i < m - (n - depth - 1); ++i) {
            idx[static_cast<size_t>(depth)] = i;
            visit(i + 1, depth + 1);
        }
    };
    visit(0, 0);

    VPolytope out;
    out.vertices = extreme_points(std::move(candidates), config);
    sorted_canonical(out.vertices);
    return out;
}

VPolytope minkowski_sum_oracle(const std::vector<VPolytope>& sets, const SolverConfig& config) {
    require(!sets.empty(), ErrorKind::Domain, "Minkowski sum of no sets");
    const Eigen::Index n = sets.front().dim();
    require_desk_scale(n);
    for (const VPolytope& s : sets) {
        require(s.dim() == n, ErrorKind::DimensionMismatch, "Minkowski sum dimension mismatch");
        require(!s.vertices.empty(), ErrorKind::EmptyInputSet, "Minkowski sum of an empty set");
    }
    std::vector<Eigen::VectorXd> sums = sets.front().vertices;
    for (size_t k = 1; k < sets.size(); ++k) {
        std::vector<Eigen::VectorXd> next;
        next.reserve(sums.size() * sets[k].vertices.size());
        for (const Eigen::VectorXd& a : sums) {
            for (const Eigen::VectorXd& v : sets[k].vertices) {
                next.push_back(a + v);
            }
        }
        // Reduce between stages to keep the candidate count polynomial.
        next = extreme_points(std::move(next), config);
        sums = std::move(next);
    }
    VPolytope out;
    out.vertices = extreme_points(std::move(sums), config);
    sorted_canonical(out.vertices);
    return out;
}

VPolytope minkowski_sum_oracle(const std::vector<HPolytope>& sets, const SolverConfig& config) {
    std::vector<VPolytope> vsets;
    vsets.reserve(sets.size());
    for (const HPolytope& s : sets) {
        vsets.push_back(enumerate_vertices(s, config));
    }
    return minkowski_sum_oracle(vsets, config);
}

double point_distance(const Eigen::VectorXd& point, const HPolytope& Y, DistanceNorm norm,
                      const SolverConfig& config) {
    require(point.size() == Y.dim(), ErrorKind::DimensionMismatch,
            "point dimension does not match the polytope");
    ConicProgram prog;
    const BlockId y = prog.add_block("y", Y.dim());
    add_membership_rows(prog, y, Y);
    std::vector<MapEntry> entries;
    for (Eigen::Index i = 0; i < Y.dim(); ++i) {
        entries.push_back(MapEntry{i, y, i, -1.0});
    }
    prog.add_norm_term(norm == DistanceNorm::L2 ? NormKind::L2 : NormKind::Linf, Y.dim(), entries,
                       point);
    const Solution sol = solve_conic_program(prog, config);
    if (sol.status == SolveStatus::Infeasible) {
        throw_error(ErrorKind::Infeasible, "distance to an empty polytope");
    }
    require(sol.status == SolveStatus::Optimal, ErrorKind::Solver, "distance program failed");
    return std::max(0.0, sol.objective);
}

double point_distance(const Eigen::VectorXd& point, const VPolytope& Y, DistanceNorm norm,
                      const SolverConfig& config) {
    require(!Y.vertices.empty(), ErrorKind::EmptyInputSet, "distance to an empty vertex set");
    require(point.size() == Y.dim(), ErrorKind::DimensionMismatch,
            "point dimension does not match the polytope");
    ConicProgram prog;
    const auto m = static_cast<Eigen::Index>(Y.vertices.size());
    const BlockId lambda = prog.add_block("lambda", m);
    prog.set_nonnegative(lambda);
    std::vector<Term> sum_row;
    for (Eigen::Index j = 0; j < m; ++j) {
        sum_row.push_back(Term{lambda, j, 1.0});
    }
    prog.add_equality(sum_row, 1.0);
    std::vector<MapEntry> entries;
    for (Eigen::Index r = 0; r < point.size(); ++r) {
        for (Eigen::Index j = 0; j < m; ++j) {
            entries.push_back(MapEntry{r, lambda, j, -Y.vertices[static_cast<size_t>(j)](r)});
        }
    }
    prog.add_norm_term(norm == DistanceNorm::L2 ? NormKind::L2 : NormKind::Linf, point.size(),
                       entries, point);
    const Solution sol = solve_conic_program(prog, config);
    require(sol.status == SolveStatus::Optimal, ErrorKind::Solver, "distance program failed");
    return std::max(0.0, sol.objective);
}

double hausdorff_oracle(const HPolytope& X, const HPolytope& Y, DistanceNorm norm,
                        const SolverConfig& config) {
    require(X.dim() == Y.dim(), ErrorKind::DimensionMismatch, "Hausdorff dimension mismatch");
    require_desk_scale(X.dim());
    const VPolytope vx = enumerate_vertices(X, config);
    const VPolytope vy = enumerate_vertices(Y, config);
    double d = 0.0;
    for (const Eigen::VectorXd& v : vx.vertices) {
        d = std::max(d, point_distance(v, Y, norm, config));
    }
    for (const Eigen::VectorXd& v : vy.vertices) {
        d = std::max(d, point_distance(v, X, norm, config));
    }
    return d;
}

double hausdorff_oracle(const VPolytope& X, const VPolytope& Y, DistanceNorm norm,
                        const SolverConfig& config) {
    require(X.dim() == Y.dim(), ErrorKind::DimensionMismatch, "Hausdorff dimension mismatch");
    double d = 0.0;
    for (const Eigen::VectorXd& v : X.vertices) {
        d = std::max(d, point_distance(v, Y, norm, config));
    }
    for (const Eigen::VectorXd& v : Y.vertices) {
        d = std::max(d, point_distance(v, X, norm, config));
    }
    return d;
}

HPolytope aggregate_outer_bound(const std::vector<HPolytope>& sets) {
    require(!sets.empty(), ErrorKind::Domain, "outer bound of no sets");
    const HPolytope& first = sets.front();
    Eigen::VectorXd b = first.b;
    for (size_t i = 1; i < sets.size(); ++i) {
        const HPolytope& s = sets[i];
        require(s.A.rows() == first.A.rows() && s.A.cols() == first.A.cols(),
                ErrorKind::DimensionMismatch, "outer bound needs a shared constraint matrix");
        const Eigen::SparseMatrix<double> diff = s.A - first.A;
        require(diff.norm() == 0.0, ErrorKind::DimensionMismatch,
                "outer bound needs a shared constraint matrix");
        b += s.b;
    }
    return HPolytope(first.A, b, "outer_bound");
}

} // namespace aggflex
