#include "aggflex/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "aggflex/errors.hpp"
#include "aggflex/parallel.hpp"
#include "aggflex/rng.hpp"

namespace aggflex {

namespace {

int nearest_centroid(const Eigen::VectorXd& point, const std::vector<Eigen::VectorXd>& centroids) {
    int best = 0;
    double best_d = (point - centroids[0]).squaredNorm();
    for (size_t k = 1; k < centroids.size(); ++k) {
        const double d = (point - centroids[k]).squaredNorm();
        if (d < best_d) { // strict: equal distances keep the lowest id
            best_d = d;
            best = static_cast<int>(k);
        }
    }
    return best;
}

} // namespace

bool assign_to_centroids_serial(const std::vector<Eigen::VectorXd>& points,
                                const std::vector<Eigen::VectorXd>& centroids,
                                std::vector<int>& assignments) {
    bool changed = false;
    for (size_t i = 0; i < points.size(); ++i) {
        const int a = nearest_centroid(points[i], centroids);
        if (assignments[i] != a) {
            assignments[i] = a;
            changed = true;
        }
    }
    return changed;
}

bool assign_to_centroids_parallel(const std::vector<Eigen::VectorXd>& points,
                                  const std::vector<Eigen::VectorXd>& centroids,
                                  std::vector<int>& assignments) {
    std::vector<char> changed_flags(points.size(), 0);
    parallel_for(static_cast<std::int64_t>(points.size()), [&](std::int64_t i) {
        const int a = nearest_centroid(points[static_cast<size_t>(i)], centroids);
        if (assignments[static_cast<size_t>(i)] != a) {
            assignments[static_cast<size_t>(i)] = a;
            changed_flags[static_cast<size_t>(i)] = 1;
        }
    });
    for (char f : changed_flags) {
        if (f) {
            return true;
        }
    }
    return false;
}

namespace {

struct RestartResult {
    Clustering clustering;
    bool valid = false;
};

std::vector<Eigen::VectorXd> kmeanspp_seeding(const std::vector<Eigen::VectorXd>& points, int K,
                                              Rng& rng) {
    const size_t n = points.size();
    std::vector<Eigen::VectorXd> centroids;
    centroids.reserve(static_cast<size_t>(K));
    centroids.push_back(points[rng.below(n)]);
    std::vector<double> d2(n);
    for (int k = 1; k < K; ++k) {
        double total = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::max();
            for (const Eigen::VectorXd& c : centroids) {
                best = std::min(best, (points[i] - c).squaredNorm());
            }
            d2[i] = best;
            total += best;
        }
        size_t pick = 0;
        if (total <= 0.0) {
            pick = rng.below(n); // all points coincide with a centroid
        } else {
            const double target = rng.uniform() * total;
            double acc = 0.0;
            for (size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc >= target) {
                    pick = i;
                    break;
                }
                pick = i;
            }
        }
        centroids.push_back(points[pick]);
    }
    return centroids;
}

void update_centroids(const std::vector<Eigen::VectorXd>& points,
                      const std::vector<int>& assignments, std::vector<Eigen::VectorXd>& centroids,
                      std::vector<int>& sizes) {
    const int K = static_cast<int>(centroids.size());
    const Eigen::Index dim = points.front().size();
    for (int k = 0; k < K; ++k) {
        centroids[static_cast<size_t>(k)] = Eigen::VectorXd::Zero(dim);
        sizes[static_cast<size_t>(k)] = 0;
    }
    for (size_t i = 0; i < points.size(); ++i) {
        centroids[static_cast<size_t>(assignments[i])] += points[i];
        ++sizes[static_cast<size_t>(assignments[i])];
    }
    for (int k = 0; k < K; ++k) {
        if (sizes[static_cast<size_t>(k)] > 0) {
            centroids[static_cast<size_t>(k)] /= sizes[static_cast<size_t>(k)];
        }
    }
}

/// Gives each empty cluster the point currently farthest from its own
/// centroid (ties to the lowest point index); donors must keep >= 2 points.
void repair_empty_clusters(const std::vector<Eigen::VectorXd>& points,
                           std::vector<int>& assignments, std::vector<Eigen::VectorXd>& centroids,
                           std::vector<int>& sizes) {
    const int K = static_cast<int>(centroids.size());
    for (int k = 0; k < K; ++k) {
        if (sizes[static_cast<size_t>(k)] > 0) {
            continue;
        }
        int steal = -1;
        double worst = -1.0;
        for (size_t i = 0; i < points.size(); ++i) {
            const int owner = assignments[i];
            if (sizes[static_cast<size_t>(owner)] < 2) {
                continue;
            }
            const double d = (points[i] - centroids[static_cast<size_t>(owner)]).squaredNorm();
            if (d > worst) {
                worst = d;
                steal = static_cast<int>(i);
            }
        }
        require(steal >= 0, ErrorKind::Internal, "cannot repair empty cluster");
        --sizes[static_cast<size_t>(assignments[static_cast<size_t>(steal)])];
        assignments[static_cast<size_t>(steal)] = k;
        sizes[static_cast<size_t>(k)] = 1;
        update_centroids(points, assignments, centroids, sizes);
    }
}

double clustering_loss(const std::vector<Eigen::VectorXd>& points,
                       const std::vector<int>& assignments,
                       const std::vector<Eigen::VectorXd>& centroids) {
    double loss = 0.0;
    for (size_t i = 0; i < points.size(); ++i) {
        loss += (points[i] - centroids[static_cast<size_t>(assignments[i])]).squaredNorm();
    }
    return loss;
}

Clustering lloyd_restart(const std::vector<Eigen::VectorXd>& points, int K, Rng rng,
                         const KmeansOptions& options) {
    const size_t n = points.size();
    Clustering result;
    result.centroids = kmeanspp_seeding(points, K, rng);
    result.assignments.assign(n, -1);
    result.sizes.assign(static_cast<size_t>(K), 0);

    const bool parallel_points = worker_threads() > 1 && n >= 4096;
    for (int iter = 0; iter < options.max_iters; ++iter) {
        const bool changed = parallel_points
                                 ? assign_to_centroids_parallel(points, result.centroids,
                                                                result.assignments)
                                 : assign_to_centroids_serial(points, result.centroids,
                                                              result.assignments);
        update_centroids(points, result.assignments, result.centroids, result.sizes);
        repair_empty_clusters(points, result.assignments, result.centroids, result.sizes);
        if (!changed && iter > 0) {
            break;
        }
    }
    result.loss = clustering_loss(points, result.assignments, result.centroids);
    return result;
}

} // namespace

Clustering kmeans_rhs(const std::vector<Eigen::VectorXd>& h_list, int K, std::uint64_t seed,
                      const KmeansOptions& options) {
    const int n = static_cast<int>(h_list.size());
    require(n >= 1, ErrorKind::Config, "clustering needs at least one vector");
    require(K >= 1 && K <= n, ErrorKind::Config,
            "cluster count must lie in [1, N]; got K=" + std::to_string(K) +
                " for N=" + std::to_string(n));
    for (const Eigen::VectorXd& h : h_list) {
        require(h.size() == h_list.front().size(), ErrorKind::DimensionMismatch,
                "clustering vectors must share one dimension");
    }

    const int restarts = std::max(1, options.restarts);
    Rng base(seed);
    std::vector<Clustering> results(static_cast<size_t>(restarts));
    maybe_parallel_for(restarts, [&](std::int64_t r) {
        results[static_cast<size_t>(r)] =
            lloyd_restart(h_list, K, base.split(static_cast<std::uint64_t>(r)), options);
    });

    // Lowest loss wins; exact ties resolved by restart index.
    size_t best = 0;
    for (size_t r = 1; r < results.size(); ++r) {
        if (results[r].loss < results[best].loss) {
            best = r;
        }
    }
    return results[best];
}

std::vector<HPolytope> base_sets_from_clustering(const Clustering& clustering,
                                                 const ChargingGrid& grid,
                                                 const SolverConfig& config) {
    std::vector<HPolytope> bases;
    bases.reserve(clustering.centroids.size());
    for (size_t k = 0; k < clustering.centroids.size(); ++k) {
        require(clustering.centroids[k].size() == 4 * grid.periods(),
                ErrorKind::DimensionMismatch, "centroid is not a 4T vector");
        HPolytope base(grid.constraint_matrix(), clustering.centroids[k],
                       "base_" + std::to_string(k));
        require(is_nonempty(base, config), ErrorKind::Internal,
                "base set from a centroid is empty; upstream data is corrupted");
        bases.push_back(std::move(base));
    }
    return bases;
}

namespace {

/// Largest 1/sqrt(lambda_min) over the minimal eigenspace of A_S A_S'
/// when that eigenspace intersects the nonnegative orthant.
bool minimal_eigenvector_nonneg(const Eigen::MatrixXd& gram, double* inv_sqrt_lambda,
                                const SolverConfig& config) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    const Eigen::VectorXd& vals = eig.eigenvalues();
    const double lmin = vals(0);
    if (lmin <= 1e-14) {
        return false; // dependent rows slipped through the rank filter
    }
    *inv_sqrt_lambda = 1.0 / std::sqrt(lmin);
    const double eig_tol = 1e-10 * std::max(1.0, vals(vals.size() - 1));
    std::vector<Eigen::Index> span;
    for (Eigen::Index i = 0; i < vals.size(); ++i) {
        if (vals(i) <= lmin + eig_tol) {
            span.push_back(i);
        }
    }
    if (span.size() == 1) {
        const Eigen::VectorXd v = eig.eigenvectors().col(span[0]);
        return v.minCoeff() >= -1e-12 || (-v).minCoeff() >= -1e-12;
    }
    // Multiple minimal eigenvalues: look for a nonnegative unit vector in
    // the eigenspace with a tiny feasibility LP over its coordinates.
    ConicProgram prog;
    const auto dim = static_cast<Eigen::Index>(span.size());
    const BlockId alpha = prog.add_block("alpha", dim);
    const Eigen::Index n = gram.rows();
    for (Eigen::Index r = 0; r < n; ++r) {
        std::vector<Term> row;
        for (Eigen::Index j = 0; j < dim; ++j) {
            row.push_back(Term{alpha, j, -eig.eigenvectors()(r, span[static_cast<size_t>(j)])});
        }
        prog.add_inequality(row, 0.0); // V alpha >= 0
    }
    std::vector<Term> normalize;
    for (Eigen::Index j = 0; j < dim; ++j) {
        double colsum = 0.0;
        for (Eigen::Index r = 0; r < n; ++r) {
            colsum += eig.eigenvectors()(r, span[static_cast<size_t>(j)]);
        }
        normalize.push_back(Term{alpha, j, colsum});
    }
    prog.add_equality(normalize, 1.0); // rules out alpha = 0
    const Solution sol = solve_linear_program(prog, config);
    return sol.status == SolveStatus::Optimal;
}

double best_over_support(const Eigen::MatrixXd& A, const std::vector<Eigen::Index>& support,
                         const SolverConfig& config) {
    const auto s = static_cast<Eigen::Index>(support.size());
    Eigen::MatrixXd As(s, A.cols());
    for (Eigen::Index i = 0; i < s; ++i) {
        As.row(i) = A.row(support[static_cast<size_t>(i)]);
    }
    if (s == 1) {
        const double norm = As.row(0).norm();
        return norm > 0.0 ? 1.0 / norm : 0.0;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(As);
    if (lu.rank() < s) {
        return 0.0; // rows not linearly independent
    }
    const Eigen::MatrixXd gram = As * As.transpose();
    double value = 0.0;
    if (minimal_eigenvector_nonneg(gram, &value, config)) {
        return value;
    }
    return 0.0; // boundary optima belong to sub-supports
}

} // namespace

LipschitzEstimate estimate_lipschitz(const Eigen::MatrixXd& A, NormKind p, NormKind q,
                                     std::uint64_t seed) {
    require(A.rows() >= 1 && A.cols() >= 1, ErrorKind::Domain, "empty matrix");
    require(A.cwiseAbs().maxCoeff() > 0.0, ErrorKind::Domain,
            "Lipschitz constant undefined for the zero matrix");
    require(p == NormKind::L2 && q == NormKind::L2, ErrorKind::Config,
            "only the L2/L2 norm pair is supported");

    LipschitzEstimate est;
    est.p = p;
    est.q = q;

    const Eigen::Index m = A.rows();
    const Eigen::Index n = A.cols();
    SolverConfig config;

    if (n <= 3) {
        // Exhaustive support enumeration, |S| from 1 to n.
        double best = 0.0;
        std::vector<Eigen::Index> support;
        std::function<void(Eigen::Index, Eigen::Index)> visit = [&](Eigen::Index start,
                                                                    Eigen::Index remaining) {
            if (!support.empty()) {
                best = std::max(best, best_over_support(A, support, config));
            }
            if (remaining == 0) {
                return;
            }
            for (Eigen::Index i = start; i < m; ++i) {
                support.push_back(i);
                visit(i + 1, remaining - 1);
                support.pop_back();
            }
        };
        visit(0, n);
        est.value = best;
        est.exact = true;
        return est;
    }

    // Sampled lower bound: all singletons plus random independent supports.
    double best = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        best = std::max(best, best_over_support(A, {i}, config));
    }
    Rng rng(seed);
    const int trials = 2000;
    for (int t = 0; t < trials; ++t) {
        const auto size = static_cast<Eigen::Index>(2 + rng.below(static_cast<std::uint64_t>(n - 1)));
        std::vector<Eigen::Index> support;
        while (static_cast<Eigen::Index>(support.size()) < size) {
            const auto candidate = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(m)));
            if (std::find(support.begin(), support.end(), candidate) == support.end()) {
                support.push_back(candidate);
            }
        }
        std::sort(support.begin(), support.end());
        best = std::max(best, best_over_support(A, support, config));
    }
    est.value = best;
    est.exact = false;
    return est;
}

} // namespace aggflex
