#ifndef AGGFLEX_CLUSTERING_HPP
#define AGGFLEX_CLUSTERING_HPP

#include <cstdint>
#include <vector>

#include "aggflex/conic_program.hpp"
#include "aggflex/grid.hpp"
#include "aggflex/polytope.hpp"

namespace aggflex {

/// K-means result over right-hand-side vectors. Centroids are exact
/// cluster means of the final assignment; loss is the within-cluster sum
/// of squared Euclidean distances.
struct Clustering {
    std::vector<int> assignments;            // point -> cluster in [0, K)
    std::vector<Eigen::VectorXd> centroids;  // K vectors
    std::vector<int> sizes;                  // K positive counts
    double loss = 0.0;

    int k() const { return static_cast<int>(centroids.size()); }
};

struct KmeansOptions {
    int max_iters = 300;
    int restarts = 10;
};

/// Nearest-centroid assignment with lowest-index tie-breaking. Returns
/// true when any assignment changed. The parallel variant distributes
/// points across threads; results are identical to the serial reference.
bool assign_to_centroids_serial(const std::vector<Eigen::VectorXd>& points,
                                const std::vector<Eigen::VectorXd>& centroids,
                                std::vector<int>& assignments);
bool assign_to_centroids_parallel(const std::vector<Eigen::VectorXd>& points,
                                  const std::vector<Eigen::VectorXd>& centroids,
                                  std::vector<int>& assignments);

/// Lloyd iterations from k-means++ seeding, best of `restarts` runs
/// (ties broken by restart index). Deterministic for a fixed seed;
/// emptied clusters are repaired by stealing the point farthest from its
/// centroid. Throws Config when K is not in [1, N].
Clustering kmeans_rhs(const std::vector<Eigen::VectorXd>& h_list, int K, std::uint64_t seed,
                      const KmeansOptions& options = {});

/// Base sets B_k = { u : A u <= b_k } from cluster centroids; each is an
/// outer approximation of its cluster's Minkowski average, hence nonempty.
std::vector<HPolytope> base_sets_from_clustering(const Clustering& clustering,
                                                 const ChargingGrid& grid,
                                                 const SolverConfig& config = {});

struct LipschitzEstimate {
    double value = 0.0;
    NormKind p = NormKind::L2;
    NormKind q = NormKind::L2;
    bool exact = false;
};

/// Sharp constant L(A) with d_H(X, Y) <= L(A) ||b_x - b_y|| for polytopes
/// sharing A. Exact mode (n <= 3, p = q = L2) enumerates all supports of
/// linearly independent rows; |S| = 1 contributes 1/||a_s||, larger
/// supports contribute 1/sqrt(lambda_min(A_S A_S')) whenever the minimal
/// eigenspace meets the nonnegative orthant (boundary optima are covered
/// by sub-supports). Above n = 3 a seeded multi-start search returns a
/// lower bound with exact = false.
LipschitzEstimate estimate_lipschitz(const Eigen::MatrixXd& A, NormKind p = NormKind::L2,
                                     NormKind q = NormKind::L2, std::uint64_t seed = 0);

} // namespace aggflex

#endif
