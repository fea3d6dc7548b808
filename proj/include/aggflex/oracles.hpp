#ifndef AGGFLEX_ORACLES_HPP
#define AGGFLEX_ORACLES_HPP

#include <vector>

#include "aggflex/polytope.hpp"

namespace aggflex {

/// Desk-scale exact oracles. They refuse dimensions above 3 instead of
/// silently attempting exponential work; the main pipeline never calls
/// them, they exist to certify it.

/// All vertices of a bounded nonempty polytope with dim <= 3: solve every
/// square row subsystem, keep feasible solutions, deduplicate within
/// 1e-9 (Euclidean), prune non-extreme points by LP.
VPolytope enumerate_vertices(const HPolytope& P, const SolverConfig& config = {});

/// Exact Minkowski sum of bounded polytopes (dim <= 3) as the extreme
/// points of all pairwise vertex sums.
VPolytope minkowski_sum_oracle(const std::vector<HPolytope>& sets,
                               const SolverConfig& config = {});

VPolytope minkowski_sum_oracle(const std::vector<VPolytope>& sets,
                               const SolverConfig& config = {});

enum class DistanceNorm { L2, Linf };

/// Distance from a point to an H-polytope (L2 via one SOCP, Linf via one LP).
double point_distance(const Eigen::VectorXd& point, const HPolytope& Y, DistanceNorm norm,
                      const SolverConfig& config = {});

/// Distance from a point to the convex hull of a vertex list.
double point_distance(const Eigen::VectorXd& point, const VPolytope& Y, DistanceNorm norm,
                      const SolverConfig& config = {});

/// Exact Hausdorff distance between bounded polytopes with dim <= 3. The
/// supremum of a convex distance over a polytope is attained at a vertex,
/// so both directed distances reduce to per-vertex projections.
double hausdorff_oracle(const HPolytope& X, const HPolytope& Y, DistanceNorm norm,
                        const SolverConfig& config = {});

double hausdorff_oracle(const VPolytope& X, const VPolytope& Y, DistanceNorm norm,
                        const SolverConfig& config = {});

/// Superset of the Minkowski sum obtained by adding right-hand sides of
/// sets sharing one constraint matrix.
HPolytope aggregate_outer_bound(const std::vector<HPolytope>& sets);

} // namespace aggflex

#endif
