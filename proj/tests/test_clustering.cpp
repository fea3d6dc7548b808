#include <doctest.h>

#include <cmath>

#include "aggflex/clustering.hpp"
#include "aggflex/errors.hpp"
#include "aggflex/flexibility.hpp"
#include "aggflex/oracles.hpp"
#include "aggflex/parallel.hpp"
#include "aggflex/rng.hpp"

using namespace aggflex;

namespace {

std::vector<Eigen::VectorXd> random_vectors(int n, int dim, Rng& rng, double scale = 1.0) {
    std::vector<Eigen::VectorXd> out;
    for (int i = 0; i < n; ++i) {
        out.push_back(scale * rng.gaussian_vector(dim));
    }
    return out;
}

/// Exhaustive minimum of the 2-means loss over every bipartition.
double brute_force_two_means(const std::vector<Eigen::VectorXd>& points) {
    const int n = static_cast<int>(points.size());
    double best = std::numeric_limits<double>::max();
    for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
        Eigen::VectorXd c0 = Eigen::VectorXd::Zero(points[0].size());
        Eigen::VectorXd c1 = c0;
        int n0 = 0, n1 = 0;
        for (int i = 0; i < n; ++i) {
            if (mask & (1u << i)) {
                c0 += points[static_cast<size_t>(i)];
                ++n0;
            } else {
                c1 += points[static_cast<size_t>(i)];
                ++n1;
            }
        }
        c0 /= n0;
        c1 /= n1;
        double loss = 0.0;
        for (int i = 0; i < n; ++i) {
            loss += (points[static_cast<size_t>(i)] - ((mask & (1u << i)) ? c0 : c1)).squaredNorm();
        }
        best = std::min(best, loss);
    }
    return best;
}

} // namespace

TEST_CASE("separated duplicates split cleanly") {
    std::vector<Eigen::VectorXd> points = {Eigen::Vector2d(0, 0), Eigen::Vector2d(0, 0),
                                           Eigen::Vector2d(10, 10)};
    const Clustering c = kmeans_rhs(points, 2, 1);
    REQUIRE(c.k() == 2);
    CHECK(c.loss == doctest::Approx(0.0));
    CHECK(c.assignments[0] == c.assignments[1]);
    CHECK(c.assignments[0] != c.assignments[2]);
    const int lone = c.assignments[2];
    CHECK((c.centroids[static_cast<size_t>(lone)] - Eigen::Vector2d(10, 10)).norm() < 1e-12);
    CHECK(c.sizes[static_cast<size_t>(lone)] == 1);
}

TEST_CASE("one cluster reduces to the arithmetic mean") {
    Rng rng(17);
    const auto points = random_vectors(9, 4, rng);
    const Clustering c = kmeans_rhs(points, 1, 3);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(4);
    for (const auto& p : points) {
        mean += p;
    }
    mean /= static_cast<double>(points.size());
    CHECK((c.centroids[0] - mean).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("Lloyd with restarts reaches the exhaustive two-cluster optimum") {
    Rng rng(5);
    int hits = 0;
    for (int run = 0; run < 20; ++run) {
        const auto points = random_vectors(8, 2, rng);
        const Clustering c = kmeans_rhs(points, 2, 1000 + run);
        const double best = brute_force_two_means(points);
        if (c.loss <= best * (1.0 + 1e-9) + 1e-12) {
            ++hits;
        }
        CHECK(c.loss >= best - 1e-9); // never better than the true optimum
    }
    CHECK(hits >= 19);
}

TEST_CASE("centroids are exact means and sizes are positive") {
    Rng rng(31);
    const auto points = random_vectors(24, 6, rng, 3.0);
    const Clustering c = kmeans_rhs(points, 4, 7);
    std::vector<Eigen::VectorXd> sums(4, Eigen::VectorXd::Zero(6));
    std::vector<int> counts(4, 0);
    for (size_t i = 0; i < points.size(); ++i) {
        sums[static_cast<size_t>(c.assignments[i])] += points[i];
        ++counts[static_cast<size_t>(c.assignments[i])];
    }
    double loss = 0.0;
    for (int k = 0; k < 4; ++k) {
        REQUIRE(counts[static_cast<size_t>(k)] > 0);
        CHECK(counts[static_cast<size_t>(k)] == c.sizes[static_cast<size_t>(k)]);
        const Eigen::VectorXd mean = sums[static_cast<size_t>(k)] / counts[static_cast<size_t>(k)];
        CHECK((mean - c.centroids[static_cast<size_t>(k)]).cwiseAbs().maxCoeff() <
              1e-12 * (1.0 + mean.cwiseAbs().maxCoeff()));
    }
    for (size_t i = 0; i < points.size(); ++i) {
        loss += (points[i] - c.centroids[static_cast<size_t>(c.assignments[i])]).squaredNorm();
    }
    CHECK(loss == doctest::Approx(c.loss).epsilon(1e-12));
}

TEST_CASE("clustering is deterministic and validates K") {
    Rng rng(8);
    const auto points = random_vectors(10, 3, rng);
    const Clustering a = kmeans_rhs(points, 3, 42);
    const Clustering b = kmeans_rhs(points, 3, 42);
    CHECK(a.loss == b.loss);
    CHECK(a.assignments == b.assignments);
    CHECK_THROWS_AS(kmeans_rhs(points, 11, 1), Error);
    CHECK_THROWS_AS(kmeans_rhs(points, 0, 1), Error);
}

TEST_CASE("serial and parallel assignment kernels agree") {
    Rng rng(77);
    const auto points = random_vectors(500, 8, rng);
    const auto centroids = random_vectors(6, 8, rng);
    std::vector<int> serial(points.size(), -1), parallel(points.size(), -1);
    const bool cs = assign_to_centroids_serial(points, centroids, serial);
    const bool cp = assign_to_centroids_parallel(points, centroids, parallel);
    CHECK(cs == cp);
    CHECK(serial == parallel);
}

TEST_CASE("base sets contain sampled Minkowski averages") {
    const ChargingGrid grid(2, 1.0, Representation::PowerSpace);
    Rng rng(12);
    std::vector<FlexibilitySet> sets;
    std::vector<Eigen::VectorXd> h_list;
    for (int i = 0; i < 4; ++i) {
        const double R = rng.uniform(0.5, 2.0);
        const double E = rng.uniform(0.0, R);
        sets.push_back(build_flexibility_set(EvSpec{0, 1, R, E}, grid));
        h_list.push_back(sets.back().h);
    }
    const Clustering c = kmeans_rhs(h_list, 2, 3);
    const auto bases = base_sets_from_clustering(c, grid);
    REQUIRE(bases.size() == 2);
    for (int k = 0; k < 2; ++k) {
        std::vector<VPolytope> members;
        for (size_t i = 0; i < sets.size(); ++i) {
            if (c.assignments[i] == k) {
                members.push_back(enumerate_vertices(sets[i].polytope));
            }
        }
        for (int s = 0; s < 200; ++s) {
            Eigen::Vector2d avg(0, 0);
            for (const VPolytope& m : members) {
                Eigen::Vector2d point(0, 0);
                double wsum = 0.0;
                for (const Eigen::VectorXd& v : m.vertices) {
                    const double w = rng.uniform();
                    point += w * Eigen::Vector2d(v);
                    wsum += w;
                }
                avg += point / wsum;
            }
            avg /= static_cast<double>(members.size());
            CHECK(is_member(bases[static_cast<size_t>(k)], avg, 1e-8));
        }
    }
}

TEST_CASE("singleton clusters reproduce the individual sets") {
    const ChargingGrid grid(2, 1.0, Representation::PowerSpace);
    std::vector<Eigen::VectorXd> h_list;
    for (double E : {0.2, 0.6, 1.0}) {
        h_list.push_back(build_flexibility_set(EvSpec{0, 1, 1.0, E}, grid).h);
    }
    const Clustering c = kmeans_rhs(h_list, 3, 1);
    const auto bases = base_sets_from_clustering(c, grid);
    for (size_t i = 0; i < h_list.size(); ++i) {
        const int k = c.assignments[i];
        CHECK((bases[static_cast<size_t>(k)].b - h_list[i]).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("identical sets give a base set equal to the common set") {
    const ChargingGrid grid(2, 1.0, Representation::PowerSpace);
    const FlexibilitySet common = build_flexibility_set(EvSpec{0, 1, 1.5, 0.75}, grid);
    std::vector<Eigen::VectorXd> h_list(5, common.h);
    const Clustering c = kmeans_rhs(h_list, 1, 1);
    const auto bases = base_sets_from_clustering(c, grid);
    CHECK((bases[0].b - common.h).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("Lipschitz constants of simple stacks") {
    Eigen::MatrixXd interval(2, 1);
    interval << 1, -1;
    const LipschitzEstimate li = estimate_lipschitz(interval);
    CHECK(li.exact);
    CHECK(li.value == doctest::Approx(1.0).epsilon(1e-9));

    Eigen::MatrixXd box(4, 2);
    box << 1, 0, -1, 0, 0, 1, 0, -1;
    const LipschitzEstimate lb = estimate_lipschitz(box);
    CHECK(lb.exact);
    CHECK(lb.value == doctest::Approx(1.0).epsilon(1e-9));

    for (double c : {0.5, 3.0}) {
        const LipschitzEstimate ls = estimate_lipschitz(c * box);
        CHECK(ls.value == doctest::Approx(1.0 / c).epsilon(1e-9));
    }

    CHECK_THROWS_AS(estimate_lipschitz(Eigen::MatrixXd::Zero(2, 2)), Error);
    CHECK_THROWS_AS(estimate_lipschitz(box, NormKind::L1, NormKind::L2), Error);
}

TEST_CASE("high dimensions fall back to a sampled lower bound") {
    const ChargingGrid grid(5, 1.0, Representation::PowerSpace);
    const LipschitzEstimate est = estimate_lipschitz(Eigen::MatrixXd(grid.power_matrix()));
    CHECK_FALSE(est.exact);
    CHECK(est.value > 0.0);
}

TEST_CASE("Hausdorff distance obeys the Lipschitz bound on a shared matrix") {
    const ChargingGrid grid(2, 1.0, Representation::PowerSpace);
    const Eigen::MatrixXd H(grid.power_matrix());
    const LipschitzEstimate est = estimate_lipschitz(H);
    REQUIRE(est.exact);
    Rng rng(21);
    for (int c = 0; c < 50; ++c) {
        const double R1 = rng.uniform(0.5, 2.0), R2 = rng.uniform(0.5, 2.0);
        const double E1 = rng.uniform(0.0, R1), E2 = rng.uniform(0.0, R2);
        const FlexibilitySet s1 = build_flexibility_set(EvSpec{0, 1, R1, E1}, grid);
        const FlexibilitySet s2 = build_flexibility_set(EvSpec{0, 1, R2, E2}, grid);
        const double dist = hausdorff_oracle(s1.polytope, s2.polytope, DistanceNorm::L2);
        CHECK(dist <= est.value * (s1.h - s2.h).norm() + 1e-9);
    }
}

TEST_CASE("clustering loss bounds the squared Hausdorff loss via L(H)") {
    const ChargingGrid grid(2, 1.0, Representation::PowerSpace);
    const Eigen::MatrixXd H(grid.power_matrix());
    const double L = estimate_lipschitz(H).value;
    Rng rng(14);
    std::vector<FlexibilitySet> sets;
    std::vector<Eigen::VectorXd> h_list;
    for (int i = 0; i < 6; ++i) {
        const double R = rng.uniform(0.5, 2.0);
        const double E = rng.uniform(0.0, R);
        sets.push_back(build_flexibility_set(EvSpec{0, 1, R, E}, grid));
        h_list.push_back(sets.back().h);
    }
    for (int K : {1, 2, 3}) {
        const Clustering c = kmeans_rhs(h_list, K, 5);
        const auto bases = base_sets_from_clustering(c, grid);
        double haus_sq = 0.0;
        for (size_t i = 0; i < sets.size(); ++i) {
            const double d = hausdorff_oracle(
                sets[i].polytope, bases[static_cast<size_t>(c.assignments[i])], DistanceNorm::L2);
            haus_sq += d * d;
        }
        CHECK(haus_sq <= L * L * c.loss + 1e-9);
    }
}
