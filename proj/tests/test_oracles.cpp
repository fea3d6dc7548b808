#include <doctest.h>

#include <cmath>

#include "aggflex/errors.hpp"
#include "aggflex/flexibility.hpp"
#include "aggflex/oracles.hpp"
#include "aggflex/rng.hpp"

using namespace aggflex;

namespace {

HPolytope box2(double lo, double hi) {
    return HPolytope::box(Eigen::Vector2d(lo, lo), Eigen::Vector2d(hi, hi));
}

bool vertex_set_equals(const VPolytope& got, const std::vector<Eigen::Vector2d>& expected,
                       double tol = 1e-9) {
    if (got.vertices.size() != expected.size()) {
        return false;
    }
    for (const Eigen::Vector2d& e : expected) {
        bool found = false;
        for (const Eigen::VectorXd& v : got.vertices) {
            if ((v - e).norm() <= tol) {
                found = true;
                break;
            }
        }
        if (!found) {
            return false;
        }
    }
    return true;
}

FlexibilitySet ev_set(int a, int d, double R, double E, int T, double delta) {
    const ChargingGrid grid(T, delta, Representation::PowerSpace);
    return build_flexibility_set(EvSpec{a, d, R, E}, grid);
}

} // namespace

TEST_CASE("vertices of boxes and simplices") {
    const VPolytope box = enumerate_vertices(HPolytope::box(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1)));
    CHECK(vertex_set_equals(box, {{0, 0}, {1, 0}, {0, 1}, {1, 1}}));

    Eigen::MatrixXd A(3, 2);
    A << -1, 0, 0, -1, 1, 1;
    Eigen::VectorXd b(3);
    b << 0, 0, 1;
    const VPolytope simplex = enumerate_vertices(HPolytope(A, b));
    CHECK(vertex_set_equals(simplex, {{0, 0}, {1, 0}, {0, 1}}));
}

TEST_CASE("vertex enumeration refuses high dimensions, empty and unbounded sets") {
    try {
        enumerate_vertices(HPolytope::box(Eigen::VectorXd::Zero(4), Eigen::VectorXd::Ones(4)));
        FAIL("expected a throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DimensionTooLarge);
    }
    Eigen::MatrixXd A(2, 1);
    A << 1, -1;
    Eigen::VectorXd b(2);
    b << -1, 0;
    CHECK_THROWS_AS(enumerate_vertices(HPolytope(A, b)), Error); // empty
    Eigen::MatrixXd Ah(1, 2);
    Ah << 1, 0;
    CHECK_THROWS_AS(enumerate_vertices(HPolytope(Ah, Eigen::VectorXd::Ones(1))), Error); // unbounded
}

TEST_CASE("window-of-two EV set collapses to one vertex under the verbatim limits") {
    // a=0, d=1, R=1, E=1, T=2: the lower energy limit already pins
    // x(1) = E, so u = (1, 0) is the only admissible profile.
    const FlexibilitySet set = ev_set(0, 1, 1.0, 1.0, 2, 1.0);
    const VPolytope verts = enumerate_vertices(set.polytope);
    CHECK(vertex_set_equals(verts, {{1.0, 0.0}}));

    // cross-check against membership sampling: no sampled point outside
    // the vertex hull may be a member, and every vertex is a member
    Rng rng(42);
    for (int s = 0; s < 10000; ++s) {
        Eigen::Vector2d u(rng.uniform(-0.2, 1.2), rng.uniform(-0.2, 1.2));
        if (is_member(set.polytope, u, 1e-9)) {
            CHECK((u - Eigen::Vector2d(1.0, 0.0)).norm() <= 1e-6);
        }
    }
    for (const Eigen::VectorXd& v : verts.vertices) {
        CHECK(is_member(set.polytope, v, 1e-9));
    }
}

TEST_CASE("vertices satisfy membership and supports match the vertex maximum") {
    const FlexibilitySet set = ev_set(0, 2, 1.5, 2.0, 3, 1.0);
    const VPolytope verts = enumerate_vertices(set.polytope);
    REQUIRE(!verts.vertices.empty());
    for (const Eigen::VectorXd& v : verts.vertices) {
        CHECK(is_member(set.polytope, v, 1e-9));
    }
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::VectorXd d = rng.direction(3);
        double vertex_max = -1e100;
        for (const Eigen::VectorXd& v : verts.vertices) {
            vertex_max = std::max(vertex_max, d.dot(v));
        }
        CHECK(std::abs(support_function(set.polytope, d) - vertex_max) < 1e-6);
    }
}

TEST_CASE("Minkowski sums of boxes") {
    const std::vector<HPolytope> boxes = {box2(0, 1), box2(0, 1)};
    const VPolytope sum = minkowski_sum_oracle(boxes);
    CHECK(vertex_set_equals(sum, {{0, 0}, {2, 0}, {0, 2}, {2, 2}}));

    // the origin is the identity element
    Eigen::MatrixXd A(4, 2);
    A << 1, 0, -1, 0, 0, 1, 0, -1;
    const HPolytope origin(A, Eigen::VectorXd::Zero(4));
    const VPolytope same = minkowski_sum_oracle({box2(0, 1), origin});
    CHECK(vertex_set_equals(same, {{0, 0}, {1, 0}, {0, 1}, {1, 1}}));
}

TEST_CASE("Minkowski oracle is commutative and associative on vertex sets") {
    const FlexibilitySet s1 = ev_set(0, 1, 1.0, 0.7, 2, 1.0);
    const FlexibilitySet s2 = ev_set(0, 1, 2.0, 1.1, 2, 1.0);
    const FlexibilitySet s3 = ev_set(1, 1, 1.5, 0.0, 2, 1.0);
    const VPolytope a = minkowski_sum_oracle({s1.polytope, s2.polytope, s3.polytope});
    const VPolytope b = minkowski_sum_oracle({s3.polytope, s1.polytope, s2.polytope});
    const VPolytope ab = minkowski_sum_oracle({s1.polytope, s2.polytope});
    const VPolytope c = minkowski_sum_oracle(std::vector<VPolytope>{ab, enumerate_vertices(s3.polytope)});
    REQUIRE(a.vertices.size() == b.vertices.size());
    REQUIRE(a.vertices.size() == c.vertices.size());
    for (size_t i = 0; i < a.vertices.size(); ++i) {
        CHECK((a.vertices[i] - b.vertices[i]).norm() < 1e-9);
        CHECK((a.vertices[i] - c.vertices[i]).norm() < 1e-9);
    }
}

TEST_CASE("sampled sums lie inside the oracle sum and vertices decompose") {
    Rng rng(11);
    std::vector<FlexibilitySet> sets;
    const ChargingGrid grid(2, 1.0, Representation::PowerSpace);
    for (int i = 0; i < 3; ++i) {
        const int a = static_cast<int>(rng.below(2));
        const int d = a + static_cast<int>(rng.below(static_cast<std::uint64_t>(2 - a)));
        const double R = rng.uniform(0.5, 2.0);
        const double E = rng.uniform(0.0, 1.0) * R * (d - a);
        sets.push_back(build_flexibility_set(EvSpec{a, d, R, E}, grid));
    }
    std::vector<HPolytope> polys;
    std::vector<VPolytope> verts;
    for (const FlexibilitySet& s : sets) {
        polys.push_back(s.polytope);
        verts.push_back(enumerate_vertices(s.polytope));
    }
    const VPolytope sum = minkowski_sum_oracle(polys);

    // sampled sums: convex mixes of member vertices
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::Vector2d total(0.0, 0.0);
        for (const VPolytope& v : verts) {
            Eigen::Vector2d point(0.0, 0.0);
            double wsum = 0.0;
            for (const Eigen::VectorXd& vert : v.vertices) {
                const double w = rng.uniform();
                point += w * Eigen::Vector2d(vert);
                wsum += w;
            }
            total += point / wsum;
        }
        CHECK(point_distance(total, sum, DistanceNorm::L2) < 1e-6);
    }

    // every vertex of the sum splits into members via a feasibility LP
    for (const Eigen::VectorXd& v : sum.vertices) {
        ConicProgram prog;
        std::vector<BlockId> blocks;
        for (size_t i = 0; i < polys.size(); ++i) {
            blocks.push_back(prog.add_block("u" + std::to_string(i), 2));
            add_membership_rows(prog, blocks.back(), polys[i]);
        }
        for (int t = 0; t < 2; ++t) {
            std::vector<Term> row;
            for (BlockId blk : blocks) {
                row.push_back({blk, t, 1.0});
            }
            prog.add_equality(row, v(t));
        }
        CHECK(solve_linear_program(prog).status == SolveStatus::Optimal);
    }
}

TEST_CASE("Hausdorff distances of nested intervals and boxes") {
    Eigen::MatrixXd A(2, 1);
    A << 1, -1;
    Eigen::VectorXd b1(2), b2(2);
    b1 << 1, 0; // [0, 1]
    b2 << 2, 0; // [0, 2]
    const HPolytope i1(A, b1), i2(A, b2);
    CHECK(hausdorff_oracle(i1, i2, DistanceNorm::L2) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(hausdorff_oracle(i1, i2, DistanceNorm::Linf) == doctest::Approx(1.0).epsilon(1e-6));

    CHECK(hausdorff_oracle(box2(-1, 1), box2(-2, 2), DistanceNorm::L2) ==
          doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));
    CHECK(hausdorff_oracle(box2(-1, 1), box2(-1, 1), DistanceNorm::L2) ==
          doctest::Approx(0.0).epsilon(1e-7));
}

TEST_CASE("zero Hausdorff distance matches support-function equality") {
    const FlexibilitySet s1 = ev_set(0, 1, 1.0, 0.5, 2, 1.0);
    const FlexibilitySet s2 = ev_set(0, 1, 2.0, 1.1, 2, 1.0);
    Rng rng(3);
    auto supports_agree = [&](const HPolytope& X, const HPolytope& Y) {
        for (int i = 0; i < 200; ++i) {
            const Eigen::VectorXd d = rng.direction(2);
            if (std::abs(support_function(X, d) - support_function(Y, d)) > 1e-8) {
                return false;
            }
        }
        return true;
    };
    CHECK(hausdorff_oracle(s1.polytope, s1.polytope, DistanceNorm::L2) < 1e-8);
    CHECK(supports_agree(s1.polytope, s1.polytope));
    const double d12 = hausdorff_oracle(s1.polytope, s2.polytope, DistanceNorm::L2);
    CHECK(d12 > 1e-8);
    CHECK_FALSE(supports_agree(s1.polytope, s2.polytope));
}

TEST_CASE("outer bound adds right-hand sides and contains the true sum") {
    Eigen::MatrixXd A(2, 1);
    A << 1, -1;
    Eigen::VectorXd b(2);
    b << 1, 0; // [0, 1] as { u <= 1, -u <= 0 }
    const HPolytope unit(A, b);
    const HPolytope doubled = aggregate_outer_bound({unit, unit});
    CHECK(doubled.b(0) == 2.0);
    CHECK(doubled.b(1) == 0.0);
    const HPolytope single = aggregate_outer_bound({unit});
    CHECK((single.b - unit.b).cwiseAbs().maxCoeff() == 0.0);

    const ChargingGrid grid(2, 1.0, Representation::PowerSpace);
    std::vector<HPolytope> evs;
    Rng rng(5);
    for (int i = 0; i < 3; ++i) {
        const double R = rng.uniform(0.5, 2.0);
        const double E = rng.uniform(0.0, R);
        evs.push_back(build_flexibility_set(EvSpec{0, 1, R, E}, grid).polytope);
    }
    const HPolytope outer = aggregate_outer_bound(evs);
    for (const Eigen::VectorXd& v : minkowski_sum_oracle(evs).vertices) {
        CHECK(is_member(outer, v, 1e-9));
    }
}
