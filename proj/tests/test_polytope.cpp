#include <doctest.h>

#include "aggflex/errors.hpp"
#include "aggflex/polytope.hpp"

using namespace aggflex;

namespace {
HPolytope unit_box2() {
    return HPolytope::box(Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, 1));
}
} // namespace

TEST_CASE("membership of the center and the tolerance boundary") {
    const HPolytope box = unit_box2();
    CHECK(is_member(box, Eigen::Vector2d(0, 0), 0.0));
    CHECK(is_member(box, Eigen::Vector2d(1.000001, 0), 1e-5));
    CHECK_FALSE(is_member(box, Eigen::Vector2d(1.000001, 0), 0.0));
    CHECK_FALSE(is_member(box, Eigen::Vector2d(1.1, 0), 1e-5));
}

TEST_CASE("membership rejects mismatched dimensions") {
    const HPolytope box = unit_box2();
    CHECK_THROWS_AS(is_member(box, Eigen::Vector3d(0, 0, 0), 0.0), Error);
    CHECK_THROWS_AS(is_member(box, Eigen::Vector2d(0, 0), -1.0), Error);
}

TEST_CASE("support function of the unit box") {
    const HPolytope box = unit_box2();
    CHECK(support_function(box, Eigen::Vector2d(1, 1)) == doctest::Approx(2.0).epsilon(1e-7));
    CHECK(support_function(box, Eigen::Vector2d(0, 0)) == doctest::Approx(0.0).epsilon(1e-8));
    CHECK(support_function(box, Eigen::Vector2d(-1, 0)) == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("support function signals unbounded and empty problems") {
    // half-plane x0 <= 0: unbounded in direction (-1, 0)... bounded in (1,0)
    Eigen::MatrixXd A(1, 2);
    A << 1, 0;
    Eigen::VectorXd b(1);
    b << 0;
    const HPolytope half(A, b);
    CHECK_THROWS_AS(support_function(half, Eigen::Vector2d(-1, 0)), Error);

    Eigen::MatrixXd Ae(2, 1);
    Ae << 1, -1;
    Eigen::VectorXd be(2);
    be << -1, 0; // x <= -1 and x >= 0
    const HPolytope empty(Ae, be);
    CHECK_FALSE(is_nonempty(empty));
    CHECK_THROWS_AS(support_function(empty, Eigen::VectorXd::Ones(1)), Error);
}

TEST_CASE("support point maximizes the direction") {
    const HPolytope box = unit_box2();
    const Eigen::VectorXd p = support_point(box, Eigen::Vector2d(1, -1));
    CHECK(p(0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(p(1) == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("any_point returns a member") {
    const HPolytope box = unit_box2();
    CHECK(is_member(box, any_point(box), 1e-7));
}
