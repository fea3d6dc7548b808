#include <doctest.h>

#include "aggflex/containment.hpp"
#include "aggflex/errors.hpp"
#include "aggflex/oracles.hpp"
#include "aggflex/rng.hpp"

using namespace aggflex;

namespace {

HPolytope box2(double lo, double hi) {
    return HPolytope::box(Eigen::Vector2d(lo, lo), Eigen::Vector2d(hi, hi));
}

/// Ground truth by the vertex oracle: every vertex of gamma + Gamma X
/// inside Y (within tol).
bool contained_by_oracle(const Eigen::VectorXd& gamma, const Eigen::MatrixXd& Gamma,
                         const HPolytope& X, const HPolytope& Y, double tol) {
    const VPolytope verts = enumerate_vertices(X);
    for (const Eigen::VectorXd& v : verts.vertices) {
        if (!is_member(Y, gamma + Gamma * v, tol)) {
            return false;
        }
    }
    return true;
}

HPolytope random_polytope2(Rng& rng) {
    // random bounded polytope: a box plus a few random cuts through it
    const double r = rng.uniform(0.5, 2.0);
    Eigen::MatrixXd A(6, 2);
    Eigen::VectorXd b(6);
    A << 1, 0, -1, 0, 0, 1, 0, -1, 0, 0, 0, 0;
    b << r, r, r, r, 0, 0;
    for (int i = 4; i < 6; ++i) {
        const Eigen::VectorXd d = rng.direction(2);
        A.row(i) = d.transpose();
        b(i) = rng.uniform(0.3, 1.5) * r;
    }
    return HPolytope(A, b);
}

} // namespace

TEST_CASE("identity map between nested boxes yields a certificate") {
    const HPolytope X = box2(-1, 1);
    const HPolytope Y = box2(-2, 2);
    const auto cert = check_ah_in_h(Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity(), X, Y);
    REQUIRE(cert.has_value());
    CHECK(verify_certificate(*cert, X, Y, 1e-7));

    // the hand witness Lambda = I also verifies
    ContainmentCertificate hand;
    hand.Lambda = Eigen::MatrixXd::Identity(4, 4);
    hand.gamma = Eigen::Vector2d::Zero();
    hand.Gamma = Eigen::Matrix2d::Identity();
    CHECK(verify_certificate(hand, X, Y, 1e-9));
}

TEST_CASE("doubling the unit box does not fit in itself") {
    const HPolytope X = box2(-1, 1);
    const auto cert = check_ah_in_h(Eigen::Vector2d::Zero(), 2.0 * Eigen::Matrix2d::Identity(), X, X);
    CHECK_FALSE(cert.has_value());
}

TEST_CASE("empty X is rejected before the equivalence is used") {
    Eigen::MatrixXd A(2, 1);
    A << 1, -1;
    Eigen::VectorXd b(2);
    b << -1, 0;
    const HPolytope empty(A, b);
    Eigen::MatrixXd Gamma(2, 1);
    Gamma << 1.0, 0.0;
    try {
        check_ah_in_h(Eigen::VectorXd::Zero(2), Gamma, empty, box2(-1, 1));
        FAIL("expected a throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EmptyInputSet);
    }
}

TEST_CASE("verification is broken by a negative entry") {
    const HPolytope X = box2(-1, 1);
    const HPolytope Y = box2(-2, 2);
    ContainmentCertificate cert;
    cert.Lambda = Eigen::MatrixXd::Identity(4, 4);
    cert.gamma = Eigen::Vector2d::Zero();
    cert.Gamma = Eigen::Matrix2d::Identity();
    REQUIRE(verify_certificate(cert, X, Y, 1e-9));
    cert.Lambda(2, 2) -= 1e-3;
    CHECK_FALSE(verify_certificate(cert, X, Y, 1e-9));
}

TEST_CASE("certificate decisions agree with the vertex oracle on random cases") {
    Rng rng(2024);
    int agreements = 0;
    const int cases = 40;
    for (int c = 0; c < cases; ++c) {
        const HPolytope X = random_polytope2(rng);
        const HPolytope Y = random_polytope2(rng);
        Eigen::MatrixXd Gamma(2, 2);
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) {
                Gamma(i, j) = rng.uniform(-0.8, 0.8);
            }
        }
        const Eigen::Vector2d gamma(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
        const auto cert = check_ah_in_h(gamma, Gamma, X, Y);
        const bool truth = contained_by_oracle(gamma, Gamma, X, Y, 1e-7);
        if (cert.has_value() == truth) {
            ++agreements;
        }
        if (cert.has_value()) {
            CHECK(verify_certificate(*cert, X, Y, 1e-6));
        }
    }
    CHECK(agreements == cases);
}

TEST_CASE("soundness: certified maps send sampled points into the target") {
    Rng rng(99);
    const HPolytope X = random_polytope2(rng);
    const HPolytope Y = box2(-4, 4);
    Eigen::MatrixXd Gamma(2, 2);
    Gamma << 0.5, 0.1, -0.2, 0.7;
    const Eigen::Vector2d gamma(0.3, -0.1);
    const auto cert = check_ah_in_h(gamma, Gamma, X, Y);
    REQUIRE(cert.has_value());
    const VPolytope verts = enumerate_vertices(X);
    for (int s = 0; s < 500; ++s) {
        Eigen::Vector2d point(0, 0);
        double wsum = 0.0;
        for (const Eigen::VectorXd& v : verts.vertices) {
            const double w = rng.uniform();
            point += w * Eigen::Vector2d(v);
            wsum += w;
        }
        point /= wsum;
        CHECK(is_member(Y, gamma + Gamma * point, 1e-7));
    }
}

TEST_CASE("completeness at desk scale: refusals come with an outside vertex") {
    Rng rng(123);
    int refusals = 0;
    for (int c = 0; c < 30 && refusals < 5; ++c) {
        const HPolytope X = random_polytope2(rng);
        const HPolytope Y = random_polytope2(rng);
        Eigen::MatrixXd Gamma = Eigen::MatrixXd::Identity(2, 2) * rng.uniform(0.8, 1.6);
        const Eigen::Vector2d gamma(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3));
        const auto cert = check_ah_in_h(gamma, Gamma, X, Y);
        if (cert.has_value()) {
            continue;
        }
        ++refusals;
        bool some_outside = false;
        for (const Eigen::VectorXd& v : enumerate_vertices(X).vertices) {
            if (!is_member(Y, gamma + Gamma * v, 1e-7)) {
                some_outside = true;
                break;
            }
        }
        CHECK(some_outside);
    }
    CHECK(refusals > 0);
}

TEST_CASE("scaling the right-hand sides preserves a certificate") {
    const HPolytope X = box2(-1, 1);
    const HPolytope Y = box2(-2, 2);
    const Eigen::Vector2d gamma(0.25, -0.25);
    const auto cert = check_ah_in_h(gamma, Eigen::Matrix2d::Identity(), X, Y);
    REQUIRE(cert.has_value());
    for (double c : {0.5, 2.0, 10.0}) {
        const HPolytope Xs(X.A, c * X.b);
        const HPolytope Ys(Y.A, c * Y.b);
        ContainmentCertificate scaled = *cert;
        scaled.gamma = c * cert->gamma; // Lambda and Gamma unchanged
        CHECK(verify_certificate(scaled, Xs, Ys, 1e-7));
    }
}
