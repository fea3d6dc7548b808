#include <doctest.h>

#include <cmath>

#include "aggflex/conic_program.hpp"
#include "aggflex/errors.hpp"

using namespace aggflex;

TEST_CASE("one-variable LP") {
    ConicProgram prog;
    const BlockId x = prog.add_block("x", 1);
    prog.add_linear_cost(x, 0, 1.0);
    prog.add_inequality({{x, 0, -1.0}}, -1.0); // x >= 1
    const Solution sol = solve_linear_program(prog);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(sol.block(x)(0) == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("contradictory bounds are infeasible") {
    ConicProgram prog;
    const BlockId x = prog.add_block("x", 1);
    prog.add_inequality({{x, 0, 1.0}}, 0.0);   // x <= 0
    prog.add_inequality({{x, 0, -1.0}}, -1.0); // x >= 1
    const Solution sol = solve_linear_program(prog);
    CHECK(sol.status == SolveStatus::Infeasible);
}

TEST_CASE("unbounded objective is reported") {
    ConicProgram prog;
    const BlockId x = prog.add_block("x", 1);
    prog.add_linear_cost(x, 0, -1.0);
    prog.add_inequality({{x, 0, -1.0}}, 0.0); // x >= 0
    const Solution sol = solve_linear_program(prog);
    CHECK(sol.status == SolveStatus::Unbounded);
}

TEST_CASE("projection onto a shifted orthant") {
    // min ||x - (1,1)||_2 s.t. x >= (2,2)  ->  sqrt(2) at (2,2)
    ConicProgram prog;
    const BlockId x = prog.add_block("x", 2);
    prog.add_inequality({{x, 0, -1.0}}, -2.0);
    prog.add_inequality({{x, 1, -1.0}}, -2.0);
    Eigen::VectorXd offset(2);
    offset << -1.0, -1.0;
    prog.add_norm_term(NormKind::L2, 2, {{0, x, 0, 1.0}, {1, x, 1, 1.0}}, offset);
    const Solution sol = solve_conic_program(prog);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));
    CHECK(sol.block(x)(0) == doctest::Approx(2.0).epsilon(1e-5));
    CHECK(sol.block(x)(1) == doctest::Approx(2.0).epsilon(1e-5));
}

TEST_CASE("l1 norm with an equality") {
    // min ||x||_1 s.t. x1 + x2 = 2, x >= 0  ->  2
    ConicProgram prog;
    const BlockId x = prog.add_block("x", 2);
    prog.set_nonnegative(x);
    prog.add_equality({{x, 0, 1.0}, {x, 1, 1.0}}, 2.0);
    prog.add_norm_term(NormKind::L1, 2, {{0, x, 0, 1.0}, {1, x, 1, 1.0}},
                       Eigen::VectorXd::Zero(2));
    const Solution sol = solve_conic_program(prog);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(2.0).epsilon(1e-7));
}

TEST_CASE("epigraph objectives agree with direct evaluation") {
    for (NormKind kind : {NormKind::L1, NormKind::Linf, NormKind::L2}) {
        ConicProgram prog;
        const BlockId x = prog.add_block("x", 3);
        prog.add_inequality({{x, 0, -1.0}, {x, 1, -2.0}}, -3.0);
        prog.add_inequality({{x, 2, -1.0}}, -0.5);
        prog.add_inequality({{x, 0, 1.0}}, 5.0);
        prog.add_inequality({{x, 1, 1.0}}, 5.0);
        prog.add_inequality({{x, 2, 1.0}}, 5.0);
        Eigen::VectorXd offset(3);
        offset << 0.3, -0.2, 0.1;
        prog.add_norm_term(kind, 3, {{0, x, 0, 1.0}, {1, x, 1, 1.0}, {2, x, 2, 1.0}}, offset);
        const Solution sol = solve_conic_program(prog);
        REQUIRE(sol.status == SolveStatus::Optimal);
        CHECK(std::abs(sol.objective - prog.evaluate_objective(sol)) < 1e-7);
    }
}

TEST_CASE("optimal solutions satisfy the constraints to tolerance") {
    SolverConfig config;
    ConicProgram prog;
    const BlockId x = prog.add_block("x", 4);
    prog.set_nonnegative(x);
    std::vector<Term> eq;
    for (int i = 0; i < 4; ++i) {
        eq.push_back({x, i, 1.0 + 0.25 * i});
        prog.add_linear_cost(x, i, 1.0 + (3 - i) * 0.1);
    }
    prog.add_equality(eq, 7.0);
    const Solution sol = solve_linear_program(prog, config);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(prog.max_equality_residual(sol) <= config.feas_tol * (1.0 + 7.0));
    CHECK(prog.max_inequality_violation(sol) <= config.feas_tol);
}

TEST_CASE("identical programs solve to identical objectives") {
    auto build = [] {
        ConicProgram prog;
        const BlockId x = prog.add_block("x", 3);
        prog.set_nonnegative(x);
        prog.add_equality({{x, 0, 1.0}, {x, 1, 1.0}, {x, 2, 1.0}}, 1.0);
        prog.add_norm_term(NormKind::L2, 2, {{0, x, 0, 1.0}, {1, x, 1, -1.0}},
                           Eigen::VectorXd::Constant(2, 0.1));
        return prog;
    };
    const ConicProgram p1 = build();
    const ConicProgram p2 = build();
    const Solution s1 = solve_conic_program(p1);
    const Solution s2 = solve_conic_program(p2);
    REQUIRE(s1.status == SolveStatus::Optimal);
    CHECK(s1.objective == s2.objective); // bit-identical, not just close
    CHECK(std::abs(s1.objective - s2.objective) <= 1e-8);
}

TEST_CASE("positive rescaling of the objective keeps the argmin") {
    auto build = [](double scale) {
        ConicProgram prog;
        const BlockId x = prog.add_block("x", 2);
        prog.add_inequality({{x, 0, 1.0}, {x, 1, 1.0}}, 4.0);
        prog.add_inequality({{x, 0, -1.0}}, 0.0);
        prog.add_inequality({{x, 1, -1.0}}, 0.0);
        Eigen::VectorXd offset(2);
        offset << -3.0 * scale, -1.0 * scale;
        prog.add_norm_term(NormKind::L2, 2, {{0, x, 0, scale}, {1, x, 1, scale}}, offset);
        return prog;
    };
    const Solution s1 = solve_conic_program(build(1.0));
    const Solution s3 = solve_conic_program(build(3.0));
    REQUIRE(s1.status == SolveStatus::Optimal);
    REQUIRE(s3.status == SolveStatus::Optimal);
    CHECK((s1.block(0) - s3.block(0)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("linear solver rejects L2 terms, lp backend refuses them") {
    ConicProgram prog;
    const BlockId x = prog.add_block("x", 1);
    prog.add_inequality({{x, 0, -1.0}}, 0.0);
    prog.add_norm_term(NormKind::L2, 1, {{0, x, 0, 1.0}}, Eigen::VectorXd::Zero(1));
    CHECK_THROWS_AS(solve_linear_program(prog), Error);
    SolverConfig lp_only;
    lp_only.backend = "lp";
    try {
        solve_conic_program(prog, lp_only);
        FAIL("expected a throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::BackendUnsupported);
    }
    // the lp backend happily solves Linf/L1 programs
    ConicProgram lp_prog;
    const BlockId y = lp_prog.add_block("y", 1);
    lp_prog.add_inequality({{y, 0, -1.0}}, -2.0);
    lp_prog.add_norm_term(NormKind::Linf, 1, {{0, y, 0, 1.0}}, Eigen::VectorXd::Zero(1));
    const Solution sol = solve_conic_program(lp_prog, lp_only);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(2.0).epsilon(1e-7));
}

TEST_CASE("structural audit accepts built programs and rejects bad rows") {
    ConicProgram prog;
    const BlockId x = prog.add_block("x", 2, 3);
    prog.add_equality({{x, prog.flat(x, 1, 2), 1.0}}, 0.0);
    CHECK(prog.well_formed());
    CHECK(prog.num_declared_variables() == 6);
    CHECK_THROWS_AS(prog.add_equality({{x, 6, 1.0}}, 0.0), Error);
    CHECK_THROWS_AS(prog.add_inequality({{static_cast<BlockId>(5), 0, 1.0}}, 0.0), Error);
}
