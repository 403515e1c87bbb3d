#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ffrlab/solver.hpp"

using namespace ffrlab;
using Catch::Matchers::WithinAbs;

namespace {

ScenarioConfig defaults() {
    RawScenario raw;
    return validate(raw);
}

}  // namespace

TEST_CASE("fixed point converges at the default operating point", "[solver]") {
    const StpSolution sol = solve_fixed_point(defaults());
    REQUIRE(sol.converged);
    CHECK(sol.iterations < 100);
    CHECK(sol.residual < 1e-6);
    for (double v : {sol.stp_dl_interior, sol.stp_dl_edge, sol.stp_ul_interior, sol.stp_ul_edge,
                     sol.interior_prob_dl, sol.interior_prob_ul}) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
    CHECK(sol.stp_dl_edge < sol.stp_dl_interior);
    CHECK(sol.stp_ul_edge < sol.stp_ul_interior);
    CHECK(sol.density_dl_interior > sol.density_ul_interior);

    // regression pins
    CHECK_THAT(sol.stp_dl_interior, WithinAbs(0.96535, 2e-4));
    CHECK_THAT(sol.stp_dl_edge, WithinAbs(0.50195, 2e-4));
    CHECK_THAT(sol.stp_ul_interior, WithinAbs(0.93364, 2e-4));
    CHECK_THAT(sol.stp_ul_edge, WithinAbs(0.21728, 2e-4));
    CHECK_THAT(sol.interior_prob_dl, WithinAbs(0.82910, 2e-4));
}

TEST_CASE("vanishing load decouples the network", "[solver]") {
    ScenarioConfig cfg = defaults();
    cfg.dl_arrival = 1e-9;
    cfg.ul_arrival = 1e-9;
    const StpSolution sol = solve_fixed_point(cfg);
    REQUIRE(sol.converged);
    CHECK(sol.stp_dl_interior > 0.9999);
    CHECK(sol.stp_ul_interior > 0.9999);
    // The edge figures are conditioned on failing the classification test, so
    // they approach a limiting ratio just below one rather than one itself.
    CHECK(sol.stp_dl_edge > 0.999);
    CHECK(sol.stp_ul_edge > 0.999);
    CHECK(sol.interior_prob_dl > 0.9999);
    CHECK(sol.density_dl_interior < 1e-10);
}

TEST_CASE("damping does not move the fixed point", "[solver]") {
    SolverOptions soft;
    soft.damping = 0.3;
    SolverOptions hard;
    hard.damping = 0.7;
    const StpSolution a = solve_fixed_point(defaults(), soft);
    const StpSolution b = solve_fixed_point(defaults(), hard);
    REQUIRE(a.converged);
    REQUIRE(b.converged);
    CHECK_THAT(a.stp_dl_interior, WithinAbs(b.stp_dl_interior, 1e-5));
    CHECK_THAT(a.stp_dl_edge, WithinAbs(b.stp_dl_edge, 1e-5));
    CHECK_THAT(a.stp_ul_edge, WithinAbs(b.stp_ul_edge, 1e-5));
    CHECK_THAT(a.interior_prob_ul, WithinAbs(b.interior_prob_ul, 1e-5));
}

TEST_CASE("warm starting lands on the same point quickly", "[solver]") {
    const StpSolution cold = solve_fixed_point(defaults());
    SolverOptions warm;
    warm.warm_from = &cold;
    const StpSolution again = solve_fixed_point(defaults(), warm);
    REQUIRE(again.converged);
    CHECK(again.iterations <= 3);
    CHECK_THAT(again.stp_dl_interior, WithinAbs(cold.stp_dl_interior, 1e-5));
    CHECK_THAT(again.stp_dl_edge, WithinAbs(cold.stp_dl_edge, 1e-5));
    CHECK_THAT(again.stp_ul_interior, WithinAbs(cold.stp_ul_interior, 1e-5));
    CHECK_THAT(again.stp_ul_edge, WithinAbs(cold.stp_ul_edge, 1e-5));
}

TEST_CASE("interior success saturates when decoding is easier than classification",
          "[solver]") {
    ScenarioConfig cfg = defaults();
    SECTION("equal thresholds") { cfg.decode_threshold = cfg.classification_threshold; }
    SECTION("decode below classification") {
        cfg.decode_threshold = 0.5 * cfg.classification_threshold;
    }
    const StpSolution sol = solve_fixed_point(cfg);
    REQUIRE(sol.converged);
    CHECK(sol.stp_dl_interior == 1.0);
    CHECK(sol.stp_ul_interior == 1.0);
    const StpEvaluator eval(sol, cfg);
    for (int i = 0; i < 64; ++i) {
        const double r = cfg.cell_radius * i / 63.0;
        CHECK(eval.stp_interior(r, Direction::dl) == 1.0);
        CHECK(eval.stp_interior(r, Direction::ul) == 1.0);
    }
}

TEST_CASE("saturated reduction is a direct evaluation", "[solver]") {
    SolverOptions opt;
    opt.force_saturated_dl = true;
    const StpSolution sol = solve_fixed_point(defaults(), opt);
    REQUIRE(sol.converged);
    CHECK(sol.iterations == 0);
    CHECK(sol.activity.dl_probability == 1.0);
    CHECK(sol.activity.chi_dl_interior[25] == 1.0);
    CHECK(sol.activity.chi_dl_edge[25] == 0.5);
    CHECK(sol.density_ul_interior == 0.0);
    CHECK(sol.stp_dl_interior > 0.0);
    CHECK(sol.stp_dl_interior < 1.0);
    CHECK(sol.stp_dl_edge < sol.stp_dl_interior);
}

TEST_CASE("per distance evaluation", "[solver]") {
    const ScenarioConfig cfg = defaults();
    const StpSolution sol = solve_fixed_point(cfg);
    const StpEvaluator eval(sol, cfg);

    const ClassStp near = eval.stp_at(20.0);
    const ClassStp far = eval.stp_at(70.0);
    CHECK(near.dl_interior > far.dl_interior);
    CHECK(near.dl_edge > far.dl_edge);
    CHECK(near.ul_edge > far.ul_edge);
    for (double v : {far.dl_interior, far.dl_edge, far.ul_interior, far.ul_edge}) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }

    // nobody classifies as edge at the cell center
    CHECK_THROWS_AS(stp_at_distance(0.0, sol, cfg), SolverError);
    CHECK(eval.interior_prob(0.0, Direction::dl) == 1.0);
    CHECK(eval.interior_prob(90.0, Direction::ul) < eval.interior_prob(30.0, Direction::ul));
}

TEST_CASE("classification shifts with the reuse threshold", "[solver]") {
    ScenarioConfig strict = defaults();
    strict.classification_threshold = db_to_linear(3.0);
    ScenarioConfig lax = defaults();
    lax.classification_threshold = db_to_linear(-3.0);
    const StpSolution s = solve_fixed_point(strict);
    const StpSolution l = solve_fixed_point(lax);
    REQUIRE(s.converged);
    REQUIRE(l.converged);
    CHECK(s.interior_prob_dl < l.interior_prob_dl);
    CHECK(s.interior_prob_ul < l.interior_prob_ul);
}

TEST_CASE("alternate band splits converge", "[solver]") {
    ScenarioConfig cfg = defaults();
    cfg.reuse_factor = 3;
    cfg.edge_subbands = 2;
    cfg.decode_threshold = db_to_linear(2.0);
    const StpSolution sol = solve_fixed_point(cfg);
    REQUIRE(sol.converged);
    CHECK(sol.stp_dl_edge > 0.0);
    CHECK(sol.stp_ul_edge > 0.0);
}
