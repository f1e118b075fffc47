#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "rfl/bnb.hpp"
#include "rfl/instance_gen.hpp"

using namespace rfl;

TEST_CASE("illustrative estimation 1: one center at location 1") {
    auto inst = illustrative_2_4(IllustrativeCase::Estimation1);
    for (CutMode mode : {CutMode::NoCuts, CutMode::WithCuts}) {
        auto [sol, stats] = solve_with_protocol(inst, mode);
        REQUIRE(sol.status == SolveStatus::Optimal);
        CHECK(sol.y(0) == 1.0);
        CHECK(sol.y(1) == 0.0);
        CHECK(sol.y(2) == 0.0);
        CHECK(sol.objective == Catch::Approx(548.7234579).margin(0.01));
        CHECK(sol.objective >= 548.0);
        CHECK(sol.objective <= 549.0);
    }
}

TEST_CASE("illustrative estimation 2: reduced ambiguity moves the center") {
    auto inst = illustrative_2_4(IllustrativeCase::Estimation2);
    for (CutMode mode : {CutMode::NoCuts, CutMode::WithCuts}) {
        auto [sol, stats] = solve_with_protocol(inst, mode);
        REQUIRE(sol.status == SolveStatus::Optimal);
        CHECK(sol.y(1) == 1.0);
        CHECK(sol.objective == Catch::Approx(555.9973215).margin(0.01));
    }
}

TEST_CASE("illustrative base case solves to the nominal optimum") {
    auto inst = illustrative_2_4(IllustrativeCase::Base);
    auto [sol, stats] = solve_with_protocol(inst, CutMode::WithCuts);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.y(0) == 1.0);
    CHECK(sol.objective == Catch::Approx(623.5).margin(1e-3));
    // Linear utilities leave nothing to convexify.
    CHECK(stats.developed_cuts == 0);
}

TEST_CASE("small generated instances match the enumeration oracle") {
    for (int k = 0; k < 5; ++k) {
        GenConfig cfg;
        cfg.n_sites = 3 + (k % 2);
        cfg.budget = 1 + (k % 2);
        cfg.seed = 100 + k;
        const auto inst = generate(cfg);
        const auto oracle = enumerate_optimal(inst);
        for (CutMode mode : {CutMode::NoCuts, CutMode::WithCuts}) {
            auto [sol, stats] = solve_with_protocol(inst, mode);
            REQUIRE(sol.status == SolveStatus::Optimal);
            const double denom = std::max(1.0, std::abs(oracle.objective));
            CHECK(std::abs(sol.objective - oracle.objective) / denom <= 1e-4);
        }
    }
}

TEST_CASE("single-thread solves are deterministic") {
    GenConfig cfg;
    cfg.n_sites = 4;
    cfg.budget = 2;
    cfg.seed = 42;
    const auto inst = generate(cfg);
    auto [sol1, st1] = solve_with_protocol(inst, CutMode::WithCuts);
    auto [sol2, st2] = solve_with_protocol(inst, CutMode::WithCuts);
    CHECK(sol1.objective == sol2.objective);
    CHECK(st1.nodes == st2.nodes);
    CHECK(st1.developed_cuts == st2.developed_cuts);
    CHECK((sol1.y - sol2.y).norm() == 0.0);
}

TEST_CASE("both engines agree on a small instance") {
    GenConfig cfg;
    cfg.n_sites = 4;
    cfg.budget = 2;
    cfg.seed = 9;
    const auto inst = generate(cfg);
    BnbOptions conic_opts;
    conic_opts.engine = RelaxEngine::Conic;
    BnbOptions oa_opts;
    oa_opts.engine = RelaxEngine::LpOa;
    auto [sc, st_c] = solve_with_protocol(inst, CutMode::NoCuts, conic_opts);
    auto [so, st_o] = solve_with_protocol(inst, CutMode::NoCuts, oa_opts);
    REQUIRE(sc.status == SolveStatus::Optimal);
    REQUIRE(so.status == SolveStatus::Optimal);
    CHECK(sc.objective == Catch::Approx(so.objective).margin(1e-3));
}

TEST_CASE("zero time limit still returns the seeded incumbent") {
    auto inst = illustrative_2_4(IllustrativeCase::Estimation1);
    BnbOptions opts;
    opts.time_limit_s = 0.0;
    auto [sol, stats] = solve_with_protocol(inst, CutMode::NoCuts, opts);
    CHECK(sol.status == SolveStatus::TimeLimit);
    CHECK(sol.objective >= 0.0);
}

TEST_CASE("root cut loop with zero rounds changes nothing") {
    auto inst = illustrative_2_4(IllustrativeCase::Estimation1);
    auto [prog, map] = build_misocp(inst);
    int rounds = -1;
    auto [same, cuts] = root_cut_loop(prog, map, inst, 0, {}, &rounds);
    CHECK(cuts.empty());
    CHECK(rounds == 0);
    CHECK(same.rows.size() == prog.rows.size());
}

TEST_CASE("root cuts tighten the root relaxation of the illustrative model") {
    auto inst = illustrative_2_4(IllustrativeCase::Estimation1);
    auto [prog, map] = build_misocp(inst);
    auto base = solve_conic(relax(prog));
    REQUIRE(base.status == SolveStatus::Optimal);
    int rounds = 0;
    BnbOptions opts;
    auto [strengthened, cuts] = root_cut_loop(prog, map, inst, 5, opts, &rounds);
    auto after = solve_conic(relax(strengthened));
    REQUIRE(after.status == SolveStatus::Optimal);
    CHECK(after.objective <= base.objective + 1e-6);
    if (!cuts.empty()) {
        CHECK(rounds >= 1);
        // Valid cuts cannot move the mixed-integer optimum.
        auto [sol_nc, s1] = solve_with_protocol(inst, CutMode::NoCuts);
        auto [sol_wc, s2] = solve_with_protocol(inst, CutMode::WithCuts);
        CHECK(sol_nc.objective == Catch::Approx(sol_wc.objective).margin(1e-3));
    }
}

TEST_CASE("parallel mode reaches the same optimum") {
    GenConfig cfg;
    cfg.n_sites = 4;
    cfg.budget = 2;
    cfg.seed = 31;
    const auto inst = generate(cfg);
    BnbOptions seq;
    BnbOptions par;
    par.threads = 2;
    auto [s1, st1] = solve_with_protocol(inst, CutMode::NoCuts, seq);
    auto [s2, st2] = solve_with_protocol(inst, CutMode::NoCuts, par);
    REQUIRE(s1.status == SolveStatus::Optimal);
    REQUIRE(s2.status == SolveStatus::Optimal);
    CHECK(s1.objective == Catch::Approx(s2.objective).margin(1e-4));
}
