#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "rfl/hull_cuts.hpp"
#include "rfl/instance_gen.hpp"
#include "rfl/misocp.hpp"

using namespace rfl;

namespace {

// Two sites, two co-located facilities, ambiguity on the diagonal pairs only.
Instance two_by_two() {
    Instance inst;
    inst.name = "two-by-two";
    inst.budget = 2.0;
    for (int i = 0; i < 2; ++i) {
        Site s;
        s.id = i;
        s.coord = {static_cast<double>(i), 0.0};
        s.demand = 10.0 + 5.0 * i;
        inst.sites.push_back(s);
        Facility f;
        f.id = i;
        f.coord = s.coord;
        f.capacity = 20.0;
        f.open_cost = 1.0;
        inst.facilities.push_back(f);
    }
    inst.fixed_gains = Vector::Zero(2);
    for (int i = 0; i < 2; ++i) {
        PairAmbiguity pa;
        pa.beta_hat = Vector::Zero(2);
        pa.beta_hat(i) = 5.0;
        pa.ellipsoid_shape = Matrix::Identity(2, 2);
        pa.ellipsoid_radius = 0.4;
        pa.cov_hat = Matrix::Identity(2, 2);
        pa.gamma_lo = 0.0;
        pa.gamma_hi = 0.5;
        pa.finalize();
        inst.ambiguity.emplace(std::make_pair(i, i), std::move(pa));
    }
    inst.validate();
    return inst;
}

}  // namespace

TEST_CASE("big_r is the demand/capacity minimum") {
    auto inst = two_by_two();
    CHECK(big_r(inst, 0, 0) == 10.0);
    CHECK(big_r(inst, 1, 1) == 15.0);
    inst.sites[0].demand = 0.0;
    CHECK(big_r(inst, 0, 1) == 0.0);
    CHECK_THROWS_AS(big_r(inst, 5, 0), usage_error);
}

TEST_CASE("variable count of the lifted program") {
    auto inst = two_by_two();
    auto [prog, map] = build_misocp(inst);
    // y (2) + x over all pairs (4) + two effective pair blocks of
    // v/v1/v2 (3*2) + U/U1/U2/s (4) + t1/t2 (2).
    CHECK(prog.num_vars == 2 + 4 + 2 * (3 * 2 + 4 + 2));
    CHECK(map.pairs.size() == 2);
    CHECK(prog.soc_blocks.size() == 4);
    CHECK(prog.integer_vars.size() == 4);  // two y, two s
}

TEST_CASE("pairs with zero demand are elided") {
    auto inst = two_by_two();
    inst.sites[0].demand = 0.0;
    auto [prog, map] = build_misocp(inst);
    CHECK(map.pairs.size() == 1);
    CHECK(map.block(0, 0) == nullptr);
    CHECK(map.block(1, 1) != nullptr);
}

TEST_CASE("budget zero forces a zero relaxation optimum") {
    auto inst = two_by_two();
    inst.budget = 0.0;
    auto [prog, map] = build_misocp(inst);
    auto res = solve_conic(relax(prog));
    REQUIRE(res.status == SolveStatus::Optimal);
    CHECK(res.objective == Catch::Approx(0.0).margin(1e-6));
}

TEST_CASE("relaxation bounds the mixed-integer optimum") {
    auto inst = illustrative_2_4(IllustrativeCase::Estimation1);
    auto [prog, map] = build_misocp(inst);
    auto res = solve_conic(relax(prog));
    REQUIRE(res.status == SolveStatus::Optimal);
    // Exact optimum from the closed forms is about 548.72.
    CHECK(res.objective >= 548.7);
    CHECK(relax(relax(prog)).integer_vars.empty());
}

TEST_CASE("attach_cuts: empty attach is identity, duplicates collapse") {
    auto inst = two_by_two();
    auto [prog, map] = build_misocp(inst);
    auto [same, added0] = attach_cuts(prog, map, {});
    CHECK(added0 == 0);
    CHECK(same.rows.size() == prog.rows.size());

    TangentCut cut;
    cut.site = 0;
    cut.facility = 0;
    cut.alpha = Vector::Constant(2, 5.0);
    cut.offset = 0.0;
    cut.family = CutFamily::GradF;
    cut.source_v = Vector::Ones(2);
    auto [one, added1] = attach_cuts(prog, map, {cut, cut});
    CHECK(added1 == 1);
    CHECK(one.rows.size() == prog.rows.size() + 1);

    TangentCut orphan = cut;
    orphan.site = 1;
    orphan.facility = 0;  // elided pair
    auto [skipped, added2] = attach_cuts(prog, map, {orphan});
    CHECK(added2 == 0);

    // A valid cut never increases the relaxation optimum.
    auto base = solve_conic(relax(prog));
    auto cutres = solve_conic(relax(one));
    REQUIRE(base.status == SolveStatus::Optimal);
    REQUIRE(cutres.status == SolveStatus::Optimal);
    CHECK(cutres.objective <= base.objective + 1e-6);
}

TEST_CASE("disjunctive correctness and linearization exactness at integral points") {
    auto inst = two_by_two();
    auto [prog, map] = build_misocp(inst);

    // Fix y = (1, 0), s = (1, 0) and solve the continuous rest.
    detail::Fixings fx;
    fx.push_back({map.y[0], 1.0});
    fx.push_back({map.y[1], 0.0});
    fx.push_back({map.pairs[0].s, 1.0});
    fx.push_back({map.pairs[1].s, 0.0});
    auto base = relax(prog);
    auto res = solve_conic(base, ConicSettings::from_env(), &fx);
    REQUIRE(res.status == SolveStatus::Optimal);

    const auto& blk0 = map.pairs[0];
    const int nf = 2;
    // s = 1 kills the second branch of pair 0.
    CHECK(res.primal.segment(blk0.v2, nf).lpNorm<Eigen::Infinity>() <= 1e-6);
    CHECK(res.primal(blk0.U2) <= 1e-6);
    const auto& blk1 = map.pairs[1];
    // Facility 1 is closed, so pair (1,1) carries nothing.
    CHECK(res.primal.segment(blk1.v, nf).lpNorm<Eigen::Infinity>() <= 1e-6);

    // v = x * y on the open pair.
    const double x00 = res.primal(static_cast<int>(map.x_index(0, 0)));
    CHECK(res.primal(blk0.v + 0) == Catch::Approx(x00).margin(1e-6));
    CHECK(res.primal(blk0.v + 1) == Catch::Approx(0.0).margin(1e-6));

    // Extraction reproduces the objective through the closed forms.
    auto ext = extract_solution(prog, map, inst, res.primal);
    REQUIRE(ext.integral);
    CHECK_FALSE(ext.objective_mismatch);
    CHECK(ext.solution.y(0) == 1.0);
    CHECK(ext.solution.y(1) == 0.0);
    CHECK(ext.recomputed_objective == Catch::Approx(res.objective).margin(1e-4));
}

TEST_CASE("extract_solution flags fractional points") {
    auto inst = two_by_two();
    auto [prog, map] = build_misocp(inst);
    Vector primal = Vector::Zero(prog.num_vars);
    primal(map.y[0]) = 0.5;
    auto ext = extract_solution(prog, map, inst, primal);
    CHECK_FALSE(ext.integral);
}

TEST_CASE("model dump of the assembled program parses back") {
    auto inst = two_by_two();
    auto [prog, map] = build_misocp(inst);
    std::istringstream is(dump_model(prog));
    auto q = parse_model(is);
    CHECK(q.num_vars == prog.num_vars);
    CHECK(q.rows.size() == prog.rows.size());
    CHECK(q.soc_blocks.size() == prog.soc_blocks.size());
    auto a = solve_conic(relax(prog));
    auto b = solve_conic(relax(q));
    CHECK(a.objective == Catch::Approx(b.objective).margin(1e-9));
}
