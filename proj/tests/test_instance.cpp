#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "rfl/instance_gen.hpp"
#include "rfl/instance_io.hpp"
#include "rfl/recourse.hpp"

using namespace rfl;

TEST_CASE("generator is deterministic and schema round-trips") {
    GenConfig cfg;
    cfg.n_sites = 10;
    cfg.budget = 3;
    cfg.seed = 7;
    const auto a = generate(cfg);
    const auto b = generate(cfg);
    const std::string ja = instance_to_json(a).dump(2);
    const std::string jb = instance_to_json(b).dump(2);
    CHECK(ja == jb);

    const auto back = instance_from_json(json::parse(ja));
    CHECK(instance_to_json(back).dump(2) == ja);
    CHECK(back.num_sites() == 10);
    CHECK(back.budget == 3.0);
}

TEST_CASE("generator ranges and effective-set structure") {
    GenConfig cfg;
    cfg.n_sites = 12;
    cfg.budget = 4;
    cfg.seed = 3;
    const auto inst = generate(cfg);
    const double L0 = cfg.effective_distance;

    for (const auto& s : inst.sites) {
        CHECK(s.coord.x() >= 0.0);
        CHECK(s.coord.x() <= cfg.square_side);
        CHECK(s.demand >= cfg.demand_lo);
        CHECK(s.demand <= cfg.demand_hi);
        CHECK(s.demand == std::floor(s.demand));
    }
    for (const auto& f : inst.facilities) {
        CHECK(f.capacity >= cfg.capacity_lo);
        CHECK(f.capacity <= cfg.capacity_hi);
        CHECK(f.open_cost == 1.0);
    }
    CHECK(inst.fixed_gains.norm() == 0.0);

    int checked = 0;
    for (int i = 0; i < inst.num_sites(); ++i) {
        for (int j = 0; j < inst.num_facilities(); ++j) {
            const double d = (inst.sites[i].coord - inst.facilities[j].coord).norm();
            const auto* pa = inst.pair(i, j);
            if (d > L0) {
                CHECK(pa == nullptr);
                continue;
            }
            REQUIRE(pa != nullptr);
            ++checked;
            CHECK(pa->beta_hat(j) == Catch::Approx(10.0 * (1.0 - d / L0)).margin(1e-12));
            CHECK(pa->beta_hat.minCoeff() >= 0.0);
            CHECK(pa->beta_hat.maxCoeff() <= 10.0);
            // A = I + 0.3 Q'Q has minimum eigenvalue at least one.
            Eigen::SelfAdjointEigenSolver<Matrix> es(pa->ellipsoid_shape);
            CHECK(es.eigenvalues().minCoeff() >= 1.0 - 1e-9);
            Eigen::SelfAdjointEigenSolver<Matrix> es2(pa->cov_hat);
            CHECK(es2.eigenvalues().minCoeff() >= -1e-9);
            CHECK(pa->gamma_hi == cfg.gamma_hi);
            CHECK(pa->ellipsoid_radius == cfg.ellipsoid_radius);
        }
    }
    CHECK(checked > 0);
    // Zero distance to itself puts every site in its own effective set.
    for (int i = 0; i < inst.num_sites(); ++i) {
        REQUIRE(inst.pair(i, i) != nullptr);
        CHECK(inst.pair(i, i)->beta_hat(i) == 10.0);
    }
}

TEST_CASE("full-matrices mode materializes inert pairs with zero utility") {
    GenConfig cfg;
    cfg.n_sites = 6;
    cfg.budget = 2;
    cfg.seed = 11;
    cfg.full_matrices = true;
    const auto inst = generate(cfg);
    CHECK(static_cast<int>(inst.ambiguity.size()) == 36);

    cfg.full_matrices = false;
    const auto sparse = generate(cfg);
    for (const auto& [key, pa] : sparse.ambiguity) {
        const auto* full = inst.pair(key.first, key.second);
        REQUIRE(full != nullptr);
        CHECK((full->beta_hat - pa.beta_hat).lpNorm<Eigen::Infinity>() == 0.0);
        CHECK((full->cov_hat - pa.cov_hat).lpNorm<Eigen::Infinity>() == 0.0);
    }
}

TEST_CASE("illustrative recourse values at the three single-center choices") {
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);

    auto base = illustrative_2_4(IllustrativeCase::Base);
    auto est1 = illustrative_2_4(IllustrativeCase::Estimation1);
    auto est2 = illustrative_2_4(IllustrativeCase::Estimation2);

    const auto e1 = LocationDecision::unit(3, 0);
    const auto e2 = LocationDecision::unit(3, 1);

    CHECK(recourse_value_fixed_y(base, e1).value == Catch::Approx(623.5).margin(1e-6));
    CHECK(total_objective(base, e2) == Catch::Approx(608.5).margin(1e-6));

    const double est1_e1 = 623.5 - 75.0 * 1.41 * inv_sqrt2;
    CHECK(recourse_value_fixed_y(est1, e1).value == Catch::Approx(est1_e1).margin(1e-6));
    CHECK(est1_e1 > 548.0);
    CHECK(est1_e1 < 549.0);

    const double est2_e2 = 608.5 - 75.0 * 0.99 * inv_sqrt2;
    CHECK(recourse_value_fixed_y(est2, e2).value == Catch::Approx(est2_e2).margin(1e-6));
    CHECK(est2_e2 > 555.0);
    CHECK(est2_e2 < 557.0);

    // All-closed decision carries no flow and no value.
    LocationDecision none{Vector::Zero(3)};
    auto rc = recourse_value_fixed_y(est1, none);
    CHECK(rc.value == 0.0);
    CHECK(rc.flows.flow.norm() == 0.0);
}

TEST_CASE("enumerate_optimal reproduces the illustrative decisions") {
    auto base = enumerate_optimal(illustrative_2_4(IllustrativeCase::Base));
    CHECK(base.y(0) == 1.0);
    CHECK(base.objective == Catch::Approx(623.5).margin(1e-6));

    auto est1 = enumerate_optimal(illustrative_2_4(IllustrativeCase::Estimation1));
    CHECK(est1.y(0) == 1.0);
    CHECK(est1.objective == Catch::Approx(548.7234579).margin(1e-4));

    auto est2 = enumerate_optimal(illustrative_2_4(IllustrativeCase::Estimation2));
    CHECK(est2.y(1) == 1.0);
    CHECK(est2.objective == Catch::Approx(555.9973215).margin(1e-4));
}

TEST_CASE("budget zero forces the empty decision") {
    auto inst = illustrative_2_4(IllustrativeCase::Estimation1);
    inst.budget = 0.0;
    auto sol = enumerate_optimal(inst);
    CHECK(sol.y.norm() == 0.0);
    CHECK(sol.objective == 0.0);
}

TEST_CASE("recourse rejects fractional or over-budget decisions") {
    auto inst = illustrative_2_4(IllustrativeCase::Base);
    Vector y(3);
    y << 0.5, 0.0, 0.0;
    CHECK_THROWS_AS(recourse_value_fixed_y(inst, LocationDecision{y}), usage_error);
    y << 1.0, 1.0, 0.0;  // budget only allows one center
    CHECK_THROWS_AS(total_objective(inst, LocationDecision{y}), usage_error);
}

TEST_CASE("flows respect capacity and demand and avoid nonpositive pairs") {
    GenConfig cfg;
    cfg.n_sites = 8;
    cfg.budget = 3;
    cfg.seed = 21;
    // Large radius drives several worst-case utilities negative.
    cfg.ellipsoid_radius = 6.0;
    const auto inst = generate(cfg);

    Vector y = Vector::Zero(8);
    y(0) = y(3) = y(5) = 1.0;
    LocationDecision dec{y};
    auto rc = recourse_value_fixed_y(inst, dec);

    for (int j = 0; j < 8; ++j) {
        const double col = rc.flows.flow.col(j).sum();
        CHECK(col <= inst.facilities[j].capacity * y(j) + 1e-7);
    }
    for (int i = 0; i < 8; ++i)
        CHECK(rc.flows.flow.row(i).sum() <= inst.sites[i].demand + 1e-7);
    CHECK(rc.flows.flow.minCoeff() >= 0.0);

    for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 8; ++j) {
            const auto* pa = inst.pair(i, j);
            const double u = pa ? worst_case_utility(*pa, dec) : 0.0;
            if (u < 0.0) CHECK(rc.flows.flow(i, j) == 0.0);
        }
    }
}
