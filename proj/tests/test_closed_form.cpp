#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "rfl/closed_form.hpp"
#include "rfl/rng.hpp"

using namespace rfl;

namespace {

constexpr double kInfLocal = std::numeric_limits<double>::infinity();

PairAmbiguity diag_pair(const Vector& beta, double a, double radius, double sigma,
                        double gamma_hi) {
    PairAmbiguity p;
    p.beta_hat = beta;
    const int n = static_cast<int>(beta.size());
    p.ellipsoid_shape = a * Matrix::Identity(n, n);
    p.ellipsoid_radius = radius;
    p.cov_hat = sigma * Matrix::Identity(n, n);
    p.gamma_lo = 0.0;
    p.gamma_hi = gamma_hi;
    p.finalize();
    return p;
}

PairAmbiguity random_pair(Xoshiro256PP& rng, int n) {
    PairAmbiguity p;
    p.beta_hat = Vector::NullaryExpr(n, [&](Eigen::Index) { return rng.uniform(0.0, 10.0); });
    Matrix q = Matrix::NullaryExpr(n, n, [&](Eigen::Index, Eigen::Index) {
        return rng.uniform(0.0, 1.0);
    });
    p.cov_hat = q.transpose() * q;
    p.ellipsoid_shape = Matrix::Identity(n, n) + 0.3 * p.cov_hat;
    p.ellipsoid_radius = rng.uniform(0.0, 2.0);
    p.gamma_lo = 0.0;
    p.gamma_hi = rng.uniform(0.0, 2.0);
    p.finalize();
    return p;
}

// Independent oracle for the scalar robust-mean problem: point masses on a
// dense grid of the support, filtered by both moment constraints.
double grid_robust_mean(const RobustMeanProblem& p, int n_grid = 10000) {
    double best = kInfLocal;
    for (int i = 0; i <= n_grid; ++i) {
        const double u =
            p.support_lo + (p.support_hi - p.support_lo) * static_cast<double>(i) / n_grid;
        if (u < p.mean_lo - 1e-12 || u > p.mean_hi + 1e-12) continue;
        const double dev = (u - p.ref_mean) * (u - p.ref_mean);
        if (dev < p.var_lo - 1e-12 || dev > p.var_hi + 1e-12) continue;
        best = std::min(best, u);
    }
    return best;
}

}  // namespace

TEST_CASE("f and g closed forms on the illustrative pair") {
    Vector beta(3);
    beta << 8.5, 0.2, 0.4;
    auto pair = diag_pair(beta, 2.0, 1.41, 2.0, 2.0);
    Vector e1 = Vector::Zero(3);
    e1(0) = 1.0;

    CHECK(f_value(pair, Vector::Zero(3)) == 0.0);
    CHECK(g_value(pair, Vector::Zero(3)) == 0.0);
    CHECK(f_value(pair, e1) == Catch::Approx(8.5 - 1.41 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(g_value(pair, e1) == Catch::Approx(6.5).epsilon(1e-12));
    CHECK(worst_case_utility(pair, LocationDecision{e1}) ==
          Catch::Approx(8.5 - 1.41 / std::sqrt(2.0)).epsilon(1e-12));

    auto [lo, hi] = robust_mean_bounds(pair, LocationDecision{e1});
    CHECK(lo == Catch::Approx(8.5 - 1.41 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(hi == Catch::Approx(8.5 + 1.41 / std::sqrt(2.0)).epsilon(1e-12));

    auto [vlo, vhi] = variance_bounds(pair, LocationDecision{e1});
    CHECK(vlo == 0.0);
    CHECK(vhi == Catch::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("radius zero collapses f to the nominal mean") {
    Vector beta(3);
    beta << 1.0, 2.0, 3.0;
    auto pair = diag_pair(beta, 1.0, 0.0, 1.0, 0.0);
    Xoshiro256PP rng(7);
    for (int k = 0; k < 10; ++k) {
        Vector v = Vector::NullaryExpr(3, [&](Eigen::Index) { return rng.uniform(0.0, 5.0); });
        CHECK(f_value(pair, v) == Catch::Approx(beta.dot(v)).epsilon(1e-13));
        CHECK(g_value(pair, v) == Catch::Approx(beta.dot(v)).epsilon(1e-13));
        CHECK(worst_case_utility(pair, LocationDecision{v}) ==
              Catch::Approx(beta.dot(v)).epsilon(1e-13));
    }
}

TEST_CASE("dimension mismatch raises a usage error") {
    Vector beta(3);
    beta << 1.0, 2.0, 3.0;
    auto pair = diag_pair(beta, 1.0, 0.5, 1.0, 1.0);
    CHECK_THROWS_AS(f_value(pair, Vector::Zero(2)), usage_error);
    CHECK_THROWS_AS(g_value(pair, Vector::Zero(4)), usage_error);
}

TEST_CASE("positive homogeneity of f and g") {
    Xoshiro256PP rng(12345);
    for (int trial = 0; trial < 50; ++trial) {
        auto pair = random_pair(rng, 2 + static_cast<int>(rng.uniform_int(0, 3)));
        const int n = pair.dim();
        Vector v = Vector::NullaryExpr(n, [&](Eigen::Index) { return rng.uniform(0.0, 3.0); });
        const double lam = rng.uniform(0.0, 4.0);
        const double fv = f_value(pair, v);
        const double gv = g_value(pair, v);
        CHECK(std::abs(f_value(pair, lam * v) - lam * fv) <= 1e-9 * (1.0 + std::abs(lam * fv)));
        CHECK(std::abs(g_value(pair, lam * v) - lam * gv) <= 1e-9 * (1.0 + std::abs(lam * gv)));
        // f, g never exceed the nominal mean on the nonnegative orthant.
        CHECK(fv <= pair.beta_hat.dot(v) + 1e-12);
        CHECK(gv <= pair.beta_hat.dot(v) + 1e-12);
    }
}

TEST_CASE("robust mean bound attainment on the ellipsoid boundary") {
    Xoshiro256PP rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        auto pair = random_pair(rng, 3);
        Vector y(3);
        for (int j = 0; j < 3; ++j) y(j) = rng.next_double() < 0.5 ? 0.0 : 1.0;
        if (y.sum() == 0.0) y(0) = 1.0;
        LocationDecision dec{y};
        auto [lo, hi] = robust_mean_bounds(pair, dec);
        REQUIRE(lo <= hi + 1e-12);

        // The closed-form maximizer attains hi and sits on the boundary.
        const Vector bstar = robust_mean_maximizer(pair, dec);
        CHECK(bstar.dot(y) == Catch::Approx(hi).margin(1e-9));
        const Vector d = bstar - pair.beta_hat;
        const double quad = d.dot(pair.ellipsoid_shape * d);
        CHECK(quad == Catch::Approx(pair.ellipsoid_radius * pair.ellipsoid_radius).margin(1e-8));

        // Sampled boundary points never beat the closed-form bound.
        double sampled_best = -kInfLocal;
        for (int k = 0; k < 1000; ++k) {
            Vector dir = Vector::NullaryExpr(3, [&](Eigen::Index) {
                return rng.uniform(-1.0, 1.0);
            });
            if (dir.norm() < 1e-12) continue;
            const double scale =
                pair.ellipsoid_radius / std::sqrt(dir.dot(pair.ellipsoid_shape * dir));
            sampled_best = std::max(sampled_best, (pair.beta_hat + scale * dir).dot(y));
        }
        CHECK(hi - sampled_best >= -1e-7);
    }
}

TEST_CASE("solve_robust_mean matches the stated examples") {
    RobustMeanProblem p;
    p.support_lo = -5.0;
    p.support_hi = 5.0;
    p.mean_lo = 0.0;
    p.mean_hi = 2.0;
    p.var_lo = 0.0;
    p.var_hi = 4.0;
    p.ref_mean = 1.0;
    CHECK(solve_robust_mean(p) == Catch::Approx(0.0).margin(1e-12));
    CHECK(grid_robust_mean(p) == Catch::Approx(0.0).margin(1e-3));

    p.mean_lo = 0.5;
    p.var_hi = 0.04;
    CHECK(solve_robust_mean(p) == Catch::Approx(0.8).epsilon(1e-12));
    CHECK(std::abs(grid_robust_mean(p) - 0.8) <= 1e-3);

    // Boundary case: var_hi = (mu - c1)^2 makes both branches coincide.
    p.var_hi = 0.25;
    CHECK(solve_robust_mean(p) == Catch::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("solve_robust_mean equals the grid oracle on random problems") {
    Xoshiro256PP rng(2024);
    int checked = 0;
    while (checked < 100) {
        RobustMeanProblem p;
        p.ref_mean = rng.uniform(-2.0, 6.0);
        p.mean_lo = p.ref_mean - rng.uniform(0.0, 3.0);
        p.mean_hi = p.ref_mean + rng.uniform(0.0, 3.0);
        p.support_lo = p.mean_lo - rng.uniform(0.5, 2.0);
        p.support_hi = p.mean_hi + rng.uniform(0.5, 2.0);
        const double dev = p.ref_mean - p.mean_lo;
        p.var_lo = rng.uniform(0.0, dev * dev);
        p.var_hi = p.var_lo + rng.uniform(0.0, 4.0);
        const double grid_step = (p.support_hi - p.support_lo) / 10000.0;
        const double v_closed = solve_robust_mean(p);
        const double v_grid = grid_robust_mean(p);
        REQUIRE(std::isfinite(v_grid));
        CHECK(std::abs(v_closed - v_grid) <= grid_step + 1e-9);
        ++checked;
    }
}

TEST_CASE("invalid robust-mean problems are rejected") {
    RobustMeanProblem p;
    p.support_lo = 0.0;
    p.support_hi = 1.0;
    p.mean_lo = 0.8;
    p.mean_hi = 0.2;  // violates c1 <= mu <= c2
    p.ref_mean = 0.5;
    p.var_lo = 0.0;
    p.var_hi = 1.0;
    CHECK_THROWS_AS(solve_robust_mean(p), usage_error);

    RobustMeanProblem q;
    q.support_lo = 0.0;
    q.support_hi = 1.0;
    q.mean_lo = 0.4;
    q.mean_hi = 0.6;
    q.ref_mean = 0.5;
    q.var_lo = 0.5;  // exceeds (mu - c1)^2
    q.var_hi = 1.0;
    CHECK_THROWS_AS(solve_robust_mean(q), usage_error);
}

TEST_CASE("moment route agrees with the direct closed form") {
    Xoshiro256PP rng(5150);
    for (int trial = 0; trial < 30; ++trial) {
        auto pair = random_pair(rng, 3);
        Vector y(3);
        for (int j = 0; j < 3; ++j) y(j) = rng.next_double() < 0.5 ? 0.0 : 1.0;
        LocationDecision dec{y};
        CHECK(worst_case_utility_via_moments(pair, dec) ==
              Catch::Approx(worst_case_utility(pair, dec)).margin(1e-10));
    }
}

TEST_CASE("strictly singular ellipsoid shapes are rejected at load") {
    PairAmbiguity p;
    p.beta_hat = Vector::Zero(2);
    p.ellipsoid_shape = Matrix::Zero(2, 2);
    p.cov_hat = Matrix::Identity(2, 2);
    p.ellipsoid_radius = 1.0;
    p.gamma_hi = 1.0;
    CHECK_THROWS_AS(p.finalize(), usage_error);
}
