#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "rfl/hull_cuts.hpp"
#include "rfl/rng.hpp"

using namespace rfl;

namespace {

PairAmbiguity make_pair_full(const Vector& beta, const Matrix& a, double radius,
                             const Matrix& sigma, double gamma_hi) {
    PairAmbiguity p;
    p.beta_hat = beta;
    p.ellipsoid_shape = a;
    p.ellipsoid_radius = radius;
    p.cov_hat = sigma;
    p.gamma_lo = 0.0;
    p.gamma_hi = gamma_hi;
    p.finalize();
    return p;
}

PairAmbiguity random_pair(Xoshiro256PP& rng, int n) {
    Vector beta = Vector::NullaryExpr(n, [&](Eigen::Index) { return rng.uniform(1.0, 10.0); });
    Matrix q = Matrix::NullaryExpr(n, n,
                                   [&](Eigen::Index, Eigen::Index) { return rng.next_double(); });
    Matrix sigma = q.transpose() * q;
    Matrix a = Matrix::Identity(n, n) + 0.3 * sigma;
    return make_pair_full(beta, a, rng.uniform(0.2, 2.0), sigma, rng.uniform(0.2, 2.0));
}

Vector vec2(double a, double b) {
    Vector v(2);
    v << a, b;
    return v;
}

double hull_upper_1d(const PairAmbiguity& p) {
    Vector one = Vector::Ones(1);
    return std::max(f_value(p, one), g_value(p, one));
}

}  // namespace

TEST_CASE("gradient cut of f: hand example and flat-radius case") {
    auto p = make_pair_full(vec2(1.0, 0.0), Matrix::Identity(2, 2), 1.0,
                            Matrix::Identity(2, 2), 0.0);
    auto cut = gcut_f(p, vec2(1.0, 0.0));
    CHECK(cut.alpha(0) == Catch::Approx(0.0).margin(1e-12));
    CHECK(cut.alpha(1) == Catch::Approx(0.0).margin(1e-12));
    CHECK(cut.offset == 0.0);
    // f(v) = v1 - ||v|| <= 0 everywhere, so U <= 0 upper-bounds the f branch.
    Xoshiro256PP rng(5);
    for (int k = 0; k < 100; ++k) {
        Vector v = vec2(rng.uniform(0.0, 3.0), rng.uniform(0.0, 3.0));
        CHECK(f_value(p, v) <= 1e-12);
    }

    auto flat = make_pair_full(vec2(2.0, 1.0), Matrix::Identity(2, 2), 0.0,
                               Matrix::Identity(2, 2), 0.5);
    auto fcut = gcut_f(flat, vec2(0.3, 0.7));
    CHECK((fcut.alpha - flat.beta_hat).lpNorm<Eigen::Infinity>() == 0.0);

    CHECK_THROWS_AS(gcut_f(p, Vector::Zero(2)), usage_error);
}

TEST_CASE("gradient cut of g: identity covariance and tangency") {
    auto p = make_pair_full(vec2(3.0, 2.0), Matrix::Identity(2, 2), 0.5,
                            Matrix::Identity(2, 2), 1.0);
    Vector v0 = vec2(0.6, 0.8);
    auto cut = gcut_g(p, v0);
    const Vector expected = p.beta_hat - v0 / v0.norm();
    CHECK((cut.alpha - expected).lpNorm<Eigen::Infinity>() <= 1e-12);

    auto zero_gamma = make_pair_full(vec2(3.0, 2.0), Matrix::Identity(2, 2), 0.5,
                                     Matrix::Identity(2, 2), 0.0);
    auto czero = gcut_g(zero_gamma, v0);
    CHECK((czero.alpha - zero_gamma.beta_hat).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("Euler tangency holds to tight tolerance on random pairs") {
    Xoshiro256PP rng(77);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform_int(0, 3));
        auto p = random_pair(rng, n);
        Vector v0 = Vector::NullaryExpr(n, [&](Eigen::Index) { return rng.uniform(0.1, 3.0); });
        auto cf = gcut_f(p, v0);
        auto cg = gcut_g(p, v0);
        CHECK(std::abs(cf.alpha.dot(v0) - f_value(p, v0)) <= 1e-10 * (1.0 + std::abs(cf.source_u)));
        CHECK(std::abs(cg.alpha.dot(v0) - g_value(p, v0)) <= 1e-10 * (1.0 + std::abs(cg.source_u)));
        // Concavity: the tangent upper-bounds its branch everywhere.
        for (int k = 0; k < 50; ++k) {
            Vector v = Vector::NullaryExpr(n, [&](Eigen::Index) { return rng.uniform(0.0, 4.0); });
            CHECK(f_value(p, v) <= cf.alpha.dot(v) + 1e-9);
            CHECK(g_value(p, v) <= cg.alpha.dot(v) + 1e-9);
        }
    }
}

TEST_CASE("cut validation distinguishes the one-dimensional branches") {
    // f(v) = 3v and g(v) = 4v.
    auto p = make_pair_full(Vector::Constant(1, 4.0), Matrix::Identity(1, 1), 1.0,
                            Matrix::Identity(1, 1), 0.0);
    REQUIRE(f_value(p, Vector::Ones(1)) == Catch::Approx(3.0));
    REQUIRE(g_value(p, Vector::Ones(1)) == Catch::Approx(4.0));

    TangentCut from_f;
    from_f.alpha = Vector::Constant(1, 3.0);
    from_f.offset = 0.0;
    CHECK_FALSE(validate_cut(p, from_f));

    TangentCut from_g;
    from_g.alpha = Vector::Constant(1, 4.0);
    from_g.offset = 0.0;
    CHECK(validate_cut(p, from_g));

    auto linear = make_pair_full(Vector::Constant(1, 4.0), Matrix::Identity(1, 1), 0.0,
                                 Matrix::Identity(1, 1), 0.0);
    TangentCut nominal;
    nominal.alpha = Vector::Constant(1, 4.0);
    nominal.offset = 0.0;
    CHECK(validate_cut(linear, nominal));

    TangentCut negative_offset = from_g;
    negative_offset.offset = -1.0;
    CHECK_FALSE(validate_cut(p, negative_offset));
}

TEST_CASE("projection: points already in the epigraph have distance zero") {
    Xoshiro256PP rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        auto p = random_pair(rng, 3);
        Vector v0 =
            Vector::NullaryExpr(3, [&](Eigen::Index) { return rng.uniform(0.0, 2.0); });
        const double top = std::max({f_value(p, v0), g_value(p, v0), 0.0});
        const double u0 = rng.uniform(0.0, 1.0) * top;
        auto proj = project_to_hull(p, u0, v0);
        CHECK(proj.distance <= 1e-5);
        // The Minkowski certificate reassembles the projected point.
        CHECK((proj.v1 + proj.v2 - proj.v_star).lpNorm<Eigen::Infinity>() <= 1e-6);
        CHECK(proj.u1 + proj.u2 == Catch::Approx(proj.u_star).margin(1e-6));
        CHECK(proj.u1 <= f_value(p, proj.v1) + 1e-6);
        CHECK(proj.u2 <= g_value(p, proj.v2) + 1e-6);
    }
}

TEST_CASE("projection reduces to point-to-halfspace distance in the linear case") {
    auto p = make_pair_full(vec2(2.0, 1.0), Matrix::Identity(2, 2), 0.0,
                            Matrix::Identity(2, 2), 0.0);
    Vector v0 = vec2(1.0, 1.5);
    const double u0 = p.beta_hat.dot(v0) + 1.0;
    auto proj = project_to_hull(p, u0, v0);
    const double expected = 1.0 / std::sqrt(1.0 + p.beta_hat.squaredNorm());
    CHECK(proj.distance == Catch::Approx(expected).margin(1e-5));
}

TEST_CASE("one-dimensional projection matches a dense grid search") {
    auto p = make_pair_full(Vector::Constant(1, 5.0), Matrix::Identity(1, 1), 2.0,
                            Matrix::Identity(1, 1), 1.0);
    // f(v) = 3v, g(v) = 4v; the hull is U <= 4v.
    REQUIRE(hull_upper_1d(p) == Catch::Approx(4.0));
    const double v0 = 1.0, u0 = 5.0;
    double best = kInf;
    const int n = 4000;
    for (int i = 0; i <= n; ++i) {
        const double v = 3.0 * i / n;
        for (int k = 0; k <= n; ++k) {
            const double u = 4.0 * v * k / n;
            best = std::min(best, std::hypot(v - v0, u - u0));
        }
    }
    auto proj = project_to_hull(p, u0, Vector::Constant(1, v0));
    CHECK(std::abs(proj.distance - best) <= 2.0 * (3.0 / n) + 1e-6);
}

TEST_CASE("pcut: inactive on linear pairs, exact on the 1-D hull face") {
    auto linear = make_pair_full(vec2(2.0, 1.0), Matrix::Identity(2, 2), 0.0,
                                 Matrix::Identity(2, 2), 0.0);
    CHECK_FALSE(pcut(linear, vec2(1.0, 1.0)).has_value());

    // beta = 5 with f(v) = 3v, g(v) = 4v: the nominal point (5, 1) projects
    // onto the upper hull face U = 4v.
    auto p = make_pair_full(Vector::Constant(1, 5.0), Matrix::Identity(1, 1), 2.0,
                            Matrix::Identity(1, 1), 1.0);
    auto cut = pcut(p, Vector::Ones(1));
    REQUIRE(cut.has_value());
    CHECK(cut->alpha(0) == Catch::Approx(4.0).margin(1e-5));
    CHECK(cut->offset == Catch::Approx(0.0).margin(1e-6));
    CHECK(validate_cut(p, *cut, 1e-6));
}

TEST_CASE("pcut separates its source point on random crossing pairs") {
    Xoshiro256PP rng(404);
    int produced = 0;
    for (int trial = 0; trial < 25; ++trial) {
        auto p = random_pair(rng, 2);
        Vector v0 = vec2(rng.uniform(0.1, 2.0), rng.uniform(0.1, 2.0));
        auto cut = pcut(p, v0);
        if (!cut.has_value()) continue;
        ++produced;
        const double u0 = p.beta_hat.dot(v0);
        // Strict separation at the source point.
        CHECK(cut->alpha.dot(v0) + cut->offset < u0 - 1e-8);
        CHECK(validate_cut(p, *cut, 1e-6));
    }
    CHECK(produced > 0);
}

TEST_CASE("2-D hull oracle: dominance of f when f >= g pointwise") {
    // Large gamma makes g far below f everywhere on the simplex.
    auto p = make_pair_full(vec2(6.0, 5.0), Matrix::Identity(2, 2), 0.1,
                            Matrix::Identity(2, 2), 9.0);
    auto cuts = brute_force_hull_2d(p, 400);
    REQUIRE(!cuts.empty());
    Xoshiro256PP rng(11);
    // Facets are chords of the concave f, so they dip below it between the
    // sample points by at most the grid resolution squared times curvature.
    const double chord_tol = 1e-5;
    for (const auto& cut : cuts) {
        for (int k = 0; k < 50; ++k) {
            const double theta = rng.next_double();
            Vector v = vec2(theta, 1.0 - theta);
            const double fv = f_value(p, v);
            const double face = cut.alpha.dot(v);
            CHECK(face >= fv - chord_tol);
        }
        CHECK(std::abs(cut.alpha.dot(cut.source_v) - f_value(p, cut.source_v)) <= 1e-3);
    }
}

TEST_CASE("2-D hull oracle: crossing case facets validate and dominate cuts") {
    Xoshiro256PP rng(777);
    for (int trial = 0; trial < 5; ++trial) {
        auto p = random_pair(rng, 2);
        const int grid_n = 600;
        auto facets = brute_force_hull_2d(p, grid_n);
        REQUIRE(!facets.empty());
        for (const auto& facet : facets) CHECK(validate_cut(p, facet, 1e-5));

        // Envelope on the slice: pointwise minimum over the facet lines.
        auto envelope = [&](double theta) {
            double env = kInf;
            Vector v = vec2(theta, 1.0 - theta);
            for (const auto& facet : facets) env = std::min(env, facet.alpha.dot(v));
            return env;
        };
        const double grid_tol = 1e-6 + 20.0 / (grid_n * static_cast<double>(grid_n));

        // Cuts from the generators never dip below the oracle envelope.
        std::vector<TangentCut> cuts;
        Vector probe = vec2(rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0));
        auto cf = gcut_f(p, probe);
        auto cg = gcut_g(p, probe);
        if (validate_cut(p, cf)) cuts.push_back(cf);
        if (validate_cut(p, cg)) cuts.push_back(cg);
        if (auto pc = pcut(p, probe)) cuts.push_back(*pc);
        for (const auto& cut : cuts) {
            for (int i = 0; i <= 100; ++i) {
                const double theta = i / 100.0;
                Vector v = vec2(theta, 1.0 - theta);
                CHECK(cut.alpha.dot(v) + cut.offset >= envelope(theta) - grid_tol);
            }
        }
    }
}

TEST_CASE("brute_force_hull_2d guards its domain") {
    Xoshiro256PP rng(3);
    auto p3 = random_pair(rng, 3);
    CHECK_THROWS_AS(brute_force_hull_2d(p3, 100), usage_error);
    auto p2 = random_pair(rng, 2);
    CHECK_THROWS_AS(brute_force_hull_2d(p2, 100000), usage_error);
}
