#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "rfl/closed_form.hpp"
#include "rfl/conic_solver.hpp"
#include "rfl/misocp.hpp"
#include "rfl/types.hpp"

namespace rfl {

/**
 * Gradient tangent of the mean-ellipsoid branch at v0 != 0:
 * alpha = beta_hat - b A^{-1} v0 / ||A^{-1/2} v0||, offset 0. By the Euler
 * identity of the positively homogeneous f, alpha' v0 = f(v0) exactly.
 */
inline TangentCut gcut_f(const PairAmbiguity& pair, const Vector& v0, int site = 0,
                         int facility = 0) {
    detail::check_dim(pair, v0);
    const double norm = (pair.shape_inv_sqrt * v0).norm();
    if (norm <= 0.0)
        throw usage_error("gcut_f: tangent undefined at the origin");
    TangentCut cut;
    cut.site = site;
    cut.facility = facility;
    cut.alpha = pair.beta_hat - pair.ellipsoid_radius * (pair.shape_inv * v0) / norm;
    cut.offset = 0.0;
    cut.family = CutFamily::GradF;
    cut.source_v = v0;
    cut.source_u = f_value(pair, v0);
    return cut;
}

/// Gradient tangent of the variance branch; beta_hat itself when the
/// covariance image of v0 vanishes (g is linear along that ray).
inline TangentCut gcut_g(const PairAmbiguity& pair, const Vector& v0, int site = 0,
                         int facility = 0) {
    detail::check_dim(pair, v0);
    if (v0.lpNorm<Eigen::Infinity>() <= 0.0)
        throw usage_error("gcut_g: tangent undefined at the origin");
    TangentCut cut;
    cut.site = site;
    cut.facility = facility;
    const double norm = (pair.cov_sqrt * v0).norm();
    if (norm <= 1e-14 || pair.gamma_hi == 0.0) {
        cut.alpha = pair.beta_hat;
    } else {
        cut.alpha =
            pair.beta_hat - std::sqrt(pair.gamma_hi) * (pair.cov_hat * v0) / norm;
    }
    cut.offset = 0.0;
    cut.family = CutFamily::GradG;
    cut.source_v = v0;
    cut.source_u = g_value(pair, v0);
    return cut;
}

namespace detail {

/// min over the simplex of alpha'v - f(v) (or -g(v)), as a small SOCP:
/// min (alpha - beta)'v + coef * t  s.t.  t >= ||M v||, 1'v = 1, v >= 0.
/// Returns the certified (dual) side of the optimum.
inline std::optional<double> simplex_margin(const Vector& alpha, const Vector& beta,
                                            const Matrix& m, double coef,
                                            const ConicSettings& settings) {
    const int n = static_cast<int>(alpha.size());
    ConicProgram p;
    for (int k = 0; k < n; ++k) p.add_var(0.0, 1.0);
    const int t = p.add_var(0.0, kInf);
    LinearRow sum_row;
    for (int k = 0; k < n; ++k) sum_row.terms.push_back({k, 1.0});
    sum_row.sense = RowSense::EQ;
    sum_row.rhs = 1.0;
    p.rows.push_back(sum_row);
    if (coef > 0.0) {
        SocBlock blk;
        blk.head = t;
        for (int r = 0; r < n; ++r) {
            SocBlock::TailRow tail;
            for (int c = 0; c < n; ++c)
                if (m(r, c) != 0.0) tail.terms.push_back({c, m(r, c)});
            blk.tails.push_back(std::move(tail));
        }
        p.soc_blocks.push_back(std::move(blk));
    }
    // Maximize the negated objective to minimize the margin.
    for (int k = 0; k < n; ++k)
        if (alpha(k) - beta(k) != 0.0) p.objective.push_back({k, beta(k) - alpha(k)});
    if (coef > 0.0) p.objective.push_back({t, -coef});
    auto res = solve_conic(p, settings);
    if (!res.ok()) return std::nullopt;
    return -res.dual_objective;
}

/// Certified margins of U <= alpha'v against both branch functions.
inline std::optional<std::pair<double, double>> branch_margins(const PairAmbiguity& pair,
                                                               const Vector& alpha,
                                                               const ConicSettings& settings) {
    const auto mf = simplex_margin(alpha, pair.beta_hat, pair.shape_inv_sqrt,
                                   pair.ellipsoid_radius, settings);
    if (!mf) return std::nullopt;
    const auto mg = simplex_margin(alpha, pair.beta_hat, pair.cov_sqrt,
                                   std::sqrt(pair.gamma_hi), settings);
    if (!mg) return std::nullopt;
    return std::make_pair(*mf, *mg);
}

}  // namespace detail

/**
 * Checks that U <= alpha'v + offset is valid for the whole epigraph hull.
 * Both branch margins min{alpha'v - f(v)} and min{alpha'v - g(v)} over the
 * normalized simplex must be >= -tol (positive homogeneity extends the check
 * to the full cone), and the offset must not be negative beyond tolerance
 * (the hull contains the origin). A failed subproblem solve discards the cut.
 */
inline bool validate_cut(const PairAmbiguity& pair, const TangentCut& cut, double tol = 1e-7,
                         const ConicSettings& settings = ConicSettings::from_env()) {
    if (cut.alpha.size() != pair.beta_hat.size())
        throw usage_error("validate_cut: dimension mismatch");
    if (cut.offset < -tol) return false;
    const auto margins = detail::branch_margins(pair, cut.alpha, settings);
    if (!margins) return false;
    return margins->first >= -tol && margins->second >= -tol;
}

struct ProjectionResult {
    double u_star = 0.0;
    Vector v_star;
    double u1 = 0.0, u2 = 0.0;
    Vector v1, v2;
    double distance = 0.0;
};

/**
 * Euclidean projection of (U0, v0) onto the Minkowski representation of the
 * epigraph hull: minimize ||v0 - v||^2 + (U0 - U)^2 over v = v1 + v2,
 * U = U1 + U2, U1 <= f(v1), U2 <= g(v2), everything nonnegative. The
 * decomposition certifies hull membership of the projected point.
 */
inline ProjectionResult project_to_hull(const PairAmbiguity& pair, double U0, const Vector& v0,
                                        const ConicSettings& settings = ConicSettings::from_env()) {
    detail::check_dim(pair, v0);
    if (!std::isfinite(U0) || !v0.allFinite())
        throw usage_error("project_to_hull: non-finite inputs");
    const int n = pair.dim();

    ConicProgram p;
    const int v = p.num_vars;
    for (int k = 0; k < n; ++k) p.add_var(0.0, kInf);
    const int v1 = p.num_vars;
    for (int k = 0; k < n; ++k) p.add_var(0.0, kInf);
    const int v2 = p.num_vars;
    for (int k = 0; k < n; ++k) p.add_var(0.0, kInf);
    const int U = p.add_var(0.0, kInf);
    const int U1 = p.add_var(0.0, kInf);
    const int U2 = p.add_var(0.0, kInf);
    const int t1 = p.add_var(0.0, pair.ellipsoid_radius > 0.0 ? kInf : 0.0);
    const int t2 = p.add_var(0.0, pair.gamma_hi > 0.0 ? kInf : 0.0);
    const int dist = p.add_var(0.0, kInf);

    for (int k = 0; k < n; ++k)
        p.rows.push_back({{{v + k, 1.0}, {v1 + k, -1.0}, {v2 + k, -1.0}}, RowSense::EQ, 0.0});
    p.rows.push_back({{{U, 1.0}, {U1, -1.0}, {U2, -1.0}}, RowSense::EQ, 0.0});
    {
        LinearRow row;
        row.terms.push_back({U1, 1.0});
        for (int k = 0; k < n; ++k)
            if (pair.beta_hat(k) != 0.0) row.terms.push_back({v1 + k, -pair.beta_hat(k)});
        if (pair.ellipsoid_radius > 0.0) row.terms.push_back({t1, pair.ellipsoid_radius});
        row.sense = RowSense::LE;
        row.rhs = 0.0;
        p.rows.push_back(row);
    }
    {
        LinearRow row;
        row.terms.push_back({U2, 1.0});
        for (int k = 0; k < n; ++k)
            if (pair.beta_hat(k) != 0.0) row.terms.push_back({v2 + k, -pair.beta_hat(k)});
        if (pair.gamma_hi > 0.0) row.terms.push_back({t2, std::sqrt(pair.gamma_hi)});
        row.sense = RowSense::LE;
        row.rhs = 0.0;
        p.rows.push_back(row);
    }
    if (pair.ellipsoid_radius > 0.0) {
        SocBlock blk;
        blk.head = t1;
        for (int r = 0; r < n; ++r) {
            SocBlock::TailRow tail;
            for (int c = 0; c < n; ++c)
                if (pair.shape_inv_sqrt(r, c) != 0.0)
                    tail.terms.push_back({v1 + c, pair.shape_inv_sqrt(r, c)});
            blk.tails.push_back(std::move(tail));
        }
        p.soc_blocks.push_back(std::move(blk));
    }
    if (pair.gamma_hi > 0.0) {
        SocBlock blk;
        blk.head = t2;
        for (int r = 0; r < n; ++r) {
            SocBlock::TailRow tail;
            for (int c = 0; c < n; ++c)
                if (pair.cov_sqrt(r, c) != 0.0)
                    tail.terms.push_back({v2 + c, pair.cov_sqrt(r, c)});
            blk.tails.push_back(std::move(tail));
        }
        p.soc_blocks.push_back(std::move(blk));
    }
    {
        // dist >= || (v - v0, U - U0) ||
        SocBlock blk;
        blk.head = dist;
        for (int k = 0; k < n; ++k) blk.tails.push_back({{{v + k, 1.0}}, -v0(k)});
        blk.tails.push_back({{{U, 1.0}}, -U0});
        p.soc_blocks.push_back(std::move(blk));
    }
    p.objective.push_back({dist, -1.0});

    auto res = solve_conic(p, settings);
    if (!res.ok())
        throw solver_error("hull projection failed (" + std::string(to_string(res.status)) +
                           ")");
    ProjectionResult out;
    out.v_star = res.primal.segment(v, n);
    out.u_star = res.primal(U);
    out.v1 = res.primal.segment(v1, n);
    out.v2 = res.primal.segment(v2, n);
    out.u1 = res.primal(U1);
    out.u2 = res.primal(U2);
    out.distance = std::sqrt((out.v_star - v0).squaredNorm() + (out.u_star - U0) * (out.u_star - U0));
    return out;
}

/**
 * Lift-and-project cut separating the nominal point (beta'v0, v0) from the
 * hull, when that point lies outside it. The cut normal is the projection
 * direction; by the Moreau identity on the homogeneous hull its offset is
 * zero up to solver accuracy. Returns nothing when the point is already in
 * the hull or the normal degenerates.
 */
inline std::optional<TangentCut> pcut(const PairAmbiguity& pair, const Vector& v0, int site = 0,
                                      int facility = 0,
                                      const ConicSettings& settings = ConicSettings::from_env()) {
    detail::check_dim(pair, v0);
    if (v0.lpNorm<Eigen::Infinity>() <= 0.0) throw usage_error("pcut: needs v0 != 0");
    const double U0 = pair.beta_hat.dot(v0);
    const auto proj = project_to_hull(pair, U0, v0, settings);
    if (proj.distance <= 1e-7) return std::nullopt;
    const double denom = U0 - proj.u_star;
    if (denom <= 1e-9) return std::nullopt;  // degenerate separating normal
    TangentCut cut;
    cut.site = site;
    cut.facility = facility;
    cut.alpha = (proj.v_star - v0) / denom;
    // The hull is a cone, so the exact cut through the projection point is
    // homogeneous (the normal is orthogonal to the projection).
    cut.offset = 0.0;
    cut.family = CutFamily::Project;
    cut.source_u = U0;
    cut.source_v = v0;

    // Projection noise can rotate the normal slightly inside the hull.
    // A uniform lift of alpha raises the simplex margins by exactly the
    // lifted amount, restoring certified validity.
    const auto margins = detail::branch_margins(pair, cut.alpha, settings);
    if (!margins) return std::nullopt;
    const double worst = std::min(margins->first, margins->second);
    if (worst < 0.0)
        cut.alpha.array() += -worst + 1e-9;
    // The polished cut must still separate the source point.
    if (cut.alpha.dot(v0) >= U0 - 1e-9 * (1.0 + std::abs(U0))) return std::nullopt;
    return cut;
}

/**
 * Test oracle for two-facility pairs: samples max{f,g} on the simplex
 * cross-section of the epigraph cone, builds the planar upper concave
 * envelope, and emits its facets as homogeneous cuts U <= alpha'v.
 */
inline std::vector<TangentCut> brute_force_hull_2d(const PairAmbiguity& pair, int grid_n,
                                                   int site = 0, int facility = 0) {
    if (pair.dim() != 2) throw usage_error("brute_force_hull_2d: needs |F| = 2");
    if (grid_n < 2 || grid_n > 2000) throw usage_error("brute_force_hull_2d: grid_n in [2,2000]");

    std::vector<Eigen::Vector2d> pts;
    pts.reserve(grid_n + 1);
    for (int i = 0; i <= grid_n; ++i) {
        const double theta = static_cast<double>(i) / grid_n;
        Vector v(2);
        v << theta, 1.0 - theta;
        const double h = std::max(f_value(pair, v), g_value(pair, v));
        pts.push_back({theta, h});
    }
    // Upper hull by the monotone chain: keep right turns.
    std::vector<Eigen::Vector2d> hull;
    for (const auto& p : pts) {
        while (hull.size() >= 2) {
            const auto& a = hull[hull.size() - 2];
            const auto& b = hull[hull.size() - 1];
            const double cross =
                (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
            if (cross >= 0.0) hull.pop_back();
            else break;
        }
        hull.push_back(p);
    }

    std::vector<TangentCut> cuts;
    for (std::size_t k = 0; k + 1 < hull.size(); ++k) {
        const double slope = (hull[k + 1].y() - hull[k].y()) / (hull[k + 1].x() - hull[k].x());
        const double intercept = hull[k].y() - slope * hull[k].x();
        TangentCut cut;
        cut.site = site;
        cut.facility = facility;
        cut.alpha = Vector(2);
        // U <= slope*theta + intercept on the slice homogenizes to
        // U <= (slope + intercept) v1 + intercept v2.
        cut.alpha << slope + intercept, intercept;
        cut.offset = 0.0;
        cut.family = CutFamily::Project;
        cut.source_v = Vector(2);
        const double mid = 0.5 * (hull[k].x() + hull[k + 1].x());
        cut.source_v << mid, 1.0 - mid;
        cut.source_u = slope * mid + intercept;
        cuts.push_back(std::move(cut));
    }
    return cuts;
}

}  // namespace rfl
