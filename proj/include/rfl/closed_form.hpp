#pragma once

#include <algorithm>
#include <cmath>

#include "rfl/types.hpp"

namespace rfl {

namespace detail {
inline void check_dim(const PairAmbiguity& pair, const Vector& v) {
    if (v.size() != pair.beta_hat.size())
        throw usage_error("vector dimension does not match pair ambiguity");
}
}  // namespace detail

/**
 * f(v) = beta_hat' v - b * ||A^{-1/2} v||.
 *
 * The concave second-order-cone function whose graph carries the worst-case
 * mean bound of the ellipsoidal uncertainty set.
 */
inline double f_value(const PairAmbiguity& pair, const Vector& v) {
    detail::check_dim(pair, v);
    return pair.beta_hat.dot(v) - pair.ellipsoid_radius * (pair.shape_inv_sqrt * v).norm();
}

/// g(v) = beta_hat' v - sqrt(gamma_2) * ||Sigma_hat^{1/2} v||.
inline double g_value(const PairAmbiguity& pair, const Vector& v) {
    detail::check_dim(pair, v);
    return pair.beta_hat.dot(v) - std::sqrt(pair.gamma_hi) * (pair.cov_sqrt * v).norm();
}

/**
 * Closed-form worst-case expected utility of one pair at a location decision:
 * max{f(y), g(y)}. A pair with no ambiguity entry contributes zero.
 */
inline double worst_case_utility(const PairAmbiguity& pair, const LocationDecision& y) {
    return std::max(f_value(pair, y.open), g_value(pair, y.open));
}

/// Range of beta' y over the ellipsoid: beta_hat' y -/+ b * ||A^{-1/2} y||.
inline std::pair<double, double> robust_mean_bounds(const PairAmbiguity& pair,
                                                    const LocationDecision& y) {
    detail::check_dim(pair, y.open);
    const double center = pair.beta_hat.dot(y.open);
    const double spread = pair.ellipsoid_radius * (pair.shape_inv_sqrt * y.open).norm();
    return {center - spread, center + spread};
}

/// The mean maximizer beta* = beta_hat + b A^{-1} y / ||A^{-1/2} y||; it lies
/// on the ellipsoid boundary and attains the upper mean bound.
inline Vector robust_mean_maximizer(const PairAmbiguity& pair, const LocationDecision& y) {
    detail::check_dim(pair, y.open);
    const double denom = (pair.shape_inv_sqrt * y.open).norm();
    if (denom <= 0.0) return pair.beta_hat;
    return pair.beta_hat + pair.ellipsoid_radius * (pair.shape_inv * y.open) / denom;
}

/// Variance band gamma_1 y' Sigma_hat y .. gamma_2 y' Sigma_hat y.
inline std::pair<double, double> variance_bounds(const PairAmbiguity& pair,
                                                 const LocationDecision& y) {
    detail::check_dim(pair, y.open);
    const double q = y.open.dot(pair.cov_hat * y.open);
    return {pair.gamma_lo * q, pair.gamma_hi * q};
}

/**
 * The scalar robust-mean problem: minimize E_P[u] over probability measures on
 * [support_lo, support_hi] subject to mean_lo <= E[u] <= mean_hi and
 * var_lo <= E[(u - ref_mean)^2] <= var_hi.
 *
 * The optimum is max{mean_lo, ref_mean - sqrt(var_hi)}; mean_hi and var_lo
 * never influence it.
 */
struct RobustMeanProblem {
    double support_lo = 0.0;
    double support_hi = 0.0;
    double mean_lo = 0.0;
    double mean_hi = 0.0;
    double var_lo = 0.0;
    double var_hi = 0.0;
    double ref_mean = 0.0;

    void validate() const {
        const double tol = 1e-12;
        if (!(support_lo <= mean_lo + tol && mean_lo <= ref_mean + tol &&
              ref_mean <= mean_hi + tol && mean_hi <= support_hi + tol))
            throw usage_error("RobustMeanProblem: need a <= c1 <= mu <= c2 <= b");
        if (!(0.0 <= var_lo + tol && var_lo <= var_hi + tol))
            throw usage_error("RobustMeanProblem: need 0 <= var_lo <= var_hi");
        const double dev = ref_mean - mean_lo;
        if (dev * dev < var_lo - 1e-12)
            throw usage_error("RobustMeanProblem: infeasible, (mu - c1)^2 < var_lo");
    }
};

inline double solve_robust_mean(const RobustMeanProblem& p) {
    p.validate();
    return std::max(p.mean_lo, p.ref_mean - std::sqrt(p.var_hi));
}

/// Assembles the scalar robust-mean problem induced by one pair at y and
/// solves it; agrees with worst_case_utility by construction.
inline double worst_case_utility_via_moments(const PairAmbiguity& pair,
                                             const LocationDecision& y) {
    const auto [mean_lo, mean_hi] = robust_mean_bounds(pair, y);
    const auto [var_lo, var_hi] = variance_bounds(pair, y);
    RobustMeanProblem p;
    p.ref_mean = pair.beta_hat.dot(y.open);
    p.mean_lo = mean_lo;
    p.mean_hi = mean_hi;
    p.var_lo = std::min(var_lo, (p.ref_mean - mean_lo) * (p.ref_mean - mean_lo));
    p.var_hi = var_hi;
    p.support_lo = std::min(mean_lo, p.ref_mean - std::sqrt(var_hi)) - 1.0;
    p.support_hi = std::max(mean_hi, p.ref_mean + std::sqrt(var_hi)) + 1.0;
    return solve_robust_mean(p);
}

}  // namespace rfl
