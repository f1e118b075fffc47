#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rfl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised on malformed inputs (dimension mismatches, invariant violations).
class usage_error : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a conic/LP subproblem cannot be solved reliably.
class solver_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct Site {
    int id = 0;
    Eigen::Vector2d coord{0.0, 0.0};
    double demand = 0.0;  // D_i >= 0
};

struct Facility {
    int id = 0;
    Eigen::Vector2d coord{0.0, 0.0};
    double capacity = 0.0;   // C_j >= 0
    double open_cost = 0.0;  // b_j >= 0
};

/**
 * Ambiguity data for one (site, facility) pair: the ellipsoidal mean
 * uncertainty (beta_hat, A, b) and the covariance band (Sigma_hat, gamma_1,
 * gamma_2). Matrix factors A^{-1/2}, A^{-1} and Sigma_hat^{1/2} are computed
 * once when the instance is loaded and cached immutably.
 *
 * gamma_lo is stored but never influences any optimal value (the closed-form
 * worst case depends only on the lower mean bound and the upper variance
 * bound); it is kept for schema completeness.
 */
struct PairAmbiguity {
    Vector beta_hat;
    Matrix ellipsoid_shape;   // A, symmetric positive definite
    double ellipsoid_radius = 0.0;  // b >= 0
    Matrix cov_hat;           // Sigma_hat, symmetric PSD
    double gamma_lo = 0.0;
    double gamma_hi = 0.0;

    // Cached factors, filled by finalize().
    Matrix shape_inv_sqrt;  // A^{-1/2}
    Matrix shape_inv;       // A^{-1}
    Matrix cov_sqrt;        // Sigma_hat^{1/2}

    int dim() const { return static_cast<int>(beta_hat.size()); }

    /**
     * Validates invariants and computes the cached factors via symmetric
     * eigendecomposition. A must be strictly positive definite (minimum
     * eigenvalue >= 1e-8): the model applies A^{-1/2}, so a singular shape
     * matrix is rejected outright. Sigma_hat eigenvalues below 1e-12 are
     * clamped to zero before taking the square root.
     */
    void finalize() {
        const auto n = beta_hat.size();
        if (ellipsoid_shape.rows() != n || ellipsoid_shape.cols() != n)
            throw usage_error("PairAmbiguity: ellipsoid shape dimension mismatch");
        if (cov_hat.rows() != n || cov_hat.cols() != n)
            throw usage_error("PairAmbiguity: covariance dimension mismatch");
        if (ellipsoid_radius < 0.0) throw usage_error("PairAmbiguity: negative ellipsoid radius");
        if (gamma_lo < 0.0 || gamma_hi < 0.0 || gamma_lo > gamma_hi + 1e-12)
            throw usage_error("PairAmbiguity: need 0 <= gamma_lo <= gamma_hi");

        Eigen::SelfAdjointEigenSolver<Matrix> es_a(ellipsoid_shape);
        if (es_a.info() != Eigen::Success)
            throw usage_error("PairAmbiguity: eigendecomposition of A failed");
        if (es_a.eigenvalues().minCoeff() < 1e-8)
            throw usage_error("PairAmbiguity: A must be positive definite (min eigenvalue >= 1e-8)");
        const Vector a_inv = es_a.eigenvalues().cwiseInverse();
        shape_inv = es_a.eigenvectors() * a_inv.asDiagonal() * es_a.eigenvectors().transpose();
        shape_inv_sqrt =
            es_a.eigenvectors() * a_inv.cwiseSqrt().asDiagonal() * es_a.eigenvectors().transpose();

        Eigen::SelfAdjointEigenSolver<Matrix> es_s(cov_hat);
        if (es_s.info() != Eigen::Success)
            throw usage_error("PairAmbiguity: eigendecomposition of Sigma_hat failed");
        if (es_s.eigenvalues().minCoeff() < -1e-10)
            throw usage_error("PairAmbiguity: Sigma_hat must be positive semidefinite");
        const Vector s_clamped =
            es_s.eigenvalues().unaryExpr([](double v) { return v < 1e-12 ? 0.0 : v; });
        cov_sqrt = es_s.eigenvectors() * s_clamped.cwiseSqrt().asDiagonal() *
                   es_s.eigenvectors().transpose();
    }
};

/// Binary location decision y over the facility set.
struct LocationDecision {
    Vector open;  // entries in {0,1}

    static LocationDecision unit(int dim, int j) {
        LocationDecision d;
        d.open = Vector::Zero(dim);
        d.open(j) = 1.0;
        return d;
    }
};

/// Flow assignment x_{ij} >= 0, |S| x |F|.
struct FlowMatrix {
    Matrix flow;
};

/**
 * One service-center location instance. Pairs without an ambiguity entry are
 * zero-utility: f = g = 0 for them and they never carry useful flow.
 */
struct Instance {
    std::string name;
    double budget = 0.0;
    std::vector<Site> sites;
    std::vector<Facility> facilities;
    Vector fixed_gains;  // c_j per facility
    std::map<std::pair<int, int>, PairAmbiguity> ambiguity;

    int num_sites() const { return static_cast<int>(sites.size()); }
    int num_facilities() const { return static_cast<int>(facilities.size()); }

    const PairAmbiguity* pair(int i, int j) const {
        auto it = ambiguity.find({i, j});
        return it == ambiguity.end() ? nullptr : &it->second;
    }

    void validate() const {
        if (sites.empty()) throw usage_error("Instance: needs at least one site");
        if (facilities.empty()) throw usage_error("Instance: needs at least one facility");
        if (budget < 0.0) throw usage_error("Instance: negative budget");
        if (fixed_gains.size() != num_facilities())
            throw usage_error("Instance: fixed_gains length mismatch");
        for (const auto& s : sites)
            if (s.demand < 0.0) throw usage_error("Instance: negative demand");
        for (const auto& f : facilities) {
            if (f.capacity < 0.0) throw usage_error("Instance: negative capacity");
            if (f.open_cost < 0.0) throw usage_error("Instance: negative open cost");
        }
        for (const auto& [key, pa] : ambiguity) {
            if (key.first < 0 || key.first >= num_sites() || key.second < 0 ||
                key.second >= num_facilities())
                throw usage_error("Instance: ambiguity entry references unknown pair");
            if (pa.dim() != num_facilities())
                throw usage_error("Instance: beta_hat length must equal |F|");
            if (pa.shape_inv.size() == 0)
                throw usage_error("Instance: pair ambiguity not finalized");
        }
    }

    bool budget_feasible(const Vector& y, double tol = 1e-9) const {
        double cost = 0.0;
        for (int j = 0; j < num_facilities(); ++j) cost += facilities[j].open_cost * y(j);
        return cost <= budget + tol;
    }
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterLimit, NumericalError, TimeLimit };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::Unbounded: return "unbounded";
        case SolveStatus::IterLimit: return "iteration_limit";
        case SolveStatus::NumericalError: return "numerical_error";
        case SolveStatus::TimeLimit: return "time_limit";
    }
    return "unknown";
}

/// Final outcome of a solve: location vector, flows and certified bounds.
struct Solution {
    Vector y;
    Matrix x;              // |S| x |F| flows
    double objective = 0.0;
    double bound = 0.0;
    double gap = 0.0;
    SolveStatus status = SolveStatus::Optimal;
};

}  // namespace rfl
