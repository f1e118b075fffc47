#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rfl/conic_program.hpp"
#include "rfl/types.hpp"

namespace rfl {

/**
 * Settings for the built-in conic solver. Tolerances follow the adapter
 * contract: on Optimal the primal/dual residuals are below feastol and the
 * (absolute or relative) duality gap below abstol/reltol.
 */
struct ConicSettings {
    double feastol = 1e-7;
    double abstol = 1e-7;
    double reltol = 1e-7;
    double feastol_inacc = 1e-4;
    double abstol_inacc = 5e-4;
    double reltol_inacc = 5e-4;
    int max_iters = 200;
    int nitref = 4;           // iterative refinement steps per KKT solve
    double deltastat = 1e-9;  // static regularization
    double linsysacc = 1e-12;
    double irerrfact = 30.0;
    double gamma = 0.99;  // step damping
    double stepmin = 1e-6;
    double stepmax = 0.999;
    double sigmamin = 1e-4;
    double sigmamax = 1.0;
    double safeguard = 500.0;
    int equil_iters = 3;
    /**
     * Branch-and-bound cutoff (maximization sense): once the iterate's dual
     * side certifies that the optimum lies below this value, the solve stops
     * early and reports the certified bound. -inf disables it.
     */
    double objective_cutoff = -std::numeric_limits<double>::infinity();

    /// Applies the RFL_CONIC_MAX_ITERS environment override, if present.
    static ConicSettings from_env() {
        ConicSettings s;
        if (const char* env = std::getenv("RFL_CONIC_MAX_ITERS")) {
            const int v = std::atoi(env);
            if (v > 0) s.max_iters = std::min(v, 200);
        }
        return s;
    }
};

struct ConicResult {
    SolveStatus status = SolveStatus::NumericalError;
    Vector primal;     // full-length, fixed variables filled back in
    Vector row_duals;  // one multiplier per original linear row
    double objective = 0.0;       // maximization value
    double dual_objective = 0.0;  // upper bound on the optimum when Optimal
    int iterations = 0;
    struct {
        double primal = kInf;
        double dual = kInf;
        double gap = kInf;
    } residuals;
    /// Certificate residual for Infeasible/Unbounded outcomes.
    double certificate_residual = kInf;

    bool ok() const { return status == SolveStatus::Optimal; }
};

namespace ipm {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/**
 * Internal conic form (minimization):
 *
 *   min  c'x   s.t.  Aeq x = beq,   G x + s = h,   s in K,
 *
 * with K the product of a nonnegative orthant (first n_lin rows of G) and
 * second-order cones of the given dimensions.
 */
struct StandardForm {
    SpMat Aeq, G;
    Vector beq, h, c;
    int n_lin = 0;
    std::vector<int> soc_dims;
};

/**
 * Homogeneous self-dual embedding solved by a Nesterov-Todd scaled
 * primal-dual predictor-corrector method; the classic ECOS scheme. The KKT
 * system carries the sparse rank-2 expansion of each SOC scaling block, so
 * one LDLT factorization per iteration suffices.
 */
class HsdeSolver {
  public:
    HsdeSolver(const StandardForm& f, const ConicSettings& settings)
        : f_(f), st_(settings) {
        n_ = static_cast<int>(f_.G.cols());
        if (f_.Aeq.cols() > 0) n_ = std::max(n_, static_cast<int>(f_.Aeq.cols()));
        p_ = static_cast<int>(f_.Aeq.rows());
        m_ = static_cast<int>(f_.G.rows());
        nsoc_ = static_cast<int>(f_.soc_dims.size());
        mt_ = m_ + 2 * nsoc_;
        dim_ = n_ + p_ + mt_;
        cones_.resize(nsoc_);
        for (int k = 0; k < nsoc_; ++k) cones_[k].dim = f_.soc_dims[k];
        equilibrate();
        At_ = f_.Aeq.transpose();
        Gt_ = f_.G.transpose();
        setup_kkt();
    }

    SolveStatus run() {
        x_.setZero(n_);
        y_.setZero(p_);
        z_.setZero(m_);
        s_.setZero(m_);
        lambda_.resize(m_);
        W_dz_.resize(m_);
        ds_by_W_.resize(m_);
        ds_.resize(m_);
        work_dz_.resize(m_);
        tau_ = 1.0;
        kap_ = 1.0;

        rhs1_.setZero(dim_);
        rhs2_.setZero(dim_);
        rhs1_.segment(n_, p_) = f_.beq;
        expand_into(f_.h, rhs1_, n_ + p_);
        rhs2_.head(n_) = -f_.c;

        resx0_ = std::max(1.0, f_.c.norm());
        resy0_ = std::max(1.0, f_.beq.norm());
        resz0_ = std::max(1.0, f_.h.norm());

        reset_kkt_scalings();
        ldlt_.analyzePattern(K_);
        ldlt_.factorize(K_);
        if (ldlt_.info() != Eigen::Success) return SolveStatus::NumericalError;

        // Initial point: x from least-norm fit of the residual system, then
        // s,z pushed strictly inside the cone.
        Vector dx(n_), dy(p_), dz(m_);
        solve_kkt(rhs1_, dx, dy, dz, true);
        x_ = dx;
        bring_to_cone(-dz, s_);
        solve_kkt(rhs2_, dx, dy, dz, true);
        y_ = dy;
        bring_to_cone(dz, z_);

        rhs1_.head(n_) = -f_.c;

        double pres_prev = std::numeric_limits<double>::max();
        SolveStatus code = SolveStatus::IterLimit;
        best_valid_ = false;

        Vector dx1(n_), dy1(p_), dz1(m_), dx2(n_), dy2(p_), dz2(m_);
        for (iter_ = 0; iter_ <= st_.max_iters; ++iter_) {
            compute_residuals();
            update_statistics();

            if (iter_ > 0 && (pres_ > st_.safeguard * pres_prev || gap_ < 0.0)) {
                restore_best();
                return check_exit(true) ? exit_code_ : SolveStatus::NumericalError;
            }
            pres_prev = pres_;

            if (check_exit(false)) return exit_code_;

            if (iter_ > 0 && step_ == st_.stepmin * st_.gamma) {
                restore_best();
                return check_exit(true) ? exit_code_ : SolveStatus::NumericalError;
            }
            if (iter_ == st_.max_iters) {
                if (!is_current_best()) restore_best();
                return check_exit(true) ? exit_code_ : SolveStatus::IterLimit;
            }
            if (std::isnan(pcost_)) {
                if (best_valid_) {
                    restore_best();
                    return check_exit(true) ? exit_code_ : SolveStatus::NumericalError;
                }
                return SolveStatus::NumericalError;
            }

            if (iter_ == 0 || is_current_best()) save_best();

            if (!update_scalings()) {
                restore_best();
                return check_exit(true) ? exit_code_ : SolveStatus::NumericalError;
            }
            update_kkt_scalings();
            ldlt_.factorize(K_);
            if (ldlt_.info() != Eigen::Success) {
                restore_best();
                return check_exit(true) ? exit_code_ : SolveStatus::NumericalError;
            }

            solve_kkt(rhs1_, dx1, dy1, dz1, false);

            // Affine (predictor) direction.
            rhs_affine();
            solve_kkt(rhs2_, dx2, dy2, dz2, false);

            const double dtau_denom =
                kap_ / tau_ - f_.c.dot(dx1) - f_.beq.dot(dy1) - f_.h.dot(dz1);
            const double dtauaff =
                (rt_ - kap_ + f_.c.dot(dx2) + f_.beq.dot(dy2) + f_.h.dot(dz2)) / dtau_denom;

            dz2 += dtauaff * dz1;
            scale(dz2, W_dz_);
            ds_by_W_ = -W_dz_ - lambda_;
            const double dkapaff = -kap_ - kap_ / tau_ * dtauaff;

            const double step_aff = line_search(ds_by_W_, W_dz_, tau_, dtauaff, kap_, dkapaff);
            const double sigma =
                std::clamp(std::pow(1.0 - step_aff, 3), st_.sigmamin, st_.sigmamax);

            // Combined (corrector) direction with Mehrotra second-order term.
            rhs_combined(sigma);
            solve_kkt(rhs2_, dx2, dy2, dz2, false);

            const double bkap = kap_ * tau_ + dkapaff * dtauaff - sigma * mu_;
            const double dtau = ((1.0 - sigma) * rt_ - bkap / tau_ + f_.c.dot(dx2) +
                                 f_.beq.dot(dy2) + f_.h.dot(dz2)) /
                                dtau_denom;
            dx2 += dtau * dx1;
            dy2 += dtau * dy1;
            dz2 += dtau * dz1;

            scale(dz2, W_dz_);
            ds_by_W_ = -(ds_by_W_ + W_dz_);
            const double dkap = -(bkap + kap_ * dtau) / tau_;

            step_ = st_.gamma * line_search(ds_by_W_, W_dz_, tau_, dtau, kap_, dkap);

            scale(ds_by_W_, ds_);
            x_ += step_ * dx2;
            y_ += step_ * dy2;
            z_ += step_ * dz2;
            s_ += step_ * ds_;
            kap_ += step_ * dkap;
            tau_ += step_ * dtau;
        }
        return code;
    }

    // Unscaled (original data) solution accessors, valid after run().
    Vector primal() const { return x_.cwiseQuotient(xe_ * tau_); }
    Vector eq_duals() const { return p_ > 0 ? Vector(y_.cwiseQuotient(ae_ * tau_)) : Vector(); }
    Vector cone_duals() const { return z_.cwiseQuotient(ge_ * tau_); }
    Vector slacks() const { return s_.cwiseProduct(ge_ / tau_); }
    int iterations() const { return iter_; }
    double pres() const { return pres_; }
    double dres() const { return dres_; }
    double gap() const { return gap_; }
    double relgap() const { return relgap_.value_or(gap_); }
    double pcost() const { return pcost_; }
    double dcost() const { return dcost_; }
    double pinfres() const { return pinfres_.value_or(kInf); }
    double dinfres() const { return dinfres_.value_or(kInf); }

  private:
    struct SoCone {
        int dim = 0;
        Vector q, skbar, zkbar;
        double eta = 0.0, eta_sq = 0.0, a = 0.0, w = 0.0;
        double d1 = 0.0, u0 = 0.0, u1 = 0.0, v1 = 0.0;
    };

    // ---- data layout helpers -----------------------------------------

    /// Copies a cone-ordered vector of length m_ into an expanded vector
    /// (two zero padding slots after each SOC block) starting at `offset`.
    void expand_into(const Vector& src, Vector& dst, int offset) const {
        dst.segment(offset, f_.n_lin) = src.head(f_.n_lin);
        int si = f_.n_lin, di = offset + f_.n_lin;
        for (const auto& sc : cones_) {
            dst.segment(di, sc.dim) = src.segment(si, sc.dim);
            di += sc.dim;
            dst(di++) = 0.0;
            dst(di++) = 0.0;
            si += sc.dim;
        }
    }

    /// Extracts the cone part (length m_) from an expanded vector.
    void contract_from(const Vector& src, int offset, Vector& dst) const {
        dst.head(f_.n_lin) = src.segment(offset, f_.n_lin);
        int si = offset + f_.n_lin, di = f_.n_lin;
        for (const auto& sc : cones_) {
            dst.segment(di, sc.dim) = src.segment(si, sc.dim);
            si += sc.dim + 2;
            di += sc.dim;
        }
    }

    // ---- equilibration ------------------------------------------------

    void equilibrate() {
        xe_ = Vector::Ones(n_);
        ae_ = Vector::Ones(p_);
        ge_ = Vector::Ones(m_);
        Vector xt(n_), at(p_), gt(m_);
        for (int it = 0; it < st_.equil_iters; ++it) {
            xt.setZero();
            at.setZero();
            gt.setZero();
            max_cols(f_.Aeq, xt);
            max_cols(f_.G, xt);
            max_rows(f_.Aeq, at);
            max_rows(f_.G, gt);
            int ind = f_.n_lin;
            for (const auto& sc : cones_) {
                const double total = gt.segment(ind, sc.dim).sum();
                gt.segment(ind, sc.dim).setConstant(total);
                ind += sc.dim;
            }
            auto sqrt_op = [](double a) { return std::fabs(a) < 1e-6 ? 1.0 : std::sqrt(a); };
            xt = xt.unaryExpr(sqrt_op);
            at = at.unaryExpr(sqrt_op);
            gt = gt.unaryExpr(sqrt_op);
            scale_rows(f_.Aeq, at);
            scale_rows(f_.G, gt);
            scale_cols(f_.Aeq, xt);
            scale_cols(f_.G, xt);
            xe_ = xe_.cwiseProduct(xt);
            ae_ = ae_.cwiseProduct(at);
            ge_ = ge_.cwiseProduct(gt);
        }
        f_.c = f_.c.cwiseQuotient(xe_);
        f_.beq = f_.beq.cwiseQuotient(ae_);
        f_.h = f_.h.cwiseQuotient(ge_);
    }

    static void max_rows(const SpMat& m, Vector& e) {
        for (int j = 0; j < m.outerSize(); ++j)
            for (SpMat::InnerIterator it(m, j); it; ++it)
                e(it.row()) = std::max(std::fabs(it.value()), e(it.row()));
    }
    static void max_cols(const SpMat& m, Vector& e) {
        for (int j = 0; j < m.outerSize(); ++j)
            for (SpMat::InnerIterator it(m, j); it; ++it)
                e(j) = std::max(std::fabs(it.value()), e(j));
    }
    static void scale_rows(SpMat& m, const Vector& e) {
        for (int j = 0; j < m.outerSize(); ++j)
            for (SpMat::InnerIterator it(m, j); it; ++it) it.valueRef() /= e(it.row());
    }
    static void scale_cols(SpMat& m, const Vector& e) {
        for (int j = 0; j < m.outerSize(); ++j)
            for (SpMat::InnerIterator it(m, j); it; ++it) it.valueRef() /= e(j);
    }

    // ---- KKT assembly ---------------------------------------------------

    /**
     * K (upper triangle) =
     *   [ dI    A'      G'~ ]
     *   [ 0    -dI       0  ]
     *   [ 0     0       -V  ]
     * where G'~ has two spacer columns per SOC and V carries the NT scaling
     * of each cone in expanded (diagonal plus rank-2 border) form.
     */
    void setup_kkt() {
        K_.resize(dim_, dim_);
        std::vector<Triplet> trip;
        trip.reserve(static_cast<std::size_t>(f_.Aeq.nonZeros() + f_.G.nonZeros()) + dim_ + 3 * m_);

        for (int k = 0; k < n_; ++k) trip.emplace_back(k, k, st_.deltastat);
        for (int k = 0; k < p_; ++k) trip.emplace_back(n_ + k, n_ + k, -st_.deltastat);

        for (int col = 0; col < At_.outerSize(); ++col)
            for (SpMat::InnerIterator it(At_, col); it; ++it)
                trip.emplace_back(it.row(), n_ + col, it.value());

        // G' with expanded column layout.
        {
            int col_k = n_ + p_;
            int col_g = 0;
            for (int col = 0; col < f_.n_lin; ++col, ++col_g, ++col_k)
                for (SpMat::InnerIterator it(Gt_, col_g); it; ++it)
                    trip.emplace_back(it.row(), col_k, it.value());
            for (const auto& sc : cones_) {
                for (int col = 0; col < sc.dim; ++col, ++col_g, ++col_k)
                    for (SpMat::InnerIterator it(Gt_, col_g); it; ++it)
                        trip.emplace_back(it.row(), col_k, it.value());
                col_k += 2;
            }
        }

        // -V block; scaling entries recorded for fast per-iteration updates.
        scaling_pos_.clear();
        {
            int d = n_ + p_;
            for (int k = 0; k < f_.n_lin; ++k, ++d) {
                scaling_pos_.push_back({d, d});
                trip.emplace_back(d, d, -1.0);
            }
            for (const auto& sc : cones_) {
                const int blk = d;
                for (int k = 0; k < sc.dim; ++k) {
                    scaling_pos_.push_back({blk + k, blk + k});
                    trip.emplace_back(blk + k, blk + k, -1.0);
                }
                const int vcol = blk + sc.dim;
                const int ucol = blk + sc.dim + 1;
                scaling_pos_.push_back({vcol, vcol});
                trip.emplace_back(vcol, vcol, -1.0);
                for (int k = 1; k < sc.dim; ++k) {
                    scaling_pos_.push_back({blk + k, vcol});
                    trip.emplace_back(blk + k, vcol, 0.0);
                }
                scaling_pos_.push_back({ucol, ucol});
                trip.emplace_back(ucol, ucol, 1.0);
                scaling_pos_.push_back({blk, ucol});
                trip.emplace_back(blk, ucol, 0.0);
                for (int k = 1; k < sc.dim; ++k) {
                    scaling_pos_.push_back({blk + k, ucol});
                    trip.emplace_back(blk + k, ucol, 0.0);
                }
                d += sc.dim + 2;
            }
        }

        K_.setFromTriplets(trip.begin(), trip.end());
        K_.makeCompressed();

        // Resolve storage offsets of the scaling entries.
        scaling_ptr_.clear();
        scaling_ptr_.reserve(scaling_pos_.size());
        for (const auto& [row, col] : scaling_pos_) {
            const int start = K_.outerIndexPtr()[col];
            const int end = K_.outerIndexPtr()[col + 1];
            const int* inner = K_.innerIndexPtr();
            const int* hit = std::lower_bound(inner + start, inner + end, row);
            scaling_ptr_.push_back(static_cast<int>(hit - inner));
        }
    }

    void reset_kkt_scalings() {
        double* vals = K_.valuePtr();
        std::size_t ptr = 0;
        for (int k = 0; k < f_.n_lin; ++k) vals[scaling_ptr_[ptr++]] = -1.0;
        for (const auto& sc : cones_) {
            for (int k = 0; k < sc.dim; ++k) vals[scaling_ptr_[ptr++]] = -1.0;
            vals[scaling_ptr_[ptr++]] = -1.0;
            for (int k = 1; k < sc.dim; ++k) vals[scaling_ptr_[ptr++]] = 0.0;
            vals[scaling_ptr_[ptr++]] = 1.0;
            vals[scaling_ptr_[ptr++]] = 0.0;
            for (int k = 1; k < sc.dim; ++k) vals[scaling_ptr_[ptr++]] = 0.0;
        }
    }

    void update_kkt_scalings() {
        double* vals = K_.valuePtr();
        std::size_t ptr = 0;
        for (int k = 0; k < f_.n_lin; ++k)
            vals[scaling_ptr_[ptr++]] = -lp_v_(k) - st_.deltastat;
        for (const auto& sc : cones_) {
            vals[scaling_ptr_[ptr++]] = -sc.eta_sq * sc.d1 - st_.deltastat;
            for (int k = 1; k < sc.dim; ++k)
                vals[scaling_ptr_[ptr++]] = -sc.eta_sq - st_.deltastat;
            vals[scaling_ptr_[ptr++]] = -sc.eta_sq;
            for (int k = 1; k < sc.dim; ++k)
                vals[scaling_ptr_[ptr++]] = -sc.eta_sq * sc.v1 * sc.q(k - 1);
            vals[scaling_ptr_[ptr++]] = sc.eta_sq + st_.deltastat;
            vals[scaling_ptr_[ptr++]] = -sc.eta_sq * sc.u0;
            for (int k = 1; k < sc.dim; ++k)
                vals[scaling_ptr_[ptr++]] = -sc.eta_sq * sc.u1 * sc.q(k - 1);
        }
    }

    // ---- cone algebra ---------------------------------------------------

    bool update_scalings() {
        lp_v_ = s_.head(f_.n_lin).cwiseQuotient(z_.head(f_.n_lin));
        lp_w_ = lp_v_.cwiseSqrt();
        int start = f_.n_lin;
        for (auto& sc : cones_) {
            const double sres =
                s_(start) * s_(start) - s_.segment(start + 1, sc.dim - 1).squaredNorm();
            const double zres =
                z_(start) * z_(start) - z_.segment(start + 1, sc.dim - 1).squaredNorm();
            if (sres <= 0.0 || zres <= 0.0) return false;
            const double snorm = std::sqrt(sres), znorm = std::sqrt(zres);
            sc.skbar = s_.segment(start, sc.dim) / snorm;
            sc.zkbar = z_.segment(start, sc.dim) / znorm;
            sc.eta_sq = snorm / znorm;
            sc.eta = std::sqrt(sc.eta_sq);

            double gamma = std::sqrt(0.5 * (1.0 + sc.skbar.dot(sc.zkbar)));
            sc.a = (0.5 / gamma) * (sc.skbar(0) + sc.zkbar(0));
            sc.q = (0.5 / gamma) * (sc.skbar.tail(sc.dim - 1) - sc.zkbar.tail(sc.dim - 1));
            sc.w = sc.q.squaredNorm();

            const double c = (1.0 + sc.a) + sc.w / (1.0 + sc.a);
            const double d = 1.0 + 2.0 / (1.0 + sc.a) + sc.w / std::pow(1.0 + sc.a, 2);
            const double d1 =
                std::max(0.0, 0.5 * (sc.a * sc.a + sc.w * (1.0 - c * c / (1.0 + sc.w * d))));
            const double u0_sq = sc.a * sc.a + sc.w - d1;
            const double c2byu02 = c * c / u0_sq;
            if (c2byu02 - d <= 0.0) return false;
            sc.d1 = d1;
            sc.u0 = std::sqrt(u0_sq);
            sc.u1 = std::sqrt(c2byu02);
            sc.v1 = std::sqrt(c2byu02 - d);
            start += sc.dim;
        }
        scale(z_, lambda_);
        return true;
    }

    /// lambda = W z (NT scaling applied).
    void scale(const Vector& z, Vector& out) const {
        out.head(f_.n_lin) = lp_w_.cwiseProduct(z.head(f_.n_lin));
        int start = f_.n_lin;
        for (const auto& sc : cones_) {
            const double zeta = sc.q.dot(z.segment(start + 1, sc.dim - 1));
            const double factor = z(start) + zeta / (1.0 + sc.a);
            out(start) = sc.eta * (sc.a * z(start) + zeta);
            out.segment(start + 1, sc.dim - 1) =
                sc.eta * (z.segment(start + 1, sc.dim - 1) + factor * sc.q);
            start += sc.dim;
        }
    }

    /// y += W^2 x on the expanded layout (used by iterative refinement).
    void scale2add(const Vector& x, Vector& y) const {
        y.head(f_.n_lin) += lp_v_.cwiseProduct(x.head(f_.n_lin));
        int start = f_.n_lin;
        for (const auto& sc : cones_) {
            const int i1 = start;
            const int i2 = i1 + 1;
            const int i3 = i2 + sc.dim - 1;
            const int i4 = i3 + 1;
            y(i1) += sc.eta_sq * (sc.d1 * x(i1) + sc.u0 * x(i4));
            const double v1x3_u1x4 = sc.v1 * x(i3) + sc.u1 * x(i4);
            y.segment(i2, sc.dim - 1) +=
                sc.eta_sq * (x.segment(i2, sc.dim - 1) + v1x3_u1x4 * sc.q);
            const double qtx2 = sc.q.dot(x.segment(i2, sc.dim - 1));
            y(i3) += sc.eta_sq * (sc.v1 * qtx2 + x(i3));
            y(i4) = sc.eta_sq * (sc.u0 * x(i1) + sc.u1 * qtx2 - x(i4));
            start += sc.dim + 2;
        }
    }

    /// w = u o v (Jordan product); returns the trace-like 1-norm.
    double conic_product(const Vector& u, const Vector& v, Vector& w) const {
        w.head(f_.n_lin) = u.head(f_.n_lin).cwiseProduct(v.head(f_.n_lin));
        double mu = w.head(f_.n_lin).lpNorm<1>();
        int start = f_.n_lin;
        for (const auto& sc : cones_) {
            w(start) = u.segment(start, sc.dim).dot(v.segment(start, sc.dim));
            mu += std::abs(w(start));
            w.segment(start + 1, sc.dim - 1) =
                u(start) * v.segment(start + 1, sc.dim - 1) +
                v(start) * u.segment(start + 1, sc.dim - 1);
            start += sc.dim;
        }
        return mu;
    }

    /// v = u \ w (inverse Jordan product).
    void conic_division(const Vector& u, const Vector& w, Vector& v) const {
        v.head(f_.n_lin) = w.head(f_.n_lin).cwiseQuotient(u.head(f_.n_lin));
        int start = f_.n_lin;
        for (const auto& sc : cones_) {
            const double u0 = u(start), w0 = w(start);
            const double rho = u0 * u0 - u.segment(start + 1, sc.dim - 1).squaredNorm();
            const double zeta =
                u.segment(start + 1, sc.dim - 1).dot(w.segment(start + 1, sc.dim - 1));
            const double factor = (zeta / u0 - w0) / rho;
            v(start) = (u0 * w0 - zeta) / rho;
            v.segment(start + 1, sc.dim - 1) =
                factor * u.segment(start + 1, sc.dim - 1) +
                w.segment(start + 1, sc.dim - 1) / u0;
            start += sc.dim;
        }
    }

    void bring_to_cone(const Vector& r, Vector& out) const {
        double alpha = -0.99;
        for (int i = 0; i < f_.n_lin; ++i)
            if (r(i) <= 0.0 && -r(i) > alpha) alpha = -r(i);
        int start = f_.n_lin;
        for (const auto& sc : cones_) {
            const double cres = r(start) - r.segment(start + 1, sc.dim - 1).norm();
            if (cres <= 0.0 && -cres > alpha) alpha = -cres;
            start += sc.dim;
        }
        alpha += 1.0;
        out = r;
        out.head(f_.n_lin).array() += alpha;
        start = f_.n_lin;
        for (const auto& sc : cones_) {
            out(start) += alpha;
            start += sc.dim;
        }
    }

    // ---- residuals and exit tests ----------------------------------------

    void compute_residuals() {
        rx_ = -Gt_ * z_;
        if (p_ > 0) rx_ -= At_ * y_;
        hresx_ = rx_.norm();
        rx_ -= tau_ * f_.c;

        if (p_ > 0) {
            ry_ = f_.Aeq * x_;
            hresy_ = ry_.norm();
            ry_ -= tau_ * f_.beq;
        } else {
            ry_.resize(0);
            hresy_ = 0.0;
        }

        rz_ = s_ + f_.G * x_;
        hresz_ = rz_.norm();
        rz_ -= tau_ * f_.h;

        cx_ = f_.c.dot(x_);
        by_ = p_ > 0 ? f_.beq.dot(y_) : 0.0;
        hz_ = f_.h.dot(z_);
        rt_ = kap_ + cx_ + by_ + hz_;

        nx_ = x_.norm();
        ny_ = y_.norm();
        nz_ = z_.norm();
        ns_ = s_.norm();
    }

    void update_statistics() {
        gap_ = s_.dot(z_);
        mu_ = (gap_ + kap_ * tau_) / (f_.n_lin + nsoc_ + 1);
        kapovert_ = kap_ / tau_;
        pcost_ = cx_ / tau_;
        dcost_ = -(hz_ + by_) / tau_;
        if (pcost_ < 0.0) relgap_ = gap_ / (-pcost_);
        else if (dcost_ > 0.0) relgap_ = gap_ / dcost_;
        else relgap_ = std::nullopt;

        const double nry = p_ > 0 ? ry_.norm() / std::max(resy0_ + nx_, 1.0) : 0.0;
        const double nrz = rz_.norm() / std::max(resz0_ + nx_ + ns_, 1.0);
        pres_ = std::max(nry, nrz) / tau_;
        dres_ = rx_.norm() / std::max(resx0_ + ny_ + nz_, 1.0) / tau_;

        pinfres_ = std::nullopt;
        dinfres_ = std::nullopt;
        if ((hz_ + by_) / std::max(ny_ + nz_, 1.0) < -st_.reltol)
            pinfres_ = hresx_ / std::max(ny_ + nz_, 1.0);
        if (cx_ / std::max(nx_, 1.0) < -st_.reltol)
            dinfres_ = std::max(hresy_ / std::max(nx_, 1.0), hresz_ / std::max(nx_ + ns_, 1.0));
    }

    bool check_exit(bool reduced) {
        const double feastol = reduced ? st_.feastol_inacc : st_.feastol;
        const double abstol = reduced ? st_.abstol_inacc : st_.abstol;
        const double reltol = reduced ? st_.reltol_inacc : st_.reltol;

        if ((-cx_ > 0.0 || -by_ - hz_ >= -abstol) && pres_ < feastol && dres_ < feastol &&
            (gap_ < abstol || (relgap_ && *relgap_ < reltol))) {
            exit_code_ = SolveStatus::Optimal;
            return true;
        }
        if (dinfres_ && *dinfres_ < feastol && tau_ < kap_) {
            exit_code_ = SolveStatus::Unbounded;
            certificate_ = *dinfres_;
            return true;
        }
        if (pinfres_ && *pinfres_ < feastol && tau_ < kap_) {
            exit_code_ = SolveStatus::Infeasible;
            certificate_ = *pinfres_;
            return true;
        }
        return false;
    }

  public:
    double certificate() const { return certificate_; }

  private:
    // ---- safeguarded best iterate -------------------------------------

    bool is_current_best() const {
        if (!best_valid_) return true;
        return gap_ > 0.0 && best_gap_ > 0.0 && gap_ < best_gap_ && pres_ < best_pres_ &&
               dres_ < best_dres_ && mu_ < best_mu_;
    }

    void save_best() {
        best_valid_ = true;
        bx_ = x_;
        bs_ = s_;
        bz_ = z_;
        btau_ = tau_;
        bkap_ = kap_;
        if (p_ > 0) by_v_ = y_;
        best_gap_ = gap_;
        best_pres_ = pres_;
        best_dres_ = dres_;
        best_mu_ = mu_;
    }

    void restore_best() {
        if (!best_valid_) return;
        x_ = bx_;
        s_ = bs_;
        z_ = bz_;
        tau_ = btau_;
        kap_ = bkap_;
        if (p_ > 0) y_ = by_v_;
        compute_residuals();
        update_statistics();
    }

    // ---- RHS preparation -------------------------------------------------

    void rhs_affine() {
        rhs2_.head(n_) = rx_;
        if (p_ > 0) rhs2_.segment(n_, p_) = -ry_;
        Vector tmp = s_ - rz_;
        expand_into(tmp, rhs2_, n_ + p_);
    }

    void rhs_combined(double sigma) {
        Vector ds1(m_), ds2(m_);
        conic_product(lambda_, lambda_, ds1);
        conic_product(ds_by_W_, W_dz_, ds2);
        const double sigmamu = sigma * mu_;
        ds1.head(f_.n_lin) += ds2.head(f_.n_lin);
        ds1.head(f_.n_lin).array() -= sigmamu;
        int k = f_.n_lin;
        for (const auto& sc : cones_) {
            ds1(k) -= sigmamu;
            ds1.segment(k, sc.dim) += ds2.segment(k, sc.dim);
            k += sc.dim;
        }
        conic_division(lambda_, ds1, ds_by_W_);
        scale(ds_by_W_, ds1);

        const double oms = 1.0 - sigma;
        rhs2_.head(n_ + p_) *= oms;
        Vector tmp = -oms * rz_ + ds1;
        expand_into(tmp, rhs2_, n_ + p_);
    }

    // ---- KKT solve with iterative refinement ------------------------------

    int solve_kkt(const Vector& rhs, Vector& dx, Vector& dy, Vector& dz, bool initialize) {
        Vector sol = ldlt_.solve(rhs);
        const double err_thresh = (1.0 + rhs.lpNorm<Eigen::Infinity>()) * st_.linsysacc;
        double nerr_prev = std::numeric_limits<double>::max();
        Vector ref(dim_);

        const auto bx = rhs.head(n_);
        const auto by = rhs.segment(n_, p_);
        const auto bz = rhs.tail(mt_);

        int k_ref;
        for (k_ref = 0; k_ref <= st_.nitref; ++k_ref) {
            contract_from(sol, n_ + p_, work_dz_);
            const auto dx_c = sol.head(n_);
            const auto dy_c = sol.segment(n_, p_);

            Vector ex = bx - Gt_ * work_dz_;
            if (p_ > 0) ex -= At_ * dy_c;
            ex -= st_.deltastat * dx_c;
            const double nex = ex.lpNorm<Eigen::Infinity>();

            Vector ey(p_);
            double ney = 0.0;
            if (p_ > 0) {
                ey = by - f_.Aeq * dx_c + st_.deltastat * dy_c;
                ney = ey.lpNorm<Eigen::Infinity>();
            }

            Vector gdx = f_.G * dx_c;
            Vector ez(mt_);
            ez.head(f_.n_lin) = bz.head(f_.n_lin) - gdx.head(f_.n_lin) +
                                st_.deltastat * work_dz_.head(f_.n_lin);
            int ez_i = f_.n_lin, dz_i = f_.n_lin;
            for (const auto& sc : cones_) {
                ez.segment(ez_i, sc.dim) =
                    bz.segment(ez_i, sc.dim) - gdx.segment(dz_i, sc.dim);
                ez.segment(ez_i, sc.dim - 1) +=
                    st_.deltastat * work_dz_.segment(dz_i, sc.dim - 1);
                dz_i += sc.dim;
                ez_i += sc.dim;
                ez(ez_i - 1) -= st_.deltastat * work_dz_(dz_i - 1);
                ez(ez_i++) = 0.0;
                ez(ez_i++) = 0.0;
            }
            const Vector dz_exp = sol.tail(mt_);
            if (initialize) ez += dz_exp;
            else scale2add(dz_exp, ez);
            const double nez = ez.lpNorm<Eigen::Infinity>();

            double nerr = std::max(nex, nez);
            if (p_ > 0) nerr = std::max(nerr, ney);

            if (k_ref > 0 && nerr > nerr_prev) {
                sol -= ref;
                --k_ref;
                break;
            }
            if (k_ref == st_.nitref || nerr < err_thresh ||
                (k_ref > 0 && nerr_prev < st_.irerrfact * nerr))
                break;
            nerr_prev = nerr;

            Vector e(dim_);
            e.head(n_) = ex;
            if (p_ > 0) e.segment(n_, p_) = ey;
            e.tail(mt_) = ez;
            ref = ldlt_.solve(e);
            sol += ref;
        }

        dx = sol.head(n_);
        dy = sol.segment(n_, p_);
        contract_from(sol, n_ + p_, dz);
        return k_ref;
    }

    // ---- line search -------------------------------------------------------

    double line_search(const Vector& ds, const Vector& dz, double tau, double dtau, double kap,
                       double dkap) const {
        double alpha;
        if (f_.n_lin > 0) {
            const double rhomin =
                (ds.head(f_.n_lin).cwiseQuotient(lambda_.head(f_.n_lin))).minCoeff();
            const double sigmamin =
                (dz.head(f_.n_lin).cwiseQuotient(lambda_.head(f_.n_lin))).minCoeff();
            constexpr double eps = 1e-13;
            if (-sigmamin > -rhomin) alpha = sigmamin < 0.0 ? 1.0 / (-sigmamin) : 1.0 / eps;
            else alpha = rhomin < 0.0 ? 1.0 / (-rhomin) : 1.0 / eps;
        } else {
            alpha = 10.0;
        }

        const double mtau = -tau / dtau;
        const double mkap = -kap / dkap;
        if (mtau > 0.0 && mtau < alpha) alpha = mtau;
        if (mkap > 0.0 && mkap < alpha) alpha = mkap;

        int start = f_.n_lin;
        for (const auto& sc : cones_) {
            const double lk2 = std::pow(lambda_(start), 2) -
                               lambda_.segment(start + 1, sc.dim - 1).squaredNorm();
            if (lk2 <= 0.0) {
                start += sc.dim;
                continue;
            }
            const double lknorm = std::sqrt(lk2);
            Vector lkbar = lambda_.segment(start, sc.dim) / lknorm;
            const double lkinv = 1.0 / lknorm;

            const double lds = lkbar(0) * ds(start) -
                               lkbar.tail(sc.dim - 1).dot(ds.segment(start + 1, sc.dim - 1));
            const double ldz = lkbar(0) * dz(start) -
                               lkbar.tail(sc.dim - 1).dot(dz.segment(start + 1, sc.dim - 1));

            double factor = (lds + ds(start)) / (lkbar(0) + 1.0);
            Vector rho(sc.dim);
            rho(0) = lkinv * lds;
            rho.tail(sc.dim - 1) =
                lkinv * (ds.segment(start + 1, sc.dim - 1) - factor * lkbar.tail(sc.dim - 1));
            const double rhonorm = rho.tail(sc.dim - 1).norm() - rho(0);

            factor = (ldz + dz(start)) / (lkbar(0) + 1.0);
            Vector sig(sc.dim);
            sig(0) = lkinv * ldz;
            sig.tail(sc.dim - 1) =
                lkinv * (dz.segment(start + 1, sc.dim - 1) - factor * lkbar.tail(sc.dim - 1));
            const double signorm = sig.tail(sc.dim - 1).norm() - sig(0);

            const double conic_step = std::max({0.0, signorm, rhonorm});
            if (conic_step != 0.0) alpha = std::min(1.0 / conic_step, alpha);
            start += sc.dim;
        }
        return std::clamp(alpha, st_.stepmin, st_.stepmax);
    }

    StandardForm f_;
    ConicSettings st_;
    int n_ = 0, p_ = 0, m_ = 0, mt_ = 0, nsoc_ = 0, dim_ = 0;
    std::vector<SoCone> cones_;
    SpMat At_, Gt_, K_;
    Eigen::SimplicialLDLT<SpMat, Eigen::Upper, Eigen::AMDOrdering<int>> ldlt_;
    std::vector<std::pair<int, int>> scaling_pos_;
    std::vector<int> scaling_ptr_;

    Vector xe_, ae_, ge_;  // equilibration scales
    Vector x_, y_, z_, s_, lambda_;
    Vector lp_v_, lp_w_;
    Vector rx_, ry_, rz_;
    Vector rhs1_, rhs2_, W_dz_, ds_by_W_, ds_{}, work_dz_{};
    double tau_ = 1.0, kap_ = 1.0, rt_ = 0.0;
    double hresx_ = 0.0, hresy_ = 0.0, hresz_ = 0.0;
    double resx0_ = 1.0, resy0_ = 1.0, resz0_ = 1.0;
    double cx_ = 0.0, by_ = 0.0, hz_ = 0.0;
    double nx_ = 0.0, ny_ = 0.0, nz_ = 0.0, ns_ = 0.0;
    double gap_ = 0.0, mu_ = 0.0, kapovert_ = 0.0, pcost_ = 0.0, dcost_ = 0.0;
    double pres_ = 0.0, dres_ = 0.0, step_ = 0.0;
    std::optional<double> relgap_, pinfres_, dinfres_;
    SolveStatus exit_code_ = SolveStatus::NumericalError;
    double certificate_ = kInf;
    int iter_ = 0;

    bool best_valid_ = false;
    Vector bx_, bs_, bz_, by_v_;
    double btau_ = 1.0, bkap_ = 1.0;
    double best_gap_ = kInf, best_pres_ = kInf, best_dres_ = kInf, best_mu_ = kInf;
};

}  // namespace ipm

namespace detail {

/// Outcome of reducing a ConicProgram to solver standard form.
struct Reduction {
    ipm::StandardForm form;
    std::vector<int> active;       // active var -> original var
    std::vector<int> to_active;    // original var -> active index or -1
    Vector fixed_values;           // original length, valid where fixed
    std::vector<char> fixed;       // original length
    int n_user_rows = 0;           // original linear row count
    std::vector<int> row_of_cone;  // cone row -> original row index or -1
    std::vector<int> row_of_eq;    // equality row -> original row index
    bool infeasible = false;
    bool trivially_solved = false;
};

/// Bound overrides applied on top of a program without copying it.
using Fixings = std::vector<std::pair<int, double>>;

/**
 * Converts to min-form conic standard form: flips the max objective,
 * substitutes fixed variables, folds singleton rows into bounds, and turns
 * finite bounds into nonnegative-cone rows. SOC heads are never substituted.
 */
inline Reduction reduce(const ConicProgram& prog, const Fixings* fixings = nullptr) {
    prog.check_indices();
    Reduction red;
    const int n = prog.num_vars;
    std::vector<double> lo = prog.lo, hi = prog.hi;
    if (fixings != nullptr) {
        for (const auto& [var, val] : *fixings) {
            lo[var] = val;
            hi[var] = val;
        }
    }
    std::vector<char> is_head(n, 0);
    for (const auto& b : prog.soc_blocks) is_head[b.head] = 1;

    // Singleton-row folding plus activity-based implied-bound tightening.
    // The latter is what lets node fixings collapse whole blocks: a closed
    // facility zeroes its capacity row, which zeroes its flows, which zeroes
    // the lifted copies.
    std::vector<char> row_absorbed(prog.rows.size(), 0);
    for (int pass = 0; pass < 4; ++pass) {
        bool changed = false;
        for (std::size_t r = 0; r < prog.rows.size(); ++r) {
            if (row_absorbed[r]) continue;
            const auto& row = prog.rows[r];
            if (row.terms.size() == 1) {
                const int j = row.terms[0].var;
                const double a = row.terms[0].coef;
                if (a == 0.0) continue;
                const double v = row.rhs / a;
                if (row.sense == RowSense::EQ) {
                    lo[j] = std::max(lo[j], v);
                    hi[j] = std::min(hi[j], v);
                } else if ((row.sense == RowSense::LE) == (a > 0.0)) {
                    hi[j] = std::min(hi[j], v);
                } else {
                    lo[j] = std::max(lo[j], v);
                }
                row_absorbed[r] = 1;
                changed = true;
                continue;
            }
            // Row activity bounds. <= rows propagate their minimum activity,
            // = rows both directions.
            const bool want_min = row.sense != RowSense::GE;
            const bool want_max = row.sense != RowSense::LE;
            double minact = 0.0, maxact = 0.0;
            int min_infs = 0, max_infs = 0;
            for (const auto& t : row.terms) {
                const double l = t.coef > 0.0 ? lo[t.var] : hi[t.var];
                const double h = t.coef > 0.0 ? hi[t.var] : lo[t.var];
                if (want_min) {
                    if (std::isinf(l)) ++min_infs;
                    else minact += t.coef * l;
                }
                if (want_max) {
                    if (std::isinf(h)) ++max_infs;
                    else maxact += t.coef * h;
                }
            }
            const double tiny = 1e-11;
            if (want_min && min_infs == 0) {
                for (const auto& t : row.terms) {
                    const double contrib =
                        t.coef * (t.coef > 0.0 ? lo[t.var] : hi[t.var]);
                    const double slack = row.rhs - (minact - contrib);
                    if (t.coef > 0.0) {
                        const double nb = slack / t.coef;
                        if (nb < hi[t.var] - tiny * (1.0 + std::abs(nb))) {
                            hi[t.var] = nb;
                            changed = true;
                        }
                    } else {
                        const double nb = slack / t.coef;
                        if (nb > lo[t.var] + tiny * (1.0 + std::abs(nb))) {
                            lo[t.var] = nb;
                            changed = true;
                        }
                    }
                }
            }
            if (want_max && max_infs == 0) {
                for (const auto& t : row.terms) {
                    const double contrib =
                        t.coef * (t.coef > 0.0 ? hi[t.var] : lo[t.var]);
                    const double slack = row.rhs - (maxact - contrib);
                    if (t.coef > 0.0) {
                        const double nb = slack / t.coef;
                        if (nb > lo[t.var] + tiny * (1.0 + std::abs(nb))) {
                            lo[t.var] = nb;
                            changed = true;
                        }
                    } else {
                        const double nb = slack / t.coef;
                        if (nb < hi[t.var] - tiny * (1.0 + std::abs(nb))) {
                            hi[t.var] = nb;
                            changed = true;
                        }
                    }
                }
            }
        }
        if (!changed) break;
    }

    red.fixed.assign(n, 0);
    red.fixed_values = Vector::Zero(n);
    red.to_active.assign(n, -1);
    for (int j = 0; j < n; ++j) {
        if (lo[j] > hi[j] + 1e-9) {
            red.infeasible = true;
            return red;
        }
        if (!is_head[j] && hi[j] - lo[j] <= 1e-12 && std::isfinite(lo[j])) {
            red.fixed[j] = 1;
            red.fixed_values(j) = 0.5 * (lo[j] + hi[j]);
        } else {
            red.to_active[j] = static_cast<int>(red.active.size());
            red.active.push_back(j);
        }
    }
    const int na = static_cast<int>(red.active.size());
    red.n_user_rows = static_cast<int>(prog.rows.size());

    // Objective (negated for min form).
    Vector c = Vector::Zero(na);
    for (const auto& t : prog.objective)
        if (!red.fixed[t.var]) c(red.to_active[t.var]) -= t.coef;
    red.form.c = c;

    std::vector<ipm::Triplet> eq_t, g_t;
    std::vector<double> beq, hvec;
    std::vector<int> row_of_cone;

    auto add_linear = [&](const LinearRow& row, int orig_idx) {
        double rhs = row.rhs;
        std::vector<std::pair<int, double>> terms;
        for (const auto& t : row.terms) {
            if (red.fixed[t.var]) rhs -= t.coef * red.fixed_values(t.var);
            else terms.push_back({red.to_active[t.var], t.coef});
        }
        if (terms.empty()) {
            const double tol = 1e-7 * (1.0 + std::abs(row.rhs));
            const bool ok = row.sense == RowSense::LE   ? 0.0 <= rhs + tol
                            : row.sense == RowSense::GE ? 0.0 >= rhs - tol
                                                        : std::abs(rhs) <= tol;
            if (!ok) red.infeasible = true;
            return;
        }
        if (row.sense == RowSense::EQ) {
            const int r = static_cast<int>(beq.size());
            for (auto& [v, cf] : terms) eq_t.emplace_back(r, v, cf);
            beq.push_back(rhs);
            red.row_of_eq.push_back(orig_idx);
        } else {
            const double sgn = row.sense == RowSense::LE ? 1.0 : -1.0;
            const int r = static_cast<int>(hvec.size());
            for (auto& [v, cf] : terms) g_t.emplace_back(r, v, sgn * cf);
            hvec.push_back(sgn * rhs);
            row_of_cone.push_back(orig_idx);
        }
    };

    for (std::size_t r = 0; r < prog.rows.size(); ++r) {
        if (row_absorbed[r]) {
            // Bound content moved into lo/hi; equality duals are not needed
            // downstream, so absorbed rows simply have no cone row.
            continue;
        }
        add_linear(prog.rows[r], static_cast<int>(r));
    }
    if (red.infeasible) return red;

    // Finite bounds of active variables as nonnegative-cone rows.
    for (int a = 0; a < na; ++a) {
        const int j = red.active[a];
        if (std::isfinite(hi[j])) {
            const int r = static_cast<int>(hvec.size());
            g_t.emplace_back(r, a, 1.0);
            hvec.push_back(hi[j]);
            row_of_cone.push_back(-1);
        }
        if (std::isfinite(lo[j])) {
            const int r = static_cast<int>(hvec.size());
            g_t.emplace_back(r, a, -1.0);
            hvec.push_back(-lo[j]);
            row_of_cone.push_back(-1);
        }
    }
    red.form.n_lin = static_cast<int>(hvec.size());

    // SOC blocks: slack block (head value, tail values) in the cone.
    for (const auto& blk : prog.soc_blocks) {
        {
            const int r = static_cast<int>(hvec.size());
            g_t.emplace_back(r, red.to_active[blk.head], -1.0);
            hvec.push_back(0.0);
            row_of_cone.push_back(-1);
        }
        for (const auto& tail : blk.tails) {
            double cst = tail.constant;
            const int r = static_cast<int>(hvec.size());
            for (const auto& t : tail.terms) {
                if (red.fixed[t.var]) cst += t.coef * red.fixed_values(t.var);
                else g_t.emplace_back(r, red.to_active[t.var], -t.coef);
            }
            hvec.push_back(cst);
            row_of_cone.push_back(-1);
        }
        red.form.soc_dims.push_back(static_cast<int>(blk.tails.size()) + 1);
    }

    red.form.Aeq.resize(static_cast<int>(beq.size()), na);
    red.form.Aeq.setFromTriplets(eq_t.begin(), eq_t.end());
    red.form.G.resize(static_cast<int>(hvec.size()), na);
    red.form.G.setFromTriplets(g_t.begin(), g_t.end());
    red.form.beq = Eigen::Map<Vector>(beq.data(), static_cast<int>(beq.size()));
    red.form.h = Eigen::Map<Vector>(hvec.data(), static_cast<int>(hvec.size()));
    red.row_of_cone = std::move(row_of_cone);
    red.trivially_solved = na == 0;
    return red;
}

}  // namespace detail

/**
 * Solves the continuous relaxation of a conic program with the built-in
 * interior-point method. The program must carry no integrality marks.
 * Deterministic: identical inputs and settings produce identical outputs.
 */
inline ConicResult solve_conic(const ConicProgram& prog,
                               const ConicSettings& settings = ConicSettings::from_env(),
                               const detail::Fixings* fixings = nullptr) {
    if (!prog.integer_vars.empty())
        throw usage_error("solve_conic: program still has integer variables; relax() first");

    ConicResult res;
    res.primal = Vector::Zero(prog.num_vars);
    res.row_duals = Vector::Zero(static_cast<int>(prog.rows.size()));

    auto red = detail::reduce(prog, fixings);
    if (red.infeasible) {
        res.status = SolveStatus::Infeasible;
        res.certificate_residual = 0.0;  // a constant row certifies directly
        return res;
    }
    if (red.trivially_solved) {
        for (int j = 0; j < prog.num_vars; ++j) res.primal(j) = red.fixed_values(j);
        res.status = SolveStatus::Optimal;
        res.objective = prog.objective_value(res.primal);
        res.dual_objective = res.objective;
        res.residuals = {0.0, 0.0, 0.0};
        return res;
    }
    if (red.form.G.rows() == 0 && red.form.Aeq.rows() == 0) {
        // Unconstrained active variables: bounded only if the objective
        // vanishes on them.
        for (int j = 0; j < prog.num_vars; ++j)
            res.primal(j) = red.fixed[j] ? red.fixed_values(j) : 0.0;
        if (red.form.c.norm() == 0.0) {
            res.status = SolveStatus::Optimal;
            res.objective = prog.objective_value(res.primal);
            res.dual_objective = res.objective;
            res.residuals = {0.0, 0.0, 0.0};
        } else {
            res.status = SolveStatus::Unbounded;
            res.certificate_residual = 0.0;
        }
        return res;
    }

    ipm::HsdeSolver solver(red.form, settings);
    const SolveStatus status = solver.run();
    res.status = status;
    res.iterations = solver.iterations();
    res.residuals.primal = solver.pres();
    res.residuals.dual = solver.dres();
    res.residuals.gap = solver.relgap();

    if (status == SolveStatus::Optimal || status == SolveStatus::IterLimit) {
        const Vector xa = solver.primal();
        for (int j = 0; j < prog.num_vars; ++j)
            res.primal(j) = red.fixed[j] ? red.fixed_values(j) : xa(red.to_active[j]);
        res.objective = prog.objective_value(res.primal);
        // Min-form dual cost bounds the min objective from below, so its
        // negation bounds the max objective from above.
        res.dual_objective = -solver.dcost() + res.objective + solver.pcost();
        const Vector zd = solver.cone_duals();
        for (int k = 0; k < static_cast<int>(red.row_of_cone.size()); ++k) {
            const int orig = red.row_of_cone[k];
            if (orig >= 0 && k < zd.size()) res.row_duals(orig) = zd(k);
        }
        const Vector yd = solver.eq_duals();
        for (int k = 0; k < static_cast<int>(red.row_of_eq.size()); ++k)
            res.row_duals(red.row_of_eq[k]) = yd(k);
    } else if (status == SolveStatus::Infeasible || status == SolveStatus::Unbounded) {
        res.certificate_residual = solver.certificate();
    }
    return res;
}

/// LP-only entry point; same contract as solve_conic, skips SOC machinery.
inline ConicResult solve_lp_fast(const ConicProgram& prog,
                                 const ConicSettings& settings = ConicSettings::from_env(),
                                 const detail::Fixings* fixings = nullptr) {
    if (!prog.soc_blocks.empty())
        throw usage_error("solve_lp_fast: program has second-order cone blocks");
    return solve_conic(prog, settings, fixings);
}

}  // namespace rfl
