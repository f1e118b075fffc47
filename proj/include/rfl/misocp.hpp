#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <vector>

#include "rfl/closed_form.hpp"
#include "rfl/conic_program.hpp"
#include "rfl/recourse.hpp"
#include "rfl/types.hpp"

namespace rfl {

/// Linearization constant R^{ij} = min{D_i, C_j} bounding the flow x_{ij}.
inline double big_r(const Instance& inst, int i, int j) {
    if (i < 0 || i >= inst.num_sites() || j < 0 || j >= inst.num_facilities())
        throw usage_error("big_r: index out of range");
    return std::min(inst.sites[i].demand, inst.facilities[j].capacity);
}

struct BuildOptions {
    bool prune_pairs = true;  // elide pairs with vanishing utility vector
};

/**
 * Index layout of the assembled program. Flow variables exist for every
 * (site, facility) pair; the lifted blocks (v, split copies, utility scalars,
 * branch binary and norm epigraph heads) exist only for effective pairs.
 */
struct VariableMap {
    int n_sites = 0, n_facilities = 0;
    std::vector<int> y;                    // |F|
    Matrix x_index;                        // |S| x |F|, -1 when absent
    struct PairBlock {
        int i = 0, j = 0;
        int v = -1, v1 = -1, v2 = -1;      // starts of |F|-long ranges
        int U = -1, U1 = -1, U2 = -1, s = -1, t1 = -1, t2 = -1;
        double r = 0.0;
    };
    std::vector<PairBlock> pairs;
    std::map<std::pair<int, int>, int> pair_index;

    const PairBlock* block(int i, int j) const {
        auto it = pair_index.find({i, j});
        return it == pair_index.end() ? nullptr : &pairs[it->second];
    }
};

/**
 * Assembles the mixed 0-1 second-order-cone reformulation: budget, capacity
 * and demand rows, the exact product linearization v = x y via R-bounds, the
 * two-branch split U = U1 + U2 with the branch binary s, and one SOC epigraph
 * per branch. Pairs with R = 0, without ambiguity data, or (under pruning)
 * with an all-zero utility vector are elided: all their lifted variables are
 * dropped and their flow keeps only the box and the capacity/demand rows.
 */
inline std::pair<ConicProgram, VariableMap> build_misocp(const Instance& inst,
                                                         const BuildOptions& opts = {}) {
    inst.validate();
    const int ns = inst.num_sites();
    const int nf = inst.num_facilities();
    ConicProgram prog;
    VariableMap map;
    map.n_sites = ns;
    map.n_facilities = nf;

    for (int j = 0; j < nf; ++j) {
        map.y.push_back(prog.add_var(0.0, 1.0));
        prog.integer_vars.insert(map.y.back());
    }
    map.x_index = Matrix::Constant(ns, nf, -1.0);
    for (int i = 0; i < ns; ++i)
        for (int j = 0; j < nf; ++j)
            map.x_index(i, j) = prog.add_var(0.0, big_r(inst, i, j));

    auto effective = [&](int i, int j, const PairAmbiguity* pa) {
        if (pa == nullptr) return false;
        if (big_r(inst, i, j) <= 0.0) return false;
        if (opts.prune_pairs && pa->beta_hat.lpNorm<Eigen::Infinity>() == 0.0) return false;
        return true;
    };

    for (int i = 0; i < ns; ++i) {
        for (int j = 0; j < nf; ++j) {
            const PairAmbiguity* pa = inst.pair(i, j);
            if (!effective(i, j, pa)) continue;
            VariableMap::PairBlock blk;
            blk.i = i;
            blk.j = j;
            blk.r = big_r(inst, i, j);
            double beta_pos = 0.0;
            for (int k = 0; k < nf; ++k) beta_pos += std::max(0.0, pa->beta_hat(k));
            const double u_hi = std::max(0.0, beta_pos * blk.r);
            blk.v = prog.num_vars;
            for (int k = 0; k < nf; ++k) prog.add_var(0.0, blk.r);
            blk.v1 = prog.num_vars;
            for (int k = 0; k < nf; ++k) prog.add_var(0.0, blk.r);
            blk.v2 = prog.num_vars;
            for (int k = 0; k < nf; ++k) prog.add_var(0.0, blk.r);
            blk.U = prog.add_var(0.0, u_hi);
            blk.U1 = prog.add_var(0.0, u_hi);
            blk.U2 = prog.add_var(0.0, u_hi);
            blk.s = prog.add_var(0.0, 1.0);
            prog.integer_vars.insert(blk.s);
            blk.t1 = prog.add_var(0.0, pa->ellipsoid_radius > 0.0 ? kInf : 0.0);
            blk.t2 = prog.add_var(0.0, pa->gamma_hi > 0.0 ? kInf : 0.0);
            map.pair_index[{i, j}] = static_cast<int>(map.pairs.size());
            map.pairs.push_back(blk);
        }
    }

    // Budget row.
    {
        LinearRow row;
        for (int j = 0; j < nf; ++j) row.terms.push_back({map.y[j], inst.facilities[j].open_cost});
        row.sense = RowSense::LE;
        row.rhs = inst.budget;
        prog.rows.push_back(row);
    }
    // Capacity rows: sum_i x_ij <= C_j y_j.
    for (int j = 0; j < nf; ++j) {
        LinearRow row;
        for (int i = 0; i < ns; ++i)
            row.terms.push_back({static_cast<int>(map.x_index(i, j)), 1.0});
        row.terms.push_back({map.y[j], -inst.facilities[j].capacity});
        row.sense = RowSense::LE;
        row.rhs = 0.0;
        prog.rows.push_back(row);
    }
    // Demand rows: sum_j x_ij <= D_i.
    for (int i = 0; i < ns; ++i) {
        LinearRow row;
        for (int j = 0; j < nf; ++j)
            row.terms.push_back({static_cast<int>(map.x_index(i, j)), 1.0});
        row.sense = RowSense::LE;
        row.rhs = inst.sites[i].demand;
        prog.rows.push_back(row);
    }
    // Disaggregated variable upper bounds x_ij <= R_ij y_j. Implied at
    // binary y by the capacity and demand rows, they remove the fractional
    // capacity-spreading slack of the aggregate formulation.
    for (int i = 0; i < ns; ++i) {
        for (int j = 0; j < nf; ++j) {
            const double r = big_r(inst, i, j);
            if (r <= 0.0) continue;
            prog.rows.push_back(
                {{{static_cast<int>(map.x_index(i, j)), 1.0}, {map.y[j], -r}}, RowSense::LE, 0.0});
        }
    }

    for (const auto& blk : map.pairs) {
        const PairAmbiguity& pa = *inst.pair(blk.i, blk.j);
        const int x = static_cast<int>(map.x_index(blk.i, blk.j));
        const double r = blk.r;
        for (int k = 0; k < nf; ++k) {
            prog.rows.push_back({{{blk.v + k, 1.0}, {map.y[k], -r}}, RowSense::LE, 0.0});
            prog.rows.push_back({{{blk.v + k, 1.0}, {x, -1.0}}, RowSense::LE, 0.0});
            // v_k >= x - R (1 - y_k)
            prog.rows.push_back({{{x, 1.0}, {blk.v + k, -1.0}, {map.y[k], r}}, RowSense::LE, r});
        }
        prog.rows.push_back(
            {{{blk.U, 1.0}, {blk.U1, -1.0}, {blk.U2, -1.0}}, RowSense::EQ, 0.0});
        for (int k = 0; k < nf; ++k)
            prog.rows.push_back(
                {{{blk.v + k, 1.0}, {blk.v1 + k, -1.0}, {blk.v2 + k, -1.0}}, RowSense::EQ, 0.0});
        for (int k = 0; k < nf; ++k) {
            prog.rows.push_back({{{blk.v1 + k, 1.0}, {blk.s, -r}}, RowSense::LE, 0.0});
            prog.rows.push_back({{{blk.v2 + k, 1.0}, {blk.s, r}}, RowSense::LE, r});
        }
        // Branch epigraphs: U1 <= beta' v1 - b t1, U2 <= beta' v2 - sqrt(g2) t2.
        {
            LinearRow row;
            row.terms.push_back({blk.U1, 1.0});
            for (int k = 0; k < nf; ++k)
                if (pa.beta_hat(k) != 0.0) row.terms.push_back({blk.v1 + k, -pa.beta_hat(k)});
            if (pa.ellipsoid_radius > 0.0) row.terms.push_back({blk.t1, pa.ellipsoid_radius});
            row.sense = RowSense::LE;
            row.rhs = 0.0;
            prog.rows.push_back(row);
        }
        {
            LinearRow row;
            row.terms.push_back({blk.U2, 1.0});
            for (int k = 0; k < nf; ++k)
                if (pa.beta_hat(k) != 0.0) row.terms.push_back({blk.v2 + k, -pa.beta_hat(k)});
            const double root_gamma = std::sqrt(pa.gamma_hi);
            if (root_gamma > 0.0) row.terms.push_back({blk.t2, root_gamma});
            row.sense = RowSense::LE;
            row.rhs = 0.0;
            prog.rows.push_back(row);
        }
        if (pa.ellipsoid_radius > 0.0) {
            SocBlock soc;
            soc.head = blk.t1;
            for (int k = 0; k < nf; ++k) {
                SocBlock::TailRow tail;
                for (int c = 0; c < nf; ++c)
                    if (pa.shape_inv_sqrt(k, c) != 0.0)
                        tail.terms.push_back({blk.v1 + c, pa.shape_inv_sqrt(k, c)});
                soc.tails.push_back(std::move(tail));
            }
            prog.soc_blocks.push_back(std::move(soc));
        }
        if (pa.gamma_hi > 0.0) {
            SocBlock soc;
            soc.head = blk.t2;
            for (int k = 0; k < nf; ++k) {
                SocBlock::TailRow tail;
                for (int c = 0; c < nf; ++c)
                    if (pa.cov_sqrt(k, c) != 0.0)
                        tail.terms.push_back({blk.v2 + c, pa.cov_sqrt(k, c)});
                soc.tails.push_back(std::move(tail));
            }
            prog.soc_blocks.push_back(std::move(soc));
        }
    }

    for (int j = 0; j < nf; ++j)
        if (inst.fixed_gains(j) != 0.0) prog.objective.push_back({map.y[j], inst.fixed_gains(j)});
    for (const auto& blk : map.pairs) prog.objective.push_back({blk.U, 1.0});

    prog.check_indices();
    return {std::move(prog), std::move(map)};
}

/// A valid linear inequality U <= alpha' v + offset for one pair's epigraph
/// hull, with its generating family and source point kept for auditing.
enum class CutFamily { GradF, GradG, Project };

inline const char* to_string(CutFamily f) {
    switch (f) {
        case CutFamily::GradF: return "G1";
        case CutFamily::GradG: return "G2";
        case CutFamily::Project: return "P";
    }
    return "?";
}

struct TangentCut {
    int site = 0, facility = 0;
    Vector alpha;
    double offset = 0.0;
    CutFamily family = CutFamily::GradF;
    double source_u = 0.0;
    Vector source_v;
};

/**
 * Appends the rows U <= alpha' v + offset onto each cut's pair block.
 * Duplicates (same pair and alpha/offset within 1e-9) are dropped, as are
 * cuts referencing elided pairs. Returns the strengthened program and the
 * number of rows actually added.
 */
inline std::pair<ConicProgram, int> attach_cuts(const ConicProgram& prog, const VariableMap& map,
                                                const std::vector<TangentCut>& cuts) {
    ConicProgram out = prog;
    int added = 0;
    std::vector<const TangentCut*> kept;
    for (const auto& cut : cuts) {
        const auto* blk = map.block(cut.site, cut.facility);
        if (blk == nullptr) continue;  // elided pair, nothing to strengthen
        bool dup = false;
        for (const auto* prev : kept) {
            if (prev->site != cut.site || prev->facility != cut.facility) continue;
            if ((prev->alpha - cut.alpha).lpNorm<Eigen::Infinity>() <= 1e-9 &&
                std::abs(prev->offset - cut.offset) <= 1e-9) {
                dup = true;
                break;
            }
        }
        if (dup) continue;
        kept.push_back(&cut);
        LinearRow row;
        row.terms.push_back({blk->U, 1.0});
        for (int k = 0; k < map.n_facilities; ++k)
            if (cut.alpha(k) != 0.0) row.terms.push_back({blk->v + k, -cut.alpha(k)});
        row.sense = RowSense::LE;
        row.rhs = cut.offset;
        out.rows.push_back(std::move(row));
        ++added;
    }
    return {std::move(out), added};
}

struct Extraction {
    bool integral = false;
    bool objective_mismatch = false;
    double program_objective = 0.0;
    double recomputed_objective = 0.0;
    Solution solution;
};

/**
 * Reads a raw primal point back into a Solution. Binaries are rounded only
 * when within 1e-6 of integrality; otherwise the point is labeled fractional
 * and no Solution is produced. The objective is re-evaluated through the
 * closed forms; a relative mismatch above 1e-5 is flagged.
 */
inline Extraction extract_solution(const ConicProgram& prog, const VariableMap& map,
                                   const Instance& inst, const Vector& raw_primal) {
    Extraction out;
    out.program_objective = prog.objective_value(raw_primal);
    Vector y(map.n_facilities);
    for (int j = 0; j < map.n_facilities; ++j) {
        const double v = raw_primal(map.y[j]);
        if (std::abs(v - std::round(v)) > 1e-6) return out;
        y(j) = std::round(v);
    }
    for (const auto& blk : map.pairs) {
        const double s = raw_primal(blk.s);
        if (std::abs(s - std::round(s)) > 1e-6) return out;
    }
    out.integral = true;
    out.solution.y = y;
    // Reconstruct the flows carried by the program and re-price them through
    // the closed forms.
    out.solution.x = Matrix::Zero(map.n_sites, map.n_facilities);
    double value = inst.fixed_gains.dot(y);
    const LocationDecision dec{y};
    for (int i = 0; i < map.n_sites; ++i) {
        for (int j = 0; j < map.n_facilities; ++j) {
            const double x = std::max(0.0, raw_primal(static_cast<int>(map.x_index(i, j))));
            out.solution.x(i, j) = x;
            const PairAmbiguity* pa = inst.pair(i, j);
            if (pa == nullptr) continue;
            value += x * std::max(0.0, worst_case_utility(*pa, dec));
        }
    }
    out.recomputed_objective = value;
    out.solution.objective = value;
    out.solution.bound = value;
    out.solution.status = SolveStatus::Optimal;
    const double denom = std::max(1.0, std::abs(out.recomputed_objective));
    out.objective_mismatch =
        std::abs(out.program_objective - out.recomputed_objective) > 1e-5 * denom;
    return out;
}

}  // namespace rfl
