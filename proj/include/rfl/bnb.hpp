#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <queue>
#include <set>
#include <thread>
#include <vector>

#include "rfl/conic_solver.hpp"
#include "rfl/hull_cuts.hpp"
#include "rfl/misocp.hpp"
#include "rfl/recourse.hpp"

namespace rfl {

enum class RelaxEngine { Auto, Conic, LpOa };

enum class CutMode { NoCuts, WithCuts };

enum class BranchRule { Pseudocost, MostFractional };

struct BnbOptions {
    double gap = 1e-4;  // relative optimality gap for termination
    double time_limit_s = kInf;
    int root_cut_rounds = 5;
    int cuts_every_k_nodes = 0;  // in-tree rounds, off by default
    RelaxEngine engine = RelaxEngine::Auto;
    BranchRule branch_rule = BranchRule::Pseudocost;
    int threads = 1;
    int log_every = 0;  // progress lines every k processed nodes, 0 = quiet
    int heuristic_period = 50;
    int oa_rounds_root = 40;
    int oa_rounds_node = 6;
    ConicSettings conic = ConicSettings::from_env();
    std::ostream* log = &std::cerr;
};

struct SolveStats {
    long nodes = 0;
    int developed_cuts = 0;
    int root_rounds = 0;
    double wall_time_s = 0.0;
    double gap = kInf;
    double incumbent = -kInf;
    double bound = kInf;
};

namespace detail {

inline RelaxEngine pick_engine(const BnbOptions& opts, int n_facilities) {
    if (opts.engine != RelaxEngine::Auto) return opts.engine;
    return n_facilities <= 8 ? RelaxEngine::Conic : RelaxEngine::LpOa;
}

struct NodeRelax {
    SolveStatus status = SolveStatus::NumericalError;
    double bound = kInf;  // certified upper bound for the subtree
    Vector primal;
};

/**
 * Relaxation engine shared by all nodes of one solve. Conic mode hands the
 * relaxed program (with node bound fixings) to the interior-point solver.
 * LP mode keeps the linear skeleton of the same program and refines the two
 * branch epigraphs with gradient tangents generated on demand; the tangent
 * pool is global since every tangent of a concave homogeneous branch
 * function is valid at every node. Either way the reported bound stays a
 * certified upper bound, whatever the refinement depth.
 */
class Relaxer {
  public:
    Relaxer(const Instance& inst, const VariableMap& map, const ConicProgram& prog,
            const BnbOptions& opts)
        : inst_(inst), map_(map), opts_(opts),
          engine_(pick_engine(opts, inst.num_facilities())) {
        set_program(prog);
    }

    RelaxEngine engine() const { return engine_; }

    /// Replaces the base program (used after attaching root cuts).
    void set_program(const ConicProgram& prog) {
        base_ = relax(prog);
        if (engine_ == RelaxEngine::LpOa) {
            skeleton_ = base_;
            skeleton_.soc_blocks.clear();
            rebuild_assembled();
        }
    }

    /**
     * Solves one node relaxation. `prune_below` is the incumbent-derived
     * threshold: once the certified bound falls under it the node dies
     * anyway, so outer-approximation refinement stops early. Deep nodes run
     * at a looser tolerance than the root.
     */
    NodeRelax solve(const Fixings& fixings, bool at_root, double prune_below = -kInf) {
        const ConicSettings st = at_root ? opts_.conic : node_settings();
        if (engine_ == RelaxEngine::Conic) {
            auto res = rfl::solve_conic(base_, st, &fixings);
            return interpret(res, st);
        }
        const int rounds = at_root ? opts_.oa_rounds_root : opts_.oa_rounds_node;
        NodeRelax out;
        for (int round = 0;; ++round) {
            ConicProgram lp;
            {
                std::lock_guard<std::mutex> lock(pool_mutex_);
                lp = assembled_;
            }
            auto res = solve_lp_fast(lp, st, &fixings);
            out = interpret(res, st);
            if (out.status != SolveStatus::Optimal || round >= rounds) return out;
            if (out.bound <= prune_below) return out;
            if (add_violated_tangents(res.primal) == 0) return out;
        }
    }

  private:
    ConicSettings node_settings() const {
        ConicSettings st = opts_.conic;
        st.feastol = std::max(st.feastol, 1e-6);
        st.abstol = std::max(st.abstol, 1e-6);
        st.reltol = std::max(st.reltol, 1e-6);
        return st;
    }

    NodeRelax interpret(const ConicResult& res, const ConicSettings& st) const {
        NodeRelax out;
        out.status = res.status;
        out.primal = res.primal;
        switch (res.status) {
            case SolveStatus::Optimal: {
                const double scale = 1.0 + std::abs(res.dual_objective);
                const double slack =
                    (10.0 * st.feastol + std::max(res.residuals.gap, 0.0)) * scale;
                out.bound = res.dual_objective + slack;
                break;
            }
            case SolveStatus::IterLimit: {
                const double scale = 1.0 + std::abs(res.dual_objective);
                const double slack = 10.0 *
                                     (res.residuals.primal + res.residuals.dual +
                                      std::max(res.residuals.gap, 0.0) + st.feastol) *
                                     scale;
                out.bound = res.dual_objective + slack;
                break;
            }
            case SolveStatus::Infeasible:
                out.bound = -kInf;
                break;
            default:
                out.bound = kInf;  // no usable certificate, keep the node open
                break;
        }
        return out;
    }

    /// Adds branch tangents at the current point wherever the LP epigraph
    /// value exceeds the true branch function. Returns how many were added.
    int add_violated_tangents(const Vector& primal) {
        int added = 0;
        std::lock_guard<std::mutex> lock(pool_mutex_);
        const int nf = map_.n_facilities;
        for (std::size_t p = 0; p < map_.pairs.size(); ++p) {
            const auto& blk = map_.pairs[p];
            const PairAmbiguity& pa = *inst_.pair(blk.i, blk.j);
            const double tol = 1e-7 * (1.0 + blk.r);
            {
                const Vector v1 = primal.segment(blk.v1, nf);
                const double u1 = primal(blk.U1);
                if (u1 - f_value(pa, v1) > tol && v1.lpNorm<Eigen::Infinity>() > 1e-12 &&
                    pa.ellipsoid_radius > 0.0) {
                    added += add_tangent(p, true, gcut_f(pa, v1).alpha);
                }
            }
            {
                const Vector v2 = primal.segment(blk.v2, nf);
                const double u2 = primal(blk.U2);
                if (u2 - g_value(pa, v2) > tol && v2.lpNorm<Eigen::Infinity>() > 1e-12 &&
                    pa.gamma_hi > 0.0) {
                    added += add_tangent(p, false, gcut_g(pa, v2).alpha);
                }
            }
        }
        return added;
    }

    int add_tangent(std::size_t pair_idx, bool f_side, const Vector& alpha) {
        auto& pool = f_side ? pool_f_ : pool_g_;
        if (pool.size() <= pair_idx) pool.resize(map_.pairs.size());
        for (const auto& prev : pool[pair_idx])
            if ((prev - alpha).lpNorm<Eigen::Infinity>() <= 1e-9) return 0;
        if (pool[pair_idx].size() >= 60) return 0;
        pool[pair_idx].push_back(alpha);

        const auto& blk = map_.pairs[pair_idx];
        LinearRow row;
        row.terms.push_back({f_side ? blk.U1 : blk.U2, 1.0});
        const int base = f_side ? blk.v1 : blk.v2;
        for (int k = 0; k < map_.n_facilities; ++k)
            if (alpha(k) != 0.0) row.terms.push_back({base + k, -alpha(k)});
        row.sense = RowSense::LE;
        row.rhs = 0.0;
        assembled_.rows.push_back(std::move(row));
        return 1;
    }

    void rebuild_assembled() {
        assembled_ = skeleton_;
        for (std::size_t p = 0; p < pool_f_.size(); ++p)
            for (const auto& alpha : pool_f_[p]) append_pool_row(p, true, alpha);
        for (std::size_t p = 0; p < pool_g_.size(); ++p)
            for (const auto& alpha : pool_g_[p]) append_pool_row(p, false, alpha);
    }

    void append_pool_row(std::size_t pair_idx, bool f_side, const Vector& alpha) {
        const auto& blk = map_.pairs[pair_idx];
        LinearRow row;
        row.terms.push_back({f_side ? blk.U1 : blk.U2, 1.0});
        const int base = f_side ? blk.v1 : blk.v2;
        for (int k = 0; k < map_.n_facilities; ++k)
            if (alpha(k) != 0.0) row.terms.push_back({base + k, -alpha(k)});
        row.sense = RowSense::LE;
        row.rhs = 0.0;
        assembled_.rows.push_back(std::move(row));
    }

    const Instance& inst_;
    const VariableMap& map_;
    BnbOptions opts_;
    RelaxEngine engine_;
    ConicProgram base_, skeleton_, assembled_;
    std::vector<std::vector<Vector>> pool_f_, pool_g_;
    std::mutex pool_mutex_;
};

}  // namespace detail

/**
 * Root convexification loop: solve the continuous relaxation, generate
 * gradient and lift-and-project cuts at each pair's current v-block, keep
 * the validated ones that actually separate the relaxation point, attach,
 * and repeat until the bound stops improving or the round limit is hit.
 */
inline std::pair<ConicProgram, std::vector<TangentCut>> root_cut_loop(
    const ConicProgram& prog, const VariableMap& map, const Instance& inst, int max_rounds,
    const BnbOptions& opts = {}, int* rounds_used = nullptr,
    detail::Relaxer* shared_relaxer = nullptr) {
    ConicProgram current = prog;
    std::vector<TangentCut> all_cuts;
    if (rounds_used != nullptr) *rounds_used = 0;
    if (max_rounds <= 0) return {std::move(current), std::move(all_cuts)};

    std::optional<detail::Relaxer> own;
    if (shared_relaxer == nullptr) own.emplace(inst, map, current, opts);
    detail::Relaxer& relaxer = shared_relaxer != nullptr ? *shared_relaxer : *own;
    detail::Fixings none;
    auto root = relaxer.solve(none, true);
    if (root.status == SolveStatus::Infeasible)
        return {std::move(current), std::move(all_cuts)};
    if (root.status != SolveStatus::Optimal && root.status != SolveStatus::IterLimit)
        throw solver_error("root relaxation failed: " + std::string(to_string(root.status)));
    double bound_prev = root.bound;

    ConicSettings cut_settings = opts.conic;
    for (int round = 0; round < max_rounds; ++round) {
        std::vector<TangentCut> fresh;
        for (const auto& blk : map.pairs) {
            const Vector v0 = root.primal.segment(blk.v, map.n_facilities);
            if (v0.lpNorm<1>() < 1e-7) continue;
            const double u_relax = root.primal(blk.U);
            const PairAmbiguity& pa = *inst.pair(blk.i, blk.j);
            // Separation below the relaxation solver's own accuracy is noise.
            const double viol_tol = 1e-6 * (1.0 + std::abs(u_relax));

            auto consider = [&](const TangentCut& cut) {
                if (u_relax <= cut.alpha.dot(v0) + cut.offset + viol_tol) return;  // not separating
                for (const auto& prev : all_cuts)
                    if (prev.site == cut.site && prev.facility == cut.facility &&
                        (prev.alpha - cut.alpha).lpNorm<Eigen::Infinity>() <= 1e-9 &&
                        std::abs(prev.offset - cut.offset) <= 1e-9)
                        return;
                for (const auto& prev : fresh)
                    if (prev.site == cut.site && prev.facility == cut.facility &&
                        (prev.alpha - cut.alpha).lpNorm<Eigen::Infinity>() <= 1e-9 &&
                        std::abs(prev.offset - cut.offset) <= 1e-9)
                        return;
                if (!validate_cut(pa, cut, 1e-7, cut_settings)) return;
                fresh.push_back(cut);
            };

            consider(gcut_f(pa, v0, blk.i, blk.j));
            consider(gcut_g(pa, v0, blk.i, blk.j));
            if (auto pc = pcut(pa, v0, blk.i, blk.j, cut_settings)) consider(*pc);
        }
        if (fresh.empty()) break;
        auto [strengthened, added] = attach_cuts(current, map, fresh);
        if (added == 0) break;
        current = std::move(strengthened);
        for (auto& c : fresh) all_cuts.push_back(std::move(c));
        if (rounds_used != nullptr) *rounds_used = round + 1;

        relaxer.set_program(current);
        root = relaxer.solve(none, true);
        if (root.status != SolveStatus::Optimal && root.status != SolveStatus::IterLimit) break;
        const double improvement = bound_prev - root.bound;
        if (improvement < 1e-6 * (1.0 + std::abs(bound_prev))) break;
        bound_prev = root.bound;
    }
    return {std::move(current), std::move(all_cuts)};
}

namespace detail {

struct Node {
    Fixings fixings;
    double bound = kInf;
    int depth = 0;
    long id = 0;
    int branch_var = -1;   // variable this node was split from
    int branch_dir = -1;   // 1 = up child, 0 = down child
};

/// Per-variable averages of the bound decrease observed after branching,
/// the usual pseudocost bookkeeping.
struct Pseudocosts {
    std::vector<double> up_sum, down_sum;
    std::vector<int> up_n, down_n;

    void resize(int n) {
        up_sum.assign(n, 0.0);
        down_sum.assign(n, 0.0);
        up_n.assign(n, 0);
        down_n.assign(n, 0);
    }
    void record(int var, int dir, double drop) {
        if (var < 0 || var >= static_cast<int>(up_sum.size())) return;
        drop = std::max(0.0, drop);
        if (dir == 1) {
            up_sum[var] += drop;
            ++up_n[var];
        } else {
            down_sum[var] += drop;
            ++down_n[var];
        }
    }
    double estimate(int var, int dir, double fallback) const {
        if (dir == 1) return up_n[var] > 0 ? up_sum[var] / up_n[var] : fallback;
        return down_n[var] > 0 ? down_sum[var] / down_n[var] : fallback;
    }
    bool sampled(int var) const { return up_n[var] + down_n[var] > 0; }
};

struct NodeOrder {
    bool operator()(const Node& a, const Node& b) const {
        if (a.bound != b.bound) return a.bound < b.bound;  // best bound first
        return a.id > b.id;                                // then oldest (up child first)
    }
};

}  // namespace detail

/**
 * Best-bound branch and bound on the location and branch binaries.
 * Branching picks the most fractional free y (ties to the lowest index,
 * up-branch explored first); s variables are branched only once every y is
 * integral. Nodes whose y is fully fixed are evaluated exactly through the
 * closed-form recourse, which also supplies incumbents whenever a node
 * relaxation lands on integral y. A greedy rounding heuristic runs at the
 * root and every heuristic_period nodes.
 */
inline std::pair<Solution, SolveStats> branch_and_bound(const ConicProgram& prog,
                                                        const VariableMap& map,
                                                        const Instance& inst,
                                                        const BnbOptions& opts = {},
                                                        detail::Relaxer* shared_relaxer = nullptr) {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - t0).count(); };

    SolveStats stats;
    std::optional<detail::Relaxer> own;
    if (shared_relaxer == nullptr) own.emplace(inst, map, prog, opts);
    detail::Relaxer& relaxer = shared_relaxer != nullptr ? *shared_relaxer : *own;

    std::mutex mtx;
    std::priority_queue<detail::Node, std::vector<detail::Node>, detail::NodeOrder> open;
    double incumbent = -kInf;
    Vector best_y;
    bool have_incumbent = false;
    long next_id = 0;
    long processed = 0;
    int busy_workers = 0;
    bool infeasible_root = false;
    bool timed_out = false;
    std::condition_variable cv;
    std::exception_ptr worker_error;
    detail::Pseudocosts pseudo;
    pseudo.resize(prog.num_vars);

    const int nf = inst.num_facilities();
    auto gap_abs = [&](double inc) { return opts.gap * std::max(1.0, std::abs(inc)); };

    // Exact evaluation of a rounded decision; updates the incumbent.
    auto try_incumbent = [&](const Vector& y_rounded) -> double {
        if (!inst.budget_feasible(y_rounded, 1e-6)) return -kInf;
        Vector y = y_rounded;
        for (int j = 0; j < nf; ++j) y(j) = std::round(y(j));
        const double val = total_objective(inst, LocationDecision{y});
        std::lock_guard<std::mutex> lock(mtx);
        if (val > incumbent) {
            incumbent = val;
            best_y = y;
            have_incumbent = true;
        }
        return val;
    };

    auto greedy_heuristic = [&](const Vector& y_frac) {
        std::vector<int> order(nf);
        for (int j = 0; j < nf; ++j) order[j] = j;
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return y_frac(a) > y_frac(b); });
        Vector y = Vector::Zero(nf);
        double cost = 0.0;
        for (int j : order) {
            const double c = inst.facilities[j].open_cost;
            if (cost + c <= inst.budget + 1e-9 && y_frac(j) > 1e-9) {
                y(j) = 1.0;
                cost += c;
            }
        }
        try_incumbent(y);
    };

    bool done = false;

    auto worker = [&]() {
        try {
            for (;;) {
                detail::Node node;
                {
                    std::unique_lock<std::mutex> lock(mtx);
                    cv.wait(lock, [&] {
                        return done || !open.empty() || busy_workers == 0;
                    });
                    if (done) return;
                    if (open.empty()) {
                        if (busy_workers == 0) return;
                        continue;
                    }
                    if (have_incumbent && open.top().bound <= incumbent + gap_abs(incumbent)) {
                        // Everything still open is within tolerance.
                        done = true;
                        cv.notify_all();
                        return;
                    }
                    node = open.top();
                    open.pop();
                    ++busy_workers;
                }

                if (elapsed() > opts.time_limit_s) {
                    std::lock_guard<std::mutex> lock(mtx);
                    timed_out = true;
                    done = true;
                    // Put the node back so the final bound stays valid.
                    open.push(node);
                    --busy_workers;
                    cv.notify_all();
                    return;
                }

                double prune_below = -kInf;
                {
                    std::lock_guard<std::mutex> lock(mtx);
                    if (have_incumbent) prune_below = incumbent + gap_abs(incumbent);
                }
                auto relaxed = relaxer.solve(node.fixings, node.depth == 0, prune_below);
                double node_bound = std::min(relaxed.bound, node.bound);

                long my_count;
                {
                    std::lock_guard<std::mutex> lock(mtx);
                    ++stats.nodes;
                    my_count = ++processed;
                    if (node.branch_var >= 0 && std::isfinite(relaxed.bound) &&
                        std::isfinite(node.bound))
                        pseudo.record(node.branch_var, node.branch_dir,
                                      node.bound - relaxed.bound);
                }

                if (relaxed.status == SolveStatus::Infeasible) {
                    std::lock_guard<std::mutex> lock(mtx);
                    if (node.depth == 0) infeasible_root = true;
                    --busy_workers;
                    cv.notify_all();
                    continue;
                }
                if (relaxed.status != SolveStatus::Optimal &&
                    relaxed.status != SolveStatus::IterLimit) {
                    if (node.depth == 0)
                        throw solver_error("root relaxation failed: " +
                                           std::string(to_string(relaxed.status)));
                    // No certificate at a deep node; keep the parent bound
                    // and fall back to rounding whatever point we have.
                    relaxed.primal = Vector::Zero(prog.num_vars);
                }

                const bool prune = [&] {
                    std::lock_guard<std::mutex> lock(mtx);
                    return have_incumbent && node_bound <= incumbent + gap_abs(incumbent);
                }();

                bool close_node = prune;
                int branch_var = -1;

                if (!close_node) {
                    // Branching candidates among free binaries.
                    std::set<int> fixed;
                    for (const auto& [v, val] : node.fixings) fixed.insert(v);

                    // Utility mass routed through each facility; prior for
                    // pseudocosts that have not been sampled yet.
                    std::vector<double> mass(nf, 0.0);
                    for (const auto& blk : map.pairs)
                        mass[blk.j] += std::max(0.0, relaxed.primal(blk.U));

                    Vector yv(nf);
                    bool y_integral = true;
                    double best_score = -kInf;
                    {
                        std::lock_guard<std::mutex> lock(mtx);
                        for (int j = 0; j < nf; ++j) {
                            yv(j) = relaxed.primal(map.y[j]);
                            const double frac = std::abs(yv(j) - std::round(yv(j)));
                            if (frac <= 1e-6) continue;
                            y_integral = false;
                            if (fixed.count(map.y[j])) continue;
                            double score;
                            if (opts.branch_rule == BranchRule::MostFractional) {
                                score = 0.5 - std::abs(yv(j) - 0.5);
                            } else {
                                const double prior =
                                    0.5 * std::min(yv(j), 1.0 - yv(j)) * (1e-6 + mass[j]);
                                const double up =
                                    pseudo.estimate(map.y[j], 1, prior) * (1.0 - yv(j));
                                const double down =
                                    pseudo.estimate(map.y[j], 0, prior) * yv(j);
                                score = std::max(up, 1e-9) * std::max(down, 1e-9);
                            }
                            if (score > best_score + 1e-12) {
                                best_score = score;
                                branch_var = map.y[j];
                            }
                        }
                    }

                    if (y_integral) {
                        try_incumbent(yv);
                        bool all_y_fixed = true;
                        for (int j = 0; j < nf; ++j)
                            if (!fixed.count(map.y[j])) all_y_fixed = false;
                        if (all_y_fixed) {
                            close_node = true;  // subtree value now exact
                        } else {
                            std::lock_guard<std::mutex> lock(mtx);
                            if (node_bound <= incumbent + gap_abs(incumbent)) close_node = true;
                        }
                        if (!close_node) {
                            // The gap left at an integral-y node is the hull
                            // slack of the current completion; splitting on a
                            // free location explores the alternatives that
                            // keep the subtree bound high. Prefer the free y
                            // the relaxation leans on most.
                            double best_val = -1.0;
                            for (int j = 0; j < nf; ++j) {
                                if (fixed.count(map.y[j])) continue;
                                if (yv(j) > best_val + 1e-12) {
                                    best_val = yv(j);
                                    branch_var = map.y[j];
                                }
                            }
                            if (branch_var < 0) close_node = true;
                        }
                    } else if (branch_var < 0) {
                        // Fractional y but none free: numerical corner,
                        // evaluate the rounded point and close.
                        Vector yr = yv;
                        for (int j = 0; j < nf; ++j) yr(j) = std::round(yr(j));
                        try_incumbent(yr);
                        close_node = true;
                    }

                    if (!close_node && my_count % std::max(1, opts.heuristic_period) == 0)
                        greedy_heuristic(yv);
                    if (!close_node && node.depth == 0) greedy_heuristic(yv);
                }

                {
                    std::lock_guard<std::mutex> lock(mtx);
                    if (!close_node && branch_var >= 0) {
                        detail::Node up, down;
                        up.fixings = node.fixings;
                        up.fixings.push_back({branch_var, 1.0});
                        up.bound = node_bound;
                        up.depth = node.depth + 1;
                        up.id = next_id++;
                        up.branch_var = branch_var;
                        up.branch_dir = 1;
                        down.fixings = node.fixings;
                        down.fixings.push_back({branch_var, 0.0});
                        down.bound = node_bound;
                        down.depth = node.depth + 1;
                        down.id = next_id++;
                        down.branch_var = branch_var;
                        down.branch_dir = 0;
                        open.push(std::move(up));
                        open.push(std::move(down));
                    }
                    if (opts.log_every > 0 && my_count % opts.log_every == 0) {
                        const double top = open.empty() ? incumbent : open.top().bound;
                        const double g =
                            have_incumbent
                                ? (top - incumbent) / std::max(1.0, std::abs(incumbent))
                                : kInf;
                        (*opts.log) << "node=" << my_count << " bound=" << top
                                    << " incumbent=" << incumbent << " gap=" << g << '\n';
                    }
                    --busy_workers;
                }
                cv.notify_all();
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(mtx);
            worker_error = std::current_exception();
            done = true;
            if (busy_workers > 0) --busy_workers;
            cv.notify_all();
        }
    };

    // The all-closed decision is always budget feasible; seeding it keeps a
    // usable incumbent around even under a zero time limit.
    try_incumbent(Vector::Zero(nf));

    {
        detail::Node root;
        root.bound = kInf;
        root.depth = 0;
        root.id = next_id++;
        open.push(std::move(root));
    }

    const int n_threads = std::max(1, opts.threads);
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (worker_error) std::rethrow_exception(worker_error);

    stats.wall_time_s = elapsed();
    stats.incumbent = incumbent;
    stats.bound = have_incumbent ? std::max(incumbent, open.empty() ? incumbent : open.top().bound)
                                 : (open.empty() ? -kInf : open.top().bound);
    stats.gap = have_incumbent
                    ? std::max(0.0, (stats.bound - incumbent) / std::max(1.0, std::abs(incumbent)))
                    : kInf;

    Solution sol;
    if (!have_incumbent) {
        sol.status = infeasible_root ? SolveStatus::Infeasible : SolveStatus::NumericalError;
        sol.objective = -kInf;
        return {sol, stats};
    }
    sol.y = best_y;
    auto rc = recourse_value_fixed_y(inst, LocationDecision{best_y});
    sol.x = rc.flows.flow;
    sol.objective = inst.fixed_gains.dot(best_y) + rc.value;
    sol.bound = stats.bound;
    sol.gap = stats.gap;
    sol.status = timed_out ? SolveStatus::TimeLimit : SolveStatus::Optimal;
    return {sol, stats};
}

/**
 * The benchmark protocol: either solve the assembled program directly or
 * run the root convexification loop first, then identical branch and bound.
 */
inline std::pair<Solution, SolveStats> solve_with_protocol(const Instance& inst, CutMode mode,
                                                           const BnbOptions& opts = {},
                                                           const BuildOptions& build_opts = {},
                                                           std::vector<TangentCut>* cuts_out = nullptr) {
    const auto t0 = std::chrono::steady_clock::now();
    auto [prog, map] = build_misocp(inst, build_opts);
    std::vector<TangentCut> cuts;
    int rounds = 0;
    detail::Relaxer relaxer(inst, map, prog, opts);
    if (mode == CutMode::WithCuts) {
        auto [strengthened, generated] =
            root_cut_loop(prog, map, inst, opts.root_cut_rounds, opts, &rounds, &relaxer);
        prog = std::move(strengthened);
        cuts = std::move(generated);
        relaxer.set_program(prog);
    }
    auto [sol, bstats] = branch_and_bound(prog, map, inst, opts, &relaxer);
    bstats.developed_cuts = static_cast<int>(cuts.size());
    bstats.root_rounds = rounds;
    bstats.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (cuts_out != nullptr) *cuts_out = std::move(cuts);
    return {sol, bstats};
}

}  // namespace rfl
