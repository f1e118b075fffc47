#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "rfl/closed_form.hpp"
#include "rfl/conic_solver.hpp"
#include "rfl/types.hpp"

namespace rfl {

struct RecourseResult {
    double value = 0.0;
    FlowMatrix flows;
};

/**
 * Recourse value for a fixed budget-feasible binary decision: the
 * transportation LP max sum U^{ij}(y) x_{ij} over X(y), with the worst-case
 * utilities evaluated in closed form. Pairs with nonpositive utility never
 * carry flow (the model keeps U >= 0, so their optimal contribution is zero)
 * and are left out of the LP.
 */
inline RecourseResult recourse_value_fixed_y(const Instance& inst, const LocationDecision& y) {
    const int ns = inst.num_sites();
    const int nf = inst.num_facilities();
    if (y.open.size() != nf) throw usage_error("recourse: y dimension mismatch");
    for (int j = 0; j < nf; ++j) {
        const double v = y.open(j);
        if (std::abs(v) > 1e-9 && std::abs(v - 1.0) > 1e-9)
            throw usage_error("recourse: y must be binary");
    }
    if (!inst.budget_feasible(y.open)) throw usage_error("recourse: y exceeds the budget");

    RecourseResult out;
    out.flows.flow = Matrix::Zero(ns, nf);

    // Collect flow variables with positive utility toward open facilities.
    ConicProgram lp;
    std::vector<std::pair<int, int>> var_pair;
    std::vector<std::vector<Term>> cap_terms(nf), dem_terms(ns);
    for (int i = 0; i < ns; ++i) {
        for (int j = 0; j < nf; ++j) {
            if (y.open(j) < 0.5) continue;
            const PairAmbiguity* pa = inst.pair(i, j);
            if (pa == nullptr) continue;
            const double u = worst_case_utility(*pa, y);
            if (u <= 0.0) continue;
            const int v =
                lp.add_var(0.0, std::min(inst.sites[i].demand, inst.facilities[j].capacity));
            lp.objective.push_back({v, u});
            cap_terms[j].push_back({v, 1.0});
            dem_terms[i].push_back({v, 1.0});
            var_pair.push_back({i, j});
        }
    }
    if (lp.num_vars == 0) return out;
    for (int j = 0; j < nf; ++j)
        if (!cap_terms[j].empty())
            lp.rows.push_back({cap_terms[j], RowSense::LE, inst.facilities[j].capacity});
    for (int i = 0; i < ns; ++i)
        if (!dem_terms[i].empty())
            lp.rows.push_back({dem_terms[i], RowSense::LE, inst.sites[i].demand});

    auto res = solve_lp_fast(lp);
    if (!res.ok())
        throw solver_error("recourse LP failed for instance " + inst.name + ": " +
                           to_string(res.status));
    out.value = res.objective;
    for (std::size_t k = 0; k < var_pair.size(); ++k) {
        const auto [i, j] = var_pair[k];
        out.flows.flow(i, j) = std::max(0.0, res.primal(static_cast<int>(k)));
    }
    return out;
}

/// Full objective c'y + Q(y) of a fixed decision.
inline double total_objective(const Instance& inst, const LocationDecision& y) {
    return inst.fixed_gains.dot(y.open) + recourse_value_fixed_y(inst, y).value;
}

/**
 * Brute-force oracle: enumerates every budget-feasible y in lexicographic
 * order and keeps the first maximizer (hence the lexicographically smallest
 * one under ties). Refuses once more than the guard count of feasible
 * vectors has been visited.
 */
inline Solution enumerate_optimal(const Instance& inst, long guard = 1000000) {
    const int nf = inst.num_facilities();
    Vector y = Vector::Zero(nf);
    Solution best;
    best.y = Vector::Zero(nf);
    best.objective = -kInf;
    long visited = 0;

    // Depth-first in lexicographic order: try y_j = 0 before y_j = 1.
    auto rec = [&](auto&& self, int j, double cost) -> void {
        if (j == nf) {
            if (++visited > guard)
                throw usage_error("enumerate_optimal: more than " + std::to_string(guard) +
                                  " budget-feasible decisions");
            LocationDecision dec{y};
            const double val = total_objective(inst, dec);
            if (val > best.objective) {
                best.objective = val;
                best.y = y;
            }
            return;
        }
        y(j) = 0.0;
        self(self, j + 1, cost);
        const double c = inst.facilities[j].open_cost;
        if (cost + c <= inst.budget + 1e-9) {
            y(j) = 1.0;
            self(self, j + 1, cost + c);
            y(j) = 0.0;
        }
    };
    rec(rec, 0, 0.0);

    auto rc = recourse_value_fixed_y(inst, LocationDecision{best.y});
    best.x = rc.flows.flow;
    best.objective = inst.fixed_gains.dot(best.y) + rc.value;
    best.bound = best.objective;
    best.gap = 0.0;
    best.status = SolveStatus::Optimal;
    return best;
}

}  // namespace rfl
