#pragma once

#include <cmath>
#include <string>

#include "rfl/rng.hpp"
#include "rfl/types.hpp"

namespace rfl {

/**
 * Configuration of the random benchmark family: sites uniform on a square,
 * every site a candidate location, utilities decaying with distance inside an
 * effective radius, per-pair covariance built from a random factor matrix.
 *
 * Random draws are pinned to a documented order so the same seed always
 * produces the same instance: from the master stream seeded with `seed`,
 * first x,y per site, then capacity per facility, then demand per site;
 * each pair (i,j) then draws its factor matrix Q row-major from an
 * independent substream derived from (seed, i, j).
 */
struct GenConfig {
    int n_sites = 10;
    double budget = 3.0;
    std::uint64_t seed = 1;
    double square_side = 15.0;
    double effective_distance = 5.0;  // L0
    double capacity_lo = 100.0, capacity_hi = 180.0;
    double demand_lo = 20.0, demand_hi = 80.0;  // integer draws
    double gamma_hi = 0.2;
    double ellipsoid_radius = 0.2;
    double cov_mix = 0.3;  // A = I + cov_mix * Q'Q
    bool full_matrices = false;
    std::string name;

    void validate() const {
        if (n_sites < 1) throw usage_error("GenConfig: need at least one site");
        if (budget < 0.0) throw usage_error("GenConfig: negative budget");
        if (capacity_lo > capacity_hi || demand_lo > demand_hi)
            throw usage_error("GenConfig: empty range");
    }
};

inline Instance generate(const GenConfig& cfg) {
    cfg.validate();
    const int n = cfg.n_sites;
    Instance inst;
    inst.name = cfg.name.empty()
                    ? "fl_s" + std::to_string(n) + "_b" +
                          std::to_string(static_cast<long long>(cfg.budget)) + "_seed" +
                          std::to_string(cfg.seed)
                    : cfg.name;
    inst.budget = cfg.budget;
    inst.fixed_gains = Vector::Zero(n);

    Xoshiro256PP master(cfg.seed);
    for (int i = 0; i < n; ++i) {
        Site s;
        s.id = i;
        s.coord.x() = master.uniform(0.0, cfg.square_side);
        s.coord.y() = master.uniform(0.0, cfg.square_side);
        inst.sites.push_back(s);
    }
    for (int j = 0; j < n; ++j) {
        Facility f;
        f.id = j;
        f.coord = inst.sites[j].coord;
        f.capacity = master.uniform(cfg.capacity_lo, cfg.capacity_hi);
        f.open_cost = 1.0;
        inst.facilities.push_back(f);
    }
    for (int i = 0; i < n; ++i)
        inst.sites[i].demand = static_cast<double>(
            master.uniform_int(static_cast<std::int64_t>(cfg.demand_lo),
                               static_cast<std::int64_t>(cfg.demand_hi)));

    const double L0 = cfg.effective_distance;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double dij = (inst.sites[i].coord - inst.facilities[j].coord).norm();
            const bool effective = dij <= L0;
            if (!effective && !cfg.full_matrices) continue;

            PairAmbiguity pa;
            pa.beta_hat = Vector::Zero(n);
            if (effective) {
                for (int k = 0; k < n; ++k) {
                    const double dik = (inst.sites[i].coord - inst.facilities[k].coord).norm();
                    if (k == j) pa.beta_hat(k) = 10.0 * (1.0 - dij / L0);
                    else pa.beta_hat(k) = std::max(0.0, 1.0 - dik / L0);
                }
            }
            Xoshiro256PP pair_rng(derive_stream(cfg.seed, static_cast<std::uint64_t>(i),
                                                static_cast<std::uint64_t>(j)));
            Matrix q(n, n);
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < n; ++c) q(r, c) = pair_rng.next_double();
            pa.cov_hat = q.transpose() * q;
            pa.ellipsoid_shape = Matrix::Identity(n, n) + cfg.cov_mix * pa.cov_hat;
            pa.ellipsoid_radius = cfg.ellipsoid_radius;
            pa.gamma_lo = 0.0;
            pa.gamma_hi = cfg.gamma_hi;
            pa.finalize();
            inst.ambiguity.emplace(std::make_pair(i, j), std::move(pa));
        }
    }
    inst.validate();
    return inst;
}

enum class IllustrativeCase { Base, Estimation1, Estimation2 };

/**
 * The three-site illustrative instance: demands 20/30/25, unit opening costs,
 * budget for a single center, effectively unlimited capacity (modeled as the
 * total demand), and the published beta_hat table. The base case carries no
 * ambiguity; the two estimations use diagonal A = Sigma_hat = 2 I with
 * gamma_2 = 2 and per-location ellipsoid radii.
 */
inline Instance illustrative_2_4(IllustrativeCase which) {
    Instance inst;
    inst.name = which == IllustrativeCase::Base          ? "illustrative-base"
                : which == IllustrativeCase::Estimation1 ? "illustrative-est1"
                                                         : "illustrative-est2";
    inst.budget = 1.0;
    const double demands[3] = {20.0, 30.0, 25.0};
    const double total = demands[0] + demands[1] + demands[2];
    for (int i = 0; i < 3; ++i) {
        Site s;
        s.id = i;
        s.coord = {5.0 * i, 0.0};
        s.demand = demands[i];
        inst.sites.push_back(s);
    }
    for (int j = 0; j < 3; ++j) {
        Facility f;
        f.id = j;
        f.coord = inst.sites[j].coord;
        f.capacity = total;
        f.open_cost = 1.0;
        inst.facilities.push_back(f);
    }
    inst.fixed_gains = Vector::Zero(3);

    const double beta[3][3][3] = {
        {{8.5, 0.2, 0.4}, {0.1, 8.0, 0.3}, {0.2, 0.1, 7.3}},
        {{8.2, 0.0, 0.2}, {0.1, 8.2, 0.3}, {0.2, 0.0, 7.4}},
        {{8.3, 0.1, 0.2}, {0.0, 8.1, 0.1}, {0.1, 0.0, 7.5}},
    };
    double radius[3] = {0.0, 0.0, 0.0};
    double diag_a = 1.0, diag_sigma = 0.0, gamma2 = 0.0;
    if (which == IllustrativeCase::Estimation1) {
        diag_a = 2.0;
        diag_sigma = 2.0;
        gamma2 = 2.0;
        radius[0] = 1.41;
        radius[1] = 1.27;
        radius[2] = 2.69;
    } else if (which == IllustrativeCase::Estimation2) {
        diag_a = 2.0;
        diag_sigma = 2.0;
        gamma2 = 2.0;
        radius[0] = 1.41;
        radius[1] = 0.99;
        radius[2] = 2.55;
    }

    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            PairAmbiguity pa;
            pa.beta_hat = Vector::Zero(3);
            for (int k = 0; k < 3; ++k) pa.beta_hat(k) = beta[i][j][k];
            pa.ellipsoid_shape = diag_a * Matrix::Identity(3, 3);
            pa.cov_hat = diag_sigma * Matrix::Identity(3, 3);
            pa.ellipsoid_radius = radius[j];
            pa.gamma_lo = 0.0;
            pa.gamma_hi = gamma2;
            pa.finalize();
            inst.ambiguity.emplace(std::make_pair(i, j), std::move(pa));
        }
    }
    inst.validate();
    return inst;
}

}  // namespace rfl
