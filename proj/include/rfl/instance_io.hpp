#pragma once

#include <fstream>
#include <json.hpp>
#include <string>

#include "rfl/types.hpp"

namespace rfl {

using json = nlohmann::json;

namespace detail {

inline json matrix_to_json(const Matrix& m) {
    // Diagonal matrices use the "diag" shorthand; everything else is dense
    // row-major.
    bool diag = true;
    for (int r = 0; r < m.rows() && diag; ++r)
        for (int c = 0; c < m.cols() && diag; ++c)
            if (r != c && m(r, c) != 0.0) diag = false;
    json out;
    if (diag) {
        json d = json::array();
        for (int r = 0; r < m.rows(); ++r) d.push_back(m(r, r));
        out["diag"] = d;
    } else {
        json rows = json::array();
        for (int r = 0; r < m.rows(); ++r) {
            json row = json::array();
            for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
            rows.push_back(row);
        }
        out["dense"] = rows;
    }
    return out;
}

inline Matrix matrix_from_json(const json& j, int dim) {
    Matrix m = Matrix::Zero(dim, dim);
    if (j.contains("diag")) {
        const auto& d = j.at("diag");
        if (static_cast<int>(d.size()) != dim) throw usage_error("matrix diag length mismatch");
        for (int r = 0; r < dim; ++r) m(r, r) = d.at(r).get<double>();
    } else if (j.contains("dense")) {
        const auto& rows = j.at("dense");
        if (static_cast<int>(rows.size()) != dim) throw usage_error("matrix row count mismatch");
        for (int r = 0; r < dim; ++r) {
            const auto& row = rows.at(r);
            if (static_cast<int>(row.size()) != dim)
                throw usage_error("matrix column count mismatch");
            for (int c = 0; c < dim; ++c) m(r, c) = row.at(c).get<double>();
        }
    } else {
        throw usage_error("matrix needs a \"dense\" or \"diag\" field");
    }
    return m;
}

}  // namespace detail

inline json instance_to_json(const Instance& inst) {
    json j;
    j["format"] = 1;
    j["name"] = inst.name;
    j["budget"] = inst.budget;
    json sites = json::array();
    for (const auto& s : inst.sites)
        sites.push_back({{"id", s.id},
                         {"x", s.coord.x()},
                         {"y", s.coord.y()},
                         {"demand", s.demand}});
    j["sites"] = sites;
    json facilities = json::array();
    for (int k = 0; k < inst.num_facilities(); ++k) {
        const auto& f = inst.facilities[k];
        facilities.push_back({{"id", f.id},
                              {"site_id", f.id},
                              {"capacity", f.capacity},
                              {"open_cost", f.open_cost},
                              {"fixed_gain", inst.fixed_gains(k)}});
    }
    j["facilities"] = facilities;
    json pairs = json::array();
    for (const auto& [key, pa] : inst.ambiguity) {
        json p;
        p["i"] = key.first;
        p["j"] = key.second;
        json beta = json::array();
        for (int k = 0; k < pa.beta_hat.size(); ++k) beta.push_back(pa.beta_hat(k));
        p["beta_hat"] = beta;
        p["A"] = detail::matrix_to_json(pa.ellipsoid_shape);
        p["b"] = pa.ellipsoid_radius;
        p["sigma_hat"] = detail::matrix_to_json(pa.cov_hat);
        p["gamma1"] = pa.gamma_lo;
        p["gamma2"] = pa.gamma_hi;
        pairs.push_back(p);
    }
    j["pairs"] = pairs;
    return j;
}

inline Instance instance_from_json(const json& j) {
    if (!j.contains("format") || j.at("format").get<int>() != 1)
        throw usage_error("instance: unsupported or missing format version");
    Instance inst;
    inst.name = j.value("name", "");
    inst.budget = j.at("budget").get<double>();
    for (const auto& js : j.at("sites")) {
        Site s;
        s.id = js.at("id").get<int>();
        s.coord = {js.at("x").get<double>(), js.at("y").get<double>()};
        s.demand = js.at("demand").get<double>();
        inst.sites.push_back(s);
    }
    const auto& jf = j.at("facilities");
    inst.fixed_gains = Vector::Zero(static_cast<int>(jf.size()));
    for (int k = 0; k < static_cast<int>(jf.size()); ++k) {
        const auto& je = jf.at(k);
        Facility f;
        f.id = je.at("id").get<int>();
        const int site_id = je.value("site_id", f.id);
        if (site_id >= 0 && site_id < inst.num_sites()) f.coord = inst.sites[site_id].coord;
        f.capacity = je.at("capacity").get<double>();
        f.open_cost = je.at("open_cost").get<double>();
        inst.fixed_gains(k) = je.value("fixed_gain", 0.0);
        inst.facilities.push_back(f);
    }
    const int dim = inst.num_facilities();
    if (j.contains("pairs")) {
        for (const auto& jp : j.at("pairs")) {
            PairAmbiguity pa;
            const int i = jp.at("i").get<int>();
            const int fj = jp.at("j").get<int>();
            const auto& beta = jp.at("beta_hat");
            if (static_cast<int>(beta.size()) != dim)
                throw usage_error("instance: beta_hat length must equal |F|");
            pa.beta_hat = Vector::Zero(dim);
            for (int k = 0; k < dim; ++k) pa.beta_hat(k) = beta.at(k).get<double>();
            pa.ellipsoid_shape = detail::matrix_from_json(jp.at("A"), dim);
            pa.ellipsoid_radius = jp.at("b").get<double>();
            pa.cov_hat = detail::matrix_from_json(jp.at("sigma_hat"), dim);
            pa.gamma_lo = jp.value("gamma1", 0.0);
            pa.gamma_hi = jp.at("gamma2").get<double>();
            pa.finalize();
            inst.ambiguity.emplace(std::make_pair(i, fj), std::move(pa));
        }
    }
    inst.validate();
    return inst;
}

inline void save_instance(const Instance& inst, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw usage_error("cannot open " + path + " for writing");
    os << instance_to_json(inst).dump(2) << '\n';
}

inline Instance load_instance(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw usage_error("cannot open " + path);
    json j;
    is >> j;
    return instance_from_json(j);
}

}  // namespace rfl
