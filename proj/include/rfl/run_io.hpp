#pragma once

#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "rfl/bnb.hpp"
#include "rfl/types.hpp"

namespace rfl {

/// One gamma step of a sensitivity sweep: objective, open set and flows.
struct GammaRecord {
    double gamma = 0.0;
    double objective = 0.0;
    std::vector<int> open;
    std::vector<std::tuple<int, int, double>> flows;  // (site, facility, amount)
};

struct RunResult {
    std::string instance;
    std::string mode;  // "none" or "root"
    SolveStatus status = SolveStatus::Optimal;
    double objective = 0.0;
    Vector y;
    SolveStats stats;
    std::vector<std::tuple<int, int, double>> flows;
    std::vector<GammaRecord> gamma_records;
};

inline json run_result_to_json(const RunResult& r) {
    json j;
    j["instance"] = r.instance;
    j["mode"] = r.mode;
    j["status"] = to_string(r.status);
    j["objective"] = r.objective;
    json y = json::array();
    for (int k = 0; k < r.y.size(); ++k) y.push_back(r.y(k));
    j["y"] = y;
    j["stats"] = {{"nodes", r.stats.nodes},
                  {"developed_cuts", r.stats.developed_cuts},
                  {"root_rounds", r.stats.root_rounds},
                  {"wall_time_s", r.stats.wall_time_s},
                  {"gap", r.stats.gap},
                  {"incumbent", r.stats.incumbent},
                  {"bound", r.stats.bound}};
    json flows = json::array();
    for (const auto& [i, fj, v] : r.flows) flows.push_back({{"i", i}, {"j", fj}, {"flow", v}});
    j["flows"] = flows;
    if (!r.gamma_records.empty()) {
        json recs = json::array();
        for (const auto& rec : r.gamma_records) {
            json e;
            e["gamma"] = rec.gamma;
            e["objective"] = rec.objective;
            e["open"] = rec.open;
            json fl = json::array();
            for (const auto& [i, fj, v] : rec.flows)
                fl.push_back({{"i", i}, {"j", fj}, {"flow", v}});
            e["flows"] = fl;
            recs.push_back(e);
        }
        j["gamma_records"] = recs;
    }
    return j;
}

inline RunResult run_result_from_json(const json& j) {
    RunResult r;
    r.instance = j.at("instance").get<std::string>();
    r.mode = j.at("mode").get<std::string>();
    const auto status = j.at("status").get<std::string>();
    for (SolveStatus s : {SolveStatus::Optimal, SolveStatus::Infeasible, SolveStatus::Unbounded,
                          SolveStatus::IterLimit, SolveStatus::NumericalError,
                          SolveStatus::TimeLimit})
        if (status == to_string(s)) r.status = s;
    r.objective = j.at("objective").get<double>();
    const auto& y = j.at("y");
    r.y = Vector::Zero(static_cast<int>(y.size()));
    for (int k = 0; k < r.y.size(); ++k) r.y(k) = y.at(k).get<double>();
    const auto& st = j.at("stats");
    r.stats.nodes = st.at("nodes").get<long>();
    r.stats.developed_cuts = st.at("developed_cuts").get<int>();
    r.stats.root_rounds = st.at("root_rounds").get<int>();
    r.stats.wall_time_s = st.at("wall_time_s").get<double>();
    r.stats.gap = st.at("gap").get<double>();
    r.stats.incumbent = st.at("incumbent").get<double>();
    r.stats.bound = st.at("bound").get<double>();
    if (j.contains("flows"))
        for (const auto& e : j.at("flows"))
            r.flows.emplace_back(e.at("i").get<int>(), e.at("j").get<int>(),
                                 e.at("flow").get<double>());
    if (j.contains("gamma_records")) {
        for (const auto& e : j.at("gamma_records")) {
            GammaRecord rec;
            rec.gamma = e.at("gamma").get<double>();
            rec.objective = e.at("objective").get<double>();
            for (const auto& o : e.at("open")) rec.open.push_back(o.get<int>());
            for (const auto& fl : e.at("flows"))
                rec.flows.emplace_back(fl.at("i").get<int>(), fl.at("j").get<int>(),
                                       fl.at("flow").get<double>());
            r.gamma_records.push_back(std::move(rec));
        }
    }
    return r;
}

inline std::vector<std::tuple<int, int, double>> nonzero_flows(const Matrix& x,
                                                               double tol = 1e-9) {
    std::vector<std::tuple<int, int, double>> out;
    for (int i = 0; i < x.rows(); ++i)
        for (int j = 0; j < x.cols(); ++j)
            if (x(i, j) > tol) out.emplace_back(i, j, x(i, j));
    return out;
}

/// Fixed-header comparison table, one row per instance and mode pair.
inline const char* compare_csv_header() {
    return "ID,S,B,obj_nocuts,cpu_s_nocuts,nodes_nocuts,devcuts_nocuts,"
           "obj_withcuts,cpu_s_withcuts,nodes_withcuts,devcuts_withcuts";
}

struct CompareRow {
    std::string id;
    int n_sites = 0;
    double budget = 0.0;
    double obj_nocuts = 0.0, cpu_nocuts = 0.0;
    long nodes_nocuts = 0;
    int devcuts_nocuts = 0;
    double obj_withcuts = 0.0, cpu_withcuts = 0.0;
    long nodes_withcuts = 0;
    int devcuts_withcuts = 0;
};

inline void write_compare_csv(const std::vector<CompareRow>& rows, std::ostream& os) {
    os << compare_csv_header() << '\n';
    os << std::setprecision(12);
    for (const auto& r : rows) {
        os << r.id << ',' << r.n_sites << ',' << r.budget << ',' << r.obj_nocuts << ','
           << r.cpu_nocuts << ',' << r.nodes_nocuts << ',' << r.devcuts_nocuts << ','
           << r.obj_withcuts << ',' << r.cpu_withcuts << ',' << r.nodes_withcuts << ','
           << r.devcuts_withcuts << '\n';
    }
}

/**
 * Static SVG of one sweep step: customer sites as circles, opened centers as
 * filled stars, positive flows as dashed arcs.
 */
inline std::string sweep_svg(const Instance& inst, const GammaRecord& rec, double side = 15.0) {
    const double px = 640.0, margin = 50.0;
    auto sx = [&](double v) { return margin + v / side * (px - 2.0 * margin); };
    auto sy = [&](double v) { return px - margin - v / side * (px - 2.0 * margin); };
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px << "\" height=\"" << px
       << "\" viewBox=\"0 0 " << px << ' ' << px << "\">\n";
    os << "  <rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << px - 2 * margin
       << "\" height=\"" << px - 2 * margin << "\" fill=\"none\" stroke=\"#999\"/>\n";
    os << "  <text x=\"" << margin << "\" y=\"" << margin - 14 << "\" font-size=\"16\">gamma2="
       << rec.gamma << " objective=" << rec.objective << "</text>\n";
    for (const auto& [i, j, v] : rec.flows) {
        if (i == j) continue;
        os << "  <line x1=\"" << sx(inst.sites[i].coord.x()) << "\" y1=\""
           << sy(inst.sites[i].coord.y()) << "\" x2=\"" << sx(inst.facilities[j].coord.x())
           << "\" y2=\"" << sy(inst.facilities[j].coord.y())
           << "\" stroke=\"#555\" stroke-dasharray=\"6 4\" stroke-width=\"1.2\"/>\n";
    }
    std::vector<bool> open(inst.num_facilities(), false);
    for (int j : rec.open) open[j] = true;
    for (int i = 0; i < inst.num_sites(); ++i) {
        const double cx = sx(inst.sites[i].coord.x());
        const double cy = sy(inst.sites[i].coord.y());
        if (i < inst.num_facilities() && open[i]) {
            // Five-point star marker for open service centers.
            os << "  <g fill=\"#c22\"><path d=\"M " << cx << ' ' << cy - 11;
            const double pi = 3.14159265358979323846;
            for (int k = 1; k < 10; ++k) {
                const double r = (k % 2 == 0) ? 11.0 : 4.6;
                const double ang = -pi / 2.0 + k * pi / 5.0;
                os << " L " << cx + r * std::cos(ang) << ' ' << cy + r * std::sin(ang);
            }
            os << " Z\"/></g>\n";
        } else {
            os << "  <circle cx=\"" << cx << "\" cy=\"" << cy
               << "\" r=\"5\" fill=\"none\" stroke=\"#236\" stroke-width=\"1.5\"/>\n";
        }
        os << "  <text x=\"" << cx + 8 << "\" y=\"" << cy - 8 << "\" font-size=\"11\">L"
           << i + 1 << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

inline void write_sweep_csv(const Instance& inst, const std::vector<GammaRecord>& recs,
                            std::ostream& os) {
    os << "record,gamma,site,x,y,demand,open,flow_to\n";
    os << std::setprecision(12);
    for (const auto& rec : recs) {
        std::vector<bool> open(inst.num_facilities(), false);
        for (int j : rec.open) open[j] = true;
        for (int i = 0; i < inst.num_sites(); ++i) {
            std::ostringstream flows;
            bool first = true;
            for (const auto& [fi, fj, v] : rec.flows) {
                if (fi != i) continue;
                if (!first) flows << ' ';
                flows << fj << ':' << v;
                first = false;
            }
            os << "site," << rec.gamma << ',' << i << ',' << inst.sites[i].coord.x() << ','
               << inst.sites[i].coord.y() << ',' << inst.sites[i].demand << ','
               << (i < inst.num_facilities() && open[i] ? 1 : 0) << ",\"" << flows.str()
               << "\"\n";
        }
    }
}

}  // namespace rfl
