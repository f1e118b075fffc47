#pragma once

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rfl/types.hpp"

namespace rfl {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class RowSense { LE, EQ, GE };

/// One sparse linear term: coefficient on a variable index.
struct Term {
    int var;
    double coef;
};

struct LinearRow {
    std::vector<Term> terms;
    RowSense sense = RowSense::LE;
    double rhs = 0.0;
};

/**
 * Second-order cone block ||tail|| <= head. The head is a program variable;
 * each tail entry is an affine expression of program variables, so norms of
 * matrix images like ||M v|| need no auxiliary substitution variables.
 */
struct SocBlock {
    struct TailRow {
        std::vector<Term> terms;
        double constant = 0.0;
    };
    int head = -1;
    std::vector<TailRow> tails;
};

/**
 * Standard-form conic program, maximization sense:
 *
 *   max  objective' x
 *   s.t. linear rows (<=, =, >=),
 *        ||tail_k(x)|| <= x_{head_k}  for each SOC block,
 *        lo <= x <= hi, x_j integral for j in integer_vars.
 */
struct ConicProgram {
    int num_vars = 0;
    std::vector<Term> objective;
    std::vector<LinearRow> rows;
    std::vector<SocBlock> soc_blocks;
    std::set<int> integer_vars;
    std::vector<double> lo, hi;

    int add_var(double lb, double ub) {
        lo.push_back(lb);
        hi.push_back(ub);
        return num_vars++;
    }

    void check_indices() const {
        auto ok = [&](int v) { return v >= 0 && v < num_vars; };
        for (const auto& t : objective)
            if (!ok(t.var)) throw usage_error("ConicProgram: objective index out of range");
        for (const auto& r : rows)
            for (const auto& t : r.terms)
                if (!ok(t.var)) throw usage_error("ConicProgram: row index out of range");
        for (const auto& b : soc_blocks) {
            if (!ok(b.head)) throw usage_error("ConicProgram: SOC head out of range");
            if (lo[b.head] < 0.0) throw usage_error("ConicProgram: SOC head must be nonnegative");
            for (const auto& t : b.tails)
                for (const auto& term : t.terms)
                    if (!ok(term.var)) throw usage_error("ConicProgram: SOC tail out of range");
        }
        for (int j : integer_vars)
            if (!ok(j)) throw usage_error("ConicProgram: integer index out of range");
    }

    double objective_value(const Vector& x) const {
        double v = 0.0;
        for (const auto& t : objective) v += t.coef * x(t.var);
        return v;
    }

    /// Largest violation of linear rows, SOC blocks and bounds at x.
    double max_violation(const Vector& x) const {
        double viol = 0.0;
        for (const auto& r : rows) {
            double lhs = 0.0;
            for (const auto& t : r.terms) lhs += t.coef * x(t.var);
            if (r.sense == RowSense::LE) viol = std::max(viol, lhs - r.rhs);
            else if (r.sense == RowSense::GE) viol = std::max(viol, r.rhs - lhs);
            else viol = std::max(viol, std::abs(lhs - r.rhs));
        }
        for (const auto& b : soc_blocks) {
            double sq = 0.0;
            for (const auto& t : b.tails) {
                double e = t.constant;
                for (const auto& term : t.terms) e += term.coef * x(term.var);
                sq += e * e;
            }
            viol = std::max(viol, std::sqrt(sq) - x(b.head));
        }
        for (int j = 0; j < num_vars; ++j) {
            viol = std::max(viol, lo[j] - x(j));
            viol = std::max(viol, x(j) - hi[j]);
        }
        return viol;
    }
};

/// Continuous relaxation: drop integrality, keep the [0,1] (or given) boxes.
inline ConicProgram relax(const ConicProgram& prog) {
    ConicProgram r = prog;
    r.integer_vars.clear();
    return r;
}

/**
 * Plain-text dump of a program. Format:
 *   conicprogram <num_vars> <num_rows> <num_soc>
 *   obj idx:coef ...
 *   bounds lo hi lo hi ... ("-inf"/"inf" allowed)
 *   int idx ...
 *   row {<=,=,>=} idx:coef ... rhs
 *   soc <head> <ntails>, then per tail: socrow idx:coef ... const
 */
inline void dump_model(const ConicProgram& p, std::ostream& os) {
    os.precision(17);
    os << "conicprogram " << p.num_vars << ' ' << p.rows.size() << ' ' << p.soc_blocks.size()
       << '\n';
    os << "obj";
    for (const auto& t : p.objective) os << ' ' << t.var << ':' << t.coef;
    os << '\n';
    os << "bounds";
    for (int j = 0; j < p.num_vars; ++j) {
        auto put = [&](double v) {
            if (v == kInf) os << " inf";
            else if (v == -kInf) os << " -inf";
            else os << ' ' << v;
        };
        put(p.lo[j]);
        put(p.hi[j]);
    }
    os << '\n';
    os << "int";
    for (int j : p.integer_vars) os << ' ' << j;
    os << '\n';
    for (const auto& r : p.rows) {
        os << "row " << (r.sense == RowSense::LE ? "<=" : r.sense == RowSense::EQ ? "=" : ">=");
        for (const auto& t : r.terms) os << ' ' << t.var << ':' << t.coef;
        os << ' ' << r.rhs << '\n';
    }
    for (const auto& b : p.soc_blocks) {
        os << "soc " << b.head << ' ' << b.tails.size() << '\n';
        for (const auto& t : b.tails) {
            os << "socrow";
            for (const auto& term : t.terms) os << ' ' << term.var << ':' << term.coef;
            os << ' ' << t.constant << '\n';
        }
    }
}

inline std::string dump_model(const ConicProgram& p) {
    std::ostringstream os;
    dump_model(p, os);
    return os.str();
}

inline ConicProgram parse_model(std::istream& is) {
    ConicProgram p;
    std::string tag;
    std::size_t nrows = 0, nsoc = 0;
    if (!(is >> tag) || tag != "conicprogram") throw usage_error("parse_model: bad header");
    is >> p.num_vars >> nrows >> nsoc;

    auto parse_terms = [](const std::string& line, std::vector<Term>& out, double* trailing) {
        std::istringstream ls(line);
        std::string tok;
        std::vector<std::string> toks;
        while (ls >> tok) toks.push_back(tok);
        std::size_t end = toks.size();
        if (trailing) {
            if (end == 0) throw usage_error("parse_model: missing trailing value");
            *trailing = std::stod(toks[--end]);
        }
        for (std::size_t k = 0; k < end; ++k) {
            const auto pos = toks[k].find(':');
            if (pos == std::string::npos) throw usage_error("parse_model: bad term " + toks[k]);
            out.push_back({std::stoi(toks[k].substr(0, pos)), std::stod(toks[k].substr(pos + 1))});
        }
    };
    auto next_line = [&](std::string& line) {
        while (std::getline(is, line))
            if (!line.empty()) return true;
        return false;
    };

    std::string line;
    next_line(line);  // obj
    if (line.rfind("obj", 0) != 0) throw usage_error("parse_model: expected obj");
    parse_terms(line.substr(3), p.objective, nullptr);

    next_line(line);  // bounds
    {
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok != "bounds") throw usage_error("parse_model: expected bounds");
        for (int j = 0; j < p.num_vars; ++j) {
            std::string a, b;
            ls >> a >> b;
            auto val = [](const std::string& s) {
                if (s == "inf") return kInf;
                if (s == "-inf") return -kInf;
                return std::stod(s);
            };
            p.lo.push_back(val(a));
            p.hi.push_back(val(b));
        }
    }

    next_line(line);  // int
    {
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok != "int") throw usage_error("parse_model: expected int");
        int j;
        while (ls >> j) p.integer_vars.insert(j);
    }

    for (std::size_t r = 0; r < nrows; ++r) {
        next_line(line);
        std::istringstream ls(line);
        std::string tok, sense;
        ls >> tok >> sense;
        if (tok != "row") throw usage_error("parse_model: expected row");
        LinearRow row;
        row.sense = sense == "<=" ? RowSense::LE : sense == "=" ? RowSense::EQ : RowSense::GE;
        std::string rest;
        std::getline(ls, rest);
        parse_terms(rest, row.terms, &row.rhs);
        p.rows.push_back(std::move(row));
    }
    for (std::size_t b = 0; b < nsoc; ++b) {
        next_line(line);
        std::istringstream ls(line);
        std::string tok;
        std::size_t ntails = 0;
        SocBlock blk;
        ls >> tok >> blk.head >> ntails;
        if (tok != "soc") throw usage_error("parse_model: expected soc");
        for (std::size_t t = 0; t < ntails; ++t) {
            next_line(line);
            if (line.rfind("socrow", 0) != 0) throw usage_error("parse_model: expected socrow");
            SocBlock::TailRow tr;
            parse_terms(line.substr(6), tr.terms, &tr.constant);
            blk.tails.push_back(std::move(tr));
        }
        p.soc_blocks.push_back(std::move(blk));
    }
    p.check_indices();
    return p;
}

}  // namespace rfl
