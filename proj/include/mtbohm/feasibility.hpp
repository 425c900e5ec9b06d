#ifndef MTBOHM_FEASIBILITY_HPP
#define MTBOHM_FEASIBILITY_HPP

#include <gmpxx.h>

#include <array>
#include <cctype>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mtbohm {

/// The 16 atoms are the joint assignments of the binary track variables
/// (a_x, a_z, b_x, b_z), each +-1. Atom index bits, most significant first:
/// a_x, a_z, b_x, b_z, with a set bit meaning +1.
inline constexpr int kAtomCount = 16;

inline constexpr int kBitAx = 3, kBitAz = 2, kBitBx = 1, kBitBz = 0;

inline std::string atom_name(int idx) {
    auto sign = [&](int bit) { return (idx >> bit) & 1 ? "+1" : "-1"; };
    std::string s;
    s += "ax=";
    s += sign(kBitAx);
    s += ",az=";
    s += sign(kBitAz);
    s += ",bx=";
    s += sign(kBitBx);
    s += ",bz=";
    s += sign(kBitBz);
    return s;
}

/// A coefficient applied to the sum of atoms matching a pattern such as
/// "ax=+1,bz=-1". The empty pattern "*" matches every atom.
struct PatternTerm {
    mpq_class coef{1};
    int mask_care = 0; // bits constrained
    int mask_val = 0;  // required values on constrained bits

    bool matches(int atom) const { return (atom & mask_care) == mask_val; }

    std::string pattern_string() const {
        if (mask_care == 0) return "*";
        std::string s;
        auto add = [&](const char* name, int bit) {
            if (!((mask_care >> bit) & 1)) return;
            if (!s.empty()) s += ",";
            s += name;
            s += (mask_val >> bit) & 1 ? "=+1" : "=-1";
        };
        add("ax", kBitAx);
        add("az", kBitAz);
        add("bx", kBitBx);
        add("bz", kBitBz);
        return s;
    }
};

enum class Relation { eq, le, ge };

inline const char* relation_string(Relation r) {
    switch (r) {
        case Relation::eq: return "=";
        case Relation::le: return "<=";
        default: return ">=";
    }
}

struct Constraint {
    Relation rel = Relation::eq;
    mpq_class rhs{0};
    std::vector<PatternTerm> terms;

    std::array<mpq_class, kAtomCount> row() const {
        std::array<mpq_class, kAtomCount> r{};
        for (const auto& t : terms)
            for (int atom = 0; atom < kAtomCount; ++atom)
                if (t.matches(atom)) r[atom] += t.coef;
        return r;
    }
};

/// Linear constraints over the 16-atom distribution. Nonnegativity of the
/// atoms is implicit; the probability normalization is an explicit
/// constraint so that certificates can refer to it.
struct FeasibilityProblem {
    std::vector<Constraint> constraints;

    FeasibilityProblem without(std::size_t index) const {
        if (index >= constraints.size())
            throw std::out_of_range("FeasibilityProblem: no such constraint");
        FeasibilityProblem out = *this;
        out.constraints.erase(out.constraints.begin() + static_cast<std::ptrdiff_t>(index));
        return out;
    }
};

inline Constraint normalization_constraint() {
    Constraint c;
    c.rel = Relation::eq;
    c.rhs = 1;
    c.terms.push_back(PatternTerm{mpq_class(1), 0, 0});
    return c;
}

namespace detail {

inline PatternTerm parse_pattern(const std::string& text, int line_no) {
    PatternTerm term;
    if (text == "*") return term;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        const std::string piece = text.substr(pos, comma - pos);
        const std::size_t eq = piece.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("constraint line " + std::to_string(line_no) +
                                        ": bad atom pattern '" + piece + "'");
        const std::string var = piece.substr(0, eq);
        const std::string val = piece.substr(eq + 1);
        int bit;
        if (var == "ax")
            bit = kBitAx;
        else if (var == "az")
            bit = kBitAz;
        else if (var == "bx")
            bit = kBitBx;
        else if (var == "bz")
            bit = kBitBz;
        else
            throw std::invalid_argument("constraint line " + std::to_string(line_no) +
                                        ": unknown variable '" + var + "'");
        int value;
        if (val == "+1")
            value = 1;
        else if (val == "-1")
            value = 0;
        else
            throw std::invalid_argument("constraint line " + std::to_string(line_no) +
                                        ": value must be +1 or -1, got '" + val + "'");
        if ((term.mask_care >> bit) & 1)
            throw std::invalid_argument("constraint line " + std::to_string(line_no) +
                                        ": repeated variable in pattern");
        term.mask_care |= 1 << bit;
        term.mask_val |= value << bit;
        pos = comma + 1;
    }
    return term;
}

inline mpq_class parse_rational(const std::string& text, int line_no) {
    try {
        mpq_class q(text);
        q.canonicalize();
        return q;
    } catch (const std::exception&) {
        throw std::invalid_argument("constraint line " + std::to_string(line_no) +
                                    ": bad rational '" + text + "'");
    }
}

inline std::string rational_string(const mpq_class& q) {
    return q.get_num().get_str() + "/" + q.get_den().get_str();
}

} // namespace detail

/// One constraint per line: `<rel> <rhs_num>/<rhs_den> : <coef> <pattern> ...`
inline std::string serialize(const FeasibilityProblem& problem) {
    std::ostringstream out;
    for (const auto& c : problem.constraints) {
        out << relation_string(c.rel) << " " << detail::rational_string(c.rhs) << " :";
        for (const auto& t : c.terms)
            out << " " << detail::rational_string(t.coef) << " " << t.pattern_string();
        out << "\n";
    }
    return out.str();
}

inline FeasibilityProblem parse_problem(const std::string& text) {
    FeasibilityProblem problem;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string stripped;
        for (char ch : line) {
            if (ch == '#') break;
            stripped += ch;
        }
        std::istringstream ls(stripped);
        std::string rel_text;
        if (!(ls >> rel_text)) continue; // blank line
        Constraint c;
        if (rel_text == "=")
            c.rel = Relation::eq;
        else if (rel_text == "<=")
            c.rel = Relation::le;
        else if (rel_text == ">=")
            c.rel = Relation::ge;
        else
            throw std::invalid_argument("constraint line " + std::to_string(line_no) +
                                        ": unknown relation '" + rel_text + "'");
        std::string rhs_text, colon;
        if (!(ls >> rhs_text >> colon) || colon != ":")
            throw std::invalid_argument("constraint line " + std::to_string(line_no) +
                                        ": expected '<rel> <rhs> :'");
        c.rhs = detail::parse_rational(rhs_text, line_no);
        std::vector<std::string> tokens;
        std::string tok;
        while (ls >> tok) tokens.push_back(tok);
        if (tokens.size() % 2 != 0)
            throw std::invalid_argument("constraint line " + std::to_string(line_no) +
                                        ": dangling coefficient");
        for (std::size_t k = 0; k + 1 < tokens.size(); k += 2) {
            PatternTerm t = detail::parse_pattern(tokens[k + 1], line_no);
            t.coef = detail::parse_rational(tokens[k], line_no);
            c.terms.push_back(t);
        }
        if (c.terms.empty())
            throw std::invalid_argument("constraint line " + std::to_string(line_no) +
                                        ": constraint has no terms");
        problem.constraints.push_back(std::move(c));
    }
    return problem;
}

/// The four Hardy-experiment constraints plus the normalization row:
///   P(a_x=+1 and b_z=+1) = 0        (a_x=+1 implies b_z=-1)
///   P(b_x=+1 and a_z=+1) = 0        (b_x=+1 implies a_z=-1)
///   P(a_z=-1 and b_z=-1) = 0
///   P(a_x=+1 and b_x=+1) = 1/12
inline FeasibilityProblem hardy_constraints() {
    auto zero_on = [](int care, int val) {
        Constraint c;
        c.rel = Relation::eq;
        c.rhs = 0;
        c.terms.push_back(PatternTerm{mpq_class(1), care, val});
        return c;
    };
    FeasibilityProblem p;
    p.constraints.push_back(zero_on((1 << kBitAx) | (1 << kBitBz), (1 << kBitAx) | (1 << kBitBz)));
    p.constraints.push_back(zero_on((1 << kBitBx) | (1 << kBitAz), (1 << kBitBx) | (1 << kBitAz)));
    p.constraints.push_back(zero_on((1 << kBitAz) | (1 << kBitBz), 0));
    Constraint twelfth;
    twelfth.rel = Relation::eq;
    twelfth.rhs = mpq_class(1, 12);
    twelfth.terms.push_back(PatternTerm{mpq_class(1), (1 << kBitAx) | (1 << kBitBx),
                                        (1 << kBitAx) | (1 << kBitBx)});
    p.constraints.push_back(twelfth);
    p.constraints.push_back(normalization_constraint());
    return p;
}

struct CertifyResult {
    bool feasible = false;
    /// Feasible: a witness distribution over the 16 atoms.
    std::array<mpq_class, kAtomCount> witness{};
    /// Infeasible: one multiplier per constraint such that
    ///   sum_i y_i * row_i <= 0 componentwise over the atoms (after
    ///   orienting <= rows with y <= 0 and >= rows with y >= 0) while
    ///   sum_i y_i * rhs_i > 0 -- impossible for any nonnegative solution.
    std::vector<mpq_class> farkas;
};

namespace detail {

struct Tableau {
    // rows x cols rational tableau; basis column indices per row.
    std::vector<std::vector<mpq_class>> t;
    std::vector<std::size_t> basis;
    std::vector<mpq_class> zrow;
    std::size_t cols = 0;
};

} // namespace detail

/// Exact decision for {x >= 0 : constraints hold}: phase-one simplex with
/// Bland's rule in rational arithmetic. Returns a witness or a Farkas-style
/// certificate (see CertifyResult).
inline CertifyResult certify_no_measure(const FeasibilityProblem& problem) {
    const std::size_t m = problem.constraints.size();
    if (m == 0) {
        CertifyResult r;
        r.feasible = true;
        r.witness[0] = 1;
        return r;
    }

    // Structural variables: 16 atoms + one slack per inequality.
    std::size_t n_slack = 0;
    for (const auto& c : problem.constraints)
        if (c.rel != Relation::eq) ++n_slack;
    const std::size_t n = kAtomCount + n_slack;
    const std::size_t cols = n + m + 1; // + artificials + rhs

    // Row sign flips to make rhs nonnegative (recorded to map duals back).
    std::vector<int> flip(m, 1);
    detail::Tableau tab;
    tab.cols = cols;
    tab.t.assign(m, std::vector<mpq_class>(cols, mpq_class(0)));
    std::size_t slack_at = kAtomCount;
    for (std::size_t i = 0; i < m; ++i) {
        const auto& c = problem.constraints[i];
        auto row = c.row();
        for (int jj = 0; jj < kAtomCount; ++jj) tab.t[i][static_cast<std::size_t>(jj)] = row[jj];
        if (c.rel == Relation::le) tab.t[i][slack_at++] = 1;
        if (c.rel == Relation::ge) tab.t[i][slack_at++] = -1;
        tab.t[i][cols - 1] = c.rhs;
        if (tab.t[i][cols - 1] < 0) {
            flip[i] = -1;
            for (auto& v : tab.t[i]) v = -v;
        }
        tab.t[i][n + i] = 1; // artificial
    }

    // Phase-one objective: minimize the sum of artificials. Reduced costs
    // with the artificial basis: zrow[j] = -sum_i t[i][j] for structural j.
    tab.basis.resize(m);
    for (std::size_t i = 0; i < m; ++i) tab.basis[i] = n + i;
    tab.zrow.assign(cols, mpq_class(0));
    for (std::size_t j = 0; j < cols; ++j) {
        if (j >= n && j < n + m) continue;
        mpq_class acc(0);
        for (std::size_t i = 0; i < m; ++i) acc += tab.t[i][j];
        tab.zrow[j] = -acc;
    }

    for (;;) {
        // Bland: smallest structural index with negative reduced cost.
        std::size_t enter = cols;
        for (std::size_t j = 0; j < n; ++j)
            if (tab.zrow[j] < 0) {
                enter = j;
                break;
            }
        if (enter == cols) break;
        std::size_t leave = m;
        for (std::size_t i = 0; i < m; ++i) {
            if (tab.t[i][enter] <= 0) continue;
            if (leave == m) {
                leave = i;
                continue;
            }
            const mpq_class cand = tab.t[i][cols - 1] / tab.t[i][enter];
            const mpq_class best = tab.t[leave][cols - 1] / tab.t[leave][enter];
            if (cand < best || (cand == best && tab.basis[i] < tab.basis[leave])) leave = i;
        }
        if (leave == m)
            throw std::runtime_error("certify_no_measure: unbounded phase-one (malformed constraints)");
        // Pivot.
        const mpq_class piv = tab.t[leave][enter];
        for (auto& v : tab.t[leave]) v /= piv;
        for (std::size_t i = 0; i < m; ++i) {
            if (i == leave) continue;
            const mpq_class factor = tab.t[i][enter];
            if (factor == 0) continue;
            for (std::size_t j = 0; j < cols; ++j) tab.t[i][j] -= factor * tab.t[leave][j];
        }
        const mpq_class zfac = tab.zrow[enter];
        if (zfac != 0)
            for (std::size_t j = 0; j < cols; ++j) tab.zrow[j] -= zfac * tab.t[leave][j];
        tab.basis[leave] = enter;
    }

    mpq_class objective(0);
    for (std::size_t i = 0; i < m; ++i)
        if (tab.basis[i] >= n) objective += tab.t[i][cols - 1];

    CertifyResult result;
    if (objective == 0) {
        result.feasible = true;
        for (std::size_t i = 0; i < m; ++i)
            if (tab.basis[i] < kAtomCount)
                result.witness[tab.basis[i]] = tab.t[i][cols - 1];
        return result;
    }
    // Dual of phase one: y_i = 1 - zrow[artificial_i], mapped through the
    // row flips back to the original orientation.
    result.feasible = false;
    result.farkas.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        mpq_class y = 1 - tab.zrow[n + i];
        result.farkas[i] = flip[i] * y;
    }
    return result;
}

/// Exact check that a Farkas vector refutes the problem: the combined row
/// must be <= 0 on every atom, combined slack signs must be admissible, and
/// the combined right-hand side must be positive.
inline bool verify_infeasibility_certificate(const FeasibilityProblem& problem,
                                             const std::vector<mpq_class>& y) {
    const std::size_t m = problem.constraints.size();
    if (y.size() != m) return false;
    std::array<mpq_class, kAtomCount> combined{};
    mpq_class rhs(0);
    for (std::size_t i = 0; i < m; ++i) {
        const auto& c = problem.constraints[i];
        if (c.rel == Relation::le && y[i] > 0) return false;
        if (c.rel == Relation::ge && y[i] < 0) return false;
        const auto row = c.row();
        for (int j = 0; j < kAtomCount; ++j) combined[j] += y[i] * row[j];
        rhs += y[i] * c.rhs;
    }
    for (int j = 0; j < kAtomCount; ++j)
        if (combined[j] > 0) return false;
    return rhs > 0;
}

/// Exact check of a feasible witness.
inline bool verify_witness(const FeasibilityProblem& problem,
                           const std::array<mpq_class, kAtomCount>& x) {
    for (int j = 0; j < kAtomCount; ++j)
        if (x[j] < 0) return false;
    for (const auto& c : problem.constraints) {
        const auto row = c.row();
        mpq_class lhs(0);
        for (int j = 0; j < kAtomCount; ++j) lhs += row[j] * x[j];
        if (c.rel == Relation::eq && lhs != c.rhs) return false;
        if (c.rel == Relation::le && lhs > c.rhs) return false;
        if (c.rel == Relation::ge && lhs < c.rhs) return false;
    }
    return true;
}

/// Lower bound on the row_index pattern implied by the other constraints,
/// read off the certificate: if y[row_index] < 0 the combination of the
/// remaining rows proves  pattern . x >= bound  for every distribution
/// satisfying them. For the Hardy set this exhibits
/// P(a_z=-1 and b_z=-1) >= 1/12.
inline std::optional<mpq_class> implied_lower_bound(const FeasibilityProblem& problem,
                                                    const std::vector<mpq_class>& y,
                                                    std::size_t row_index) {
    if (row_index >= problem.constraints.size() || y.size() != problem.constraints.size())
        return std::nullopt;
    if (!(y[row_index] < 0)) return std::nullopt;
    mpq_class rhs(0);
    for (std::size_t i = 0; i < problem.constraints.size(); ++i) {
        if (i == row_index) continue;
        rhs += y[i] * problem.constraints[i].rhs;
    }
    return rhs / (-y[row_index]);
}

} // namespace mtbohm

#endif
