#pragma once

#include <cmath>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace epap {

enum class TableauType { TypeA, TypeCK, Other };

struct DoubleButcherTableau {
    std::string name;
    int s = 0;
    std::vector<std::vector<double>> a_ex;  // A tilde, strictly lower
    std::vector<std::vector<double>> a_im;  // A, lower (DIRK)
    std::vector<double> w_ex, w_im, c_ex, c_im;

    double aex(int i, int j) const { return a_ex[i][j]; }
    double aim(int i, int j) const { return a_im[i][j]; }
};

inline void validate(const DoubleButcherTableau& t) {
    auto bad = [&](const std::string& what) {
        throw std::invalid_argument("tableau " + t.name + ": " + what);
    };
    if (t.s < 1) bad("stage count must be positive");
    auto sq = [&](const auto& a) {
        if (static_cast<int>(a.size()) != t.s) return false;
        for (const auto& r : a)
            if (static_cast<int>(r.size()) != t.s) return false;
        return true;
    };
    if (!sq(t.a_ex) || !sq(t.a_im)) bad("matrices must be s x s");
    for (const auto* v : {&t.w_ex, &t.w_im, &t.c_ex, &t.c_im})
        if (static_cast<int>(v->size()) != t.s) bad("vectors must have length s");
    for (int i = 0; i < t.s; ++i)
        for (int j = i; j < t.s; ++j) {
            if (t.a_ex[i][j] != 0.0) bad("explicit matrix must be strictly lower triangular");
            if (j > i && t.a_im[i][j] != 0.0) bad("implicit matrix must be lower triangular");
        }
}

inline TableauType classify(const DoubleButcherTableau& t) {
    bool diag_nonzero = true;
    for (int i = 0; i < t.s; ++i) diag_nonzero = diag_nonzero && t.a_im[i][i] != 0.0;
    if (diag_nonzero) return TableauType::TypeA;
    bool first_row_zero = true;
    for (int j = 0; j < t.s; ++j) first_row_zero = first_row_zero && t.a_im[0][j] == 0.0;
    bool trailing = t.s > 1;
    for (int i = 1; i < t.s; ++i) trailing = trailing && t.a_im[i][i] != 0.0;
    if (first_row_zero && trailing) return TableauType::TypeCK;
    return TableauType::Other;
}

inline const char* to_string(TableauType k) {
    switch (k) {
        case TableauType::TypeA: return "TypeA";
        case TableauType::TypeCK: return "TypeCK";
        default: return "Other";
    }
}

inline bool is_gsa(const DoubleButcherTableau& t) {
    for (int j = 0; j < t.s; ++j)
        if (t.a_ex[t.s - 1][j] != t.w_ex[j] || t.a_im[t.s - 1][j] != t.w_im[j]) return false;
    return true;
}

inline bool row_sums_consistent(const DoubleButcherTableau& t, double tol = 1e-14) {
    for (int i = 0; i < t.s; ++i) {
        double se = 0.0, si = 0.0;
        for (int j = 0; j < t.s; ++j) {
            se += t.a_ex[i][j];
            si += t.a_im[i][j];
        }
        if (std::fabs(se - t.c_ex[i]) > tol || std::fabs(si - t.c_im[i]) > tol) return false;
    }
    return true;
}

namespace detail {

inline DoubleButcherTableau assemble(std::string name, std::vector<std::vector<double>> ae,
                                     std::vector<std::vector<double>> ai) {
    DoubleButcherTableau t;
    t.name = std::move(name);
    t.s = static_cast<int>(ae.size());
    t.a_ex = std::move(ae);
    t.a_im = std::move(ai);
    t.w_ex = t.a_ex.back();
    t.w_im = t.a_im.back();
    for (int i = 0; i < t.s; ++i) {
        double se = 0.0, si = 0.0;
        for (int j = 0; j < t.s; ++j) {
            se += t.a_ex[i][j];
            si += t.a_im[i][j];
        }
        t.c_ex.push_back(se);
        t.c_im.push_back(si);
    }
    validate(t);
    return t;
}

}  // namespace detail

inline double default_dirk_gamma() { return 1.0 - std::sqrt(2.0) / 2.0; }

inline DoubleButcherTableau dp2a242(double g = default_dirk_gamma()) {
    return detail::assemble("DP2A242",
                            {{0, 0, 0, 0}, {0, 0, 0, 0}, {0, 1, 0, 0}, {0, 0.5, 0.5, 0}},
                            {{g, 0, 0, 0}, {-g, g, 0, 0}, {0, 1 - g, g, 0}, {0, 0.5, 0.5 - g, g}});
}

inline DoubleButcherTableau dp1a242() {
    // The published explicit tableau lists a zero second row next to c = 1/3;
    // 1/3 is the entry that matches its abscissa.
    return detail::assemble("DP1A242",
                            {{0, 0, 0, 0}, {1.0 / 3, 0, 0, 0}, {1, 0, 0, 0}, {0.5, 0, 0.5, 0}},
                            {{0.5, 0, 0, 0},
                             {1.0 / 6, 0.5, 0, 0},
                             {-0.5, 0.5, 0.5, 0},
                             {1.5, -1.5, 0.5, 0.5}});
}

inline DoubleButcherTableau ars222() {
    const double g = default_dirk_gamma();
    const double sigma = 1.0 / (2.0 * g);
    const double d = 1.0 - sigma;
    return detail::assemble("ARS222", {{0, 0, 0}, {g, 0, 0}, {d, 1 - d, 0}},
                            {{0, 0, 0}, {0, g, 0}, {0, 1 - g, g}});
}

// Forward-backward Euler in stiffly accurate form: the first stage only
// reproduces U^n, the second is the semi-implicit update.
inline DoubleButcherTableau first_order() {
    return detail::assemble("FirstOrder", {{0, 0}, {1, 0}}, {{0, 0}, {0, 1}});
}

inline DoubleButcherTableau builtin(const std::string& name) {
    if (name == "DP1A242") return dp1a242();
    if (name == "DP2A242") return dp2a242();
    if (name == "ARS222") return ars222();
    if (name == "FirstOrder") return first_order();
    throw std::invalid_argument("unknown tableau: " + name);
}

inline std::vector<std::string> builtin_names() {
    return {"DP1A242", "DP2A242", "ARS222", "FirstOrder"};
}

// Text format, '#' starts a comment:
//   name <id>
//   s <n>
//   explicit  followed by s rows
//   implicit  followed by s rows
//   w_ex / w_im / c_ex / c_im  followed by s numbers (optional; defaults are
//   the last rows and the row sums)
inline DoubleButcherTableau parse_tableau(std::istream& in) {
    std::stringstream clean;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        clean << line << '\n';
    }
    DoubleButcherTableau t;
    std::vector<double> wex, wim, cex, cim;
    std::string key;
    auto read_vec = [&](int len) {
        std::vector<double> v(len);
        for (auto& x : v)
            if (!(clean >> x)) throw std::invalid_argument("tableau file: expected a number");
        return v;
    };
    while (clean >> key) {
        if (key == "name") {
            clean >> t.name;
        } else if (key == "s") {
            clean >> t.s;
            if (t.s < 1 || t.s > 16) throw std::invalid_argument("tableau file: bad stage count");
        } else if (key == "explicit" || key == "implicit") {
            if (t.s < 1) throw std::invalid_argument("tableau file: 's' must come first");
            auto& a = key == "explicit" ? t.a_ex : t.a_im;
            a.clear();
            for (int i = 0; i < t.s; ++i) a.push_back(read_vec(t.s));
        } else if (key == "w_ex") {
            wex = read_vec(t.s);
        } else if (key == "w_im") {
            wim = read_vec(t.s);
        } else if (key == "c_ex") {
            cex = read_vec(t.s);
        } else if (key == "c_im") {
            cim = read_vec(t.s);
        } else {
            throw std::invalid_argument("tableau file: unknown key '" + key + "'");
        }
    }
    if (t.a_ex.empty() || t.a_im.empty()) throw std::invalid_argument("tableau file: missing matrices");
    auto name = t.name.empty() ? std::string("custom") : t.name;
    auto out = detail::assemble(name, t.a_ex, t.a_im);
    if (!wex.empty()) out.w_ex = wex;
    if (!wim.empty()) out.w_im = wim;
    if (!cex.empty()) out.c_ex = cex;
    if (!cim.empty()) out.c_im = cim;
    validate(out);
    return out;
}

}  // namespace epap
