#pragma once

// Brute-force references for balanced ANOVA, written independently of the
// engine: effects by inclusion-exclusion over marginal means, and sums of
// squares by least-squares model comparison with sum-to-zero coding.

#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stratus/design.hpp"

namespace oracle {

struct Factor {
    std::string name;
    int levels = 2;
};

struct Term {
    std::string label;
    std::vector<int> factors;  // indices into Table::factors
    std::string denominator;
};

struct Table {
    std::vector<Factor> factors;
    int reps = 1;
    std::vector<std::vector<int>> level;  // per observation, per factor
    std::vector<double> y;
};

inline std::string level_name(const Factor& f, int i) { return f.name + std::to_string(i + 1); }

// Every cell in row-major order, replicates innermost.
template <class Gen>
Table make_table(std::vector<Factor> factors, int reps, Gen&& value) {
    Table t;
    t.factors = std::move(factors);
    t.reps = reps;
    std::vector<int> idx(t.factors.size(), 0);
    for (;;) {
        for (int r = 0; r < reps; ++r) {
            t.level.push_back(idx);
            t.y.push_back(value(idx, r));
        }
        int k = static_cast<int>(idx.size()) - 1;
        while (k >= 0 && ++idx[k] == t.factors[k].levels) idx[k--] = 0;
        if (k < 0) break;
    }
    return t;
}

inline std::string to_csv(const Table& t, const std::string& response = "Y") {
    std::string out;
    for (const auto& f : t.factors) out += f.name + ",";
    out += "Rep," + response + "\n";
    char buf[64];
    for (std::size_t i = 0; i < t.y.size(); ++i) {
        for (std::size_t k = 0; k < t.factors.size(); ++k) out += level_name(t.factors[k], t.level[i][k]) + ",";
        std::snprintf(buf, sizeof buf, "%.17g", t.y[i]);
        out += "R" + std::to_string(i % static_cast<std::size_t>(t.reps) + 1) + "," + buf + "\n";
    }
    return out;
}

inline double total_ss(const Table& t) {
    double mean = 0.0;
    for (double v : t.y) mean += v;
    mean /= static_cast<double>(t.y.size());
    double ss = 0.0;
    for (double v : t.y) ss += (v - mean) * (v - mean);
    return ss;
}

// Per observation, the mean of all observations sharing its levels on `subset`.
inline std::vector<double> marginal_means(const Table& t, const std::vector<int>& subset) {
    std::map<std::vector<int>, std::pair<double, int>> acc;
    auto key = [&](std::size_t i) {
        std::vector<int> k;
        for (int f : subset) k.push_back(t.level[i][static_cast<std::size_t>(f)]);
        return k;
    };
    for (std::size_t i = 0; i < t.y.size(); ++i) {
        auto& a = acc[key(i)];
        a.first += t.y[i];
        a.second += 1;
    }
    std::vector<double> out(t.y.size());
    for (std::size_t i = 0; i < t.y.size(); ++i) {
        const auto& a = acc[key(i)];
        out[i] = a.first / a.second;
    }
    return out;
}

// tau_S = sum over T subset of S of (-1)^{|S|-|T|} M_T; SS = sum over
// observations of tau_S^2.
inline double moebius_ss(const Table& t, const std::vector<int>& subset) {
    const std::size_t s = subset.size();
    std::vector<double> tau(t.y.size(), 0.0);
    for (unsigned mask = 0; mask < (1u << s); ++mask) {
        std::vector<int> sub;
        for (std::size_t b = 0; b < s; ++b) {
            if (mask & (1u << b)) sub.push_back(subset[b]);
        }
        const double sign = ((s - sub.size()) % 2 == 0) ? 1.0 : -1.0;
        const auto m = marginal_means(t, sub);
        for (std::size_t i = 0; i < tau.size(); ++i) tau[i] += sign * m[i];
    }
    double ss = 0.0;
    for (double v : tau) ss += v * v;
    return ss;
}

// Sum-to-zero coding: level j < L-1 is e_j, the last level is -1 everywhere.
inline Eigen::MatrixXd term_columns(const Table& t, const std::vector<int>& subset) {
    const auto n = static_cast<Eigen::Index>(t.y.size());
    Eigen::MatrixXd cols = Eigen::MatrixXd::Ones(n, 1);
    for (int f : subset) {
        const int l = t.factors[static_cast<std::size_t>(f)].levels;
        Eigen::MatrixXd next(n, cols.cols() * (l - 1));
        for (Eigen::Index i = 0; i < n; ++i) {
            const int lev = t.level[static_cast<std::size_t>(i)][static_cast<std::size_t>(f)];
            for (Eigen::Index c = 0; c < cols.cols(); ++c) {
                for (int j = 0; j < l - 1; ++j) {
                    const double code = lev == l - 1 ? -1.0 : (lev == j ? 1.0 : 0.0);
                    next(i, c * (l - 1) + j) = cols(i, c) * code;
                }
            }
        }
        cols = next;
    }
    return cols;
}

inline double rss(const Table& t, const std::vector<std::vector<int>>& terms) {
    const auto n = static_cast<Eigen::Index>(t.y.size());
    std::vector<Eigen::MatrixXd> blocks{Eigen::MatrixXd::Ones(n, 1)};
    Eigen::Index width = 1;
    for (const auto& s : terms) {
        blocks.push_back(term_columns(t, s));
        width += blocks.back().cols();
    }
    Eigen::MatrixXd x(n, width);
    Eigen::Index at = 0;
    for (const auto& b : blocks) {
        x.middleCols(at, b.cols()) = b;
        at += b.cols();
    }
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(t.y.data(), n);
    const Eigen::VectorXd beta = x.colPivHouseholderQr().solve(y);
    return (y - x * beta).squaredNorm();
}

// Extra sum of squares for dropping one term from the full term list.
inline double least_squares_ss(const Table& t, const std::vector<Term>& terms, std::size_t which) {
    std::vector<std::vector<int>> all;
    std::vector<std::vector<int>> reduced;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        all.push_back(terms[i].factors);
        if (i != which) reduced.push_back(terms[i].factors);
    }
    return rss(t, reduced) - rss(t, all);
}

struct Row {
    std::string label;
    int df = 0;
    double ss = 0.0;
    double ms = 0.0;
    std::optional<double> f;
    std::string denominator;
};

inline std::vector<Row> anova(const Table& t, const std::vector<Term>& terms) {
    std::vector<Row> rows;
    double explained = 0.0;
    int df_used = 0;
    for (const auto& term : terms) {
        Row r;
        r.label = term.label;
        r.df = 1;
        for (int f : term.factors) r.df *= t.factors[static_cast<std::size_t>(f)].levels - 1;
        r.ss = moebius_ss(t, term.factors);
        r.ms = r.ss / r.df;
        r.denominator = term.denominator;
        explained += r.ss;
        df_used += r.df;
        rows.push_back(r);
    }
    Row res;
    res.label = "Residual";
    res.df = static_cast<int>(t.y.size()) - 1 - df_used;
    res.ss = total_ss(t) - explained;
    res.ms = res.ss / res.df;
    rows.push_back(res);
    for (auto& r : rows) {
        if (r.denominator.empty()) continue;
        for (const auto& d : rows) {
            if (d.label == r.denominator) r.f = r.ms / d.ms;
        }
    }
    return rows;
}

// A random balanced layout for one design kind with its canonical terms.
struct Case {
    stratus::design::DesignSpec spec;
    Table table;
    std::vector<Term> terms;
};

inline std::string join_label(const std::vector<Factor>& f, const std::vector<int>& idx) {
    std::string out;
    for (int i : idx) out += (out.empty() ? "" : ":") + f[static_cast<std::size_t>(i)].name;
    return out;
}

inline Case random_case(stratus::design::DesignKind kind, std::mt19937_64& rng) {
    using namespace stratus::design;
    std::uniform_int_distribution<int> lev(2, 4);
    std::uniform_int_distribution<int> rep(1, 4);
    std::uniform_int_distribution<int> rep2(2, 4);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> scale(0.1, 20.0);
    std::uniform_real_distribution<double> shift(-50.0, 500.0);

    Case c;
    c.spec.kind = kind;
    c.spec.response = "Y";
    std::vector<Factor> factors;
    int reps = 1;
    switch (kind) {
        case DesignKind::crd:
            factors = {{"T", lev(rng)}};
            reps = rep2(rng);
            c.spec.treatment_factors = {{"T"}};
            c.terms = {{"T", {0}, "Residual"}};
            break;
        case DesignKind::rcbd:
            factors = {{"T", lev(rng)}, {"B", lev(rng)}};
            reps = rep(rng);
            c.spec.treatment_factors = {{"T"}};
            c.spec.block = FactorSpec{"B"};
            c.terms = {{"T", {0}, "Residual"}, {"B", {1}, "Residual"}};
            break;
        case DesignKind::factorial: {
            const int k = std::uniform_int_distribution<int>(2, 3)(rng);
            const char* names[] = {"A", "B", "C"};
            for (int i = 0; i < k; ++i) {
                factors.push_back({names[i], lev(rng)});
                c.spec.treatment_factors.push_back({names[i]});
            }
            reps = rep2(rng);
            for (int order = 1; order <= k; ++order) {
                for (unsigned mask = 1; mask < (1u << k); ++mask) {
                    if (__builtin_popcount(mask) != order) continue;
                    std::vector<int> idx;
                    for (int b = 0; b < k; ++b) {
                        if (mask & (1u << b)) idx.push_back(b);
                    }
                    c.terms.push_back({join_label(factors, idx), idx, "Residual"});
                }
            }
            break;
        }
        case DesignKind::split_plot:
            factors = {{"A", lev(rng)}, {"S", lev(rng)}, {"Block", lev(rng)}};
            reps = rep(rng);
            c.spec.treatment_factors = {{"A", Role::fixed, Placement::whole_plot}, {"S", Role::fixed, Placement::sub_plot}};
            c.spec.block = FactorSpec{"Block"};
            c.terms = {{"Block", {2}, "Block:A"},
                       {"A", {0}, "Block:A"},
                       {"S", {1}, "Residual"},
                       {"Block:A", {2, 0}, "Residual"},
                       {"A:S", {0, 1}, "Residual"}};
            break;
        case DesignKind::mixed:
            factors = {{"T", lev(rng)}, {"B", lev(rng)}};
            reps = rep(rng);
            c.spec.treatment_factors = {{"T"}};
            c.spec.block = FactorSpec{"B", Role::random};
            c.terms = {{"T", {0}, "Residual"}, {"B", {1}, "Residual"}};
            break;
        case DesignKind::met:
            factors = {{"G", lev(rng)}, {"E", lev(rng)}};
            reps = rep2(rng);
            c.spec.treatment_factors = {{"G"}, {"E", Role::random}};
            c.terms = {{"G", {0}, "Residual"}, {"E", {1}, "Residual"}, {"G:E", {0, 1}, "Residual"}};
            break;
    }

    // Random effects for every term plus noise, on a random location/scale.
    std::vector<std::map<std::vector<int>, double>> effects(c.terms.size());
    std::vector<double> size(c.terms.size());
    for (auto& s : size) s = std::abs(z(rng)) * 2.0;
    const double noise = scale(rng);
    const double mu = shift(rng);
    c.table = make_table(factors, reps, [&](const std::vector<int>& idx, int) {
        double v = mu;
        for (std::size_t k = 0; k < c.terms.size(); ++k) {
            std::vector<int> key;
            for (int f : c.terms[k].factors) key.push_back(idx[static_cast<std::size_t>(f)]);
            auto it = effects[k].find(key);
            if (it == effects[k].end()) it = effects[k].emplace(key, size[k] * noise * z(rng)).first;
            v += it->second;
        }
        return v + noise * z(rng);
    });
    check_invariants(c.spec);
    return c;
}

}  // namespace oracle
