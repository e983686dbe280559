#include "stratus/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "stratus/dist.hpp"
#include "stratus/error.hpp"

namespace stratus::inference {

namespace {

std::string letter_name(std::size_t i) {
    if (i < 26) return std::string(1, static_cast<char>('a' + i));
    if (i < 52) return std::string(1, static_cast<char>('A' + (i - 26)));
    return fmt::format("<{}>", i + 1);
}

struct ErrorTerm {
    double mse = 0.0;
    int df = 0;
    std::string stratum;
    bool conservative = false;
};

// Single stratum when every label agrees; otherwise the largest mean square
// with the smallest df.
ErrorTerm error_term(const engine::AnovaTable& anova, std::vector<std::string> strata) {
    std::sort(strata.begin(), strata.end());
    strata.erase(std::unique(strata.begin(), strata.end()), strata.end());
    ErrorTerm out;
    if (strata.size() == 1) {
        const auto& row = anova.row(strata.front());
        out.mse = row.ms;
        out.df = row.df;
        out.stratum = row.source;
        return out;
    }
    out.conservative = true;
    out.df = std::numeric_limits<int>::max();
    std::vector<std::string> names;
    for (const auto& s : strata) {
        const auto& row = anova.row(s);
        out.mse = std::max(out.mse, row.ms);
        out.df = std::min(out.df, row.df);
        names.push_back(s);
    }
    out.stratum = fmt::format("{}", fmt::join(names, "|"));
    return out;
}

std::string main_denominator(const design::ValidatedDesign& design, const std::string& factor,
                             const std::string& fallback) {
    const design::Effect* e = design.effects.find(factor);
    return e ? e->denominator : fallback;
}

}  // namespace

std::string_view to_string(Mode mode) noexcept {
    switch (mode) {
        case Mode::main_effects: return "main_effects";
        case Mode::interaction_combinations: return "interaction_combinations";
        case Mode::none: return "none";
    }
    return "none";
}

std::string_view to_string(ExclusionReason reason) noexcept {
    switch (reason) {
        case ExclusionReason::subsumed_by_interaction: return "subsumed_by_interaction";
        case ExclusionReason::not_significant: return "not_significant";
        case ExclusionReason::lower_order: return "lower_order";
    }
    return "not_significant";
}

std::string_view to_string(SetKind kind) noexcept {
    switch (kind) {
        case SetKind::marginal: return "marginal";
        case SetKind::simple: return "simple";
        case SetKind::combinations: return "combinations";
    }
    return "marginal";
}

bool AdmissibleDomain::is_dominant(std::string_view label) const noexcept {
    return std::any_of(dominant.begin(), dominant.end(), [&](const design::Effect& e) { return e.label() == label; });
}

const LevelMean* ComparisonSet::find(std::string_view label) const noexcept {
    for (const auto& m : means) {
        if (m.label == label) return &m;
    }
    return nullptr;
}

const PairComparison* ComparisonSet::pair(std::string_view a, std::string_view b) const noexcept {
    for (const auto& p : pairs) {
        if ((p.a == a && p.b == b) || (p.a == b && p.b == a)) return &p;
    }
    return nullptr;
}

std::string ComparisonSet::title() const {
    if (kind == SetKind::simple) return fmt::format("{} within {}", target, condition);
    if (kind == SetKind::combinations) return fmt::format("{} combinations", target);
    return target;
}

std::vector<EffectTest> effect_tests(const engine::AnovaTable& anova, const design::EffectSet& effects, double alpha) {
    std::vector<EffectTest> tests;
    for (const auto& e : effects.effects) {
        if (e.term != design::TermKind::treatment) continue;
        const auto& row = anova.row(e.label());
        EffectTest t;
        t.effect = e;
        t.f = row.f.value_or(0.0);
        t.p = row.p.value_or(1.0);
        t.significant = row.p.has_value() && t.p <= alpha;
        tests.push_back(std::move(t));
    }
    return tests;
}

AdmissibleDomain dominant_effects(const std::vector<EffectTest>& tests, double alpha) {
    AdmissibleDomain domain;
    // Significance is recomputed against the requested alpha.
    auto is_sig = [&](const EffectTest& t) { return t.p <= alpha; };
    int max_order = 0;
    for (const auto& t : tests) {
        if (is_sig(t)) max_order = std::max(max_order, t.effect.order);
    }
    for (const auto& t : tests) {
        if (is_sig(t) && t.effect.order == max_order) domain.dominant.push_back(t.effect);
    }
    for (const auto& t : tests) {
        if (is_sig(t) && t.effect.order == max_order) continue;
        Exclusion ex;
        ex.effect = t.effect;
        if (!is_sig(t)) {
            ex.reason = ExclusionReason::not_significant;
        } else {
            const bool overlaps = std::any_of(domain.dominant.begin(), domain.dominant.end(),
                                              [&](const design::Effect& d) { return t.effect.shares_factor(d); });
            ex.reason = overlaps ? ExclusionReason::subsumed_by_interaction : ExclusionReason::lower_order;
        }
        domain.excluded.push_back(std::move(ex));
    }
    if (domain.dominant.empty()) {
        domain.mode = Mode::none;
    } else {
        domain.mode = max_order == 1 ? Mode::main_effects : Mode::interaction_combinations;
    }
    return domain;
}

std::vector<std::string> compact_letters(const std::vector<std::vector<bool>>& significant,
                                         const std::vector<std::size_t>& order) {
    const std::size_t k = significant.size();
    std::vector<std::size_t> rank(k, 0);
    for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = i;

    std::vector<std::set<std::size_t>> columns;
    if (k > 0) {
        std::set<std::size_t> all;
        for (std::size_t i = 0; i < k; ++i) all.insert(i);
        columns.push_back(all);
    }
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            if (!significant[i][j]) continue;
            std::vector<std::set<std::size_t>> next;
            for (const auto& col : columns) {
                if (col.count(i) && col.count(j)) {
                    auto without_i = col;
                    without_i.erase(i);
                    auto without_j = col;
                    without_j.erase(j);
                    next.push_back(std::move(without_i));
                    next.push_back(std::move(without_j));
                } else {
                    next.push_back(col);
                }
            }
            // Absorb: drop duplicates and columns contained in another column.
            std::vector<std::set<std::size_t>> kept;
            for (std::size_t a = 0; a < next.size(); ++a) {
                bool absorbed = false;
                for (std::size_t b = 0; b < next.size() && !absorbed; ++b) {
                    if (a == b) continue;
                    const bool subset = std::includes(next[b].begin(), next[b].end(), next[a].begin(), next[a].end());
                    if (subset && (next[a].size() < next[b].size() || b < a)) absorbed = true;
                }
                if (!absorbed) kept.push_back(next[a]);
            }
            columns = std::move(kept);
        }
    }

    auto ranks_of = [&](const std::set<std::size_t>& col) {
        std::vector<std::size_t> r;
        for (std::size_t m : col) r.push_back(rank[m]);
        std::sort(r.begin(), r.end());
        return r;
    };
    std::sort(columns.begin(), columns.end(),
              [&](const auto& a, const auto& b) { return ranks_of(a) < ranks_of(b); });

    std::vector<std::string> letters(k);
    for (std::size_t c = 0; c < columns.size(); ++c) {
        for (std::size_t m : columns[c]) letters[m] += letter_name(c);
    }
    return letters;
}

ComparisonSet tukey_hsd(std::string target, std::vector<LevelMean> means, double mse, int df, double alpha) {
    ComparisonSet set;
    set.target = std::move(target);
    set.means = std::move(means);
    set.mse = mse;
    set.df_error = df;
    const std::size_t k = set.means.size();
    if (k == 0) return set;
    const std::size_t n = set.means.front().n;
    for (const auto& m : set.means) {
        if (m.n != n || n == 0) {
            throw Error(ErrorCode::UnbalancedDesign, "Tukey HSD requires equal replication of every mean");
        }
    }
    set.degenerate_mse = !(mse > 0.0);
    if (k >= 2 && !set.degenerate_mse) {
        set.q_critical = dist::studentized_range_quantile(alpha, static_cast<int>(k), df);
        set.hsd = set.q_critical * std::sqrt(mse / static_cast<double>(n));
    }

    std::vector<std::vector<bool>> sig(k, std::vector<bool>(k, false));
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            PairComparison p;
            p.a = set.means[i].label;
            p.b = set.means[j].label;
            p.difference = set.means[i].mean - set.means[j].mean;
            p.hsd = set.hsd;
            p.significant = set.degenerate_mse ? p.difference != 0.0 : std::abs(p.difference) > set.hsd;
            sig[i][j] = sig[j][i] = p.significant;
            set.pairs.push_back(std::move(p));
        }
    }
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return set.means[a].mean > set.means[b].mean; });
    const auto letters = compact_letters(sig, order);
    for (std::size_t i = 0; i < k; ++i) set.means[i].letters = letters[i];
    return set;
}

std::vector<ComparisonSet> admissible_comparisons(const AdmissibleDomain& domain, const engine::FittedModel& model,
                                                  const engine::AnovaTable& anova, double alpha,
                                                  const design::ValidatedDesign& design) {
    std::vector<ComparisonSet> out;
    for (const auto& d : domain.dominant) {
        const engine::EffectTerm& term = model.term(d.label());
        if (d.order == 1) {
            std::vector<LevelMean> means;
            for (std::size_t i = 0; i < term.labels.size(); ++i) {
                means.push_back({term.labels[i], term.means[i], term.n_per_level, {}});
            }
            const ErrorTerm err = error_term(anova, {d.denominator});
            auto set = tukey_hsd(d.label(), std::move(means), err.mse, err.df, alpha);
            set.kind = SetKind::marginal;
            set.error_stratum = err.stratum;
            out.push_back(std::move(set));
            continue;
        }

        std::vector<std::string> all_strata{d.denominator};
        for (const auto& f : d.factors) all_strata.push_back(main_denominator(design, f, d.denominator));
        {
            std::vector<LevelMean> means;
            for (std::size_t i = 0; i < term.labels.size(); ++i) {
                means.push_back({term.labels[i], term.means[i], term.n_per_level, {}});
            }
            const ErrorTerm err = error_term(anova, all_strata);
            auto set = tukey_hsd(d.label(), std::move(means), err.mse, err.df, alpha);
            set.kind = SetKind::combinations;
            set.error_stratum = err.stratum;
            set.conservative = err.conservative;
            out.push_back(std::move(set));
        }

        const std::size_t k = d.factors.size();
        for (std::size_t f = 0; f < k; ++f) {
            const ErrorTerm err = error_term(anova, {d.denominator, main_denominator(design, d.factors[f], d.denominator)});
            // Enumerate level combinations of the other factors, row-major.
            std::vector<std::size_t> others;
            for (std::size_t g = 0; g < k; ++g) {
                if (g != f) others.push_back(g);
            }
            std::size_t n_conditions = 1;
            for (std::size_t g : others) n_conditions *= term.shape[g];
            for (std::size_t c = 0; c < n_conditions; ++c) {
                std::vector<std::size_t> digits(k, 0);
                std::size_t rem = c;
                for (std::size_t q = others.size(); q-- > 0;) {
                    digits[others[q]] = rem % term.shape[others[q]];
                    rem /= term.shape[others[q]];
                }
                std::vector<std::string> cond;
                for (std::size_t g : others) {
                    cond.push_back(d.factors[g] + "=" + design.levels(d.factors[g]).levels[digits[g]]);
                }
                std::vector<LevelMean> means;
                for (std::size_t l = 0; l < term.shape[f]; ++l) {
                    digits[f] = l;
                    std::size_t idx = 0;
                    for (std::size_t g = 0; g < k; ++g) idx = idx * term.shape[g] + digits[g];
                    means.push_back({design.levels(d.factors[f]).levels[l], term.means[idx], term.n_per_level, {}});
                }
                auto set = tukey_hsd(d.label(), std::move(means), err.mse, err.df, alpha);
                set.kind = SetKind::simple;
                set.condition = fmt::format("{}", fmt::join(cond, ","));
                set.error_stratum = err.stratum;
                set.conservative = err.conservative;
                out.push_back(std::move(set));
            }
        }
    }
    return out;
}

}  // namespace stratus::inference
