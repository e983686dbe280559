#include "stratus/decision.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "stratus/numfmt.hpp"

namespace stratus::decision {

namespace {

std::vector<std::string> letter_tokens(const std::string& letters) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < letters.size();) {
        if (letters[i] == '<') {
            const std::size_t close = letters.find('>', i);
            out.push_back(letters.substr(i, close - i + 1));
            i = close + 1;
        } else {
            out.emplace_back(1, letters[i]);
            ++i;
        }
    }
    return out;
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ", ";
        out += items[i];
    }
    return out;
}

std::vector<std::string> caveats(const diagnostics::DiagnosticReport& report) {
    std::vector<std::string> out;
    for (const auto& s : report.strata) {
        if (!s.normality_ok) {
            out.push_back(fmt::format("{} stratum: residual normality rejected (Shapiro-Wilk p = {}, alpha_v = {})",
                                      s.stratum, p_value_text(*s.shapiro_p), fixed(report.alpha_v, 3)));
        }
        if (!s.homogeneity_ok) {
            out.push_back(fmt::format("{} stratum: homogeneity of variance rejected (Levene p = {}, alpha_v = {})",
                                      s.stratum, p_value_text(*s.levene_p), fixed(report.alpha_v, 3)));
        }
        for (const auto& note : s.notes) out.push_back(fmt::format("{} stratum: {}", s.stratum, note));
    }
    return out;
}

const inference::ComparisonSet* find_set(const std::vector<inference::ComparisonSet>& sets, inference::SetKind kind,
                                         std::string_view target) {
    for (const auto& s : sets) {
        if (s.kind == kind && s.target == target) return &s;
    }
    return nullptr;
}

void order_by_predicted(std::vector<std::string>& labels, const mixed::BlupTable& blups) {
    auto rank = [&](const std::string& label) {
        for (std::size_t i = 0; i < blups.entries.size(); ++i) {
            if (blups.entries[i].level == label) return i;
        }
        return blups.entries.size();
    };
    std::stable_sort(labels.begin(), labels.end(),
                     [&](const std::string& a, const std::string& b) { return rank(a) < rank(b); });
}

}  // namespace

std::string_view to_string(Scope scope) noexcept {
    switch (scope) {
        case Scope::global: return "global";
        case Scope::per_environment: return "per_environment";
        case Scope::per_combination: return "per_combination";
        case Scope::none: return "none";
    }
    return "none";
}

std::string_view to_string(RankingBasis basis) noexcept {
    switch (basis) {
        case RankingBasis::marginal_means: return "marginal_means";
        case RankingBasis::cell_means: return "cell_means";
        case RankingBasis::predicted_means: return "predicted_means";
    }
    return "marginal_means";
}

std::vector<std::string> top_group(const inference::ComparisonSet& set, bool minimize) {
    if (set.means.empty()) return {};
    std::size_t best = 0;
    for (std::size_t i = 1; i < set.means.size(); ++i) {
        const bool better = minimize ? set.means[i].mean < set.means[best].mean : set.means[i].mean > set.means[best].mean;
        if (better) best = i;
    }
    const auto tokens = letter_tokens(set.means[best].letters);
    std::vector<const inference::LevelMean*> members;
    for (const auto& m : set.means) {
        const auto own = letter_tokens(m.letters);
        if (tokens.empty() ? &m == &set.means[best]
                           : std::find(own.begin(), own.end(), tokens.front()) != own.end()) {
            members.push_back(&m);
        }
    }
    std::stable_sort(members.begin(), members.end(), [&](const auto* a, const auto* b) {
        return minimize ? a->mean < b->mean : a->mean > b->mean;
    });
    std::vector<std::string> out;
    for (const auto* m : members) out.push_back(m->label);
    return out;
}

Recommendation decide(const inference::AdmissibleDomain& domain, const std::vector<inference::ComparisonSet>& comparisons,
                      const mixed::BlupTable* blups, const std::optional<GxeInput>& gxe,
                      const diagnostics::DiagnosticReport& diagnostics, bool minimize) {
    Recommendation rec;
    rec.validity_caveats = caveats(diagnostics);
    const std::string direction = minimize ? "lowest" : "highest";
    const std::string conditional_note =
        rec.validity_caveats.empty() ? std::string("Model assumptions were not rejected.")
                                     : std::string("Conclusions are conditional on the validity caveats below.");

    if (domain.mode == inference::Mode::none) {
        rec.scope = Scope::none;
        rec.narrative = fmt::format("No significant treatment effects; no level is recommended over the others. {}",
                                    conditional_note);
        return rec;
    }

    auto conditional_from_simple = [&](std::string_view target, std::string_view condition_factor) {
        for (const auto& s : comparisons) {
            if (s.kind != inference::SetKind::simple || s.target != target) continue;
            if (!condition_factor.empty() && s.condition.rfind(std::string(condition_factor) + "=", 0) != 0) continue;
            rec.conditional.push_back({s.condition, top_group(s, minimize)});
        }
    };

    if (gxe && blups) {
        const std::string& genotype = blups->factor;
        if (!gxe->interaction_significant) {
            rec.scope = Scope::global;
            rec.ranking_basis = RankingBasis::predicted_means;
            if (const auto* set = find_set(comparisons, inference::SetKind::marginal, genotype)) {
                rec.top_group = top_group(*set, minimize);
                order_by_predicted(rec.top_group, *blups);
                if (minimize) std::reverse(rec.top_group.begin(), rec.top_group.end());
                rec.narrative = fmt::format(
                    "Genotype-by-environment interaction is not significant, so the ranking holds across environments. "
                    "Recommended {}: {} ({} predicted mean and statistically equivalent members). {}",
                    genotype, join(rec.top_group), direction, conditional_note);
            } else {
                for (const auto& e : blups->entries) rec.top_group.push_back(e.level);
                if (minimize) std::reverse(rec.top_group.begin(), rec.top_group.end());
                rec.narrative = fmt::format(
                    "Genotype-by-environment interaction is not significant and {} differences are not significant; "
                    "all levels are statistically equivalent (listed by predicted mean). {}",
                    genotype, conditional_note);
            }
            return rec;
        }
        rec.scope = Scope::per_environment;
        rec.ranking_basis = RankingBasis::cell_means;
        for (const auto& d : domain.dominant) {
            if (d.order < 2) continue;
            if (const auto* set = find_set(comparisons, inference::SetKind::combinations, d.label())) {
                rec.top_group = top_group(*set, minimize);
            }
            for (const auto& f : d.factors) {
                if (f != genotype) conditional_from_simple(d.label(), f);
            }
        }
        rec.narrative = fmt::format(
            "Genotype-by-environment interaction is significant; recommendations are environment-specific. "
            "Best combination overall: {}. {}",
            join(rec.top_group), conditional_note);
        return rec;
    }

    if (domain.mode == inference::Mode::interaction_combinations) {
        rec.scope = Scope::per_combination;
        rec.ranking_basis = RankingBasis::cell_means;
        for (const auto& d : domain.dominant) {
            if (const auto* set = find_set(comparisons, inference::SetKind::combinations, d.label())) {
                for (auto& label : top_group(*set, minimize)) rec.top_group.push_back(label);
            }
            conditional_from_simple(d.label(), "");
        }
        rec.narrative = fmt::format(
            "The interaction is dominant, so ranking is made within factor combinations. "
            "Recommended combination(s) with the {} cell mean and statistically equivalent members: {}. {}",
            direction, join(rec.top_group), conditional_note);
        return rec;
    }

    rec.scope = Scope::global;
    rec.ranking_basis = blups ? RankingBasis::predicted_means : RankingBasis::marginal_means;
    std::vector<const inference::ComparisonSet*> sets;
    for (const auto& d : domain.dominant) {
        if (const auto* set = find_set(comparisons, inference::SetKind::marginal, d.label())) sets.push_back(set);
    }
    std::vector<std::string> parts;
    for (const auto* set : sets) {
        auto group = top_group(*set, minimize);
        if (blups && blups->factor == set->target) {
            order_by_predicted(group, *blups);
            if (minimize) std::reverse(group.begin(), group.end());
        }
        parts.push_back(fmt::format("{}: {}", set->target, join(group)));
        for (auto& label : group) {
            rec.top_group.push_back(sets.size() > 1 ? set->target + "=" + label : label);
        }
    }
    const std::string basis = blups ? "predicted means" : "marginal means";
    rec.narrative = fmt::format(
        "Main effects are dominant and rankings are valid across the other factors. Recommended ({} {}, with "
        "statistically equivalent members): {}. {}",
        direction, basis, fmt::format("{}", fmt::join(parts, "; ")), conditional_note);
    return rec;
}

std::string to_text(const Recommendation& rec) {
    std::string out;
    out += fmt::format("scope: {}\n", to_string(rec.scope));
    out += fmt::format("ranking_basis: {}\n", to_string(rec.ranking_basis));
    out += fmt::format("top_group: {}\n", join(rec.top_group));
    for (const auto& c : rec.conditional) out += fmt::format("within {}: {}\n", c.condition, join(c.top_group));
    out += "\n" + rec.narrative + "\n";
    if (!rec.validity_caveats.empty()) {
        out += "\nvalidity caveats:\n";
        for (const auto& c : rec.validity_caveats) out += "- " + c + "\n";
    }
    return out;
}

}  // namespace stratus::decision
