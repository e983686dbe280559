#include "stratus/mixed.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "stratus/error.hpp"

namespace stratus::mixed {

namespace {

void push(VarianceComponents& vc, const std::string& term, double raw) {
    vc.raw.push_back(raw);
    if (raw < 0.0) vc.clamped.push_back(term);
    vc.components.emplace_back(term, std::max(0.0, raw));
}

}  // namespace

double VarianceComponents::get(std::string_view term) const {
    for (const auto& [name, value] : components) {
        if (name == term) return value;
    }
    throw Error(ErrorCode::NotApplicable, fmt::format("no variance component for '{}'", term));
}

bool VarianceComponents::has(std::string_view term) const noexcept {
    return std::any_of(components.begin(), components.end(), [&](const auto& c) { return c.first == term; });
}

double VarianceComponents::total() const noexcept {
    double sum = 0.0;
    for (const auto& c : components) sum += c.second;
    return sum;
}

std::pair<std::string, std::string> met_factors(const design::DesignSpec& spec) {
    const auto& a = spec.treatment_factors.at(0);
    const auto& b = spec.treatment_factors.at(1);
    if (a.role == design::Role::random && b.role == design::Role::fixed) return {b.name, a.name};
    return {a.name, b.name};
}

VarianceComponents estimate_components(const engine::AnovaTable& anova, const design::ValidatedDesign& design) {
    VarianceComponents vc;
    const std::string residual(design::kResidual);
    const double ms_e = anova.row(residual).ms;
    const double n = static_cast<double>(design.n_rows);

    if (design.spec.kind == design::DesignKind::met) {
        const auto [g, e] = met_factors(design.spec);
        const double n_g = static_cast<double>(design.levels(g).levels.size());
        const double n_e = static_cast<double>(design.levels(e).levels.size());
        const double r = static_cast<double>(design.replication);
        const std::string ge = design::effect_label(design.effects.find_factors({g, e})->factors);
        const double ms_ge = anova.row(ge).ms;
        push(vc, g, (anova.row(g).ms - ms_ge) / (r * n_e));
        push(vc, e, (anova.row(e).ms - ms_ge) / (r * n_g));
        push(vc, ge, (ms_ge - ms_e) / r);
        push(vc, residual, ms_e);
        return vc;
    }

    for (const auto& effect : design.effects.effects) {
        if (effect.role != design::Role::random) continue;
        if (effect.order != 1) {
            throw Error(ErrorCode::NotApplicable,
                        fmt::format("random interaction '{}' is outside the supported structure", effect.label()));
        }
        const double levels = static_cast<double>(design.levels(effect.factors.front()).levels.size());
        const double m = n / levels;
        push(vc, effect.label(), (anova.row(effect.label()).ms - ms_e) / m);
    }
    if (vc.components.empty()) {
        throw Error(ErrorCode::NotApplicable, "the design declares no random factors");
    }
    push(vc, residual, ms_e);
    return vc;
}

BlupTable blups(const VarianceComponents& vc, const engine::FittedModel& model, const design::ValidatedDesign& design) {
    BlupTable out;
    out.grand_mean = model.grand_mean;
    const double sigma2_e = vc.get(design::kResidual);

    if (design.spec.kind == design::DesignKind::met) {
        const auto [g, e] = met_factors(design.spec);
        const auto ge = design::effect_label(design.effects.find_factors({g, e})->factors);
        const double n_e = static_cast<double>(design.levels(e).levels.size());
        const double r = static_cast<double>(design.replication);
        out.factor = g;
        out.target_variance = vc.get(g);
        out.mean_error_variance = vc.get(ge) / n_e + sigma2_e / (r * n_e);
    } else {
        const auto it = std::find_if(design.spec.treatment_factors.begin(), design.spec.treatment_factors.end(),
                                     [](const design::FactorSpec& f) { return f.role == design::Role::fixed; });
        if (it == design.spec.treatment_factors.end()) {
            throw Error(ErrorCode::NotApplicable, "no fixed treatment factor to predict");
        }
        out.factor = it->name;
        const engine::EffectTerm& t = model.term(out.factor);
        const double m = static_cast<double>(t.n_per_level);
        double ss = 0.0;
        for (double d : t.deviations) ss += d * d;
        const double ms_t = ss * m / static_cast<double>(t.deviations.size() - 1);
        out.mean_error_variance = sigma2_e / m;
        out.target_variance = std::max(0.0, ms_t / m - out.mean_error_variance);
    }

    const double total = out.target_variance + out.mean_error_variance;
    if (!(total > 0.0)) {
        throw Error(ErrorCode::DegenerateShrinkage,
                    fmt::format("target and error variances of '{}' are both zero", out.factor));
    }
    out.shrinkage = out.target_variance / total;

    const engine::EffectTerm& t = model.term(out.factor);
    out.n_per_level = t.n_per_level;
    for (std::size_t i = 0; i < t.labels.size(); ++i) {
        BlupEntry entry;
        entry.level = t.labels[i];
        entry.raw_mean = t.means[i];
        entry.raw_deviation = t.means[i] - model.grand_mean;
        entry.effect = out.shrinkage * entry.raw_deviation;
        entry.predicted_mean = model.grand_mean + entry.effect;
        out.entries.push_back(std::move(entry));
    }
    std::stable_sort(out.entries.begin(), out.entries.end(),
                     [](const BlupEntry& a, const BlupEntry& b) { return a.raw_mean > b.raw_mean; });
    return out;
}

HeritabilityEstimate heritability(double sigma2_g, double sigma2_ge, double sigma2_e, int n_env, int n_rep) {
    if (n_env <= 0 || n_rep <= 0 || sigma2_g < 0.0 || sigma2_ge < 0.0 || sigma2_e < 0.0) {
        throw Error(ErrorCode::DomainError, "heritability needs nonnegative components and positive e, r");
    }
    HeritabilityEstimate h;
    h.genotypic_variance = sigma2_g;
    h.interaction_variance = sigma2_ge;
    h.residual_variance = sigma2_e;
    h.n_env = n_env;
    h.n_rep = n_rep;
    const double phenotypic = sigma2_g + sigma2_ge / n_env + sigma2_e / (static_cast<double>(n_rep) * n_env);
    h.h2 = phenotypic > 0.0 ? std::clamp(sigma2_g / phenotypic, 0.0, 1.0) : 0.0;
    return h;
}

HeritabilityEstimate heritability(const VarianceComponents& vc, const design::ValidatedDesign& design) {
    if (design.spec.kind != design::DesignKind::met) {
        throw Error(ErrorCode::NotApplicable, "heritability is defined for multi-environment designs");
    }
    const auto [g, e] = met_factors(design.spec);
    const auto ge = design::effect_label(design.effects.find_factors({g, e})->factors);
    return heritability(vc.get(g), vc.get(ge), vc.get(design::kResidual),
                        static_cast<int>(design.levels(e).levels.size()), static_cast<int>(design.replication));
}

}  // namespace stratus::mixed
