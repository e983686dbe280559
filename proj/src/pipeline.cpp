#include "stratus/pipeline.hpp"

#include <fmt/format.h>

namespace stratus::pipeline {

AnalysisResult analyze(const design::DesignSpec& spec, const data::Dataset& data, const AnalysisOptions& options) {
    AnalysisResult out;
    out.design = design::validate_against_data(spec, data);
    out.data = data;
    out.model = engine::fit(out.design, data);
    out.anova = engine::anova(out.design, out.model);
    for (const auto& row : out.anova.rows) {
        if (row.degenerate) {
            out.notes.push_back(fmt::format("{}: denominator mean square {} is zero; F test is degenerate", row.source,
                                            row.denominator.value_or("")));
        }
    }

    out.tests = inference::effect_tests(out.anova, out.design.effects, spec.alpha);
    out.domain = inference::dominant_effects(out.tests, spec.alpha);
    out.comparisons = inference::admissible_comparisons(out.domain, out.model, out.anova, spec.alpha, out.design);
    for (const auto& set : out.comparisons) {
        if (set.conservative) {
            out.notes.push_back(fmt::format("{}: standard error mixes strata ({}); the larger mean square is used",
                                            set.title(), set.error_stratum));
        }
    }

    const bool has_random = spec.kind == design::DesignKind::mixed || spec.kind == design::DesignKind::met;
    if (has_random) {
        out.components = mixed::estimate_components(out.anova, out.design);
        for (const auto& term : out.components->clamped) {
            out.notes.push_back(fmt::format("variance component {} was negative and is clamped to 0", term));
        }
        try {
            out.blups = mixed::blups(*out.components, out.model, out.design);
        } catch (const Error& e) {
            out.notes.push_back(fmt::format("BLUPs not computed ({}): {}", e.name(), e.what()));
        }
    }
    if (spec.kind == design::DesignKind::met) {
        out.heritability = mixed::heritability(*out.components, out.design);
        const auto [g, e] = mixed::met_factors(spec);
        const std::string ge = out.design.effects.find_factors({g, e})->label();
        const auto& row = out.anova.row(ge);
        out.gxe_significant = row.p.has_value() && *row.p <= spec.alpha;
        try {
            out.stability = stability::analyze(stability::ge_matrix(out.model, out.design));
        } catch (const Error& err) {
            out.notes.push_back(fmt::format("stability analysis not computed ({}): {}", err.name(), err.what()));
        }
    }

    out.diagnostics = diagnostics::diagnose(out.model, out.design, out.domain,
                                            out.components ? &*out.components : nullptr, spec.alpha_v);

    std::optional<decision::GxeInput> gxe;
    if (out.gxe_significant) {
        gxe = decision::GxeInput{*out.gxe_significant, out.stability ? &*out.stability : nullptr};
    }
    out.recommendation = decision::decide(out.domain, out.comparisons, out.blups ? &*out.blups : nullptr, gxe,
                                          out.diagnostics, options.minimize);
    return out;
}

std::vector<GroupOutcome> grouped_analyze(const design::DesignSpec& spec, const data::Dataset& data,
                                          const AnalysisOptions& options) {
    const data::GroupPartition parts = data::partition(data, spec.groups);
    std::vector<GroupOutcome> out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        GroupOutcome g;
        g.key = parts.key_label(i);
        try {
            g.result = analyze(spec, parts.subsets[i], options);
        } catch (const Error& e) {
            g.result = GroupFailure{e.code(), e.what()};
        }
        out.push_back(std::move(g));
    }
    return out;
}

}  // namespace stratus::pipeline
