#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "stratus/design.hpp"
#include "stratus/engine.hpp"

namespace stratus::inference {

struct EffectTest {
    design::Effect effect;
    double f = 0.0;
    double p = 1.0;
    bool significant = false;
};

// Tests of the effects eligible for interpretation: treatment terms only
// (blocks, error strata and random nuisance factors are skipped). Untestable
// rows (0/0) count as not significant.
std::vector<EffectTest> effect_tests(const engine::AnovaTable& anova, const design::EffectSet& effects, double alpha);

enum class Mode { main_effects, interaction_combinations, none };
enum class ExclusionReason { subsumed_by_interaction, not_significant, lower_order };

std::string_view to_string(Mode mode) noexcept;
std::string_view to_string(ExclusionReason reason) noexcept;

struct Exclusion {
    design::Effect effect;
    ExclusionReason reason = ExclusionReason::not_significant;
};

struct AdmissibleDomain {
    std::vector<design::Effect> dominant;
    std::vector<Exclusion> excluded;
    Mode mode = Mode::none;

    [[nodiscard]] bool is_dominant(std::string_view label) const noexcept;
};

// Every significant effect of the highest significant order is dominant.
AdmissibleDomain dominant_effects(const std::vector<EffectTest>& tests, double alpha);

struct LevelMean {
    std::string label;
    double mean = 0.0;
    std::size_t n = 0;
    std::string letters;
};

struct PairComparison {
    std::string a;
    std::string b;
    double difference = 0.0;  // mean(a) - mean(b)
    double hsd = 0.0;
    bool significant = false;
};

enum class SetKind { marginal, simple, combinations };
std::string_view to_string(SetKind kind) noexcept;

struct ComparisonSet {
    std::string target;     // effect label
    SetKind kind = SetKind::marginal;
    std::string condition;  // "Irrigation=Full" for simple effects, empty otherwise
    std::vector<LevelMean> means;
    double mse = 0.0;
    int df_error = 0;
    std::string error_stratum;
    double q_critical = 0.0;
    double hsd = 0.0;
    // The standard error mixes strata; mse/df are the conservative choice.
    bool conservative = false;
    bool degenerate_mse = false;
    std::vector<PairComparison> pairs;

    [[nodiscard]] const LevelMean* find(std::string_view label) const noexcept;
    [[nodiscard]] const PairComparison* pair(std::string_view a, std::string_view b) const noexcept;
    [[nodiscard]] std::string title() const;
};

// Insert-and-absorb letters from a symmetric significance matrix; columns
// are lettered in order of their best-ranked member (ranking given by
// `order`, best first). Returns one letter string per level.
std::vector<std::string> compact_letters(const std::vector<std::vector<bool>>& significant,
                                         const std::vector<std::size_t>& order);

// Tukey HSD over equally replicated means. mse = 0 makes every pair of
// distinct means significant.
ComparisonSet tukey_hsd(std::string target, std::vector<LevelMean> means, double mse, int df, double alpha);

// Comparison sets admitted by the domain: marginal means of dominant main
// effects, or for a dominant interaction the simple effects of each factor
// within each level combination of the others plus the full cell set.
std::vector<ComparisonSet> admissible_comparisons(const AdmissibleDomain& domain, const engine::FittedModel& model,
                                                  const engine::AnovaTable& anova, double alpha,
                                                  const design::ValidatedDesign& design);

}  // namespace stratus::inference
