#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stratus/data.hpp"
#include "stratus/design.hpp"

namespace stratus::engine {

// One term of the sum-to-zero decomposition. Levels are the combinations of
// the term's factors, row-major in effect factor order; labels join level
// names with ":".
struct EffectTerm {
    design::Effect effect;
    std::vector<std::size_t> shape;
    std::vector<std::string> labels;
    std::vector<double> means;       // marginal means M(E)
    std::vector<double> deviations;  // sum-to-zero effect estimates
    std::size_t n_per_level = 0;
};

struct FittedModel {
    double grand_mean = 0.0;
    std::vector<EffectTerm> terms;  // compiled effect order
    std::vector<double> observed;
    std::vector<double> fitted;
    std::vector<double> residuals;
    // level index of every row for every model factor (design factor order)
    std::vector<std::vector<std::size_t>> row_levels;
    EffectTerm cells;  // full factor-cell means over all model factors

    [[nodiscard]] const EffectTerm* find(std::string_view label) const noexcept;
    [[nodiscard]] const EffectTerm& term(std::string_view label) const;
    // Index into `t.labels` of the level combination observed on `row`.
    [[nodiscard]] std::size_t level_of(const EffectTerm& t, const design::ValidatedDesign& design,
                                       std::size_t row) const;
};

// Marginal means and deviations for an arbitrary factor subset (any order).
EffectTerm decompose(const design::ValidatedDesign& design, const FittedModel& model,
                     const std::vector<std::string>& factors);

FittedModel fit(const design::ValidatedDesign& design, const data::Dataset& data);

struct AnovaRow {
    std::string source;
    int df = 0;
    double ss = 0.0;
    double ms = 0.0;
    std::optional<double> f;
    std::optional<double> p;
    std::optional<std::string> denominator;
    // Denominator mean square was zero: F = +inf with p = 0, or undefined
    // when the numerator is also zero.
    bool degenerate = false;
};

struct AnovaTable {
    std::vector<AnovaRow> rows;  // effects in compiled order, then strata-only rows, Residual last

    [[nodiscard]] const AnovaRow* find(std::string_view source) const noexcept;
    [[nodiscard]] const AnovaRow& row(std::string_view source) const;
    [[nodiscard]] int total_df() const noexcept;
    [[nodiscard]] double total_ss() const noexcept;
};

struct FTest {
    std::optional<double> f;
    std::optional<double> p;
    bool degenerate = false;
};

// F = ms / ms_den with p from the F survival function. A denominator at or
// below `zero_tolerance` is treated as exactly zero.
FTest f_test(double ms, int df, double ms_den, int df_den, double zero_tolerance = 0.0);

AnovaTable anova(const design::ValidatedDesign& design, const FittedModel& model);

// Delimited form: source,df,ss,ms,f,p,denominator with three decimals.
std::string to_csv(const AnovaTable& table);

}  // namespace stratus::engine
