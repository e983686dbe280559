#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stratus/design.hpp"
#include "stratus/engine.hpp"

namespace stratus::mixed {

// Expected-mean-square estimates. The residual variance is stored under
// "Residual"; `raw` keeps the unclamped values in the same order.
struct VarianceComponents {
    std::vector<std::pair<std::string, double>> components;
    std::vector<double> raw;
    std::vector<std::string> clamped;

    [[nodiscard]] double get(std::string_view term) const;
    [[nodiscard]] bool has(std::string_view term) const noexcept;
    [[nodiscard]] double total() const noexcept;
};

// mixed: sigma2_R = (MS_R - MS_E) / m_R for each random main effect, m_R
// observations per level. met: sigma2_GE = (MS_GE - MS_E) / r,
// sigma2_G = (MS_G - MS_GE) / (r e), sigma2_E = (MS_E' - MS_GE) / (r g).
// Throws NotApplicable without random terms.
VarianceComponents estimate_components(const engine::AnovaTable& anova, const design::ValidatedDesign& design);

struct BlupEntry {
    std::string level;
    double raw_mean = 0.0;
    double raw_deviation = 0.0;
    double effect = 0.0;          // shrunken, centered
    double predicted_mean = 0.0;  // grand mean + effect
};

struct BlupTable {
    std::string factor;
    std::vector<BlupEntry> entries;  // descending predicted mean
    double grand_mean = 0.0;
    double shrinkage = 0.0;
    double target_variance = 0.0;
    double mean_error_variance = 0.0;  // variance of a level mean
    std::size_t n_per_level = 0;
};

// Target is the genotype factor for met and the first fixed treatment factor
// for mixed. Throws DegenerateShrinkage when both variances are zero.
BlupTable blups(const VarianceComponents& vc, const engine::FittedModel& model, const design::ValidatedDesign& design);

struct HeritabilityEstimate {
    double h2 = 0.0;
    double genotypic_variance = 0.0;
    double interaction_variance = 0.0;
    double residual_variance = 0.0;
    int n_env = 0;
    int n_rep = 0;
};

HeritabilityEstimate heritability(double sigma2_g, double sigma2_ge, double sigma2_e, int n_env, int n_rep);
// Uses the genotype, interaction and residual components of a met design.
HeritabilityEstimate heritability(const VarianceComponents& vc, const design::ValidatedDesign& design);

// Genotype and environment factor names of a met design, in that order.
std::pair<std::string, std::string> met_factors(const design::DesignSpec& spec);

}  // namespace stratus::mixed
