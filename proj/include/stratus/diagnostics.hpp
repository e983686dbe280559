#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stratus/design.hpp"
#include "stratus/engine.hpp"
#include "stratus/inference.hpp"
#include "stratus/mixed.hpp"

namespace stratus::diagnostics {

struct StratumResiduals {
    std::string stratum;
    int df = 0;
    std::vector<double> residuals;
    // For each residual, the row of one observation in its unit (whole-plot
    // residuals stand for several rows; the first is recorded).
    std::vector<std::size_t> rows;
};

// Residual stratum for every design; split plots add the whole-plot stratum
// (Block x A deviations, one per whole plot). With `vc` given for a mixed
// design the residual stratum holds conditional residuals
// y - mu - fixed - lambda_R * d_R.
std::vector<StratumResiduals> residuals_by_stratum(const engine::FittedModel& model,
                                                   const design::ValidatedDesign& design,
                                                   const mixed::VarianceComponents* vc = nullptr);

struct ShapiroResult {
    double w = 1.0;
    double p = 1.0;
};

// Royston's approximation (AS R94). Throws SampleTooSmall (n < 3),
// SampleTooLarge (n > 5000), ZeroVariance.
ShapiroResult shapiro_wilk(std::vector<double> x);

struct LeveneResult {
    double f = 0.0;
    double p = 1.0;
};

// Brown-Forsythe variant: one-way ANOVA on |x - group median|. Throws
// InsufficientGroups with fewer than two groups or a group of size < 2.
LeveneResult levene(const std::vector<std::vector<double>>& groups);

struct StratumDiagnostic {
    std::string stratum;
    int df = 0;
    std::size_t n = 0;
    std::optional<double> shapiro_w;
    std::optional<double> shapiro_p;
    std::optional<double> levene_f;
    std::optional<double> levene_p;
    std::vector<std::string> levene_factors;
    bool normality_ok = true;
    bool homogeneity_ok = true;
    std::vector<std::string> notes;
};

struct DiagnosticReport {
    std::vector<StratumDiagnostic> strata;
    bool overall_valid = true;
    double alpha_v = 0.05;
};

// Sets the pass flags from the p-values: a test passes when p > alpha_v,
// an untestable stratum is not rejected, and alpha_v <= 0 rejects nothing.
DiagnosticReport validity(std::vector<StratumDiagnostic> entries, double alpha_v);

DiagnosticReport diagnose(const engine::FittedModel& model, const design::ValidatedDesign& design,
                          const inference::AdmissibleDomain& domain, const mixed::VarianceComponents* vc,
                          double alpha_v);

}  // namespace stratus::diagnostics
