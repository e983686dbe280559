#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stratus/design.hpp"
#include "stratus/engine.hpp"
#include "stratus/linalg.hpp"

namespace stratus::stability {

// Genotype x environment cell means.
struct GeMatrix {
    std::vector<std::string> genotypes;
    std::vector<std::string> environments;
    linalg::Matrix values;
};

// Built from the Genotype:Environment cell means of a met fit.
GeMatrix ge_matrix(const engine::FittedModel& model, const design::ValidatedDesign& design);

struct AmmiResult {
    std::vector<double> singular_values;  // min(g-1, e-1) components
    linalg::Matrix genotype_scores;       // u * sqrt(s)
    linalg::Matrix environment_scores;    // v * sqrt(s)
    std::vector<double> variance_explained;
    double interaction_ss = 0.0;  // sum of squared singular values (cell-mean scale)
};

struct FwEntry {
    std::string genotype;
    double slope = 0.0;
    double intercept = 0.0;
};

struct ErEntry {
    std::string genotype;
    double slope = 0.0;
    double rss = 0.0;
    std::optional<double> s2_di;  // absent with two environments
};

struct GgeResult {
    std::vector<double> singular_values;
    std::vector<double> variance_explained;
    linalg::Matrix genotype_coords;     // first two components
    linalg::Matrix environment_coords;  // first two components
    std::string scaling = "symmetric";
};

struct StabilityResult {
    GeMatrix matrix;
    std::vector<double> environment_index;
    AmmiResult ammi;
    std::vector<FwEntry> fw;
    std::vector<ErEntry> er;
    GgeResult gge;
};

// Double-centered SVD. Throws DegenerateMatrix below 2x2.
AmmiResult ammi(const GeMatrix& m);
// Regression on I_j = environment mean - grand mean. Throws
// ConstantEnvironmentIndex when every environment mean is equal.
std::vector<FwEntry> finlay_wilkinson(const GeMatrix& m);
std::vector<ErEntry> eberhart_russell(const GeMatrix& m);
// Environment-centered SVD, two components, symmetric scaling.
GgeResult gge_coordinates(const GeMatrix& m);

StabilityResult analyze(const GeMatrix& m);

}  // namespace stratus::stability
