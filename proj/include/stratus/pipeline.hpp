#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "stratus/data.hpp"
#include "stratus/decision.hpp"
#include "stratus/design.hpp"
#include "stratus/diagnostics.hpp"
#include "stratus/engine.hpp"
#include "stratus/error.hpp"
#include "stratus/inference.hpp"
#include "stratus/mixed.hpp"
#include "stratus/stability.hpp"

namespace stratus::pipeline {

struct AnalysisOptions {
    bool minimize = false;
};

// Phase I (design compilation, fit, ANOVA) and Phase II (admissible
// inference, diagnostics, decision) for one balanced dataset.
struct AnalysisResult {
    design::ValidatedDesign design;
    data::Dataset data;
    engine::FittedModel model;
    engine::AnovaTable anova;
    std::vector<inference::EffectTest> tests;
    inference::AdmissibleDomain domain;
    std::vector<inference::ComparisonSet> comparisons;
    std::optional<mixed::VarianceComponents> components;
    std::optional<mixed::BlupTable> blups;
    std::optional<mixed::HeritabilityEstimate> heritability;
    std::optional<stability::StabilityResult> stability;
    std::optional<bool> gxe_significant;
    diagnostics::DiagnosticReport diagnostics;
    decision::Recommendation recommendation;
    std::vector<std::string> notes;
};

AnalysisResult analyze(const design::DesignSpec& spec, const data::Dataset& data, const AnalysisOptions& options = {});

struct GroupFailure {
    ErrorCode code = ErrorCode::DomainError;
    std::string message;
};

struct GroupOutcome {
    std::string key;  // "Year=2021" style; "all" without grouping
    std::variant<AnalysisResult, GroupFailure> result;

    [[nodiscard]] bool ok() const noexcept { return result.index() == 0; }
};

// One analysis per observed combination of spec.groups, in first-appearance
// order. A failing group is recorded and does not stop its siblings.
std::vector<GroupOutcome> grouped_analyze(const design::DesignSpec& spec, const data::Dataset& data,
                                          const AnalysisOptions& options = {});

}  // namespace stratus::pipeline
