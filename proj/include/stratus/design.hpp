#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stratus/data.hpp"

namespace stratus::design {

enum class DesignKind { crd, rcbd, factorial, split_plot, mixed, met };
enum class Role { fixed, random };
enum class Placement { whole_plot, sub_plot, unit };

std::string_view to_string(DesignKind kind) noexcept;
std::string_view to_string(Role role) noexcept;
std::string_view to_string(Placement placement) noexcept;

struct FactorSpec {
    std::string name;
    Role role = Role::fixed;
    Placement stratum = Placement::unit;

    friend bool operator==(const FactorSpec&, const FactorSpec&) = default;
};

// Declarative description of an experiment. Construct through parse_design()
// or check_invariants(); the rest of the engine assumes a valid spec.
struct DesignSpec {
    DesignKind kind = DesignKind::crd;
    std::string response;
    std::vector<FactorSpec> treatment_factors;
    std::optional<FactorSpec> block;
    std::vector<std::string> groups;
    double alpha = 0.05;
    double alpha_v = 0.05;

    // Treatment factors in declaration order, then the block.
    [[nodiscard]] std::vector<std::string> model_factors() const;
    [[nodiscard]] const FactorSpec* factor(std::string_view name) const noexcept;

    friend bool operator==(const DesignSpec&, const DesignSpec&) = default;
};

// Throws Error(ConstraintError) when a kind-specific rule is broken.
void check_invariants(const DesignSpec& spec);

// JSON design document with keys kind, response, factors, block, groups,
// alpha, alpha_v. Unknown keys are rejected (SchemaError).
DesignSpec parse_design(std::string_view text);
std::string to_document(const DesignSpec& spec);

// Design document bundled with each builtin dataset.
DesignSpec builtin_design(std::string_view name);

inline constexpr std::string_view kResidual = "Residual";

// treatment: effect of interest; block: nuisance term; error_stratum: a term
// that only defines an error stratum (e.g. Block:WholePlot in a split plot).
enum class TermKind { treatment, block, error_stratum };

struct Effect {
    std::vector<std::string> factors;
    int order = 1;
    Role role = Role::fixed;
    std::string denominator;
    TermKind term = TermKind::treatment;

    [[nodiscard]] std::string label() const;
    [[nodiscard]] bool contains(std::string_view factor) const;
    [[nodiscard]] bool shares_factor(const Effect& other) const;
    // True when every factor of this effect also appears in `other`.
    [[nodiscard]] bool marginal_to(const Effect& other) const;

    friend bool operator==(const Effect&, const Effect&) = default;
};

struct Stratum {
    std::string label;
    std::vector<std::string> defining_factors;  // empty for the residual
};

struct EffectSet {
    std::vector<Effect> effects;
    std::vector<Stratum> strata;

    [[nodiscard]] const Effect* find(std::string_view label) const noexcept;
    [[nodiscard]] const Effect* find_factors(const std::vector<std::string>& factors) const noexcept;
    [[nodiscard]] bool has_stratum(std::string_view label) const noexcept;
};

std::string effect_label(const std::vector<std::string>& factors);

// Canonical term list and error-stratum map for the declared design kind.
EffectSet compile_effects(const DesignSpec& spec);

struct FactorLevels {
    std::string factor;
    std::vector<std::string> levels;  // first-appearance order
};

struct ValidatedDesign {
    DesignSpec spec;
    EffectSet effects;
    std::vector<FactorLevels> factors;  // same order as spec.model_factors()
    std::size_t replication = 0;        // observations per full factor cell
    std::size_t n_rows = 0;

    [[nodiscard]] const FactorLevels& levels(std::string_view factor) const;
    [[nodiscard]] std::size_t factor_index(std::string_view factor) const;
};

// Confirms columns exist, factors have >= 2 levels, the response is numeric
// and every factor cell holds the same number of observations.
ValidatedDesign validate_against_data(const DesignSpec& spec, const data::Dataset& data);

}  // namespace stratus::design
