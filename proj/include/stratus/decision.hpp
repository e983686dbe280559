#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stratus/diagnostics.hpp"
#include "stratus/inference.hpp"
#include "stratus/mixed.hpp"
#include "stratus/stability.hpp"

namespace stratus::decision {

enum class Scope { global, per_environment, per_combination, none };
enum class RankingBasis { marginal_means, cell_means, predicted_means };

std::string_view to_string(Scope scope) noexcept;
std::string_view to_string(RankingBasis basis) noexcept;

// Best statistically equivalent levels within one comparison set.
struct ConditionalChoice {
    std::string condition;
    std::vector<std::string> top_group;
};

struct Recommendation {
    Scope scope = Scope::none;
    std::vector<std::string> top_group;
    RankingBasis ranking_basis = RankingBasis::marginal_means;
    std::vector<std::string> validity_caveats;
    std::vector<ConditionalChoice> conditional;
    std::string narrative;
};

struct GxeInput {
    bool interaction_significant = false;
    const stability::StabilityResult* stability = nullptr;
};

// Members of the letter group of the best mean (highest, or lowest with
// `minimize`), best first. The group is a clique of non-significant pairs.
std::vector<std::string> top_group(const inference::ComparisonSet& set, bool minimize = false);

Recommendation decide(const inference::AdmissibleDomain& domain, const std::vector<inference::ComparisonSet>& comparisons,
                      const mixed::BlupTable* blups, const std::optional<GxeInput>& gxe,
                      const diagnostics::DiagnosticReport& diagnostics, bool minimize = false);

std::string to_text(const Recommendation& rec);

}  // namespace stratus::decision
