#pragma once

#include <optional>
#include <string>

namespace stratus {

// Fixed-point text with `decimals` places; "-0.000" collapses to "0.000",
// infinities print as "inf"/"-inf".
std::string fixed(double value, int decimals = 3);

// p-values below 0.001 print as "<0.001", otherwise three decimals.
std::string p_value_text(double p);

std::string fixed_or_blank(const std::optional<double>& value, int decimals = 3);

}  // namespace stratus
