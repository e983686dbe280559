#include "stratus/numfmt.hpp"

#include <cmath>

#include <fmt/format.h>

namespace stratus {

std::string fixed(double value, int decimals) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    std::string text = fmt::format("{:.{}f}", value, decimals);
    if (text.front() == '-' && text.find_first_not_of("-0.") == std::string::npos) text.erase(0, 1);
    return text;
}

std::string p_value_text(double p) {
    if (p < 0.001) return "<0.001";
    return fixed(p, 3);
}

std::string fixed_or_blank(const std::optional<double>& value, int decimals) {
    return value ? fixed(*value, decimals) : std::string();
}

}  // namespace stratus
