#pragma once

#include <array>
#include <compare>
#include <optional>
#include <string_view>

namespace scvm {

/// Four-level risk scale; enumerator values encode the order Low < Medium < High < Critical.
enum class RiskLevel { Low = 0, Medium = 1, High = 2, Critical = 3 };

inline constexpr std::array<RiskLevel, 4> kRiskLevelsDescending = {
    RiskLevel::Critical, RiskLevel::High, RiskLevel::Medium, RiskLevel::Low};

std::strong_ordering compare_risk(RiskLevel a, RiskLevel b);

std::string_view to_string(RiskLevel level);
std::optional<RiskLevel> parse_risk(std::string_view text);

} // namespace scvm
