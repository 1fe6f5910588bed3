#include "scvm/core/risk.hpp"

#include <algorithm>
#include <cctype>
#include <string>

namespace scvm {

std::strong_ordering compare_risk(RiskLevel a, RiskLevel b)
{
    return static_cast<int>(a) <=> static_cast<int>(b);
}

std::string_view to_string(RiskLevel level)
{
    switch (level) {
    case RiskLevel::Critical:
        return "Critical";
    case RiskLevel::High:
        return "High";
    case RiskLevel::Medium:
        return "Medium";
    case RiskLevel::Low:
        return "Low";
    }
    return "?";
}

std::optional<RiskLevel> parse_risk(std::string_view text)
{
    std::string lowered;
    for (char c : text) {
        if (!std::isspace(static_cast<unsigned char>(c)))
            lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    for (auto level : kRiskLevelsDescending) {
        std::string name(to_string(level));
        std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
        if (lowered == name)
            return level;
    }
    return std::nullopt;
}

} // namespace scvm
