#pragma once

#include "scvm/core/types.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace scvm {

struct VulnerabilityClass {
    std::string name;
    std::optional<std::string> swc_id;

    friend bool operator==(const VulnerabilityClass&, const VulnerabilityClass&) = default;
};

/// Canonical classes shipped with the tool. Names are unique.
const std::vector<VulnerabilityClass>& known_classes();

/// Case-insensitive lookup by name or SWC id; unknown names come back without an SWC id.
VulnerabilityClass resolve_class(std::string_view name);

enum class Channel { Static, Retrieval, Model };

std::string_view to_string(Channel channel);
Channel channel_from_string(std::string_view text);

struct Location {
    Span span;
    /// Enclosing function name; "<contract>" for contract-level findings.
    std::string function;

    friend bool operator==(const Location&, const Location&) = default;
};

inline constexpr std::string_view kContractScope = "<contract>";

struct Finding {
    std::string contract_id;
    VulnerabilityClass vclass;
    Location location;
    std::string evidence;
    Channel channel = Channel::Static;
    double confidence = 0.0;

    friend bool operator==(const Finding&, const Finding&) = default;
};

/// Identity used for deduplication: (class name, enclosing function).
bool same_identity(const Finding& a, const Finding& b);

/// Deduplicates on identity, keeping the most confident instance, sorted by location.
/// Throws Error when findings reference more than one contract.
std::vector<Finding> merge_findings(const std::vector<std::vector<Finding>>& lists);
std::vector<Finding> merge_findings(const std::vector<Finding>& list);

enum class Verdict { Safe, Vulnerable };

std::string_view to_string(Verdict verdict);
Verdict verdict_from_string(std::string_view text);

inline constexpr double kDefaultChannelThreshold = 0.5;

struct ChannelResult {
    Channel channel = Channel::Static;
    Verdict verdict = Verdict::Safe;
    double score = 0.0;
    std::vector<Finding> findings;

    friend bool operator==(const ChannelResult&, const ChannelResult&) = default;
};

ChannelResult make_channel_result(Channel channel, double score, std::vector<Finding> findings,
                                  double threshold = kDefaultChannelThreshold);

void to_json(nlohmann::json& j, const VulnerabilityClass& c);
void from_json(const nlohmann::json& j, VulnerabilityClass& c);
void to_json(nlohmann::json& j, const Finding& f);
void from_json(const nlohmann::json& j, Finding& f);
void to_json(nlohmann::json& j, const ChannelResult& r);
void from_json(const nlohmann::json& j, ChannelResult& r);

} // namespace scvm
