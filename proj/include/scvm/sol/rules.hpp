#pragma once

#include "scvm/core/finding.hpp"
#include "scvm/sol/segment.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace scvm::sol {

/// Everything a matcher may look at while evaluating one function scope.
struct MatchContext {
    const SourceContract& contract;
    const ContractLayout& layout;
    const FunctionSpan& function;
};

struct MatchOutcome {
    bool matched = false;
    /// Token index that localizes the match, when the condition is positional.
    std::optional<std::size_t> anchor;
};

/// Declarative condition over the tokens of one function scope.
///
/// A matcher is a tree built from JSON:
///   {"all": [...]}, {"any": [...]}, {"not": m}
///   {"kind": ["function", ...]}, {"visibility": ["public", "external"]}
///   {"mutates_state": bool}, {"caller_scoped_effects": bool}, {"has_modifier": [names]}
///   {"pragma_below": "0.8.0"}, {"imports": "SafeMath"}
///   {"sequence": [slot, ...]}   slot = lexeme | "*" (any token) | "$param" | "$state" | [alternatives]
///   {"effect": "value_transfer" | "state_write"}
///   {"before": {"first": m, "then": m}}
///   {"unchecked_call": [members]}, {"call_on_parameter": [members]}
/// The last four kinds (and sequence) are positional and can serve inside "before".
class Matcher {
public:
    virtual ~Matcher() = default;
    virtual MatchOutcome evaluate(const MatchContext& ctx) const = 0;
    /// Token positions of every occurrence; empty for non-positional matchers.
    virtual std::vector<std::size_t> positions(const MatchContext& /*ctx*/) const { return {}; }
    virtual bool positional() const { return false; }
};

/// Parses a matcher tree. Throws Error naming the offending key.
std::shared_ptr<const Matcher> compile_matcher(const nlohmann::json& spec);

struct PatternRule {
    std::string rule_id;
    VulnerabilityClass vclass;
    std::string description;
    double default_confidence = 0.0;
    /// Source form of the matcher, kept for lossless serialization.
    nlohmann::json matcher_spec;
    std::shared_ptr<const Matcher> matcher;

    friend bool operator==(const PatternRule& a, const PatternRule& b)
    {
        return a.rule_id == b.rule_id && a.vclass == b.vclass && a.description == b.description &&
               a.default_confidence == b.default_confidence && a.matcher_spec == b.matcher_spec;
    }
};

using RuleSet = std::vector<PatternRule>;

PatternRule rule_from_json(const nlohmann::json& j);
nlohmann::json rule_to_json(const PatternRule& rule);

/// One JSON object per line; blank lines and lines starting with '#' are ignored.
/// Rule ids must be unique and confidences within [0.5, 1].
RuleSet parse_rules(std::string_view text);
RuleSet load_rules(const std::filesystem::path& path);
std::string serialize_rules(const RuleSet& rules);

/// The eight-rule library compiled into the binary (same content as data/rules/default.jsonl).
const RuleSet& default_rules();

} // namespace scvm::sol
