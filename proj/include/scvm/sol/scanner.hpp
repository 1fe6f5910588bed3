#pragma once

#include "scvm/core/finding.hpp"
#include "scvm/sol/rules.hpp"

#include <vector>

namespace scvm::sol {

/// Evaluates every rule over every function body. Findings come back merged
/// (one per class and function). Throws on empty rulesets and on structural errors.
std::vector<Finding> scan(const SourceContract& contract, const RuleSet& rules);

/// Static detection channel: vulnerable iff scan reports anything, score is the
/// highest finding confidence (0 when clean).
ChannelResult static_channel(const SourceContract& contract, const RuleSet& rules);

} // namespace scvm::sol
