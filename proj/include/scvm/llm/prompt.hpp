#pragma once

#include "scvm/retrieval/kb.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace scvm::llm {

/// Four-part prompt: role, task, expected output and background, followed by the input body.
/// Any field may contain `{name}` placeholders; `{{` and `}}` are literal braces.
struct PromptTemplate {
    std::string role_playing;
    std::string task_description;
    std::string expected_output;
    std::string background_information;
    std::string body;
};

using Bindings = std::map<std::string, std::string>;

/// Placeholder names referenced anywhere in the template.
std::set<std::string> placeholders(const PromptTemplate& tpl);

/// Substitutes placeholders in one pass (bound values are not rescanned) and
/// emits the sections in canonical order. Throws Error "unbound placeholder: <name>".
std::string render_prompt(const PromptTemplate& tpl, const Bindings& bindings);

/// Substitution on a single string with the same rules.
std::string substitute(std::string_view text, const Bindings& bindings);

/// Numbered reference list for a retrieval slot, or "no references found".
std::string format_references(const std::vector<retrieval::KbHit>& hits);

inline constexpr std::string_view kNoReferences = "no references found";

} // namespace scvm::llm
