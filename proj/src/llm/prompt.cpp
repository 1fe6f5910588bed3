#include "scvm/llm/prompt.hpp"

#include <cctype>

namespace scvm::llm {

namespace {

bool ident_start(char c)
{
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool ident_char(char c)
{
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Calls on_text for literal runs and on_name for placeholders.
template <typename Text, typename Name>
void walk(std::string_view s, Text&& on_text, Name&& on_name)
{
    std::size_t i = 0;
    while (i < s.size()) {
        char c = s[i];
        if ((c == '{' || c == '}') && i + 1 < s.size() && s[i + 1] == c) {
            on_text(std::string_view(&s[i], 1));
            i += 2;
            continue;
        }
        if (c == '{' && i + 1 < s.size() && ident_start(s[i + 1])) {
            std::size_t j = i + 1;
            while (j < s.size() && ident_char(s[j]))
                ++j;
            if (j < s.size() && s[j] == '}') {
                on_name(s.substr(i + 1, j - i - 1));
                i = j + 1;
                continue;
            }
        }
        on_text(std::string_view(&s[i], 1));
        ++i;
    }
}

void collect(std::string_view s, std::set<std::string>& out)
{
    walk(s, [](std::string_view) {}, [&](std::string_view name) { out.emplace(name); });
}

} // namespace

std::set<std::string> placeholders(const PromptTemplate& tpl)
{
    std::set<std::string> out;
    for (const auto* f : {&tpl.role_playing, &tpl.task_description, &tpl.expected_output,
                          &tpl.background_information, &tpl.body})
        collect(*f, out);
    return out;
}

std::string substitute(std::string_view text, const Bindings& bindings)
{
    std::string out;
    out.reserve(text.size());
    walk(
        text, [&](std::string_view t) { out += t; },
        [&](std::string_view name) {
            auto it = bindings.find(std::string(name));
            if (it == bindings.end())
                throw Error("unbound placeholder: " + std::string(name));
            out += it->second;
        });
    return out;
}

std::string render_prompt(const PromptTemplate& tpl, const Bindings& bindings)
{
    // first missing name in sorted order
    for (const auto& name : placeholders(tpl)) {
        if (!bindings.count(name))
            throw Error("unbound placeholder: " + name);
    }
    std::string out;
    auto section = [&](std::string_view title, const std::string& text) {
        if (!out.empty())
            out += "\n\n";
        out += "### ";
        out += title;
        out += '\n';
        out += substitute(text, bindings);
    };
    section("Role", tpl.role_playing);
    section("Task", tpl.task_description);
    section("Expected Output", tpl.expected_output);
    section("Background Information", tpl.background_information);
    section("Input", tpl.body);
    out += '\n';
    return out;
}

std::string format_references(const std::vector<retrieval::KbHit>& hits)
{
    if (hits.empty())
        return std::string(kNoReferences);
    std::string out;
    for (std::size_t i = 0; i < hits.size(); ++i) {
        const auto& c = *hits[i].chunk;
        if (i > 0)
            out += '\n';
        out += "[" + std::to_string(i + 1) + "] " + c.doc_id + " (" + c.source;
        for (const auto& tag : c.swc_tags)
            out += ", " + tag;
        out += "): " + c.text;
    }
    return out;
}

} // namespace scvm::llm
