#include "scvm/core/types.hpp"

#include "scvm/sol/lexer.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

namespace scvm {

std::string_view to_string(TokenKind kind)
{
    switch (kind) {
    case TokenKind::Keyword:
        return "keyword";
    case TokenKind::Identifier:
        return "ident";
    case TokenKind::Number:
        return "number";
    case TokenKind::String:
        return "string";
    case TokenKind::Punct:
        return "punct";
    }
    return "?";
}

std::string normalize_newlines(std::string_view text)
{
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '\r') {
            out.push_back('\n');
            if (i + 1 < text.size() && text[i + 1] == '\n')
                ++i;
        } else {
            out.push_back(text[i]);
        }
    }
    return out;
}

std::optional<Version> parse_version(std::string_view text)
{
    Version v;
    int* parts[] = {&v.major, &v.minor, &v.patch};
    std::size_t pos = 0;
    for (int i = 0; i < 3; ++i) {
        if (pos >= text.size())
            return i == 0 ? std::nullopt : std::optional<Version>(v);
        auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + text.size(), *parts[i]);
        if (ec != std::errc{})
            return i == 0 ? std::nullopt : std::optional<Version>(v);
        pos = static_cast<std::size_t>(ptr - text.data());
        if (pos < text.size() && text[pos] == '.')
            ++pos;
        else
            break;
    }
    return v;
}

std::optional<Version> lowest_admitted_version(std::string_view constraint)
{
    // Alternatives joined by "||"; within one alternative the lower bound is
    // the first comparator that admits versions from below (^, ~, >=, >, =, bare).
    std::optional<Version> best;
    std::size_t start = 0;
    while (start <= constraint.size()) {
        auto bar = constraint.find("||", start);
        auto alt = constraint.substr(start, bar == std::string_view::npos ? std::string_view::npos : bar - start);
        std::istringstream words{std::string(alt)};
        std::string word;
        std::optional<Version> lower;
        while (words >> word) {
            std::string_view w = word;
            if (w.starts_with("<"))
                continue;
            while (!w.empty() && (w.front() == '^' || w.front() == '~' || w.front() == '>' || w.front() == '='))
                w.remove_prefix(1);
            if (auto v = parse_version(w)) {
                lower = lower ? std::min(*lower, *v) : *v;
            }
        }
        if (lower)
            best = best ? std::min(*best, *lower) : *lower;
        if (bar == std::string_view::npos)
            break;
        start = bar + 2;
    }
    return best;
}

namespace {

std::optional<std::string> extract_pragma(const std::string& source, const TokenStream& tokens)
{
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
        if (tokens[i].lexeme != "pragma" || tokens[i + 1].lexeme != "solidity")
            continue;
        std::size_t j = i + 2;
        while (j < tokens.size() && tokens[j].lexeme != ";")
            ++j;
        if (j == i + 2 || j >= tokens.size())
            return std::nullopt;
        auto begin = tokens[i + 2].span.begin;
        auto end = tokens[j - 1].span.end;
        return source.substr(begin, end - begin);
    }
    return std::nullopt;
}

} // namespace

SourceContract SourceContract::parse(std::string id, std::string_view text)
{
    SourceContract c;
    c.id_ = std::move(id);
    c.source_ = normalize_newlines(text);
    auto lexed = sol::tokenize_solidity(c.source_);
    c.tokens_ = std::move(lexed.tokens);
    c.comments_ = std::move(lexed.comments);
    c.pragma_ = extract_pragma(c.source_, c.tokens_);
    return c;
}

} // namespace scvm
