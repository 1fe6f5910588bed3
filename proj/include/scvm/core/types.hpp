#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace scvm {

/// Half-open byte range [begin, end) into a contract's source text.
struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - begin; }
    bool contains(const Span& other) const { return begin <= other.begin && other.end <= end; }
    friend auto operator<=>(const Span&, const Span&) = default;
};

enum class TokenKind { Keyword, Identifier, Number, String, Punct };

std::string_view to_string(TokenKind kind);

struct Token {
    TokenKind kind;
    std::string lexeme;
    Span span;

    friend bool operator==(const Token&, const Token&) = default;
};

using TokenStream = std::vector<Token>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Lexical or structural failure, located by a byte span.
class SourceError : public Error {
public:
    SourceError(const std::string& what, Span where) : Error(what), span_(where) {}
    Span span() const { return span_; }

private:
    Span span_;
};

class LexError : public SourceError {
public:
    using SourceError::SourceError;
};

class StructureError : public SourceError {
public:
    using SourceError::SourceError;
};

/// Solidity source unit. Text is LF-normalized and tokenized on construction,
/// so every instance satisfies the token-span invariants.
class SourceContract {
public:
    /// Normalizes line endings, tokenizes and extracts the pragma. Throws LexError.
    static SourceContract parse(std::string id, std::string_view text);

    const std::string& id() const { return id_; }
    const std::string& source() const { return source_; }
    const TokenStream& tokens() const { return tokens_; }
    const std::vector<Span>& comments() const { return comments_; }
    /// Raw constraint text of `pragma solidity ...;`, e.g. "^0.7.6" or ">=0.6.0 <0.9.0".
    const std::optional<std::string>& pragma_version() const { return pragma_; }

private:
    std::string id_;
    std::string source_;
    TokenStream tokens_;
    std::vector<Span> comments_;
    std::optional<std::string> pragma_;
};

/// Converts CRLF and lone CR to LF.
std::string normalize_newlines(std::string_view text);

struct Version {
    int major = 0;
    int minor = 0;
    int patch = 0;
    friend auto operator<=>(const Version&, const Version&) = default;
};

std::optional<Version> parse_version(std::string_view text);

/// Lowest compiler version admitted by a pragma constraint, e.g. ">=0.6.0 <0.9.0" -> 0.6.0.
std::optional<Version> lowest_admitted_version(std::string_view constraint);

} // namespace scvm
