#include "scvm/sol/lexer.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <string>
#include <unordered_set>

namespace scvm::sol {

namespace {

const std::unordered_set<std::string_view>& keyword_set()
{
    static const std::unordered_set<std::string_view> words = {
        "abstract", "address",   "anonymous",  "as",        "assembly", "bool",      "break",
        "byte",     "bytes",     "calldata",   "catch",     "constant", "constructor", "continue",
        "contract", "delete",    "do",         "else",      "emit",     "enum",      "error",
        "event",    "external",  "fallback",   "false",     "fixed",    "for",       "function",
        "hex",      "if",        "immutable",  "import",    "indexed",  "interface", "internal",
        "is",       "library",   "mapping",    "memory",    "modifier", "new",       "override",
        "payable",  "pragma",    "private",    "public",    "pure",     "receive",   "return",
        "returns",  "storage",   "string",     "struct",    "this",     "throw",     "true",
        "try",      "type",      "ufixed",     "uint",      "int",      "unchecked", "using",
        "view",     "virtual",   "while",      "var",       "wei",      "gwei",      "ether",
        "seconds",  "minutes",   "hours",      "days",      "weeks",    "years",
    };
    return words;
}

bool parse_uint(std::string_view text, int& out)
{
    if (text.empty() || text.front() == '0')
        return false;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc{} && ptr == text.data() + text.size();
}

// uint8..uint256, int8..int256, bytes1..bytes32, fixedMxN, ufixedMxN
bool is_sized_type(std::string_view word)
{
    auto sized_int = [](std::string_view bits) {
        int n = 0;
        return parse_uint(bits, n) && n >= 8 && n <= 256 && n % 8 == 0;
    };
    if (word.starts_with("uint"))
        return sized_int(word.substr(4));
    if (word.starts_with("int"))
        return sized_int(word.substr(3));
    if (word.starts_with("bytes")) {
        int n = 0;
        return parse_uint(word.substr(5), n) && n >= 1 && n <= 32;
    }
    std::string_view rest;
    if (word.starts_with("ufixed"))
        rest = word.substr(6);
    else if (word.starts_with("fixed"))
        rest = word.substr(5);
    else
        return false;
    auto x = rest.find('x');
    if (x == std::string_view::npos)
        return false;
    int n = 0;
    return sized_int(rest.substr(0, x)) && parse_uint(rest.substr(x + 1), n) && n <= 80;
}

// Longest match first.
constexpr std::array<std::string_view, 26> kMultiPunct = {
    ">>>=", ">>>", ">>=", "<<=", "**", "==", "!=", "<=", ">=", "&&", "||", "++", "--",
    "+=",   "-=",  "*=",  "/=",  "%=", "|=", "&=", "^=", "=>", "->", ">>", "<<", ":=",
};

constexpr std::string_view kSinglePunct = "()[]{};,.?:=+-*/%!~&|^<>@";

bool is_ident_start(unsigned char c)
{
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == '$';
}

bool is_ident_char(unsigned char c)
{
    return is_ident_start(c) || (c >= '0' && c <= '9');
}

bool is_digit(unsigned char c)
{
    return c >= '0' && c <= '9';
}

bool is_hex_digit(unsigned char c)
{
    return is_digit(c) || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}

bool is_space(unsigned char c)
{
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Returns the offset of the first invalid byte, or npos.
std::size_t find_invalid_utf8(std::string_view s)
{
    std::size_t i = 0;
    while (i < s.size()) {
        auto c = static_cast<unsigned char>(s[i]);
        std::size_t len = 0;
        std::uint32_t min = 0;
        if (c < 0x80) {
            ++i;
            continue;
        }
        if ((c & 0xE0) == 0xC0) {
            len = 2;
            min = 0x80;
        } else if ((c & 0xF0) == 0xE0) {
            len = 3;
            min = 0x800;
        } else if ((c & 0xF8) == 0xF0) {
            len = 4;
            min = 0x10000;
        } else {
            return i;
        }
        if (i + len > s.size())
            return i;
        std::uint32_t cp = c & (0xFF >> (len + 1));
        for (std::size_t k = 1; k < len; ++k) {
            auto cc = static_cast<unsigned char>(s[i + k]);
            if ((cc & 0xC0) != 0x80)
                return i;
            cp = (cp << 6) | (cc & 0x3F);
        }
        if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))
            return i;
        i += len;
    }
    return std::string_view::npos;
}

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    LexResult run()
    {
        if (auto bad = find_invalid_utf8(src_); bad != std::string_view::npos)
            throw LexError("invalid UTF-8 at byte " + std::to_string(bad), {bad, bad + 1});

        while (pos_ < src_.size()) {
            auto c = static_cast<unsigned char>(src_[pos_]);
            if (is_space(c)) {
                ++pos_;
            } else if (starts_with("//")) {
                line_comment();
            } else if (starts_with("/*")) {
                block_comment();
            } else if (is_ident_start(c)) {
                word();
            } else if (is_digit(c) || (c == '.' && pos_ + 1 < src_.size() && is_digit(src_[pos_ + 1]))) {
                number();
            } else if (c == '"' || c == '\'') {
                string_literal(static_cast<char>(c));
            } else {
                punct();
            }
        }
        return std::move(out_);
    }

private:
    bool starts_with(std::string_view s) const { return src_.substr(pos_).starts_with(s); }

    void emit(TokenKind kind, std::size_t begin)
    {
        out_.tokens.push_back({kind, std::string(src_.substr(begin, pos_ - begin)), {begin, pos_}});
    }

    void line_comment()
    {
        auto begin = pos_;
        auto nl = src_.find('\n', pos_);
        pos_ = nl == std::string_view::npos ? src_.size() : nl;
        out_.comments.push_back({begin, pos_});
    }

    void block_comment()
    {
        auto begin = pos_;
        auto close = src_.find("*/", pos_ + 2);
        if (close == std::string_view::npos)
            throw LexError("unterminated block comment", {begin, src_.size()});
        pos_ = close + 2;
        out_.comments.push_back({begin, pos_});
    }

    void word()
    {
        auto begin = pos_;
        while (pos_ < src_.size() && is_ident_char(src_[pos_]))
            ++pos_;
        auto text = src_.substr(begin, pos_ - begin);
        emit(is_keyword(text) ? TokenKind::Keyword : TokenKind::Identifier, begin);
    }

    void number()
    {
        auto begin = pos_;
        if (starts_with("0x") || starts_with("0X")) {
            pos_ += 2;
            while (pos_ < src_.size() && (is_hex_digit(src_[pos_]) || src_[pos_] == '_'))
                ++pos_;
        } else {
            auto digits = [&] {
                while (pos_ < src_.size() && (is_digit(src_[pos_]) || src_[pos_] == '_'))
                    ++pos_;
            };
            digits();
            if (pos_ + 1 < src_.size() && src_[pos_] == '.' && is_digit(src_[pos_ + 1])) {
                ++pos_;
                digits();
            }
            if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
                auto next = pos_ + 1;
                if (next < src_.size() && src_[next] == '-')
                    ++next;
                if (next < src_.size() && is_digit(src_[next])) {
                    pos_ = next;
                    digits();
                }
            }
        }
        if (pos_ < src_.size() && is_ident_start(src_[pos_]) && src_[pos_] != '_')
            throw LexError("malformed number literal", {begin, pos_ + 1});
        emit(TokenKind::Number, begin);
    }

    void string_literal(char quote)
    {
        auto begin = pos_++;
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == '\\') {
                pos_ += 2;
                continue;
            }
            if (c == '\n')
                break;
            ++pos_;
            if (c == quote) {
                emit(TokenKind::String, begin);
                return;
            }
        }
        throw LexError("unterminated string literal", {begin, std::min(pos_, src_.size())});
    }

    void punct()
    {
        auto begin = pos_;
        for (auto op : kMultiPunct) {
            if (starts_with(op)) {
                pos_ += op.size();
                emit(TokenKind::Punct, begin);
                return;
            }
        }
        if (kSinglePunct.find(src_[pos_]) != std::string_view::npos) {
            ++pos_;
            emit(TokenKind::Punct, begin);
            return;
        }
        throw LexError("unexpected character at byte " + std::to_string(pos_), {pos_, pos_ + 1});
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    LexResult out_;
};

} // namespace

bool is_keyword(std::string_view word)
{
    return keyword_set().contains(word) || is_sized_type(word);
}

LexResult tokenize_solidity(std::string_view source)
{
    return Lexer(source).run();
}

} // namespace scvm::sol
