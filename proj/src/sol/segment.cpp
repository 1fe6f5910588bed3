#include "scvm/sol/segment.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <unordered_set>

namespace scvm::sol {

namespace {

constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

const std::unordered_set<std::string_view> kAssignOps = {
    "=", "+=", "-=", "*=", "/=", "%=", "|=", "&=", "^=", "<<=", ">>=", ">>>=",
};

bool is_open(std::string_view s)
{
    return s == "(" || s == "[" || s == "{";
}

char opener_for(std::string_view close)
{
    return close == ")" ? '(' : close == "]" ? '[' : '{';
}

class Analyzer {
public:
    explicit Analyzer(const TokenStream& tokens) : t_(tokens), match_(tokens.size(), npos) {}

    ContractLayout run()
    {
        match_groups();
        walk(0, t_.size(), "");
        for (auto& fn : layout_.functions)
            collect_effects(fn);
        return std::move(layout_);
    }

private:
    std::string_view lex(std::size_t i) const { return i < t_.size() ? std::string_view(t_[i].lexeme) : ""; }
    bool is_ident(std::size_t i) const { return i < t_.size() && t_[i].kind == TokenKind::Identifier; }

    // Braces must balance; parentheses and brackets are matched best-effort.
    void match_groups()
    {
        std::vector<std::size_t> braces;
        std::vector<std::size_t> others;
        for (std::size_t i = 0; i < t_.size(); ++i) {
            if (t_[i].kind != TokenKind::Punct)
                continue;
            const auto& s = t_[i].lexeme;
            if (s == "{") {
                braces.push_back(i);
            } else if (s == "}") {
                if (braces.empty())
                    throw StructureError("unbalanced braces: unexpected '}'", t_[i].span);
                match_[braces.back()] = i;
                match_[i] = braces.back();
                braces.pop_back();
                // Parenthesis groups cannot span a brace boundary.
                while (!others.empty() && others.back() > match_[i])
                    others.pop_back();
            } else if (s == "(" || s == "[") {
                others.push_back(i);
            } else if (s == ")" || s == "]") {
                auto want = opener_for(s);
                auto it = std::find_if(others.rbegin(), others.rend(),
                                       [&](std::size_t o) { return t_[o].lexeme[0] == want; });
                if (it != others.rend()) {
                    auto o = *it;
                    match_[o] = i;
                    match_[i] = o;
                    others.erase(std::next(it).base(), others.end());
                }
            }
        }
        if (!braces.empty())
            throw StructureError("unbalanced braces: '{' is never closed", t_[braces.back()].span);
    }

    std::size_t after_group(std::size_t open) const
    {
        return match_[open] == npos ? open + 1 : match_[open] + 1;
    }

    // Index just past the next `;` at group depth zero, bounded by `end`.
    std::size_t skip_statement(std::size_t i, std::size_t end) const
    {
        while (i < end) {
            if (lex(i) == ";")
                return i + 1;
            if (is_open(lex(i)) && t_[i].kind == TokenKind::Punct)
                i = after_group(i);
            else
                ++i;
        }
        return end;
    }

    void walk(std::size_t begin, std::size_t end, const std::string& contract)
    {
        std::size_t i = begin;
        while (i < end) {
            auto word = lex(i);
            if (word == "import") {
                for (std::size_t j = i + 1; j < end && lex(j) != ";"; ++j) {
                    if (t_[j].kind == TokenKind::String) {
                        auto& s = t_[j].lexeme;
                        layout_.imports.push_back(s.substr(1, s.size() - 2));
                        break;
                    }
                }
                i = skip_statement(i, end);
            } else if (word == "using") {
                if (is_ident(i + 1))
                    layout_.using_libraries.push_back(t_[i + 1].lexeme);
                i = skip_statement(i, end);
            } else if ((word == "contract" || word == "library" || word == "interface") && is_ident(i + 1)) {
                std::size_t open = i + 2;
                while (open < end && lex(open) != "{" && lex(open) != ";")
                    ++open;
                if (open >= end || lex(open) == ";") {
                    i = open + 1;
                    continue;
                }
                walk(open + 1, match_[open], t_[i + 1].lexeme);
                i = match_[open] + 1;
            } else if (word == "function" || word == "constructor" || word == "fallback" || word == "receive") {
                i = declaration(i, end, contract);
            } else if (word == "modifier" || word == "struct" || word == "enum") {
                std::size_t j = i + 1;
                while (j < end && lex(j) != "{" && lex(j) != ";") {
                    j = (lex(j) == "(" ? after_group(j) : j + 1);
                }
                i = (j < end && lex(j) == "{") ? match_[j] + 1 : j + 1;
            } else if (word == "event" || word == "error" || word == "pragma") {
                i = skip_statement(i, end);
            } else if (word == "{") {
                i = after_group(i);
            } else if (word == ";" || word == "}" || word == "abstract") {
                ++i;
            } else {
                auto next = skip_statement(i, end);
                if (!contract.empty())
                    state_variable(i, next);
                i = next;
            }
        }
    }

    // [begin, end) spans one contract-level statement including its `;`.
    void state_variable(std::size_t begin, std::size_t end)
    {
        std::size_t stop = end;
        for (std::size_t j = begin; j < end; ++j) {
            auto s = lex(j);
            if (s == "constant" || s == "immutable")
                return;
            if (s == "=" || s == ";") {
                stop = j;
                break;
            }
            if (is_open(s) && t_[j].kind == TokenKind::Punct)
                j = after_group(j) - 1;
        }
        if (stop > begin && is_ident(stop - 1) && stop - 1 > begin)
            layout_.state_variables.push_back(t_[stop - 1].lexeme);
    }

    std::size_t declaration(std::size_t i, std::size_t end, const std::string& contract)
    {
        FunctionSpan fn;
        fn.contract = contract;
        auto word = lex(i);
        std::size_t params = npos;
        if (word == "function") {
            if (is_ident(i + 1) && lex(i + 2) == "(") {
                fn.name = t_[i + 1].lexeme;
                params = i + 2;
            } else if (lex(i + 1) == "(") {
                fn.name = "fallback";
                fn.kind = FunctionKind::Fallback;
                params = i + 1;
            } else {
                return i + 1;
            }
        } else if (lex(i + 1) == "(") {
            fn.name = std::string(word);
            fn.kind = word == "constructor" ? FunctionKind::Constructor
                      : word == "fallback"  ? FunctionKind::Fallback
                                            : FunctionKind::Receive;
            params = i + 1;
        } else {
            return i + 1;
        }

        fn.parameters = parameter_names(params);
        std::size_t j = after_group(params);
        while (j < end && lex(j) != "{" && lex(j) != ";") {
            auto s = lex(j);
            if (s == "public")
                fn.visibility = Visibility::Public;
            else if (s == "external")
                fn.visibility = Visibility::External;
            else if (s == "internal")
                fn.visibility = Visibility::Internal;
            else if (s == "private")
                fn.visibility = Visibility::Private;
            else if (s == "view" || s == "constant")
                fn.mutability = Mutability::View;
            else if (s == "pure")
                fn.mutability = Mutability::Pure;
            else if (s == "payable")
                fn.mutability = Mutability::Payable;
            else if (s == "returns" || s == "override") {
                if (lex(j + 1) == "(") {
                    j = after_group(j + 1);
                    continue;
                }
            } else if (is_ident(j)) {
                fn.modifiers.push_back(t_[j].lexeme);
                if (lex(j + 1) == "(") {
                    j = after_group(j + 1);
                    continue;
                }
            } else if (s == "(" || s == "[") {
                j = after_group(j);
                continue;
            }
            ++j;
        }
        if (j >= end || lex(j) == ";") {
            // A `function (...) ...;` without a body is a function-typed variable when unnamed.
            if (word == "function" && fn.kind == FunctionKind::Fallback && contract.size() > 0) {
                state_variable(i, std::min(j + 1, end));
            }
            return j + 1;
        }
        fn.body_open = j;
        fn.body_close = match_[j];
        fn.decl_span = {t_[i].span.begin, t_[fn.body_close].span.end};
        fn.header_span = {t_[i].span.begin, t_[j - 1].span.end};
        fn.body_span = {t_[j].span.begin, t_[fn.body_close].span.end};
        layout_.functions.push_back(std::move(fn));
        return layout_.functions.back().body_close + 1;
    }

    std::vector<std::string> parameter_names(std::size_t open) const
    {
        std::vector<std::string> names;
        auto close = match_[open];
        if (close == npos)
            return names;
        std::size_t seg_begin = open + 1;
        for (std::size_t j = open + 1; j <= close; ++j) {
            if (j < close && is_open(lex(j)) && t_[j].kind == TokenKind::Punct) {
                j = after_group(j) - 1;
                continue;
            }
            if (j == close || lex(j) == ",") {
                if (j - seg_begin >= 2 && is_ident(j - 1))
                    names.push_back(t_[j - 1].lexeme);
                seg_begin = j + 1;
            }
        }
        return names;
    }

    std::string join(std::size_t begin, std::size_t end) const
    {
        std::string out;
        for (std::size_t k = begin; k < end; ++k)
            out += t_[k].lexeme;
        return out;
    }

    static bool is_caller(std::string receiver)
    {
        for (std::string_view wrap : {"payable(", "address("}) {
            while (receiver.starts_with(wrap) && receiver.ends_with(")"))
                receiver = receiver.substr(wrap.size(), receiver.size() - wrap.size() - 1);
        }
        return receiver == "msg.sender";
    }

    int argument_count(std::size_t open) const
    {
        auto close = match_[open];
        if (close == npos || close == open + 1)
            return 0;
        int count = 1;
        for (std::size_t j = open + 1; j < close; ++j) {
            if (is_open(lex(j)) && t_[j].kind == TokenKind::Punct)
                j = after_group(j) - 1;
            else if (lex(j) == ",")
                ++count;
        }
        return count;
    }

    bool sends_value(std::size_t member) const
    {
        auto name = lex(member);
        if (name == "transfer" || name == "send")
            return lex(member + 1) == "(" && argument_count(member + 1) == 1;
        if (name != "call")
            return false;
        if (lex(member + 1) == "." && lex(member + 2) == "value")
            return true;
        if (lex(member + 1) == "{") {
            auto close = match_[member + 1];
            for (std::size_t j = member + 2; j + 1 < close; ++j) {
                if (lex(j) == "value" && lex(j + 1) == ":")
                    return true;
            }
        }
        return false;
    }

    void collect_effects(FunctionSpan& fn) const
    {
        std::set<std::string, std::less<>> state(layout_.state_variables.begin(), layout_.state_variables.end());
        for (std::size_t k = fn.body_open + 1; k < fn.body_close; ++k) {
            auto s = lex(k);
            bool after_dot = lex(k - 1) == ".";
            if (after_dot && is_ident(k) && sends_value(k)) {
                auto recv = receiver_start(t_, k - 1);
                auto text = join(recv, k - 1);
                fn.effects.push_back({Effect::Kind::ValueTransfer, k, text, is_caller(text)});
                continue;
            }
            if (!after_dot && (s == "selfdestruct" || s == "suicide") && lex(k + 1) == "(") {
                auto close = match_[k + 1];
                auto text = close == npos ? std::string() : join(k + 2, close);
                fn.effects.push_back({Effect::Kind::ValueTransfer, k, text, false});
                continue;
            }
            if (after_dot || !is_ident(k) || !state.contains(s))
                continue;
            auto prev = k - 1;
            auto prev_lex = lex(prev);
            // `T name` or `T memory name` declares a local that shadows the state variable.
            if (t_[prev].kind == TokenKind::Identifier || prev_lex == "memory" || prev_lex == "storage" ||
                prev_lex == "calldata" || (t_[prev].kind == TokenKind::Keyword && is_type_keyword(prev_lex)))
                continue;
            std::size_t j = k + 1;
            std::string_view last_member;
            while (j < fn.body_close) {
                if (lex(j) == "[") {
                    j = after_group(j);
                } else if (lex(j) == "." && is_ident(j + 1)) {
                    last_member = lex(j + 1);
                    j += 2;
                } else {
                    break;
                }
            }
            auto next = lex(j);
            bool write = kAssignOps.contains(next) || next == "++" || next == "--" || prev_lex == "++" ||
                         prev_lex == "--" || prev_lex == "delete" ||
                         ((last_member == "push" || last_member == "pop") && next == "(");
            if (!write)
                continue;
            bool caller = lex(k + 1) == "[" && lex(k + 2) == "msg" && lex(k + 3) == "." && lex(k + 4) == "sender" &&
                          lex(k + 5) == "]";
            fn.effects.push_back({Effect::Kind::StateWrite, k, std::string(s), caller});
        }
        fn.mutates_state = !fn.effects.empty();
    }

    static bool is_type_keyword(std::string_view s)
    {
        static const std::unordered_set<std::string_view> types = {
            "address", "bool", "string", "bytes", "byte", "uint", "int", "fixed", "ufixed", "mapping", "var",
        };
        if (types.contains(s))
            return true;
        return s.starts_with("uint") || s.starts_with("int") || s.starts_with("bytes") || s.starts_with("fixed") ||
               s.starts_with("ufixed");
    }

    const TokenStream& t_;
    std::vector<std::size_t> match_;
    ContractLayout layout_;
};

} // namespace

namespace {

bool receiver_token(const Token& t)
{
    if (t.kind == TokenKind::Identifier)
        return true;
    return t.kind == TokenKind::Keyword &&
           (t.lexeme == "this" || t.lexeme == "super" || t.lexeme == "payable" || t.lexeme == "address");
}

// Opening token for the `)` or `]` at `close`, scanning backwards.
std::size_t open_before(const TokenStream& tokens, std::size_t close)
{
    int depth = 0;
    for (std::size_t i = close + 1; i-- > 0;) {
        const auto& s = tokens[i].lexeme;
        if (tokens[i].kind != TokenKind::Punct)
            continue;
        if (s == ")" || s == "]")
            ++depth;
        else if (s == "(" || s == "[") {
            if (--depth == 0)
                return i;
        } else if (s == "{" || s == "}" || s == ";")
            break;
    }
    return npos;
}

} // namespace

std::size_t receiver_start(const TokenStream& tokens, std::size_t dot)
{
    auto lex = [&](std::size_t i) -> std::string_view { return tokens[i].lexeme; };
    std::size_t r = dot;
    while (r > 0) {
        std::size_t e = r - 1;
        std::size_t s;
        if (lex(e) == ")" || lex(e) == "]") {
            s = open_before(tokens, e);
            if (s == npos)
                return r;
            while (s > 0) {
                if (receiver_token(tokens[s - 1])) {
                    --s;
                    break;
                }
                if (lex(s - 1) != ")" && lex(s - 1) != "]")
                    break;
                auto o = open_before(tokens, s - 1);
                if (o == npos)
                    break;
                s = o;
            }
        } else if (receiver_token(tokens[e])) {
            s = e;
        } else {
            return r;
        }
        r = s;
        if (r > 0 && lex(r - 1) == ".") {
            --r;
            continue;
        }
        return r;
    }
    return r;
}

std::string_view to_string(FunctionKind kind)
{
    switch (kind) {
    case FunctionKind::Function:
        return "function";
    case FunctionKind::Constructor:
        return "constructor";
    case FunctionKind::Fallback:
        return "fallback";
    case FunctionKind::Receive:
        return "receive";
    }
    return "?";
}

std::string_view to_string(Visibility visibility)
{
    switch (visibility) {
    case Visibility::Public:
        return "public";
    case Visibility::External:
        return "external";
    case Visibility::Internal:
        return "internal";
    case Visibility::Private:
        return "private";
    case Visibility::Unspecified:
        return "unspecified";
    }
    return "?";
}

ContractLayout analyze_layout(const TokenStream& tokens)
{
    return Analyzer(tokens).run();
}

std::vector<FunctionSpan> segment_functions(const TokenStream& tokens)
{
    return analyze_layout(tokens).functions;
}

} // namespace scvm::sol
