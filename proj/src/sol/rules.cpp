#include "scvm/sol/rules.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <unordered_set>

namespace scvm::sol {

namespace {

using json = nlohmann::json;

std::vector<std::string> string_list(const json& j, const char* key)
{
    if (!j.is_array())
        throw Error(std::string("matcher '") + key + "' expects an array of strings");
    std::vector<std::string> out;
    for (const auto& v : j) {
        if (!v.is_string())
            throw Error(std::string("matcher '") + key + "' expects an array of strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

bool contains(const std::vector<std::string>& list, std::string_view s)
{
    return std::find(list.begin(), list.end(), s) != list.end();
}

// Body token range, exclusive of the braces.
std::pair<std::size_t, std::size_t> body_range(const FunctionSpan& fn)
{
    return {fn.body_open + 1, fn.body_close};
}

class AllOf final : public Matcher {
public:
    explicit AllOf(std::vector<std::shared_ptr<const Matcher>> parts) : parts_(std::move(parts)) {}
    MatchOutcome evaluate(const MatchContext& ctx) const override
    {
        MatchOutcome out{true, std::nullopt};
        for (const auto& p : parts_) {
            auto r = p->evaluate(ctx);
            if (!r.matched)
                return {};
            if (!out.anchor)
                out.anchor = r.anchor;
        }
        return out;
    }

private:
    std::vector<std::shared_ptr<const Matcher>> parts_;
};

class AnyOf final : public Matcher {
public:
    explicit AnyOf(std::vector<std::shared_ptr<const Matcher>> parts) : parts_(std::move(parts)) {}
    MatchOutcome evaluate(const MatchContext& ctx) const override
    {
        for (const auto& p : parts_) {
            if (auto r = p->evaluate(ctx); r.matched)
                return r;
        }
        return {};
    }
    bool positional() const override
    {
        return std::all_of(parts_.begin(), parts_.end(), [](const auto& p) { return p->positional(); });
    }
    std::vector<std::size_t> positions(const MatchContext& ctx) const override
    {
        std::set<std::size_t> all;
        for (const auto& p : parts_) {
            auto ps = p->positions(ctx);
            all.insert(ps.begin(), ps.end());
        }
        return {all.begin(), all.end()};
    }

private:
    std::vector<std::shared_ptr<const Matcher>> parts_;
};

class Not final : public Matcher {
public:
    explicit Not(std::shared_ptr<const Matcher> inner) : inner_(std::move(inner)) {}
    MatchOutcome evaluate(const MatchContext& ctx) const override { return {!inner_->evaluate(ctx).matched, {}}; }

private:
    std::shared_ptr<const Matcher> inner_;
};

class Predicate final : public Matcher {
public:
    using Fn = std::function<bool(const MatchContext&)>;
    explicit Predicate(Fn fn) : fn_(std::move(fn)) {}
    MatchOutcome evaluate(const MatchContext& ctx) const override { return {fn_(ctx), std::nullopt}; }

private:
    Fn fn_;
};

// Base for matchers defined by the token positions where they occur.
class Positional : public Matcher {
public:
    MatchOutcome evaluate(const MatchContext& ctx) const override
    {
        auto ps = positions(ctx);
        if (ps.empty())
            return {};
        return {true, ps.front()};
    }
    bool positional() const override { return true; }
};

class Sequence final : public Positional {
public:
    explicit Sequence(std::vector<std::vector<std::string>> slots) : slots_(std::move(slots)) {}

    std::vector<std::size_t> positions(const MatchContext& ctx) const override
    {
        const auto& toks = ctx.contract.tokens();
        auto [begin, end] = body_range(ctx.function);
        std::vector<std::size_t> out;
        for (std::size_t i = begin; i + slots_.size() <= end; ++i) {
            bool ok = true;
            for (std::size_t s = 0; s < slots_.size() && ok; ++s)
                ok = slot_matches(slots_[s], toks[i + s], ctx);
            if (ok)
                out.push_back(i);
        }
        return out;
    }

private:
    static bool slot_matches(const std::vector<std::string>& alternatives, const Token& tok, const MatchContext& ctx)
    {
        if (alternatives.empty())
            return true;
        for (const auto& alt : alternatives) {
            if (alt == "$param") {
                if (tok.kind == TokenKind::Identifier && contains(ctx.function.parameters, tok.lexeme))
                    return true;
            } else if (alt == "$state") {
                if (tok.kind == TokenKind::Identifier && contains(ctx.layout.state_variables, tok.lexeme))
                    return true;
            } else if (alt == tok.lexeme) {
                return true;
            }
        }
        return false;
    }

    std::vector<std::vector<std::string>> slots_;
};

class EffectMatcher final : public Positional {
public:
    explicit EffectMatcher(Effect::Kind kind) : kind_(kind) {}
    std::vector<std::size_t> positions(const MatchContext& ctx) const override
    {
        std::vector<std::size_t> out;
        for (const auto& e : ctx.function.effects) {
            if (e.kind == kind_)
                out.push_back(e.token);
        }
        return out;
    }

private:
    Effect::Kind kind_;
};

class Before final : public Positional {
public:
    Before(std::shared_ptr<const Matcher> first, std::shared_ptr<const Matcher> then)
        : first_(std::move(first)), then_(std::move(then))
    {
    }
    // Positions of `first` occurrences that precede some `then` occurrence.
    std::vector<std::size_t> positions(const MatchContext& ctx) const override
    {
        auto firsts = first_->positions(ctx);
        auto thens = then_->positions(ctx);
        if (firsts.empty() || thens.empty())
            return {};
        auto last_then = *std::max_element(thens.begin(), thens.end());
        std::vector<std::size_t> out;
        for (auto p : firsts) {
            if (p < last_then)
                out.push_back(p);
        }
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    std::shared_ptr<const Matcher> first_;
    std::shared_ptr<const Matcher> then_;
};

// `x.call(...)` style member calls, in body order.
std::vector<std::size_t> member_calls(const MatchContext& ctx, const std::vector<std::string>& members)
{
    const auto& toks = ctx.contract.tokens();
    auto [begin, end] = body_range(ctx.function);
    std::vector<std::size_t> out;
    for (std::size_t k = begin + 1; k + 1 < end; ++k) {
        if (toks[k - 1].lexeme != "." || toks[k].kind != TokenKind::Identifier || !contains(members, toks[k].lexeme))
            continue;
        const auto& next = toks[k + 1].lexeme;
        if (next == "(" || next == "{" || next == ".")
            out.push_back(k);
    }
    return out;
}

class UncheckedCall final : public Positional {
public:
    explicit UncheckedCall(std::vector<std::string> members) : members_(std::move(members)) {}
    std::vector<std::size_t> positions(const MatchContext& ctx) const override
    {
        static const std::unordered_set<std::string_view> consumers = {
            "=", "require", "assert", "if", "return", "while", "&&", "||", "!", "?", ",",
        };
        const auto& toks = ctx.contract.tokens();
        std::vector<std::size_t> out;
        for (auto k : member_calls(ctx, members_)) {
            std::size_t s = k;
            bool consumed = false;
            while (s > ctx.function.body_open) {
                --s;
                const auto& lx = toks[s].lexeme;
                if (toks[s].kind == TokenKind::Punct && (lx == ";" || lx == "{" || lx == "}"))
                    break;
                if (consumers.contains(lx)) {
                    consumed = true;
                    break;
                }
            }
            if (!consumed)
                out.push_back(k);
        }
        return out;
    }

private:
    std::vector<std::string> members_;
};

class CallOnParameter final : public Positional {
public:
    explicit CallOnParameter(std::vector<std::string> members) : members_(std::move(members)) {}
    std::vector<std::size_t> positions(const MatchContext& ctx) const override
    {
        const auto& toks = ctx.contract.tokens();
        std::vector<std::size_t> out;
        for (auto k : member_calls(ctx, members_)) {
            auto begin = receiver_start(toks, k - 1);
            for (auto i = begin; i < k - 1; ++i) {
                if (toks[i].kind == TokenKind::Identifier && contains(ctx.function.parameters, toks[i].lexeme)) {
                    out.push_back(k);
                    break;
                }
            }
        }
        return out;
    }

private:
    std::vector<std::string> members_;
};

std::shared_ptr<const Matcher> positional_or_throw(const json& spec, const char* where)
{
    auto m = compile_matcher(spec);
    if (!m->positional())
        throw Error(std::string("matcher '") + where + "' requires positional sub-matchers");
    return m;
}

std::vector<std::string> slot_alternatives(const json& slot)
{
    if (slot.is_string()) {
        // bare "*" is the wildcard; inside an alternatives list it is the literal operator
        if (slot.get<std::string>() == "*")
            return {};
        return {slot.get<std::string>()};
    }
    if (slot.is_array() && !slot.empty())
        return string_list(slot, "sequence");
    throw Error("matcher 'sequence' slots must be strings or non-empty arrays of strings");
}

} // namespace

std::shared_ptr<const Matcher> compile_matcher(const json& spec)
{
    if (!spec.is_object() || spec.size() != 1)
        throw Error("matcher must be an object with exactly one key: " + spec.dump());
    const auto& [key, arg] = *spec.items().begin();

    if (key == "all" || key == "any") {
        if (!arg.is_array() || arg.empty())
            throw Error("matcher '" + key + "' expects a non-empty array");
        std::vector<std::shared_ptr<const Matcher>> parts;
        for (const auto& p : arg)
            parts.push_back(compile_matcher(p));
        if (key == "all")
            return std::make_shared<AllOf>(std::move(parts));
        return std::make_shared<AnyOf>(std::move(parts));
    }
    if (key == "not")
        return std::make_shared<Not>(compile_matcher(arg));
    if (key == "kind") {
        auto kinds = string_list(arg, "kind");
        return std::make_shared<Predicate>(
            [kinds](const MatchContext& c) { return contains(kinds, to_string(c.function.kind)); });
    }
    if (key == "visibility") {
        auto vis = string_list(arg, "visibility");
        return std::make_shared<Predicate>(
            [vis](const MatchContext& c) { return contains(vis, to_string(c.function.visibility)); });
    }
    if (key == "mutates_state") {
        if (!arg.is_boolean())
            throw Error("matcher 'mutates_state' expects a boolean");
        bool want = arg.get<bool>();
        return std::make_shared<Predicate>([want](const MatchContext& c) { return c.function.mutates_state == want; });
    }
    if (key == "caller_scoped_effects") {
        if (!arg.is_boolean())
            throw Error("matcher 'caller_scoped_effects' expects a boolean");
        bool want = arg.get<bool>();
        return std::make_shared<Predicate>([want](const MatchContext& c) {
            const auto& fx = c.function.effects;
            bool scoped = !fx.empty() && std::all_of(fx.begin(), fx.end(), [](const Effect& e) { return e.caller_scoped; });
            return scoped == want;
        });
    }
    if (key == "has_modifier") {
        auto names = string_list(arg, "has_modifier");
        return std::make_shared<Predicate>([names](const MatchContext& c) {
            return std::any_of(c.function.modifiers.begin(), c.function.modifiers.end(),
                               [&](const std::string& m) { return contains(names, m); });
        });
    }
    if (key == "pragma_below") {
        if (!arg.is_string())
            throw Error("matcher 'pragma_below' expects a version string");
        auto bound = parse_version(arg.get<std::string>());
        if (!bound)
            throw Error("matcher 'pragma_below' has an unparsable version: " + arg.get<std::string>());
        return std::make_shared<Predicate>([bound = *bound](const MatchContext& c) {
            const auto& pragma = c.contract.pragma_version();
            if (!pragma)
                return false;
            auto lowest = lowest_admitted_version(*pragma);
            return lowest && *lowest < bound;
        });
    }
    if (key == "imports") {
        if (!arg.is_string())
            throw Error("matcher 'imports' expects a string");
        auto needle = arg.get<std::string>();
        return std::make_shared<Predicate>([needle](const MatchContext& c) {
            const auto& l = c.layout;
            return std::any_of(l.imports.begin(), l.imports.end(),
                               [&](const std::string& p) { return p.find(needle) != std::string::npos; }) ||
                   contains(l.using_libraries, needle);
        });
    }
    if (key == "sequence") {
        if (!arg.is_array() || arg.empty())
            throw Error("matcher 'sequence' expects a non-empty array");
        std::vector<std::vector<std::string>> slots;
        for (const auto& s : arg)
            slots.push_back(slot_alternatives(s));
        return std::make_shared<Sequence>(std::move(slots));
    }
    if (key == "effect") {
        auto name = arg.is_string() ? arg.get<std::string>() : std::string();
        if (name == "value_transfer")
            return std::make_shared<EffectMatcher>(Effect::Kind::ValueTransfer);
        if (name == "state_write")
            return std::make_shared<EffectMatcher>(Effect::Kind::StateWrite);
        throw Error("matcher 'effect' expects \"value_transfer\" or \"state_write\"");
    }
    if (key == "before") {
        if (!arg.is_object() || !arg.contains("first") || !arg.contains("then"))
            throw Error("matcher 'before' expects {\"first\": ..., \"then\": ...}");
        return std::make_shared<Before>(positional_or_throw(arg.at("first"), "before.first"),
                                        positional_or_throw(arg.at("then"), "before.then"));
    }
    if (key == "unchecked_call")
        return std::make_shared<UncheckedCall>(string_list(arg, "unchecked_call"));
    if (key == "call_on_parameter")
        return std::make_shared<CallOnParameter>(string_list(arg, "call_on_parameter"));

    throw Error("unknown matcher kind: " + key);
}

PatternRule rule_from_json(const json& j)
{
    PatternRule r;
    try {
        r.rule_id = j.at("rule_id").get<std::string>();
        r.vclass.name = j.at("class").get<std::string>();
        if (auto it = j.find("swc_id"); it != j.end() && !it->is_null())
            r.vclass.swc_id = it->get<std::string>();
        r.description = j.value("description", "");
        r.default_confidence = j.at("confidence").get<double>();
        r.matcher_spec = j.at("matcher");
    } catch (const json::exception& e) {
        throw Error(std::string("malformed rule record: ") + e.what());
    }
    if (r.rule_id.empty())
        throw Error("rule_id must be non-empty");
    if (!(r.default_confidence >= 0.5 && r.default_confidence <= 1.0))
        throw Error("rule " + r.rule_id + ": confidence must lie in [0.5, 1]");
    try {
        r.matcher = compile_matcher(r.matcher_spec);
    } catch (const Error& e) {
        throw Error("rule " + r.rule_id + ": " + e.what());
    }
    return r;
}

json rule_to_json(const PatternRule& rule)
{
    json j;
    j["rule_id"] = rule.rule_id;
    j["class"] = rule.vclass.name;
    j["swc_id"] = rule.vclass.swc_id ? json(*rule.vclass.swc_id) : json();
    j["description"] = rule.description;
    j["confidence"] = rule.default_confidence;
    j["matcher"] = rule.matcher_spec;
    return j;
}

RuleSet parse_rules(std::string_view text)
{
    RuleSet rules;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#')
            continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw Error("rules line " + std::to_string(lineno) + ": " + e.what());
        }
        auto rule = rule_from_json(j);
        for (const auto& r : rules) {
            if (r.rule_id == rule.rule_id)
                throw Error("duplicate rule_id: " + rule.rule_id);
        }
        rules.push_back(std::move(rule));
    }
    return rules;
}

RuleSet load_rules(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot read rules file: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_rules(buf.str());
}

std::string serialize_rules(const RuleSet& rules)
{
    std::string out;
    for (const auto& r : rules)
        out += rule_to_json(r).dump() + "\n";
    return out;
}

} // namespace scvm::sol
