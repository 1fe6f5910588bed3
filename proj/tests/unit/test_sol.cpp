#include "scvm/sol/lexer.hpp"
#include "scvm/sol/rules.hpp"
#include "scvm/sol/scanner.hpp"
#include "scvm/sol/segment.hpp"

#include "support/test_support.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <set>

using namespace scvm;
using namespace scvm::sol;
using scvm::testing::data_dir;
using scvm::testing::read_file;

namespace {

std::vector<std::string> lexemes(const TokenStream& ts)
{
    std::vector<std::string> out;
    for (const auto& t : ts)
        out.push_back(t.lexeme);
    return out;
}

std::set<std::pair<std::string, std::string>> identities(const std::vector<Finding>& fs)
{
    std::set<std::pair<std::string, std::string>> out;
    for (const auto& f : fs)
        out.insert({f.vclass.name, f.location.function});
    return out;
}

nlohmann::json manifest()
{
    return nlohmann::json::parse(read_file(data_dir() / "static" / "manifest.json"));
}

SourceContract load(const std::string& rel)
{
    auto p = data_dir() / "static" / rel;
    return SourceContract::parse(p.stem().string(), read_file(p));
}

} // namespace

TEST_CASE("tokenizer examples")
{
    auto r = tokenize_solidity("balances[msg.sender] -= amount; // note\n/* block */ x >>= 0x1F;");
    CHECK(lexemes(r.tokens) == std::vector<std::string>{"balances", "[", "msg", ".", "sender", "]", "-=", "amount",
                                                        ";", "x", ">>=", "0x1F", ";"});
    CHECK(r.comments.size() == 2);
    CHECK(r.tokens[7].kind == TokenKind::Identifier);
    CHECK(r.tokens[11].kind == TokenKind::Number);

    auto s = tokenize_solidity("string s = \"a\\\"b\"; uint256 y = 1e18; bytes32 h;");
    CHECK(s.tokens[3].kind == TokenKind::String);
    CHECK(s.tokens[3].lexeme == "\"a\\\"b\"");
    CHECK(s.tokens[5].kind == TokenKind::Keyword);
    CHECK(s.tokens[8].lexeme == "1e18");
    CHECK(s.tokens[10].kind == TokenKind::Keyword);
}

TEST_CASE("lexer errors carry a location")
{
    try {
        tokenize_solidity("uint x = \"open;\n");
        FAIL("expected LexError");
    } catch (const LexError& e) {
        CHECK(std::string(e.what()).find("unterminated string literal") != std::string::npos);
        CHECK(e.span().begin == 9);
    }
    CHECK_THROWS_AS(tokenize_solidity("/* never closed"), LexError);
    CHECK_THROWS_AS(tokenize_solidity("uint x = 1 # 2;"), LexError);
    CHECK_THROWS_AS(tokenize_solidity(std::string("\xff\xfe")), LexError);
}

TEST_CASE("segmentation matches hand-labeled fixtures")
{
    const auto m = manifest();
    for (auto& [file, expect] : m.items()) {
        CAPTURE(file);
        auto c = load(file);
        auto fns = segment_functions(c.tokens());
        std::vector<std::string> names;
        for (const auto& f : fns) {
            names.push_back(f.name);
            CHECK(f.body_span.begin < f.body_span.end);
            CHECK(f.header_span.end <= f.body_span.begin);
            CHECK(c.source()[f.body_span.begin] == '{');
            CHECK(c.source()[f.body_span.end - 1] == '}');
        }
        CHECK(names == expect["functions"].get<std::vector<std::string>>());
    }
}

TEST_CASE("segmentation details")
{
    auto c = load("segmentation_mixed.sol");
    auto fns = segment_functions(c.tokens());
    auto find = [&](const std::string& n) {
        for (const auto& f : fns)
            if (f.name == n)
                return f;
        FAIL("missing " << n);
        return FunctionSpan{};
    };
    CHECK(find("receive").kind == FunctionKind::Receive);
    CHECK(find("fallback").kind == FunctionKind::Fallback);
    CHECK(find("constructor").kind == FunctionKind::Constructor);
    CHECK(find("max").mutability == Mutability::Pure);
}

TEST_CASE("unbalanced braces report the last open brace")
{
    std::string src = "contract A {\n  function f() public {\n    if (x) {\n  }\n";
    auto c = SourceContract::parse("a", src);
    try {
        segment_functions(c.tokens());
        FAIL("expected StructureError");
    } catch (const StructureError& e) {
        CHECK(e.span().begin == src.find("{\n    if"));
    }
    auto stray = SourceContract::parse("b", "contract A { } }");
    CHECK_THROWS_AS(segment_functions(stray.tokens()), StructureError);
}

TEST_CASE("effects are attributed")
{
    auto c = load("reentrancy_positive.sol");
    auto layout = analyze_layout(c.tokens());
    const auto& withdraw = layout.functions.at(1);
    REQUIRE(withdraw.name == "withdraw");
    bool transfer = false, write = false;
    for (const auto& e : withdraw.effects) {
        transfer |= e.kind == Effect::Kind::ValueTransfer;
        write |= e.kind == Effect::Kind::StateWrite;
    }
    CHECK(transfer);
    CHECK(write);
    CHECK(withdraw.mutates_state);
}

TEST_CASE("static scan agrees with the labeled corpus")
{
    const auto& rules = default_rules();
    const auto m = manifest();
    for (auto& [file, expect] : m.items()) {
        CAPTURE(file);
        auto c = load(file);
        std::set<std::pair<std::string, std::string>> expected;
        for (const auto& pair : expect["findings"])
            expected.insert({pair[0].get<std::string>(), pair[1].get<std::string>()});
        auto found = scan(c, rules);
        CHECK(identities(found) == expected);
        for (const auto& f : found) {
            CHECK(f.channel == Channel::Static);
            CHECK(f.contract_id == c.id());
            CHECK(f.confidence >= 0.5);
            CHECK(!f.evidence.empty());
        }
        auto ch = static_channel(c, rules);
        CHECK((ch.verdict == Verdict::Vulnerable) == !expected.empty());
    }
}

TEST_CASE("presign finding is localized in preSign")
{
    auto c = load("../audit/contracts/presign.sol");
    auto found = scan(c, default_rules());
    REQUIRE(found.size() == 1);
    CHECK(found[0].vclass.swc_id == std::optional<std::string>("SWC-105"));
    auto fns = segment_functions(c.tokens());
    CHECK(fns.at(1).decl_span.contains(found[0].location.span));
}

TEST_CASE("scan is deterministic and monotone in the ruleset")
{
    const auto& rules = default_rules();
    const auto m = manifest();
    for (auto& [file, expect] : m.items()) {
        CAPTURE(file);
        auto c = load(file);
        auto full = scan(c, rules);
        CHECK(scan(c, rules) == full);
        // every prefix subset yields a subset of identities
        for (std::size_t mask = 1; mask < (1u << rules.size()); mask += 7) {
            RuleSet subset;
            for (std::size_t i = 0; i < rules.size(); ++i)
                if (mask & (1u << i))
                    subset.push_back(rules[i]);
            auto part = identities(scan(c, subset));
            auto all = identities(full);
            CHECK(std::includes(all.begin(), all.end(), part.begin(), part.end()));
        }
    }
}

TEST_CASE("empty ruleset is rejected")
{
    auto c = load("reentrancy_positive.sol");
    CHECK_THROWS_AS(scan(c, {}), Error);
}

TEST_CASE("rule file round trip and validation")
{
    auto text = read_file(scvm::testing::source_dir() / "data" / "rules" / "default.jsonl");
    auto rules = parse_rules(text);
    CHECK(rules.size() == 8);
    CHECK(rules == default_rules());
    CHECK(parse_rules(serialize_rules(rules)) == rules);

    auto dup = serialize_rules({rules[0], rules[0]});
    CHECK_THROWS_AS(parse_rules(dup), Error);
    auto low = rule_to_json(rules[0]);
    low["confidence"] = 0.2;
    CHECK_THROWS_AS(parse_rules(low.dump()), Error);
    auto bad = rule_to_json(rules[0]);
    bad["matcher"] = {{"nonsense", 1}};
    CHECK_THROWS_AS(parse_rules(bad.dump()), Error);
}
