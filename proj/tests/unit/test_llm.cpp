#include "scvm/llm/prompt.hpp"
#include "scvm/llm/provider.hpp"
#include "scvm/llm/structured.hpp"

#include "support/test_support.hpp"

#include <doctest.h>
#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <random>
#include <thread>

using namespace scvm;
using namespace scvm::llm;
using scvm::testing::read_file;
using scvm::testing::TempDir;
using scvm::testing::write_file;

namespace {

PromptTemplate detection_template()
{
    return {"You are a smart contract auditor.", "Decide whether the contract is vulnerable.",
            "Reply with {{\"verdict\": ..., \"score\": ...}}.", "{references}", "```solidity\n{code}\n```"};
}

std::size_t occurrences(const std::string& hay, const std::string& needle)
{
    std::size_t n = 0;
    for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1))
        ++n;
    return n;
}

// Local stub server on an ephemeral port.
struct Stub {
    httplib::Server server;
    int port = 0;
    std::thread thread;

    void start()
    {
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port); }
    ~Stub()
    {
        server.stop();
        if (thread.joinable())
            thread.join();
    }
};

ProviderConfig http_cfg(const std::string& url)
{
    ProviderConfig c;
    c.kind = ProviderKind::Http;
    c.model = "stub-model";
    c.endpoint = url;
    c.retries = 2;
    c.timeout = std::chrono::milliseconds(2000);
    return c;
}

std::string completion(const std::string& content)
{
    return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump();
}

} // namespace

TEST_CASE("render places the contract exactly once")
{
    auto text = render_prompt(detection_template(), {{"code", "contract A {}"}, {"references", "none"}});
    CHECK(occurrences(text, "contract A {}") == 1);
    auto role = text.find("### Role");
    auto task = text.find("### Task");
    auto out = text.find("### Expected Output");
    auto bg = text.find("### Background Information");
    auto input = text.find("### Input");
    CHECK(role < task);
    CHECK(task < out);
    CHECK(out < bg);
    CHECK(bg < input);
    CHECK(text.find("{\"verdict\"") != std::string::npos);
}

TEST_CASE("render without placeholders keeps the text")
{
    PromptTemplate t{"r", "t", "e", "b", "plain body"};
    CHECK(render_prompt(t, {}) == "### Role\nr\n\n### Task\nt\n\n### Expected Output\ne\n\n### Background Information\nb\n\n### Input\nplain body\n");
}

TEST_CASE("unbound placeholder is named")
{
    try {
        render_prompt(detection_template(), {{"references", "x"}});
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()) == "unbound placeholder: code");
    }
}

TEST_CASE("bound values are not rescanned")
{
    auto text = render_prompt(detection_template(), {{"code", "function f() { emit {references}; }"}, {"references", "R"}});
    CHECK(occurrences(text, "{references}") == 1);
}

TEST_CASE("render is injective in code")
{
    std::mt19937 rng(9);
    const std::string alphabet = "ab{}\n ;()";
    std::set<std::string> codes, renders;
    for (int i = 0; i < 300; ++i) {
        std::string code;
        auto len = rng() % 12;
        for (std::size_t j = 0; j < len; ++j)
            code.push_back(alphabet[rng() % alphabet.size()]);
        if (codes.insert(code).second)
            CHECK(renders.insert(render_prompt(detection_template(), {{"code", code}, {"references", "-"}})).second);
    }
}

TEST_CASE("reference formatting")
{
    CHECK(format_references({}) == "no references found");
    retrieval::KbChunk c{"owner.md", 0, "restrict access", "SWC Registry", {"SWC-105"}, {}};
    CHECK(format_references({{&c, 0.9}}) == "[1] owner.md (SWC Registry, SWC-105): restrict access");
}

TEST_CASE("fingerprint collapses whitespace")
{
    CHECK(prompt_fingerprint("a  b\n\tc ") == prompt_fingerprint("a b c"));
    CHECK(prompt_fingerprint("  a b c") == prompt_fingerprint("a b c"));
    CHECK(prompt_fingerprint("a b c") != prompt_fingerprint("a b d"));
    CHECK(prompt_fingerprint("x").size() == 16);
}

TEST_CASE("mock provider replays transcripts")
{
    TempDir dir("mock");
    auto fp = prompt_fingerprint("hello world");
    write_file(dir / "t.jsonl", nlohmann::json{{"role", "detector"}, {"fingerprint", fp}, {"response", "{\"v\": 1}\n"}}.dump() + "\n\n");
    MockProvider mock(dir / "t.jsonl", "mock-detector");
    CHECK(mock.complete("detector", "hello   world").response == "{\"v\": 1}\n");
    CHECK(mock.complete("detector", "hello world").response == mock.complete("detector", "hello world").response);
    CHECK(mock.complete("advisor", "hello world").response == "UNKNOWN");

    mock.record_misses_to(dir / "misses.jsonl");
    mock.complete("fixer", "p");
    auto miss = nlohmann::json::parse(read_file(dir / "misses.jsonl"));
    CHECK(miss["role"] == "fixer");
    CHECK(miss["fingerprint"] == prompt_fingerprint("p"));

    write_file(dir / "bad.jsonl", "{\"role\": \"x\"}\n");
    CHECK_THROWS_AS(MockProvider(dir / "bad.jsonl", "m"), Error);
    write_file(dir / "bad2.jsonl", "not json\n");
    CHECK_THROWS_AS(MockProvider(dir / "bad2.jsonl", "m"), Error);
    CHECK_THROWS_AS(MockProvider(dir / "missing.jsonl", "m"), Error);
}

TEST_CASE("provider config validation")
{
    ProviderConfig mock;
    mock.model = "m";
    CHECK_THROWS_AS(mock.validate(), Error);
    mock.transcript = "t.jsonl";
    CHECK_NOTHROW(mock.validate());
    ProviderConfig http;
    http.kind = ProviderKind::Http;
    http.model = "m";
    CHECK_THROWS_AS(http.validate(), Error);
    auto round = provider_config_from_json(provider_config_to_json(mock));
    CHECK(round.transcript == mock.transcript);
    CHECK(provider_config_from_json({{"kind", "mock"}, {"model", "m"}, {"transcript", "t.jsonl"}}, "/base").transcript ==
          "/base/t.jsonl");
    CHECK_THROWS_AS(provider_config_from_json({{"kind", "carrier-pigeon"}, {"model", "m"}}), Error);
}

TEST_CASE("http provider against a stub server")
{
    Stub stub;
    std::string seen_auth;
    nlohmann::json seen_body;
    stub.server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        seen_auth = req.get_header_value("Authorization");
        seen_body = nlohmann::json::parse(req.body);
        res.set_content(completion("canned body"), "application/json");
    });
    stub.start();
    ::setenv("SCVM_TEST_KEY", "sekret-value", 1);
    auto cfg = http_cfg(stub.url());
    cfg.api_key_env = "SCVM_TEST_KEY";
    HttpProvider p(cfg);
    TempDir dir("http");
    auto log = std::make_shared<ExchangeLog>(dir / "exchanges.jsonl");
    Client client(std::make_shared<HttpProvider>(cfg), log);
    auto ex = client.ask("detector", "prompt text");
    CHECK(ex.response == "canned body");
    CHECK(ex.model == "stub-model");
    CHECK(seen_auth == "Bearer sekret-value");
    CHECK(seen_body["model"] == "stub-model");
    CHECK(seen_body["messages"][0]["content"] == "prompt text");
    CHECK(seen_body["temperature"] == 0.0);
    auto logged = read_file(dir / "exchanges.jsonl");
    CHECK(logged.find("canned body") != std::string::npos);
    CHECK(logged.find("sekret") == std::string::npos);
    ::unsetenv("SCVM_TEST_KEY");
}

TEST_CASE("http provider retries transport failures")
{
    Stub stub;
    std::atomic<int> calls{0};
    stub.server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        if (++calls < 3) {
            res.status = 503;
            return;
        }
        res.set_content(completion("third time"), "application/json");
    });
    stub.start();
    HttpProvider p(http_cfg(stub.url()));
    CHECK(p.complete("r", "x").response == "third time");
    CHECK(calls == 3);

    calls = -100;
    auto cfg = http_cfg(stub.url());
    cfg.retries = 1;
    HttpProvider impatient(cfg);
    CHECK_THROWS_AS(impatient.complete("r", "x"), TransportError);
}

TEST_CASE("http provider reports unreachable endpoints and timeouts")
{
    auto cfg = http_cfg("http://127.0.0.1:1");
    cfg.retries = 1;
    HttpProvider dead(cfg);
    CHECK_THROWS_AS(dead.complete("r", "x"), TransportError);

    Stub stub;
    stub.server.Post("/v1/chat/completions", [](const httplib::Request&, httplib::Response& res) {
        std::this_thread::sleep_for(std::chrono::milliseconds(1200));
        res.set_content(completion("late"), "application/json");
    });
    stub.start();
    auto slow = http_cfg(stub.url());
    slow.timeout = std::chrono::milliseconds(300);
    HttpProvider p(slow);
    CHECK_THROWS_AS(p.complete("r", "x"), TimeoutError);
}

TEST_CASE("structured extraction")
{
    Schema detector{{{"verdict", FieldType::String}, {"score", FieldType::Number}}};
    auto obj = extract_structured("Analysis follows.\n{\"verdict\":\"vulnerable\",\"score\":0.9} done", detector);
    CHECK(obj["verdict"] == "vulnerable");
    CHECK(obj["score"] == 0.9);

    auto nested = extract_structured("{broken {\"verdict\":\"safe\",\"score\":0,\"note\":\"a } b\"}", detector);
    CHECK(nested["verdict"] == "safe");

    const std::string prose = "I think it is probably fine.";
    try {
        extract_structured(prose, detector);
        FAIL("expected ExtractionError");
    } catch (const ExtractionError& e) {
        CHECK(e.raw_text() == prose);
    }
    const std::string partial = "{\"verdict\": \"safe\"}";
    try {
        extract_structured(partial, detector);
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()) == "missing required field: score");
        CHECK(e.field() == "score");
        CHECK(e.raw_text() == partial);
    }
    CHECK_THROWS_AS(extract_structured("{\"verdict\": 1, \"score\": 2}", detector), SchemaError);
}

TEST_CASE("one repair attempt")
{
    Schema s{{{"level", FieldType::String}}};
    const std::string prompt = "assess this";
    auto repair = repair_prompt(prompt, "no structured object found in model response", s);
    std::map<std::pair<std::string, std::string>, std::string> entries = {
        {{"assessor", prompt_fingerprint(prompt)}, "It's critical."},
        {{"assessor", prompt_fingerprint(repair)}, "{\"level\": \"Critical\"}"},
    };
    Client client(std::make_shared<MockProvider>(entries, "m"));
    auto reply = ask_structured(client, "assessor", prompt, s);
    CHECK(reply.value["level"] == "Critical");
    CHECK(reply.exchanges.size() == 2);

    Client stubborn(std::make_shared<MockProvider>(decltype(entries){}, "m"));
    CHECK_THROWS_AS(ask_structured(stubborn, "assessor", prompt, s), ExtractionError);
    CHECK_THROWS_AS(ask_structured(stubborn, "assessor", prompt, s, 0), ExtractionError);
}
