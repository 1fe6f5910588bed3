#include "scvm/eval/harness.hpp"
#include "support/test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace scvm;
using namespace scvm::eval;

namespace {

LabeledVerdicts verdict_list(const nlohmann::json& arr)
{
    LabeledVerdicts out;
    for (const auto& p : arr)
        out.emplace_back(p[0].get<std::string>(), verdict_from_string(p[1].get<std::string>()));
    return out;
}

ChannelResult channel(Channel c, double score, double threshold = 0.5)
{
    ChannelResult r;
    r.channel = c;
    r.score = score;
    r.verdict = score >= threshold ? Verdict::Vulnerable : Verdict::Safe;
    return r;
}

// F1 of predicting vulnerable when score >= t, computed from scratch.
double f1_at(const std::vector<std::pair<double, Verdict>>& s, double t)
{
    double tp = 0, fp = 0, fn = 0;
    for (const auto& [score, g] : s) {
        bool p = score >= t;
        bool v = g == Verdict::Vulnerable;
        if (p && v) tp += 1;
        if (p && !v) fp += 1;
        if (!p && v) fn += 1;
    }
    return tp == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);
}

} // namespace

TEST_CASE("confusion basics")
{
    LabeledVerdicts gold = {{"a", Verdict::Vulnerable}, {"b", Verdict::Safe}, {"c", Verdict::Vulnerable}};
    auto cm = confusion(gold, gold);
    CHECK(cm.fp == 0);
    CHECK(cm.fn == 0);
    CHECK(cm.tp == 2);

    LabeledVerdicts all_vuln = {{"a", Verdict::Vulnerable}, {"b", Verdict::Vulnerable}};
    LabeledVerdicts all_safe = {{"b", Verdict::Safe}, {"a", Verdict::Safe}};
    cm = confusion(all_safe, all_vuln);
    CHECK(cm.tp == 0);
    CHECK(cm.fn == 2);

    CHECK_THROWS_AS(confusion({{"a", Verdict::Safe}}, gold), Error);
    CHECK_THROWS_AS(confusion({{"x", Verdict::Safe}, {"b", Verdict::Safe}}, all_vuln), Error);
    CHECK_THROWS_AS(confusion({{"a", Verdict::Safe}, {"a", Verdict::Safe}}, all_vuln), Error);
}

TEST_CASE("confusion over the hand-tallied 20-prediction fixture")
{
    auto j = nlohmann::json::parse(testing::read_file(testing::data_dir() / "eval" / "confusion_20.json"));
    auto cm = confusion(verdict_list(j["predictions"]), verdict_list(j["gold"]));
    CHECK(cm.tp == j["tally"]["tp"].template get<long>());
    CHECK(cm.fp == j["tally"]["fp"].template get<long>());
    CHECK(cm.fn == j["tally"]["fn"].template get<long>());
    CHECK(cm.tn == j["tally"]["tn"].template get<long>());
    CHECK(cm.total() == 20);
}

TEST_CASE("metrics worked example")
{
    auto m = metrics({90, 5, 10, 95});
    CHECK(m.precision == doctest::Approx(0.9474).epsilon(1e-4));
    CHECK(m.recall == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(m.f1 == doctest::Approx(0.9231).epsilon(1e-4));
    CHECK(m.accuracy == doctest::Approx(0.925).epsilon(1e-12));
    CHECK(std::abs(m.fpr - 0.05) < 1e-12);
    CHECK(m.degenerate.empty());
}

TEST_CASE("metrics degenerate denominators")
{
    auto m = metrics({0, 0, 4, 6});
    CHECK(m.precision == 0.0);
    CHECK(m.is_degenerate("precision"));
    CHECK(m.is_degenerate("f1"));
    CHECK_FALSE(m.is_degenerate("recall"));

    m = metrics({0, 0, 0, 7});
    CHECK(m.fpr == 0.0);
    CHECK_FALSE(m.is_degenerate("fpr"));

    m = metrics({});
    CHECK(m.is_degenerate("accuracy"));
    CHECK(m.accuracy == 0.0);
}

TEST_CASE("metrics identities on random confusion matrices")
{
    std::mt19937_64 rng(8128);
    std::uniform_int_distribution<long> count(0, 60);
    for (int trial = 0; trial < 1000; ++trial) {
        ConfusionMatrix cm{count(rng), count(rng), count(rng), count(rng)};
        auto m = metrics(cm);
        const double n = static_cast<double>(cm.total());
        for (double v : {m.accuracy, m.precision, m.recall, m.f1, m.fpr}) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
        if (n > 0)
            CHECK(std::abs(m.accuracy - (cm.tp + cm.tn) / n) < 1e-12);
        if (m.precision + m.recall > 0)
            CHECK(std::abs(m.f1 - 2 * m.precision * m.recall / (m.precision + m.recall)) < 1e-12);
        if (cm.fp + cm.tn > 0) {
            double specificity = static_cast<double>(cm.tn) / (cm.fp + cm.tn);
            CHECK(std::abs(m.fpr + specificity - 1.0) < 1e-12);
        }
        // F1 lies between min and max of precision and recall.
        if (m.precision + m.recall > 0) {
            CHECK(m.f1 <= std::max(m.precision, m.recall) + 1e-12);
            CHECK(m.f1 >= std::min(m.precision, m.recall) - 1e-12);
        }
        // Accuracy is a prevalence-weighted mix of recall and specificity.
        if (cm.tp + cm.fn > 0 && cm.fp + cm.tn > 0) {
            double prev = (cm.tp + cm.fn) / n;
            CHECK(std::abs(m.accuracy - (prev * m.recall + (1 - prev) * (1 - m.fpr))) < 1e-12);
        }
    }
}

TEST_CASE("metrics json keys")
{
    nlohmann::json j = metrics({1, 2, 3, 4}, "W");
    CHECK(j["variant"] == "W");
    CHECK(j["confusion"]["fn"] == 3);
    for (auto key : {"f1", "recall", "precision", "accuracy", "fpr", "degenerate"})
        CHECK(j.contains(key));
}

TEST_CASE("variant names")
{
    CHECK(parse_variants("W,w/o Static,w/o RAG") ==
          std::vector<Variant>{Variant::W, Variant::WithoutStatic, Variant::WithoutRag});
    CHECK(parse_variants(" V , E ,V").size() == 2);
    try {
        parse_variants("W,Z");
        FAIL("expected ConfigError");
    } catch (const agents::ConfigError& e) {
        std::string msg = e.what();
        CHECK(msg.find("'Z'") != std::string::npos);
        CHECK(msg.find("w/o Static") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_variants(""), agents::ConfigError);
    for (auto v : kAllVariants)
        CHECK(variant_from_string(to_string(v)) == v);
}

TEST_CASE("ablation setups renormalize proportionally")
{
    agents::PipelineConfig cfg;
    auto s = variant_setup(Variant::WithoutStatic, cfg);
    CHECK(s.weights.model == doctest::Approx(0.7 / 0.9).epsilon(1e-12));
    CHECK(s.weights.static_analysis == 0.0);
    CHECK(s.weights.retrieval == doctest::Approx(0.2 / 0.9).epsilon(1e-12));
    CHECK(s.weights.model == doctest::Approx(0.7778).epsilon(1e-4));
    CHECK_FALSE(s.toggles.static_analysis);

    s = variant_setup(Variant::WithoutRag, cfg);
    CHECK(s.weights.model == doctest::Approx(0.875).epsilon(1e-12));
    CHECK(s.weights.static_analysis == doctest::Approx(0.125).epsilon(1e-12));
    CHECK(s.weights.retrieval == 0.0);

    CHECK(variant_setup(Variant::V, cfg).mode == agents::DetectMode::Voting);
    CHECK(variant_setup(Variant::E, cfg).mode == agents::DetectMode::Enriched);
}

TEST_CASE("fuse_variant uses shared raw scores")
{
    agents::PipelineConfig cfg;
    ContractScores s;
    s.id = "c";
    s.channels = {channel(Channel::Static, 0.9), channel(Channel::Retrieval, 0.6), channel(Channel::Model, 0.45)};
    s.enriched_model = channel(Channel::Model, 0.8);

    auto w = fuse_variant(s, Variant::W, cfg);
    CHECK(w.score == doctest::Approx(0.7 * 0.45 + 0.1 * 0.9 + 0.2 * 0.6).epsilon(1e-12));
    auto ws = fuse_variant(s, Variant::WithoutStatic, cfg);
    CHECK(ws.score == doctest::Approx((0.7 * 0.45 + 0.2 * 0.6) / 0.9).epsilon(1e-12));
    CHECK_FALSE(ws.channel(Channel::Static));
    // Surviving channels carry the same raw scores in every variant.
    for (auto v : kAllVariants) {
        auto f = fuse_variant(s, v, cfg);
        if (auto r = f.channel(Channel::Retrieval))
            CHECK(r->score == 0.6);
        if (auto st = f.channel(Channel::Static))
            CHECK(st->score == 0.9);
    }
    auto e = fuse_variant(s, Variant::E, cfg);
    CHECK(e.channel(Channel::Model)->score == 0.8);
    auto v = fuse_variant(s, Variant::V, cfg);
    CHECK(v.verdict == Verdict::Vulnerable);

    s.enriched_model.reset();
    CHECK_THROWS_AS(fuse_variant(s, Variant::E, cfg), Error);
}

TEST_CASE("calibrate_threshold examples")
{
    using V = Verdict;
    std::vector<std::pair<double, Verdict>> separable = {
        {0.1, V::Safe}, {0.2, V::Safe}, {0.3, V::Safe}, {0.7, V::Vulnerable}, {0.9, V::Vulnerable}};
    CHECK(calibrate_threshold(separable) == 0.7);

    std::vector<std::pair<double, Verdict>> equal = {{0.4, V::Safe}, {0.4, V::Vulnerable}};
    CHECK(calibrate_threshold(equal) == 0.4);

    CHECK_THROWS_AS(calibrate_threshold({{0.2, V::Safe}, {0.3, V::Safe}}), Error);
    CHECK_THROWS_AS(calibrate_threshold({}), Error);
}

TEST_CASE("calibrate_threshold matches an exhaustive sweep")
{
    std::mt19937_64 rng(4242);
    for (int trial = 0; trial < 300; ++trial) {
        std::uniform_int_distribution<int> size(2, 25);
        std::uniform_int_distribution<int> grid(0, 20);
        std::vector<std::pair<double, Verdict>> s;
        int n = size(rng);
        for (int i = 0; i < n; ++i)
            s.emplace_back(grid(rng) / 20.0, rng() % 2 ? Verdict::Vulnerable : Verdict::Safe);
        s[0].second = Verdict::Vulnerable;
        s[1].second = Verdict::Safe;

        // Oracle: scan candidates from the top down, keep the first strict maximum.
        std::vector<double> cands;
        for (auto& p : s)
            cands.push_back(p.first);
        std::sort(cands.rbegin(), cands.rend());
        double best_t = cands.front();
        double best = f1_at(s, best_t);
        for (double t : cands) {
            double f = f1_at(s, t);
            if (f > best + 1e-15) {
                best = f;
                best_t = t;
            }
        }
        CHECK(calibrate_threshold(s) == best_t);
    }
}

TEST_CASE("load_dataset")
{
    testing::TempDir dir("dataset");
    testing::write_file(dir / "a.sol", "contract A {}");
    testing::write_file(dir / "data.jsonl",
                     "# comment\n"
                     "{\"id\":\"a\",\"source_path\":\"a.sol\",\"label\":\"vulnerable\",\"classes\":[\"Reentrancy\"],"
                     "\"split\":\"validation\"}\n\n"
                     "{\"id\":\"b\",\"source\":\"contract B {}\",\"label\":\"safe\"}\n");
    auto d = load_dataset(dir / "data.jsonl");
    REQUIRE(d.entries.size() == 2);
    CHECK(d.entries[0].source == "contract A {}");
    CHECK(d.entries[0].label == Verdict::Vulnerable);
    CHECK(d.entries[1].split.empty());
    CHECK(d.filter("validation").entries.size() == 1);
    CHECK(d.filter("").entries.size() == 2);

    testing::write_file(dir / "dup.jsonl", "{\"id\":\"a\",\"source\":\"x\",\"label\":\"safe\"}\n"
                                        "{\"id\":\"a\",\"source\":\"y\",\"label\":\"safe\"}\n");
    CHECK_THROWS_AS(load_dataset(dir / "dup.jsonl"), Error);
    testing::write_file(dir / "bad.jsonl", "{\"id\":\"a\",\"source\":\"x\",\"label\":\"maybe\"}\n");
    CHECK_THROWS_AS(load_dataset(dir / "bad.jsonl"), Error);
    CHECK_THROWS_AS(load_dataset(dir / "missing.jsonl"), Error);
}

TEST_CASE("format_table layout")
{
    EvalResult r;
    r.rows.push_back(metrics({90, 5, 10, 95}, "W"));
    r.predictions.emplace_back();
    r.evaluated = 200;
    r.failures.emplace_back("x", "boom");
    auto t = format_table(r);
    CHECK(t.find("| Variant | F1 | Recall | Precision | Accuracy | FPR |") == 0);
    CHECK(t.find("| W | 0.9231 | 0.9000 | 0.9474 | 0.9250 | 0.0500 |") != std::string::npos);
    CHECK(t.find("1 failed and excluded") != std::string::npos);
    auto j = to_json(r);
    CHECK(j["variants"].size() == 1);
    CHECK(j["failures"][0]["id"] == "x");
}
