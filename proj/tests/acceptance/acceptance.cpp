// Runs the ten release criteria and prints one PASS/FAIL line per criterion.
// Exit status is 0 only when every criterion passes within its time limit.

#include "scvm/agents/fusion.hpp"
#include "scvm/core/artifacts.hpp"
#include "scvm/eval/metrics.hpp"
#include "scvm/retrieval/snapshot.hpp"
#include "scvm/retrieval/tfidf.hpp"
#include "scvm/sol/rules.hpp"
#include "scvm/sol/scanner.hpp"
#include "scvm/sol/segment.hpp"

#include "support/cli_support.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <thread>

using namespace scvm;
using namespace scvm::testing;
using nlohmann::json;

namespace {

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void expect(bool ok, const std::string& what)
{
    if (!ok)
        throw Failure(what);
}

bool near(double a, double b, double tol)
{
    return std::abs(a - b) <= tol;
}

struct Criterion {
    int number;
    std::string name;
    std::chrono::milliseconds limit;
    std::function<std::string()> body;
};

// 1
std::string fusion_arithmetic()
{
    const agents::FusionWeights w{0.7, 0.1, 0.2};
    std::mt19937_64 rng(20240417);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        double m = u(rng), s = u(rng), r = u(rng);
        double got = agents::weighted_score(m, s, r, w);
        expect(near(got, 0.7 * m + 0.1 * s + 0.2 * r, 1e-12), "formula mismatch");
        expect(got >= 0.0 && got <= 1.0, "score out of [0,1]");
        double d = u(rng) * (1.0 - std::max({m, s, r}));
        expect(agents::weighted_score(m + d, s, r, w) >= got, "not monotone in model");
        expect(agents::weighted_score(m, s + d, r, w) >= got, "not monotone in static");
        expect(agents::weighted_score(m, s, r + d, w) >= got, "not monotone in retrieval");
        double m2 = u(rng), s2 = u(rng), r2 = u(rng);
        if (m2 >= m && s2 >= s && r2 >= r)
            expect(agents::weighted_score(m2, s2, r2, w) >= got, "not monotone pairwise");
    }
    return "1000 triples";
}

// 2
std::string voting_oracle()
{
    const Channel order[] = {Channel::Static, Channel::Retrieval, Channel::Model};
    for (int mask = 0; mask < 8; ++mask) {
        std::vector<ChannelResult> channels;
        int votes = 0;
        for (int b = 0; b < 3; ++b) {
            bool v = (mask >> b) & 1;
            votes += v;
            channels.push_back(make_channel_result(order[b], v ? 1.0 : 0.0, {}));
        }
        auto fused = agents::fuse(channels, agents::DetectMode::Voting, {}, 0.5);
        Verdict brute = votes * 2 > 3 ? Verdict::Vulnerable : Verdict::Safe;
        expect(fused.verdict == brute, "mask " + std::to_string(mask) + " disagrees with majority");
    }
    return "8 combinations";
}

// 3
std::string retrieval_oracle()
{
    using namespace scvm::retrieval;
    std::size_t checked = 0;
    for (int n : {10, 50, 200}) {
        const auto dir = data_dir() / "retrieval";
        auto idx = build_corpus_index(load_corpus(dir / ("corpus_" + std::to_string(n) + ".jsonl")));
        auto ex = json::parse(read_file(dir / ("expected_" + std::to_string(n) + ".json")));
        std::map<std::string, const IndexedDocument*> by_id;
        for (const auto& d : idx.documents)
            by_id[d.id] = &d;
        const std::string tag = "corpus " + std::to_string(n) + ": ";
        expect(idx.documents.size() == ex["documents"].get<std::size_t>(), tag + "document count");
        for (const auto& [term, v] : ex["idf"].items())
            expect(near(idx.idf.at(term), v.get<double>(), 1e-9), tag + "idf " + term);
        expect(idx.idf.size() == ex["idf"].size(), tag + "idf vocabulary");
        for (const auto& [id, terms] : ex["weights"].items()) {
            const auto& got = by_id.at(id)->vector.weights();
            expect(got.size() == terms.size(), tag + "term count of " + id);
            for (const auto& [term, v] : terms.items())
                expect(near(got.at(term), v.get<double>(), 1e-9), tag + "weight " + id + "/" + term);
            ++checked;
        }
        for (const auto& c : ex["cosines"]) {
            double got = cosine(by_id.at(c[0])->vector, by_id.at(c[1])->vector);
            expect(near(got, c[2].get<double>(), 1e-9), tag + "cosine");
            ++checked;
        }
        for (const auto& q : ex["queries"]) {
            const std::string id = q["id"];
            auto nbs = top_k(id, by_id.at(id)->vector, idx, 5);
            expect(nbs.size() == q["top5"].size(), tag + "top5 size for " + id);
            for (std::size_t i = 0; i < nbs.size(); ++i) {
                expect(nbs[i].id == q["top5"][i][0].get<std::string>(), tag + "top5 order for " + id);
                expect(near(nbs[i].similarity, q["top5"][i][1].get<double>(), 1e-9), tag + "top5 score for " + id);
            }
            expect(near(rank_weighted_probability(nbs), q["probability"].get<double>(), 1e-9),
                   tag + "probability for " + id);
            ++checked;
        }
    }
    for (std::size_t m = 1; m <= 50; ++m) {
        auto w = rank_weights(m);
        double sum = 0.0;
        for (double x : w)
            sum += x;
        expect(near(sum, 1.0, 1e-12), "rank weights sum for m=" + std::to_string(m));
    }
    std::vector<Neighbor> vvsss;
    for (int i = 0; i < 5; ++i)
        vvsss.push_back({"n" + std::to_string(i), 1.0 - 0.1 * i, i + 1, i < 2 ? Verdict::Vulnerable : Verdict::Safe, {}});
    expect(near(rank_weighted_probability(vvsss), 0.6, 1e-12), "VVSSS probability");
    return std::to_string(checked) + " oracle values";
}

// 4
std::string static_manifest()
{
    const auto dir = data_dir() / "static";
    auto manifest = json::parse(read_file(dir / "manifest.json"));
    const auto& rules = sol::default_rules();
    std::size_t snippets = 0;
    bool presign = false;
    std::set<std::string> positive_classes;
    for (const auto& [file, entry] : manifest.items()) {
        auto path = dir / file;
        auto contract = SourceContract::parse(path.stem().string(), read_file(path));
        std::set<std::pair<std::string, std::string>> want, got;
        for (const auto& f : entry["findings"])
            want.insert({f[0].get<std::string>(), f[1].get<std::string>()});
        for (const auto& f : sol::scan(contract, rules))
            got.insert({f.vclass.name, f.location.function});
        expect(want == got, file + " disagrees with its label");
        if (file.rfind("../", 0) != 0) {
            ++snippets;
            for (const auto& [cls, fn] : want)
                positive_classes.insert(cls);
        }
        if (file == "../audit/contracts/presign.sol")
            presign = want.count({"Unprotected Function", "preSign"}) == 1;
    }
    expect(snippets >= 16, "fewer than 16 snippets");
    expect(presign, "preSign fixture does not fire Unprotected Function");
    for (const auto& r : rules)
        expect(positive_classes.count(r.vclass.name) == 1, "no positive snippet for " + r.rule_id);
    return std::to_string(snippets) + " snippets plus " + std::to_string(manifest.size() - snippets) +
           " contracts, 100% agreement";
}

std::vector<std::string> audit_args(const std::filesystem::path& out, const std::string& target)
{
    return {"-c", (audit_dir() / "config.json").string(), "audit", target, "--output-dir", out.string()};
}

// 5
std::string determinism()
{
    TempDir a("accept-det-a"), b("accept-det-b");
    const auto contracts = (audit_dir() / "contracts").string();
    auto ra = run_cli(audit_args(a.path(), contracts));
    auto rb = run_cli(audit_args(b.path(), contracts));
    expect(ra.code == 0 && rb.code == 0, "audit failed: " + ra.err + rb.err);
    std::size_t files = 0;
    for (const auto& e : std::filesystem::directory_iterator(a.path())) {
        auto other = b.path() / e.path().filename();
        expect(std::filesystem::exists(other), e.path().filename().string() + " missing in second run");
        expect(read_file(e.path()) == read_file(other), e.path().filename().string() + " differs");
        ++files;
    }
    expect(files == std::distance(std::filesystem::directory_iterator(b.path()), {}), "file sets differ");
    expect(files >= 9, "expected report, json and run files for three contracts");
    return std::to_string(files) + " files byte-identical";
}

// 6
std::string presign_end_to_end()
{
    TempDir out("accept-presign");
    auto r = run_cli(audit_args(out.path(), (audit_dir() / "contracts" / "presign.sol").string()));
    expect(r.code == 0, "audit exit " + std::to_string(r.code) + ": " + r.err);
    auto run = json::parse(read_file(out / "presign.run.json"));
    expect(run["detection"]["verdict"] == "vulnerable", "verdict is not vulnerable");
    bool critical = false;
    for (const auto& risk : run["risks"])
        critical |= risk["finding"]["class"]["name"] == "Unprotected Function" && risk["level"] == "Critical";
    expect(critical, "Unprotected Function is not rated Critical");

    const std::string repaired = run["patch"]["repaired_source"];
    auto patched = SourceContract::parse("presign", repaired);
    bool guarded = false;
    for (const auto& fn : sol::segment_functions(patched.tokens())) {
        if (fn.name != "preSign")
            continue;
        auto body = repaired.substr(fn.decl_span.begin, fn.decl_span.size());
        guarded = std::find(fn.modifiers.begin(), fn.modifiers.end(), "onlyOwner") != fn.modifiers.end() ||
                  body.find("msg.sender == owner") != std::string::npos ||
                  body.find("owner == msg.sender") != std::string::npos;
    }
    expect(guarded, "preSign in the patch has no owner guard");
    expect(run["verification"]["passed"] == true, "verification did not pass");
    expect(sol::scan(patched, sol::default_rules()).empty(), "static re-scan of the patch fires a rule");

    auto report = AuditReport::from_json(json::parse(read_file(out / "presign.report.json")));
    report.validate();
    auto md = read_file(out / "presign.report.md");
    std::size_t pos = 0;
    for (std::size_t i = 0; i < kReportSectionTitles.size(); ++i) {
        auto heading = "## " + std::to_string(i + 1) + ". " + std::string(kReportSectionTitles[i]);
        pos = md.find(heading, pos);
        expect(pos != std::string::npos, "markdown lacks section " + heading);
    }
    return "vulnerable, Critical, guarded patch verified, 7 sections";
}

// 7
std::string ablation()
{
    TempDir dir("accept-ablation");
    auto results = dir / "results.json";
    auto r = run_cli({"-c", (eval_dir() / "config.json").string(), "eval", (eval_dir() / "dataset.jsonl").string(),
                      "--variants", "W,w/o Static,w/o RAG", "--results", results.string()});
    expect(r.code == 0, "eval exit " + std::to_string(r.code) + ": " + r.err);
    auto j = json::parse(read_file(results));
    expect(j["evaluated"] == 40, "expected 40 evaluated contracts");
    std::map<std::string, double> f1;
    for (const auto& v : j["variants"])
        f1[v["variant"].get<std::string>()] = v["f1"].get<double>();
    expect(f1.size() == 3, "expected three variants");
    double w = f1.at("W"), s = f1.at("w/o Static"), g = f1.at("w/o RAG");
    char buf[128];
    std::snprintf(buf, sizeof buf, "F1 W %.4f >= w/o Static %.4f >= w/o RAG %.4f", w, s, g);
    expect(w >= s && s >= g, std::string("ordering violated: ") + buf);
    return buf;
}

// 8
std::string metrics_identities()
{
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<long> count(0, 500);
    for (int i = 0; i < 1000; ++i) {
        eval::ConfusionMatrix cm{count(rng), count(rng), count(rng), count(rng)};
        if (i % 50 == 0)
            cm.tp = 0;
        auto m = eval::metrics(cm);
        auto ratio = [](double num, double den) { return den == 0.0 ? 0.0 : num / den; };
        double tp = cm.tp, fp = cm.fp, fn = cm.fn, tn = cm.tn;
        expect(near(m.accuracy, ratio(tp + tn, tp + fp + fn + tn), 1e-12), "accuracy identity");
        expect(near(m.precision, ratio(tp, tp + fp), 1e-12), "precision identity");
        expect(near(m.recall, ratio(tp, tp + fn), 1e-12), "recall identity");
        expect(near(m.fpr, ratio(fp, fp + tn), 1e-12), "fpr identity");
        double hm = ratio(2 * m.precision * m.recall, m.precision + m.recall);
        expect(near(m.f1, hm, 1e-12), "f1 identity");
    }
    auto worked = eval::metrics({90, 5, 10, 95});
    expect(near(worked.fpr, 0.05, 1e-12), "worked example fpr");
    char buf[64];
    std::snprintf(buf, sizeof buf, "1000 matrices, worked fpr %.4f", worked.fpr);
    return buf;
}

// 9
std::string hot_swap()
{
    using namespace scvm::retrieval;
    TempDir dir("accept-swap");
    HashingEmbedder emb;
    const KbIndex kb = build_kb_index({}, emb);
    // version v holds (v % 7) + 1 documents named "v<v>-d<i>"
    auto corpus_for = [](std::uint64_t v) {
        std::vector<CorpusDocument> docs;
        for (std::uint64_t i = 0; i < v % 7 + 1; ++i)
            docs.push_back({"v" + std::to_string(v) + "-d" + std::to_string(i),
                            "contract C" + std::to_string(v) + " { uint256 x" + std::to_string(i) + "; }",
                            Verdict::Safe,
                            {}});
        return build_corpus_index(docs);
    };
    auto complete = [](const Snapshot& s) {
        if (s.corpus.documents.size() != s.version % 7 + 1)
            return false;
        const auto prefix = "v" + std::to_string(s.version) + "-";
        return std::all_of(s.corpus.documents.begin(), s.corpus.documents.end(),
                           [&](const auto& d) { return d.id.rfind(prefix, 0) == 0; });
    };

    SnapshotStore store(dir.path());
    store.publish(corpus_for(1), kb);
    std::atomic<bool> done{false};
    std::atomic<long> observations{0};
    std::atomic<bool> torn{false};
    std::string torn_detail;
    std::mutex detail_mutex;
    auto reader = [&](bool from_disk) {
        std::uint64_t last = 0;
        while (!done.load()) {
            std::shared_ptr<const Snapshot> s;
            try {
                s = from_disk ? load_snapshot(dir.path()) : store.current();
            } catch (const std::exception& e) {
                std::lock_guard lock(detail_mutex);
                torn = true;
                torn_detail = e.what();
                return;
            }
            if (!complete(*s) || s->version < last) {
                std::lock_guard lock(detail_mutex);
                torn = true;
                torn_detail = "incomplete or stale snapshot at version " + std::to_string(s->version);
                return;
            }
            last = s->version;
            ++observations;
        }
    };
    std::vector<std::thread> readers;
    for (int i = 0; i < 4; ++i)
        readers.emplace_back(reader, i % 2 == 0);
    for (std::uint64_t v = 2; v <= 101; ++v) {
        auto published = store.publish(corpus_for(v), kb);
        if (published != v || !complete(*load_snapshot(dir.path()))) {
            done = true;
            for (auto& t : readers)
                t.join();
            throw Failure("publish " + std::to_string(v) + " did not round-trip");
        }
    }
    done = true;
    for (auto& t : readers)
        t.join();
    expect(!torn, torn_detail);

    for (auto crash : {CrashPoint::MidWrite, CrashPoint::BeforePointerSwap}) {
        auto before = current_version(dir.path());
        bool threw = false;
        try {
            publish_snapshot(dir.path(), corpus_for(999), kb, {crash});
        } catch (const SimulatedCrash&) {
            threw = true;
        }
        expect(threw, "simulated crash did not fire");
        expect(current_version(dir.path()) == before, "crash moved the pointer");
        expect(complete(*load_snapshot(dir.path())), "snapshot after crash is incomplete");
    }
    return "100 publishes, " + std::to_string(observations.load()) + " reader observations, crash kept v" +
           std::to_string(*current_version(dir.path()));
}

// 10
std::string config_validation()
{
    TempDir dir("accept-config");
    const auto base = audit_dir() / "config.json";
    const auto target = (audit_dir() / "contracts" / "presign.sol").string();
    struct Case {
        std::string name;
        json patch;
    };
    const std::vector<Case> cases = {
        {"verifier equals fixer", {{"providers", {{"verifier", {{"model", "scvm-base-mock"}}}}}}},
        {"weights sum 1.1", {{"weights", {{"model", 0.7}, {"static", 0.2}, {"retrieval", 0.2}}}}},
        {"k = 0", {{"k", 0}}},
    };
    for (const auto& c : cases) {
        auto cfg = relocate_config(base, dir / "config.json", c.patch);
        for (const char* cmd : {"audit", "detect"}) {
            auto r = run_cli({"-c", cfg.string(), cmd, target, "--output-dir", (dir / "out").string()});
            expect(r.code == cli::kExitUsage, c.name + " via " + cmd + " exited " + std::to_string(r.code));
        }
    }
    expect(run_cli({"-c", base.string(), "detect", target, "--k", "0"}).code == cli::kExitUsage, "--k 0 accepted");
    expect(run_cli({"-c", base.string(), "detect", target, "--weights", "0.7,0.1,0.1"}).code == cli::kExitUsage,
           "--weights summing to 0.9 accepted");
    return "3 rejections via config file and flags, exit 2";
}

} // namespace

int main()
{
    using std::chrono::milliseconds;
    const std::vector<Criterion> criteria = {
        {1, "fusion arithmetic", milliseconds(1000), fusion_arithmetic},
        {2, "voting oracle", milliseconds(1000), voting_oracle},
        {3, "retrieval oracle", milliseconds(10000), retrieval_oracle},
        {4, "static analyzer corpus", milliseconds(5000), static_manifest},
        {5, "audit determinism", milliseconds(30000), determinism},
        {6, "preSign end to end", milliseconds(5000), presign_end_to_end},
        {7, "ablation ordering", milliseconds(30000), ablation},
        {8, "metrics identities", milliseconds(1000), metrics_identities},
        {9, "snapshot hot swap", milliseconds(60000), hot_swap},
        {10, "config validation", milliseconds(10000), config_validation},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        auto start = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = true;
        try {
            detail = c.body();
        } catch (const std::exception& e) {
            ok = false;
            detail = e.what();
        }
        auto elapsed = std::chrono::duration_cast<milliseconds>(std::chrono::steady_clock::now() - start);
        if (ok && elapsed > c.limit) {
            ok = false;
            detail += " (over time limit)";
        }
        failed += !ok;
        std::printf("%s  %2d %-24s %6lld ms / %6lld ms  %s\n", ok ? "PASS" : "FAIL", c.number, c.name.c_str(),
                    static_cast<long long>(elapsed.count()), static_cast<long long>(c.limit.count()),
                    detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
