#include "scvm/eval/harness.hpp"

#include "scvm/core/parallel.hpp"
#include "scvm/retrieval/tfidf.hpp"

#include <cstdio>
#include <fstream>
#include <set>

namespace scvm::eval {

using nlohmann::json;

namespace {

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

} // namespace

LabeledDataset LabeledDataset::filter(std::string_view split) const
{
    if (split.empty())
        return *this;
    LabeledDataset out;
    for (const auto& e : entries) {
        if (e.split == split)
            out.entries.push_back(e);
    }
    return out;
}

LabeledDataset load_dataset(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot read dataset " + path.string());
    LabeledDataset data;
    std::set<std::string> ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#')
            continue;
        try {
            auto j = json::parse(line);
            auto doc = retrieval::corpus_document_from_json(j, path.parent_path());
            DatasetEntry e{doc.id, doc.source, doc.label, doc.classes, j.value("split", std::string())};
            if (!ids.insert(e.id).second)
                throw Error("duplicate dataset id: " + e.id);
            data.entries.push_back(std::move(e));
        } catch (const json::exception& e) {
            throw Error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const Error& e) {
            throw Error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return data;
}

std::string_view to_string(Variant v)
{
    switch (v) {
    case Variant::W: return "W";
    case Variant::V: return "V";
    case Variant::E: return "E";
    case Variant::WithoutStatic: return "w/o Static";
    case Variant::WithoutRag: return "w/o RAG";
    }
    return "W";
}

Variant variant_from_string(std::string_view text)
{
    for (auto v : kAllVariants) {
        if (to_string(v) == text)
            return v;
    }
    throw agents::ConfigError("unknown variant '" + std::string(text) + "' (valid: W, V, E, w/o Static, w/o RAG)");
}

std::vector<Variant> parse_variants(std::string_view list)
{
    std::vector<Variant> out;
    std::size_t pos = 0;
    while (pos <= list.size()) {
        auto comma = list.find(',', pos);
        if (comma == std::string_view::npos)
            comma = list.size();
        auto item = list.substr(pos, comma - pos);
        while (!item.empty() && item.front() == ' ')
            item.remove_prefix(1);
        while (!item.empty() && item.back() == ' ')
            item.remove_suffix(1);
        if (!item.empty()) {
            auto v = variant_from_string(item);
            if (std::find(out.begin(), out.end(), v) == out.end())
                out.push_back(v);
        }
        pos = comma + 1;
    }
    if (out.empty())
        throw agents::ConfigError("no variants given (valid: W, V, E, w/o Static, w/o RAG)");
    return out;
}

VariantSetup variant_setup(Variant v, const agents::PipelineConfig& cfg)
{
    using agents::DetectMode;
    switch (v) {
    case Variant::W: return {DetectMode::Weighted, cfg.weights, {}};
    case Variant::V: return {DetectMode::Voting, cfg.weights, {}};
    case Variant::E: return {DetectMode::Enriched, cfg.weights, {}};
    case Variant::WithoutStatic:
        return {DetectMode::Weighted, cfg.weights.without(Channel::Static), {false, true, true}};
    case Variant::WithoutRag:
        return {DetectMode::Weighted, cfg.weights.without(Channel::Retrieval), {true, false, true}};
    }
    return {DetectMode::Weighted, cfg.weights, {}};
}

std::vector<ContractScores> collect_scores(const LabeledDataset& data, const agents::AuditEnvironment& env,
                                           bool with_enriched, unsigned jobs)
{
    std::vector<ContractScores> out(data.entries.size());
    parallel_for(data.entries.size(), jobs, [&](std::size_t i) {
        const auto& e = data.entries[i];
        auto& s = out[i];
        s.id = e.id;
        s.gold = e.label;
        try {
            auto contract = SourceContract::parse(e.id, e.source);
            s.channels = agents::run_channels(contract, env, false);
            if (with_enriched)
                s.enriched_model = agents::model_channel(contract, env, true);
        } catch (const std::exception& ex) {
            s.error = ex.what();
            s.channels.clear();
            s.enriched_model.reset();
        }
    });
    return out;
}

agents::FusedVerdict fuse_variant(const ContractScores& scores, Variant v, const agents::PipelineConfig& cfg)
{
    auto setup = variant_setup(v, cfg);
    std::vector<ChannelResult> channels;
    for (const auto& c : scores.channels) {
        if (!setup.toggles.enabled(c.channel))
            continue;
        if (c.channel == Channel::Model && v == Variant::E) {
            if (!scores.enriched_model)
                throw Error("enriched model score missing for " + scores.id);
            channels.push_back(*scores.enriched_model);
        } else {
            channels.push_back(c);
        }
    }
    return agents::fuse(std::move(channels), setup.mode, setup.weights, cfg.threshold);
}

EvalResult run_variants(const LabeledDataset& data, const agents::AuditEnvironment& env,
                        const std::vector<Variant>& variants, unsigned jobs)
{
    bool enriched = std::find(variants.begin(), variants.end(), Variant::E) != variants.end();
    auto scores = collect_scores(data, env, enriched, jobs);
    EvalResult result;
    LabeledVerdicts gold;
    for (const auto& s : scores) {
        if (!s.error.empty()) {
            result.failures.emplace_back(s.id, s.error);
            continue;
        }
        gold.emplace_back(s.id, s.gold);
    }
    result.evaluated = static_cast<long>(gold.size());
    for (auto v : variants) {
        LabeledVerdicts preds;
        std::vector<std::pair<std::string, agents::FusedVerdict>> detail;
        for (const auto& s : scores) {
            if (!s.error.empty())
                continue;
            auto fused = fuse_variant(s, v, env.config);
            preds.emplace_back(s.id, fused.verdict);
            detail.emplace_back(s.id, std::move(fused));
        }
        result.rows.push_back(metrics(confusion(preds, gold), std::string(to_string(v))));
        result.predictions.push_back(std::move(detail));
    }
    return result;
}

RepairStats repair_statistics(const LabeledDataset& data, const agents::AuditEnvironment& env, unsigned jobs)
{
    std::vector<int> state(data.entries.size(), 0); // 0 none, 1 patched, 2 patched and verified
    std::vector<char> ok(data.entries.size(), 0);
    parallel_for(data.entries.size(), jobs, [&](std::size_t i) {
        try {
            auto contract = SourceContract::parse(data.entries[i].id, data.entries[i].source);
            auto run = agents::run_pipeline(contract, env);
            ok[i] = 1;
            if (run.patch)
                state[i] = run.verification && run.verification->passed ? 2 : 1;
        } catch (const std::exception&) {
        }
    });
    RepairStats s;
    for (std::size_t i = 0; i < state.size(); ++i) {
        s.contracts += ok[i];
        s.patched += state[i] >= 1;
        s.passed += state[i] == 2;
    }
    return s;
}

std::string format_table(const EvalResult& result)
{
    std::string out = "| Variant | F1 | Recall | Precision | Accuracy | FPR |\n|---|---|---|---|---|---|\n";
    for (const auto& r : result.rows) {
        out += "| " + r.label + " | " + fmt(r.f1) + " | " + fmt(r.recall) + " | " + fmt(r.precision) + " | " +
               fmt(r.accuracy) + " | " + fmt(r.fpr) + " |\n";
    }
    out += "\nEvaluated " + std::to_string(result.evaluated) + " contract(s)";
    if (!result.failures.empty())
        out += ", " + std::to_string(result.failures.size()) + " failed and excluded";
    out += ".\n";
    if (result.repair) {
        const auto& r = *result.repair;
        out += "Verified patches: " + std::to_string(r.passed) + " of " + std::to_string(r.contracts) +
               " contract(s), " + std::to_string(r.passed) + " of " + std::to_string(r.patched) + " patched.\n";
    }
    return out;
}

json to_json(const EvalResult& result)
{
    json rows = json::array();
    for (std::size_t i = 0; i < result.rows.size(); ++i) {
        json row = result.rows[i];
        json preds = json::array();
        for (const auto& [id, v] : result.predictions[i])
            preds.push_back({{"id", id}, {"verdict", to_string(v.verdict)}, {"score", v.score}});
        row["predictions"] = std::move(preds);
        rows.push_back(std::move(row));
    }
    json failures = json::array();
    for (const auto& [id, err] : result.failures)
        failures.push_back({{"id", id}, {"error", err}});
    json j = {{"variants", rows}, {"evaluated", result.evaluated}, {"failures", failures}};
    if (result.repair) {
        const auto& r = *result.repair;
        j["repair"] = {{"contracts", r.contracts},
                       {"patched", r.patched},
                       {"verified", r.passed},
                       {"verified_over_contracts", {r.passed, r.contracts}},
                       {"verified_over_patched", {r.passed, r.patched}}};
    }
    return j;
}

double calibrate_threshold(const std::vector<std::pair<double, Verdict>>& scored)
{
    bool pos = false, neg = false;
    std::set<double> candidates;
    for (const auto& [s, g] : scored) {
        (g == Verdict::Vulnerable ? pos : neg) = true;
        candidates.insert(s);
    }
    if (!pos || !neg)
        throw Error("calibration needs both safe and vulnerable examples");
    // F1 = 2tp / (2tp + fp + fn), compared exactly as fractions.
    double best = *candidates.begin();
    long best_num = -1, best_den = 1;
    for (double t : candidates) {
        long tp = 0, fp = 0, fn = 0;
        for (const auto& [s, g] : scored) {
            bool p = s >= t, v = g == Verdict::Vulnerable;
            tp += p && v;
            fp += p && !v;
            fn += !p && v;
        }
        long num = 2 * tp, den = 2 * tp + fp + fn;
        if (den == 0)
            den = 1;
        if (num * best_den >= best_num * den) {
            best_num = num;
            best_den = den;
            best = t;
        }
    }
    return best;
}

} // namespace scvm::eval
