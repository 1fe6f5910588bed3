#include "scvm/cli/cli.hpp"

#include "scvm/agents/pipeline.hpp"
#include "scvm/core/log.hpp"
#include "scvm/core/parallel.hpp"
#include "scvm/eval/harness.hpp"
#include "scvm/retrieval/snapshot.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace scvm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
    std::string config;
    unsigned jobs = 0;
    bool verbose = false;
    bool quiet = false;
    std::string output_dir;
    std::string mode;
    std::string weights;
    std::optional<double> threshold;
    std::optional<int> k;
    std::string record_misses;
    std::string exchange_log;

    std::vector<std::string> inputs;
    bool json_out = false;
    bool fail_on_vulnerable = false;

    std::string kb_root;
    std::string kb_corpus;
    std::string kb_dir;

    std::string dataset;
    std::string variants = "W,V,E,w/o Static,w/o RAG";
    std::string split;
    std::string cal_split = "validation";
    std::string results;
    bool repair = false;
    bool write_back = false;
};

std::string fixed(double v, int digits)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

void write_text(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out)
        throw Error("cannot write " + path.string());
}

std::string read_text(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

agents::FusionWeights parse_weights(const std::string& text)
{
    agents::FusionWeights w;
    double* slots[] = {&w.model, &w.static_analysis, &w.retrieval};
    std::stringstream ss(text);
    std::string item;
    int n = 0;
    while (std::getline(ss, item, ',')) {
        if (n >= 3)
            throw agents::ConfigError("--weights takes three values: model,static,retrieval");
        try {
            std::size_t used = 0;
            *slots[n] = std::stod(item, &used);
            if (item.find_first_not_of(" \t", used) != std::string::npos)
                throw std::invalid_argument(item);
        } catch (const std::logic_error&) {
            throw agents::ConfigError("--weights value '" + item + "' is not a number");
        }
        ++n;
    }
    if (n != 3)
        throw agents::ConfigError("--weights takes three values: model,static,retrieval");
    return w;
}

agents::PipelineConfig load_effective_config(const Options& o)
{
    if (o.config.empty())
        throw agents::ConfigError("--config is required for this command");
    auto cfg = agents::load_config(o.config);
    if (!o.mode.empty())
        cfg.mode = agents::mode_from_string(o.mode);
    if (!o.weights.empty())
        cfg.weights = parse_weights(o.weights);
    if (o.threshold)
        cfg.threshold = *o.threshold;
    if (o.k)
        cfg.k = *o.k;
    if (!o.output_dir.empty())
        cfg.output_dir = o.output_dir;
    if (!o.exchange_log.empty())
        cfg.exchange_log = fs::path(o.exchange_log);
    if (!o.record_misses.empty()) {
        for (auto* p : {&cfg.detector, &cfg.base, &cfg.verifier})
            p->record_misses = o.record_misses;
    }
    cfg.validate();
    return cfg;
}

struct Input {
    std::string id;
    fs::path path;
    std::string error;
};

std::vector<Input> collect_inputs(const std::vector<std::string>& args)
{
    std::vector<Input> out;
    for (const auto& a : args) {
        fs::path p(a);
        std::error_code ec;
        if (fs::is_directory(p, ec)) {
            std::vector<fs::path> found;
            for (const auto& e : fs::recursive_directory_iterator(p, ec)) {
                if (e.is_regular_file() && e.path().extension() == ".sol")
                    found.push_back(e.path());
            }
            std::sort(found.begin(), found.end());
            if (found.empty())
                out.push_back({a, p, "no .sol files under directory"});
            for (auto& f : found)
                out.push_back({f.stem().string(), f, ""});
        } else {
            out.push_back({p.stem().string(), p, ""});
        }
    }
    std::set<std::string> seen;
    for (auto& in : out) {
        if (in.error.empty() && !seen.insert(in.id).second)
            in.error = "duplicate contract id '" + in.id + "'";
    }
    return out;
}

unsigned jobs_of(const Options& o)
{
    return o.jobs == 0 ? default_jobs() : o.jobs;
}

int cmd_audit(const Options& o, std::ostream& out, std::ostream& err)
{
    auto cfg = load_effective_config(o);
    auto env = agents::AuditEnvironment::create(cfg);
    auto inputs = collect_inputs(o.inputs);

    struct Outcome {
        std::string line;
        std::string error;
        bool vulnerable = false;
    };
    std::vector<Outcome> results(inputs.size());
    parallel_for(inputs.size(), jobs_of(o), [&](std::size_t i) {
        const auto& in = inputs[i];
        auto& r = results[i];
        if (!in.error.empty()) {
            r.error = in.error;
            return;
        }
        try {
            auto contract = SourceContract::parse(in.id, read_text(in.path));
            auto run = agents::run_pipeline(contract, *env);
            auto base = cfg.output_dir / in.id;
            write_text(base.string() + ".report.md", run.report.to_markdown());
            write_text(base.string() + ".report.json", run.report.to_json().dump(2) + "\n");
            write_text(base.string() + ".run.json", run.to_json(cfg.include_timings).dump(2) + "\n");
            r.vulnerable = run.verdict.verdict == Verdict::Vulnerable;
            r.line = in.id + ": " + std::string(to_string(run.verdict.verdict)) + " " + fixed(run.verdict.score, 2);
            if (r.vulnerable) {
                r.line += ", " + std::to_string(run.findings.size()) + " finding(s)";
                if (run.verification)
                    r.line += run.verification->passed ? ", patch verified" : ", patch not verified";
                for (const auto& s : run.stages) {
                    if (s.status == agents::StageStatus::Failed)
                        r.line += ", " + s.name + " failed: " + s.message;
                }
            }
            r.line += " -> " + (base.string() + ".report.md");
        } catch (const std::exception& e) {
            r.error = e.what();
        }
    });

    int code = kExitOk;
    bool any_vulnerable = false;
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (!results[i].error.empty()) {
            err << "scvm: " << inputs[i].path.string() << ": " << results[i].error << "\n";
            code = kExitProcessing;
            continue;
        }
        out << results[i].line << "\n";
        any_vulnerable |= results[i].vulnerable;
    }
    if (code == kExitOk && o.fail_on_vulnerable && any_vulnerable)
        return kExitVulnerable;
    return code;
}

int cmd_detect(const Options& o, std::ostream& out, std::ostream& err)
{
    auto cfg = load_effective_config(o);
    auto env = agents::AuditEnvironment::create(cfg);
    auto inputs = collect_inputs(o.inputs);

    std::vector<std::optional<agents::FusedVerdict>> verdicts(inputs.size());
    std::vector<std::string> errors(inputs.size());
    parallel_for(inputs.size(), jobs_of(o), [&](std::size_t i) {
        if (!inputs[i].error.empty()) {
            errors[i] = inputs[i].error;
            return;
        }
        try {
            auto contract = SourceContract::parse(inputs[i].id, read_text(inputs[i].path));
            verdicts[i] = agents::detect(contract, *env, cfg.mode, cfg.weights, cfg.threshold);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });

    int code = kExitOk;
    bool any_vulnerable = false;
    json results = json::array();
    json failures = json::array();
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (!errors[i].empty()) {
            err << "scvm: " << inputs[i].path.string() << ": " << errors[i] << "\n";
            failures.push_back({{"contract", inputs[i].id}, {"error", errors[i]}});
            code = kExitProcessing;
            continue;
        }
        const auto& v = *verdicts[i];
        any_vulnerable |= v.verdict == Verdict::Vulnerable;
        if (o.json_out) {
            results.push_back({{"contract", inputs[i].id}, {"detection", v}});
            continue;
        }
        out << inputs[i].id << ": " << to_string(v.verdict) << " " << fixed(v.score, 2) << " (" << to_string(v.mode)
            << ", threshold " << fixed(v.threshold, 2) << ")\n";
        for (const auto& c : v.channels) {
            std::string name(to_string(c.channel));
            name.resize(10, ' ');
            out << "  " << name << to_string(c.verdict) << " " << fixed(c.score, 2);
            if (!c.findings.empty()) {
                std::set<std::string> classes;
                for (const auto& f : c.findings)
                    classes.insert(f.vclass.name);
                std::string list;
                for (const auto& n : classes)
                    list += (list.empty() ? "" : ", ") + n;
                out << "  [" << list << "]";
            }
            out << "\n";
        }
    }
    if (o.json_out)
        out << json{{"results", results}, {"errors", failures}}.dump(2) << "\n";
    if (code == kExitOk && o.fail_on_vulnerable && any_vulnerable)
        return kExitVulnerable;
    return code;
}

struct KbSettings {
    fs::path root;
    std::optional<fs::path> corpus;
    std::optional<fs::path> kb_dir;
    agents::EmbedderConfig embedder;
    retrieval::ChunkingConfig chunking;
};

KbSettings kb_settings(const Options& o)
{
    KbSettings s;
    if (!o.config.empty()) {
        auto cfg = agents::load_config(o.config);
        if (cfg.index_root)
            s.root = *cfg.index_root;
        s.corpus = cfg.corpus;
        s.kb_dir = cfg.kb_dir;
        s.embedder = cfg.embedder;
        s.chunking = cfg.chunking;
    }
    if (!o.kb_root.empty())
        s.root = o.kb_root;
    if (!o.kb_corpus.empty())
        s.corpus = fs::path(o.kb_corpus);
    if (!o.kb_dir.empty())
        s.kb_dir = fs::path(o.kb_dir);
    if (s.root.empty())
        throw agents::ConfigError("no index root: pass --root or set index_root in the config");
    return s;
}

int cmd_kb(const std::string& action, const Options& o, std::ostream& out, std::ostream& err)
{
    auto s = kb_settings(o);
    if (action == "status") {
        auto version = retrieval::current_version(s.root);
        if (!version) {
            err << "scvm: no snapshot published under " << s.root.string() << "\n";
            return kExitProcessing;
        }
        auto snap = retrieval::load_snapshot(s.root, *version);
        std::set<std::string> docs;
        for (const auto& c : snap->kb.chunks)
            docs.insert(c.doc_id);
        out << "index root: " << s.root.string() << "\n"
            << "version: " << snap->version << "\n"
            << "corpus documents: " << snap->corpus.documents.size() << "\n"
            << "knowledge documents: " << docs.size() << "\n"
            << "knowledge chunks: " << snap->kb.chunks.size() << "\n"
            << "embedder: " << (snap->kb.embedder_id.empty() ? "none" : snap->kb.embedder_id) << "\n";
        return kExitOk;
    }

    if (!s.corpus)
        throw agents::ConfigError("no corpus: pass --corpus or set corpus in the config");
    auto existing = retrieval::current_version(s.root);
    if (action == "build" && existing) {
        err << "scvm: " << s.root.string() << " already holds snapshot version " << *existing
            << "; use 'kb update'\n";
        return kExitProcessing;
    }
    auto embedder = agents::make_embedder(s.embedder);
    auto corpus = retrieval::build_corpus_index(retrieval::load_corpus(*s.corpus));
    std::vector<retrieval::KbDocument> docs;
    if (s.kb_dir)
        docs = retrieval::load_kb_documents(*s.kb_dir);
    auto kb = retrieval::build_kb_index(docs, *embedder, s.chunking);
    auto version = retrieval::publish_snapshot(s.root, corpus, kb);
    out << "published snapshot version " << version << " (" << corpus.documents.size() << " corpus documents, "
        << kb.chunks.size() << " knowledge chunks)\n";
    return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out, std::ostream&)
{
    auto variants = eval::parse_variants(o.variants);
    auto cfg = load_effective_config(o);
    auto data = eval::load_dataset(o.dataset).filter(o.split);
    if (data.entries.empty())
        throw Error("dataset has no entries" + (o.split.empty() ? std::string() : " in split '" + o.split + "'"));
    auto env = agents::AuditEnvironment::create(cfg);
    auto result = eval::run_variants(data, *env, variants, jobs_of(o));
    if (o.repair)
        result.repair = eval::repair_statistics(data, *env, jobs_of(o));
    fs::path path = o.results.empty() ? cfg.output_dir / "eval_results.json" : fs::path(o.results);
    write_text(path, eval::to_json(result).dump(2) + "\n");
    out << eval::format_table(result) << "Results written to " << path.string() << "\n";
    return kExitOk;
}

int cmd_calibrate(const Options& o, std::ostream& out, std::ostream&)
{
    auto cfg = load_effective_config(o);
    auto data = eval::load_dataset(o.dataset).filter(o.cal_split);
    auto env = agents::AuditEnvironment::create(cfg);
    auto variant = cfg.mode == agents::DetectMode::Voting     ? eval::Variant::V
                   : cfg.mode == agents::DetectMode::Enriched ? eval::Variant::E
                                                              : eval::Variant::W;
    auto scores = eval::collect_scores(data, *env, variant == eval::Variant::E, jobs_of(o));
    std::vector<std::pair<double, Verdict>> scored;
    for (const auto& s : scores) {
        if (!s.error.empty())
            throw Error("cannot score " + s.id + ": " + s.error);
        scored.emplace_back(eval::fuse_variant(s, variant, cfg).score, s.gold);
    }
    double t = eval::calibrate_threshold(scored);
    eval::ConfusionMatrix cm;
    for (const auto& [score, gold] : scored) {
        bool p = score >= t, v = gold == Verdict::Vulnerable;
        cm.tp += p && v;
        cm.fp += p && !v;
        cm.fn += !p && v;
        cm.tn += !p && !v;
    }
    out << "threshold " << fixed(t, 4) << " (F1 " << fixed(eval::metrics(cm).f1, 4) << " over " << scored.size()
        << " contract(s))\n";
    if (o.write_back) {
        auto j = json::parse(read_text(o.config));
        j["threshold"] = t;
        write_text(o.config, j.dump(2) + "\n");
        out << "updated " << o.config << "\n";
    }
    return kExitOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    Options o;
    CLI::App app{"Smart contract vulnerability detection, repair and audit reporting", "scvm"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every command");
    app.add_option("-c,--config", o.config, "Pipeline configuration file (JSON)");
    app.add_option("-j,--jobs", o.jobs, "Contracts processed in parallel (default: logical processors)")
        ->check(CLI::PositiveNumber);
    app.add_flag("-v,--verbose", o.verbose, "Log progress");
    app.add_flag("-q,--quiet", o.quiet, "Log errors only");

    auto add_overrides = [&](CLI::App* cmd) {
        cmd->add_option("--output-dir", o.output_dir, "Override output_dir");
        cmd->add_option("--mode", o.mode, "Override mode: weighted, voting or enriched");
        cmd->add_option("--weights", o.weights, "Override fusion weights: model,static,retrieval");
        cmd->add_option("--threshold", o.threshold, "Override the fused-score threshold");
        cmd->add_option("--k", o.k, "Override the number of retrieved neighbors");
        cmd->add_option("--record-misses", o.record_misses,
                        "Append prompts the mock transcript cannot answer to this file");
        cmd->add_option("--exchange-log", o.exchange_log, "Append every model exchange to this JSONL file");
    };

    auto* audit = app.add_subcommand("audit", "Detect, advise, assess, fix, verify and report");
    audit->add_option("paths", o.inputs, "Contract files or directories (recursing over *.sol)")->required();
    audit->add_flag("--fail-on-vulnerable", o.fail_on_vulnerable, "Exit 3 when any contract is vulnerable");
    add_overrides(audit);

    auto* detect = app.add_subcommand("detect", "Run detection only and print the channel breakdown");
    detect->add_option("paths", o.inputs, "Contract files or directories (recursing over *.sol)")->required();
    detect->add_flag("--json", o.json_out, "Machine-readable output");
    detect->add_flag("--fail-on-vulnerable", o.fail_on_vulnerable, "Exit 3 when any contract is vulnerable");
    add_overrides(detect);

    auto* kb = app.add_subcommand("kb", "Manage the versioned corpus and knowledge index");
    kb->require_subcommand(1);
    for (auto* sub : {kb->add_subcommand("build", "Build snapshot version 1"),
                      kb->add_subcommand("update", "Build the next snapshot and swap the pointer"),
                      kb->add_subcommand("status", "Print the current version and document counts")}) {
        sub->add_option("--root", o.kb_root, "Index root (default: index_root from the config)");
        if (sub->get_name() != "status") {
            sub->add_option("--corpus", o.kb_corpus, "Labeled corpus file (JSONL)");
            sub->add_option("--kb-dir", o.kb_dir, "Knowledge document directory");
        }
    }

    auto* ev = app.add_subcommand("eval", "Metrics and ablation table over a labeled dataset");
    ev->add_option("dataset", o.dataset, "Labeled dataset (JSONL)")->required();
    ev->add_option("--variants", o.variants, "Comma-separated subset of W,V,E,w/o Static,w/o RAG");
    ev->add_option("--split", o.split, "Only entries with this split tag");
    ev->add_option("--results", o.results, "Structured results file (default: <output_dir>/eval_results.json)");
    ev->add_flag("--repair", o.repair, "Also run the repair stages and count verified patches");
    add_overrides(ev);

    auto* cal = app.add_subcommand("calibrate", "Choose the F1-maximizing threshold on a labeled split");
    cal->add_option("dataset", o.dataset, "Labeled dataset (JSONL)")->required();
    cal->add_option("--split", o.cal_split, "Split to calibrate on (default: validation; empty for all)");
    cal->add_flag("--write", o.write_back, "Write the threshold back into the config file");
    add_overrides(cal);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "scvm: " << e.what() << "\n" << "Run with --help for usage.\n";
        return kExitUsage;
    }
    if (o.verbose)
        set_log_threshold(LogLevel::Info);
    else if (o.quiet)
        set_log_threshold(LogLevel::Error);

    try {
        if (audit->parsed())
            return cmd_audit(o, out, err);
        if (detect->parsed())
            return cmd_detect(o, out, err);
        if (kb->parsed()) {
            for (auto* sub : kb->get_subcommands())
                return cmd_kb(sub->get_name(), o, out, err);
        }
        if (ev->parsed())
            return cmd_eval(o, out, err);
        if (cal->parsed())
            return cmd_calibrate(o, out, err);
    } catch (const agents::ConfigError& e) {
        err << "scvm: configuration error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "scvm: " << e.what() << "\n";
        return kExitProcessing;
    }
    return kExitUsage;
}

} // namespace scvm::cli
