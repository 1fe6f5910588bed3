#include "scvm/agents/pipeline.hpp"

#include "scvm/core/hash.hpp"
#include "scvm/llm/structured.hpp"
#include "scvm/sol/scanner.hpp"
#include "scvm/sol/segment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <set>

namespace scvm::agents {

using nlohmann::json;

namespace {

const llm::Schema kDetectorSchema{{{"verdict", llm::FieldType::String},
                                   {"score", llm::FieldType::Number},
                                   {"findings", llm::FieldType::Array}}};
const llm::Schema kAdvisorSchema{{{"vulnerability_name", llm::FieldType::String},
                                  {"cause_analysis", llm::FieldType::String},
                                  {"impact_assessment", llm::FieldType::String},
                                  {"repair_steps", llm::FieldType::Array},
                                  {"preventive_measures", llm::FieldType::Array}}};
const llm::Schema kAssessorSchema{{{"level", llm::FieldType::String}}};
const llm::Schema kFixerSchema{{{"repaired_source", llm::FieldType::String}, {"rationale", llm::FieldType::String}}};
const llm::Schema kVerifierSchema{{{"passed", llm::FieldType::Boolean}, {"new_issues", llm::FieldType::Array}}};

std::string fixed(double v, int digits = 4)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::pair<std::string, std::string> identity(const Finding& f)
{
    return {f.vclass.name, f.location.function};
}

std::string string_or(const json& obj, const char* key, std::string fallback = {})
{
    auto it = obj.find(key);
    return it != obj.end() && it->is_string() ? it->get<std::string>() : fallback;
}

std::vector<std::string> strings_of(const json& arr)
{
    std::vector<std::string> out;
    for (const auto& v : arr) {
        if (v.is_string())
            out.push_back(v.get<std::string>());
    }
    return out;
}

// Findings described by a model reply, located against the given source.
std::vector<Finding> model_findings(const json& items, const SourceContract& contract, double fallback_confidence)
{
    std::vector<sol::FunctionSpan> functions;
    try {
        functions = sol::segment_functions(contract.tokens());
    } catch (const StructureError&) {
    }
    std::vector<Finding> out;
    for (const auto& item : items) {
        if (!item.is_object())
            continue;
        auto cls = string_or(item, "class");
        if (cls.empty())
            continue;
        Finding f;
        f.contract_id = contract.id();
        f.vclass = resolve_class(cls);
        f.channel = Channel::Model;
        f.evidence = string_or(item, "evidence");
        f.confidence = fallback_confidence;
        if (auto c = item.find("confidence"); c != item.end() && c->is_number())
            f.confidence = std::clamp(c->get<double>(), 0.0, 1.0);
        auto fn = string_or(item, "function");
        f.location.function = std::string(kContractScope);
        for (const auto& span : functions) {
            if (!fn.empty() && span.name == fn) {
                f.location = {span.header_span, span.name};
                break;
            }
        }
        out.push_back(std::move(f));
    }
    return out;
}

std::string similar_contracts_text(const std::vector<retrieval::Neighbor>& neighbors)
{
    if (neighbors.empty())
        return "no similar contracts found";
    std::string out;
    for (const auto& n : neighbors) {
        if (!out.empty())
            out += '\n';
        out += "[" + std::to_string(n.rank) + "] " + n.id + ": " + std::string(to_string(n.label));
        for (std::size_t i = 0; i < n.classes.size(); ++i)
            out += (i == 0 ? " (" : ", ") + n.classes[i] + (i + 1 == n.classes.size() ? ")" : "");
        out += ", similarity " + fixed(n.similarity);
    }
    return out;
}

std::string finding_line(const Finding& f)
{
    std::string s = "- " + f.vclass.name + " in " + f.location.function;
    if (!f.evidence.empty())
        s += ": " + f.evidence;
    return s;
}

const RiskAssignment* risk_for(const Finding& f, const std::vector<RiskAssignment>& risks)
{
    for (const auto& r : risks) {
        if (same_identity(r.finding, f))
            return &r;
    }
    return nullptr;
}

SourceContract parse_repaired(const std::string& id, const std::string& text)
{
    auto c = SourceContract::parse(id, text);
    sol::segment_functions(c.tokens());
    return c;
}

template <typename F>
double timed(F&& f)
{
    auto t0 = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

std::shared_ptr<const retrieval::Snapshot> AuditEnvironment::build_snapshot(const PipelineConfig& cfg,
                                                                            const retrieval::Embedder& embedder)
{
    if (!cfg.corpus)
        throw ConfigError("config has no corpus to index");
    auto snap = std::make_shared<retrieval::Snapshot>();
    snap->corpus = retrieval::build_corpus_index(retrieval::load_corpus(*cfg.corpus));
    std::vector<retrieval::KbDocument> docs;
    if (cfg.kb_dir)
        docs = retrieval::load_kb_documents(*cfg.kb_dir);
    snap->kb = retrieval::build_kb_index(docs, embedder, cfg.chunking);
    return snap;
}

std::shared_ptr<AuditEnvironment> AuditEnvironment::create(const PipelineConfig& cfg)
{
    cfg.validate();
    auto env = std::make_shared<AuditEnvironment>();
    env->config = cfg;
    env->rules = cfg.rules ? sol::load_rules(*cfg.rules) : sol::default_rules();
    if (env->rules.empty())
        throw ConfigError("rule set is empty");
    env->embedder = make_embedder(cfg.embedder);
    if (cfg.index_root && retrieval::current_version(*cfg.index_root)) {
        env->snapshot = retrieval::load_snapshot(*cfg.index_root);
        const auto& kb = env->snapshot->kb;
        if (!kb.chunks.empty() && kb.embedder_id != env->embedder->id())
            throw ConfigError("snapshot was embedded with '" + kb.embedder_id + "' but the config uses '" +
                              env->embedder->id() + "'");
    } else if (cfg.corpus) {
        env->snapshot = build_snapshot(cfg, *env->embedder);
    } else {
        throw ConfigError("no snapshot published under " + cfg.index_root->string());
    }
    std::shared_ptr<llm::ExchangeLog> log;
    if (cfg.exchange_log)
        log = std::make_shared<llm::ExchangeLog>(*cfg.exchange_log);
    env->detector = llm::Client(llm::make_provider(cfg.detector), log);
    env->base = llm::Client(llm::make_provider(cfg.base), log);
    env->verifier = llm::Client(llm::make_provider(cfg.verifier), log);
    return env;
}

ChannelResult model_channel(const SourceContract& contract, const AuditEnvironment& env, bool enriched)
{
    llm::Bindings b{{"code", contract.source()}, {"contract_id", contract.id()}};
    if (enriched) {
        retrieval::RetrievalConfig rc{env.config.k, env.config.retrieval_threshold};
        b["similar_contracts"] = similar_contracts_text(retrieval::top_k(contract, env.snapshot->corpus, rc));
        b["references"] = llm::format_references(retrieval::kb_search(
            contract.source(), env.snapshot->kb, *env.embedder, static_cast<std::size_t>(env.config.kb_k)));
    }
    auto prompt = llm::render_prompt(detector_template(enriched), b);
    json reply;
    try {
        reply = llm::ask_structured(env.detector, std::string(kDetectorRole), prompt, kDetectorSchema,
                                    env.config.repair_attempts)
                    .value;
    } catch (const llm::ExtractionError& e) {
        throw StageError(std::string("detector reply unusable: ") + e.what());
    }
    double score = std::clamp(reply.at("score").get<double>(), 0.0, 1.0);
    return make_channel_result(Channel::Model, score, model_findings(reply.at("findings"), contract, score),
                               env.config.model_threshold);
}

std::vector<ChannelResult> run_channels(const SourceContract& contract, const AuditEnvironment& env, bool enriched,
                                        const ChannelToggles& toggles)
{
    std::vector<ChannelResult> out;
    if (toggles.static_analysis)
        out.push_back(sol::static_channel(contract, env.rules));
    if (toggles.retrieval) {
        retrieval::RetrievalConfig rc{env.config.k, env.config.retrieval_threshold};
        out.push_back(retrieval::retrieval_channel(contract, env.snapshot->corpus, rc));
    }
    if (toggles.model)
        out.push_back(model_channel(contract, env, enriched));
    return out;
}

FusedVerdict detect(const SourceContract& contract, const AuditEnvironment& env, DetectMode mode,
                    const FusionWeights& weights, double threshold, const ChannelToggles& toggles)
{
    return fuse(run_channels(contract, env, mode == DetectMode::Enriched, toggles), mode, weights, threshold);
}

std::vector<Finding> actionable_findings(const FusedVerdict& verdict)
{
    std::vector<std::vector<Finding>> primary;
    for (const auto& c : verdict.channels) {
        if (c.channel != Channel::Retrieval)
            primary.push_back(c.findings);
    }
    auto merged = merge_findings(primary);
    if (!merged.empty())
        return merged;
    if (const auto* r = verdict.channel(Channel::Retrieval))
        return r->findings;
    return {};
}

std::vector<RepairSuggestion> advise(const SourceContract& contract, const std::vector<Finding>& findings,
                                     const AuditEnvironment& env)
{
    if (findings.empty())
        throw Error("advise requires at least one finding");
    std::vector<RepairSuggestion> out;
    for (const auto& f : findings) {
        auto hits = retrieval::kb_search(f.vclass.name + " " + f.evidence, env.snapshot->kb, *env.embedder,
                                         static_cast<std::size_t>(env.config.kb_k));
        llm::Bindings b{{"code", contract.source()},
                        {"vulnerability", f.vclass.name},
                        {"function", f.location.function},
                        {"evidence", f.evidence.empty() ? "none recorded" : f.evidence},
                        {"references", llm::format_references(hits)}};
        RepairSuggestion s;
        s.target = f;
        s.vulnerability_name = f.vclass.name;
        try {
            auto v = llm::ask_structured(env.base, std::string(kAdvisorRole), llm::render_prompt(advisor_template(), b),
                                         kAdvisorSchema, env.config.repair_attempts)
                         .value;
            s.vulnerability_name = v.at("vulnerability_name").get<std::string>();
            s.cause_analysis = v.at("cause_analysis").get<std::string>();
            s.impact_assessment = v.at("impact_assessment").get<std::string>();
            s.repair_steps = strings_of(v.at("repair_steps"));
            s.preventive_measures = strings_of(v.at("preventive_measures"));
            s.complete = s.has_all_fields();
        } catch (const llm::ExtractionError&) {
            s.complete = false;
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<RiskAssignment> assess(const std::vector<RepairSuggestion>& suggestions,
                                   const std::vector<Finding>& findings, const AuditEnvironment& env)
{
    std::vector<RiskAssignment> out;
    for (const auto& f : findings) {
        const RepairSuggestion* s = nullptr;
        for (const auto& cand : suggestions) {
            if (same_identity(cand.target, f))
                s = &cand;
        }
        llm::Bindings b{{"vulnerability", f.vclass.name},
                        {"function", f.location.function},
                        {"evidence", f.evidence.empty() ? "none recorded" : f.evidence},
                        {"cause", s && !s->cause_analysis.empty() ? s->cause_analysis : "not available"},
                        {"impact", s && !s->impact_assessment.empty() ? s->impact_assessment : "not available"}};
        RiskAssignment a;
        a.finding = f;
        try {
            auto v = llm::ask_structured(env.base, std::string(kAssessorRole),
                                         llm::render_prompt(assessor_template(), b), kAssessorSchema,
                                         env.config.repair_attempts)
                         .value;
            if (auto level = parse_risk(v.at("level").get<std::string>())) {
                a.level = *level;
            } else {
                a.level = RiskLevel::High;
                a.defaulted = true;
            }
        } catch (const llm::ExtractionError&) {
            a.level = RiskLevel::High;
            a.defaulted = true;
        }
        out.push_back(std::move(a));
    }
    return out;
}

std::vector<RepairSuggestion> repair_order(const std::vector<RepairSuggestion>& suggestions,
                                           const std::vector<RiskAssignment>& risks)
{
    auto ordered = suggestions;
    auto level = [&](const RepairSuggestion& s) {
        const auto* r = risk_for(s.target, risks);
        return r ? r->level : RiskLevel::High;
    };
    std::stable_sort(ordered.begin(), ordered.end(), [&](const RepairSuggestion& a, const RepairSuggestion& b) {
        auto c = compare_risk(level(a), level(b));
        if (c != 0)
            return c > 0;
        return a.target.location.span < b.target.location.span;
    });
    return ordered;
}

Patch fix(const SourceContract& contract, const std::vector<RepairSuggestion>& suggestions,
          const std::vector<RiskAssignment>& risks, const AuditEnvironment& env)
{
    if (suggestions.empty())
        throw Error("fix requires at least one suggestion");
    auto ordered = repair_order(suggestions, risks);
    std::string plan;
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        const auto& s = ordered[i];
        const auto* r = risk_for(s.target, risks);
        plan += std::to_string(i + 1) + ". [" + std::string(to_string(r ? r->level : RiskLevel::High)) + "] " +
                s.target.vclass.name + " in " + s.target.location.function + "\n";
        for (const auto& step : s.repair_steps)
            plan += "   - " + step + "\n";
    }
    const auto prompt = llm::render_prompt(fixer_template(), {{"code", contract.source()}, {"suggestions", plan}});
    Patch patch;
    patch.original_id = contract.id();
    for (const auto& s : ordered)
        patch.addressed_findings.push_back(s.target);

    std::string attempt_prompt = prompt;
    for (int attempt = 0;; ++attempt) {
        json v;
        try {
            v = llm::ask_structured(env.base, std::string(kFixerRole), attempt_prompt, kFixerSchema,
                                    env.config.repair_attempts)
                    .value;
        } catch (const llm::ExtractionError& e) {
            throw StageError(std::string("fixer reply unusable: ") + e.what());
        }
        patch.repaired_source = normalize_newlines(v.at("repaired_source").get<std::string>());
        patch.rationale = v.at("rationale").get<std::string>();
        try {
            parse_repaired(contract.id(), patch.repaired_source);
            return patch;
        } catch (const SourceError& e) {
            if (attempt >= 1)
                throw StageError(std::string("repaired source does not tokenize: ") + e.what());
            attempt_prompt = llm::repair_prompt(prompt, std::string("repaired_source does not tokenize: ") + e.what(),
                                                kFixerSchema);
        }
    }
}

VerificationResult verify(const SourceContract& contract, const Patch& patch,
                          const std::vector<Finding>& original_findings, const AuditEnvironment& env)
{
    std::string addressed;
    for (const auto& f : patch.addressed_findings)
        addressed += finding_line(f) + "\n";
    const auto prompt = llm::render_prompt(verifier_template(), {{"addressed", addressed},
                                                                 {"original", contract.source()},
                                                                 {"patched", patch.repaired_source}});
    json v;
    try {
        v = llm::ask_structured(env.verifier, std::string(kVerifierRole), prompt, kVerifierSchema,
                                env.config.repair_attempts)
                .value;
    } catch (const llm::ExtractionError& e) {
        throw StageError(std::string("verifier reply unusable: ") + e.what());
    }
    auto patched = parse_repaired(contract.id(), patch.repaired_source);

    VerificationResult r;
    r.verifier_model = env.verifier.model_id();
    r.new_issues = model_findings(v.at("new_issues"), patched, 1.0);

    std::set<std::pair<std::string, std::string>> before;
    for (const auto& f : original_findings)
        before.insert(identity(f));
    for (const auto& f : sol::scan(contract, env.rules))
        before.insert(identity(f));
    std::set<std::pair<std::string, std::string>> still_static;
    for (const auto& f : sol::scan(patched, env.rules)) {
        still_static.insert(identity(f));
        if (!before.count(identity(f)))
            r.new_issues.push_back(f);
    }
    std::set<std::string> remaining;
    if (auto it = v.find("remaining"); it != v.end() && it->is_array()) {
        for (const auto& name : strings_of(*it))
            remaining.insert(resolve_class(name).name);
    }
    for (const auto& f : patch.addressed_findings) {
        if (!still_static.count(identity(f)) && !remaining.count(f.vclass.name))
            r.eliminated.push_back(f);
    }
    r.passed = v.at("passed").get<bool>() && r.new_issues.empty() &&
               r.eliminated.size() == patch.addressed_findings.size();
    return r;
}

const StageRecord* PipelineRun::stage(std::string_view name) const
{
    for (const auto& s : stages) {
        if (s.name == name)
            return &s;
    }
    return nullptr;
}

json PipelineRun::to_json(bool include_timings) const
{
    json stage_list = json::array();
    for (const auto& s : stages) {
        static constexpr std::string_view names[] = {"completed", "failed", "skipped"};
        json rec = {{"name", s.name}, {"status", names[static_cast<int>(s.status)]}};
        if (!s.message.empty())
            rec["message"] = s.message;
        if (include_timings)
            rec["duration_ms"] = s.duration_ms;
        stage_list.push_back(std::move(rec));
    }
    return {{"contract", contract_id},
            {"contract_info",
             {{"lines", source_lines}, {"functions", function_count}, {"pragma", pragma}, {"source_hash", source_hash}}},
            {"snapshot_version", snapshot_version},
            {"models", {{"detector", detector_model}, {"base", base_model}, {"verifier", verifier_model}}},
            {"rule_count", rule_count},
            {"detection", verdict},
            {"findings", findings},
            {"suggestions", suggestions},
            {"risks", risks},
            {"risk_distribution", distribution},
            {"patch", patch ? json(*patch) : json(nullptr)},
            {"verification", verification ? json(*verification) : json(nullptr)},
            {"stages", stage_list}};
}

PipelineRun run_pipeline(const SourceContract& contract, const AuditEnvironment& env)
{
    PipelineRun run;
    run.contract_id = contract.id();
    run.snapshot_version = env.snapshot->version;
    run.source_lines = static_cast<std::size_t>(std::count(contract.source().begin(), contract.source().end(), '\n')) +
                       (contract.source().empty() || contract.source().back() == '\n' ? 0 : 1);
    run.pragma = contract.pragma_version().value_or("unspecified");
    run.source_hash = to_hex(fnv1a64(contract.source()));
    run.detector_model = env.detector.model_id();
    run.base_model = env.base.model_id();
    run.verifier_model = env.verifier.model_id();
    run.rule_count = env.rules.size();
    run.function_count = sol::segment_functions(contract.tokens()).size();

    const auto& cfg = env.config;
    auto ms = timed([&] { run.verdict = detect(contract, env, cfg.mode, cfg.weights, cfg.threshold); });
    run.stages.push_back({"detect", StageStatus::Completed, "", ms});

    // Safe verdicts omit the repair stages; after a failure they are recorded as skipped.
    bool proceed = run.verdict.verdict == Verdict::Vulnerable;
    bool record_skips = false;
    std::string skip_reason;
    if (proceed) {
        run.findings = actionable_findings(run.verdict);
        if (run.findings.empty()) {
            proceed = false;
            record_skips = true;
            skip_reason = "no localized findings to act on";
        }
    }

    auto stage = [&](const char* name, auto&& body) {
        if (!proceed) {
            if (record_skips)
                run.stages.push_back({name, StageStatus::Skipped, skip_reason, 0.0});
            return;
        }
        StageRecord rec{name, StageStatus::Completed, "", 0.0};
        try {
            rec.duration_ms = timed(body);
        } catch (const Error& e) {
            rec.status = StageStatus::Failed;
            rec.message = e.what();
            proceed = false;
            record_skips = true;
            skip_reason = std::string("earlier stage failed: ") + name;
        }
        run.stages.push_back(std::move(rec));
    };

    stage("advise", [&] { run.suggestions = advise(contract, run.findings, env); });
    stage("assess", [&] {
        run.risks = assess(run.suggestions, run.findings, env);
        run.distribution = distribution_of(run.risks);
    });
    stage("fix", [&] { run.patch = fix(contract, run.suggestions, run.risks, env); });
    stage("verify", [&] { run.verification = verify(contract, *run.patch, run.findings, env); });

    ms = timed([&] { run.report = report(run); });
    run.stages.push_back({"report", StageStatus::Completed, "", ms});
    // refresh so the payload lists the report stage too
    run.report.machine_payload = run.to_json(false);
    return run;
}

} // namespace scvm::agents
