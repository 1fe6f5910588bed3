#include "scvm/agents/pipeline.hpp"

#include <cstdio>

namespace scvm::agents {

namespace {

constexpr std::string_view kNotPerformed = "Not performed: contract judged safe.";

std::string fixed(double v, int digits = 4)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

const RiskAssignment* risk_for(const Finding& f, const std::vector<RiskAssignment>& risks)
{
    for (const auto& r : risks) {
        if (same_identity(r.finding, f))
            return &r;
    }
    return nullptr;
}

const RepairSuggestion* suggestion_for(const Finding& f, const std::vector<RepairSuggestion>& suggestions)
{
    for (const auto& s : suggestions) {
        if (same_identity(s.target, f))
            return &s;
    }
    return nullptr;
}

std::string risk_text(const Finding& f, const PipelineRun& run)
{
    const auto* r = risk_for(f, run.risks);
    if (!r)
        return "unassessed";
    std::string s(to_string(r->level));
    if (r->defaulted)
        s += " (defaulted)";
    return s;
}

std::string stage_note(const PipelineRun& run, std::string_view name)
{
    const auto* s = run.stage(name);
    if (!s)
        return "not run";
    switch (s->status) {
    case StageStatus::Completed: return "completed";
    case StageStatus::Failed: return "failed (" + s->message + ")";
    case StageStatus::Skipped: return "skipped (" + s->message + ")";
    }
    return "";
}

bool judged_safe(const PipelineRun& run)
{
    return run.verdict.verdict == Verdict::Safe;
}

std::string overview(const PipelineRun& run)
{
    std::string b;
    b += "- Contract: " + run.contract_id + "\n";
    b += "- Compiler constraint: " + run.pragma + "\n";
    b += "- Source lines: " + std::to_string(run.source_lines) + "\n";
    b += "- Functions with bodies: " + std::to_string(run.function_count) + "\n";
    b += "- Source fingerprint: " + run.source_hash + "\n";
    b += "- Knowledge snapshot: " + (run.snapshot_version ? "v" + std::to_string(run.snapshot_version) : std::string("in-memory")) + "\n";
    return b;
}

std::string executive_summary(const PipelineRun& run)
{
    const auto& v = run.verdict;
    std::string b = "The contract was judged **" + std::string(to_string(v.verdict)) + "** with a fused score of " +
                    fixed(v.score) + " (" + std::string(to_string(v.mode)) + " mode, threshold " + fixed(v.threshold) +
                    ").\n\n";
    if (judged_safe(run)) {
        b += "No vulnerability was confirmed, so repair stages were not run.\n";
        return b;
    }
    b += std::to_string(run.findings.size()) + " finding(s) were carried forward. Risk distribution: Critical " +
         std::to_string(run.distribution.critical) + ", High " + std::to_string(run.distribution.high) + ", Medium " +
         std::to_string(run.distribution.medium) + ", Low " + std::to_string(run.distribution.low) + ".\n\n";
    if (run.verification)
        b += std::string("Patch verification ") + (run.verification->passed ? "passed" : "failed") + ".\n";
    else
        b += "Patch verification: " + stage_note(run, "verify") + ".\n";
    return b;
}

std::string methodology(const PipelineRun& run)
{
    const auto& v = run.verdict;
    std::string b = "Detection combined the following channels:\n\n| Channel | Weight | Score | Verdict |\n|---|---|---|---|\n";
    for (const auto& c : v.channels) {
        b += "| " + std::string(to_string(c.channel)) + " | " + fixed(v.weights.of(c.channel)) + " | " +
             fixed(c.score) + " | " + std::string(to_string(c.verdict)) + " |\n";
    }
    b += "\n- Static analysis: " + std::to_string(run.rule_count) + " pattern rules over segmented functions.\n";
    b += "- Retrieval: TF-IDF cosine similarity against the labeled contract corpus, rank-weighted neighbor labels.\n";
    b += "- Model inference: detector model `" + run.detector_model + "`.\n";
    b += "- Advisor, assessor and fixer model: `" + run.base_model + "`; independent verifier model: `" +
         run.verifier_model + "`.\n";
    b += "\nStages: ";
    for (std::size_t i = 0; i < run.stages.size(); ++i) {
        if (i)
            b += ", ";
        b += run.stages[i].name + " " + stage_note(run, run.stages[i].name);
    }
    b += ".\n";
    return b;
}

std::string discovery_summary(const PipelineRun& run)
{
    if (run.findings.empty())
        return "No vulnerabilities identified.\n";
    std::string b = "| # | Vulnerability | SWC | Function | Channel | Confidence | Risk |\n|---|---|---|---|---|---|---|\n";
    for (std::size_t i = 0; i < run.findings.size(); ++i) {
        const auto& f = run.findings[i];
        b += "| " + std::to_string(i + 1) + " | " + f.vclass.name + " | " + f.vclass.swc_id.value_or("-") + " | " +
             f.location.function + " | " + std::string(to_string(f.channel)) + " | " + fixed(f.confidence, 2) +
             " | " + risk_text(f, run) + " |\n";
    }
    return b;
}

std::string in_depth(const PipelineRun& run)
{
    if (judged_safe(run))
        return std::string(kNotPerformed) + "\n";
    if (run.findings.empty())
        return "No localized findings were available for analysis.\n";
    std::string b;
    for (const auto& f : run.findings) {
        b += "### " + f.vclass.name + " in `" + f.location.function + "` (" + risk_text(f, run) + ")\n\n";
        if (!f.evidence.empty())
            b += "Evidence: `" + f.evidence + "`\n\n";
        const auto* s = suggestion_for(f, run.suggestions);
        if (s && !s->cause_analysis.empty())
            b += "Cause: " + s->cause_analysis + "\n\n";
        if (s && !s->impact_assessment.empty())
            b += "Impact: " + s->impact_assessment + "\n\n";
        if (!s || !s->complete)
            b += "Advisor output incomplete.\n\n";
    }
    return b;
}

std::string improvements(const PipelineRun& run)
{
    if (judged_safe(run))
        return std::string(kNotPerformed) + "\n";
    std::string b;
    for (const auto& s : run.suggestions) {
        b += "### " + s.vulnerability_name + " (" + s.target.location.function + ")\n\n";
        for (const auto& step : s.repair_steps)
            b += "- " + step + "\n";
        if (!s.preventive_measures.empty()) {
            b += "\nPreventive measures:\n\n";
            for (const auto& m : s.preventive_measures)
                b += "- " + m + "\n";
        }
        b += "\n";
    }
    if (run.patch) {
        b += "### Patch\n\n" + run.patch->rationale + "\n\n```solidity\n" + run.patch->repaired_source;
        if (!run.patch->repaired_source.empty() && run.patch->repaired_source.back() != '\n')
            b += "\n";
        b += "```\n\n";
    } else {
        b += "Patch: " + stage_note(run, "fix") + ".\n\n";
    }
    if (run.verification) {
        const auto& v = *run.verification;
        b += "Verification by `" + v.verifier_model + "`: " + (v.passed ? "passed" : "failed") + "; " +
             std::to_string(v.eliminated.size()) + " of " + std::to_string(run.patch->addressed_findings.size()) +
             " addressed finding(s) eliminated, " + std::to_string(v.new_issues.size()) + " new issue(s).\n";
        for (const auto& f : v.new_issues)
            b += "- New issue: " + f.vclass.name + " in " + f.location.function + "\n";
    } else {
        b += "Verification: " + stage_note(run, "verify") + ".\n";
    }
    return b;
}

std::string disclaimer()
{
    return "This report was produced by automated analysis combining pattern rules, similarity retrieval and "
           "language-model judgment. It is not a guarantee of security. Findings, risk levels and patches must be "
           "reviewed by a qualified auditor before deployment, and the report covers only the source submitted.\n";
}

} // namespace

AuditReport report(const PipelineRun& run)
{
    AuditReport r;
    const std::string bodies[] = {overview(run),   executive_summary(run), methodology(run), discovery_summary(run),
                                  in_depth(run),   improvements(run),      disclaimer()};
    for (std::size_t i = 0; i < kReportSectionTitles.size(); ++i)
        r.sections.push_back({std::string(kReportSectionTitles[i]), bodies[i]});
    r.machine_payload = run.to_json(false);
    r.validate();
    return r;
}

} // namespace scvm::agents
