#pragma once

#include "scvm/agents/config.hpp"
#include "scvm/agents/fusion.hpp"
#include "scvm/core/artifacts.hpp"
#include "scvm/llm/prompt.hpp"
#include "scvm/llm/provider.hpp"
#include "scvm/retrieval/snapshot.hpp"
#include "scvm/sol/rules.hpp"

#include <nlohmann/json.hpp>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace scvm::agents {

/// Agent roles; also the transcript role keys.
inline constexpr std::string_view kDetectorRole = "detector";
inline constexpr std::string_view kAdvisorRole = "advisor";
inline constexpr std::string_view kAssessorRole = "assessor";
inline constexpr std::string_view kFixerRole = "fixer";
inline constexpr std::string_view kVerifierRole = "verifier";

const llm::PromptTemplate& detector_template(bool enriched);
const llm::PromptTemplate& advisor_template();
const llm::PromptTemplate& assessor_template();
const llm::PromptTemplate& fixer_template();
const llm::PromptTemplate& verifier_template();

/// Stage failure that the pipeline records and degrades around.
class StageError : public Error {
public:
    using Error::Error;
};

/// Everything the agents share while auditing: rules, one index snapshot, embedder and model clients.
/// Safe to share across threads.
struct AuditEnvironment {
    PipelineConfig config;
    sol::RuleSet rules;
    std::shared_ptr<const retrieval::Snapshot> snapshot;
    std::shared_ptr<const retrieval::Embedder> embedder;
    llm::Client detector;
    llm::Client base;
    llm::Client verifier;

    /// Validates the config, loads rules, providers and the index snapshot
    /// (from index_root, else built in memory from corpus and kb_dir).
    static std::shared_ptr<AuditEnvironment> create(const PipelineConfig& cfg);
    /// Builds corpus and knowledge indexes from the config's sources.
    static std::shared_ptr<const retrieval::Snapshot> build_snapshot(const PipelineConfig& cfg,
                                                                     const retrieval::Embedder& embedder);
};

/// Raw channel outputs; disabled channels are omitted.
std::vector<ChannelResult> run_channels(const SourceContract& contract, const AuditEnvironment& env, bool enriched,
                                        const ChannelToggles& toggles = {});

/// Model channel alone: detector prompt, structured verdict, score and findings.
ChannelResult model_channel(const SourceContract& contract, const AuditEnvironment& env, bool enriched);

FusedVerdict detect(const SourceContract& contract, const AuditEnvironment& env, DetectMode mode,
                    const FusionWeights& weights, double threshold, const ChannelToggles& toggles = {});

/// Static and model findings merged; retrieval findings only when those are empty.
std::vector<Finding> actionable_findings(const FusedVerdict& verdict);

/// One suggestion per finding. Throws Error when findings is empty.
std::vector<RepairSuggestion> advise(const SourceContract& contract, const std::vector<Finding>& findings,
                                     const AuditEnvironment& env);

std::vector<RiskAssignment> assess(const std::vector<RepairSuggestion>& suggestions,
                                   const std::vector<Finding>& findings, const AuditEnvironment& env);

/// Suggestions ordered for the fixer: risk descending, then location ascending.
std::vector<RepairSuggestion> repair_order(const std::vector<RepairSuggestion>& suggestions,
                                           const std::vector<RiskAssignment>& risks);

/// Throws StageError when no usable patch comes back.
Patch fix(const SourceContract& contract, const std::vector<RepairSuggestion>& suggestions,
          const std::vector<RiskAssignment>& risks, const AuditEnvironment& env);

/// Model judgment combined with a static re-scan of the patch.
VerificationResult verify(const SourceContract& contract, const Patch& patch,
                          const std::vector<Finding>& original_findings, const AuditEnvironment& env);

enum class StageStatus { Completed, Failed, Skipped };

struct StageRecord {
    std::string name;
    StageStatus status = StageStatus::Completed;
    std::string message;
    double duration_ms = 0.0;
};

struct PipelineRun {
    std::string contract_id;
    FusedVerdict verdict;
    std::vector<Finding> findings;
    std::vector<RepairSuggestion> suggestions;
    std::vector<RiskAssignment> risks;
    RiskDistribution distribution;
    std::optional<Patch> patch;
    std::optional<VerificationResult> verification;
    AuditReport report;
    std::vector<StageRecord> stages;
    /// Snapshot version the run read from.
    std::uint64_t snapshot_version = 0;
    /// Contract facts for the report.
    std::size_t source_lines = 0;
    std::size_t function_count = 0;
    std::string pragma;
    std::string source_hash;
    std::string detector_model;
    std::string base_model;
    std::string verifier_model;
    std::size_t rule_count = 0;

    const StageRecord* stage(std::string_view name) const;
    /// JSON without the report; timings only when requested.
    nlohmann::json to_json(bool include_timings) const;
};

inline constexpr std::array<std::string_view, 6> kStageOrder = {"detect", "advise", "assess", "fix", "verify", "report"};

/// Reporter: seven canonical sections, deterministic.
AuditReport report(const PipelineRun& run);

/// detect, then advise/assess/fix/verify when vulnerable, then report. Stage errors
/// are recorded and later stages degrade; detection errors propagate.
PipelineRun run_pipeline(const SourceContract& contract, const AuditEnvironment& env);

} // namespace scvm::agents
