#pragma once

#include "scvm/agents/pipeline.hpp"
#include "scvm/eval/metrics.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace scvm::eval {

struct DatasetEntry {
    std::string id;
    std::string source;
    Verdict label = Verdict::Safe;
    std::vector<std::string> classes;
    /// "train", "validation" or "test"; empty when untagged.
    std::string split;
};

struct LabeledDataset {
    std::vector<DatasetEntry> entries;
    /// Entries whose split equals `split`; all entries when `split` is empty.
    LabeledDataset filter(std::string_view split) const;
};

/// One record per line: {id, source | source_path, label, classes[], split}. Ids must be unique.
LabeledDataset load_dataset(const std::filesystem::path& path);

enum class Variant { W, V, E, WithoutStatic, WithoutRag };

inline constexpr std::array<Variant, 5> kAllVariants = {Variant::W, Variant::V, Variant::E, Variant::WithoutStatic,
                                                       Variant::WithoutRag};

std::string_view to_string(Variant v);
/// Throws agents::ConfigError listing the valid names.
Variant variant_from_string(std::string_view text);
std::vector<Variant> parse_variants(std::string_view comma_list);

struct VariantSetup {
    agents::DetectMode mode;
    agents::FusionWeights weights;
    agents::ChannelToggles toggles;
};

/// W: weighted; V: voting; E: enriched prompt with weighted fusion; w/o variants drop one
/// channel from weighted fusion and rescale the remaining weights.
VariantSetup variant_setup(Variant v, const agents::PipelineConfig& cfg);

/// Raw channel results for one contract, computed once and shared by all variants.
struct ContractScores {
    std::string id;
    Verdict gold = Verdict::Safe;
    std::vector<ChannelResult> channels;
    std::optional<ChannelResult> enriched_model;
    std::string error;
};

std::vector<ContractScores> collect_scores(const LabeledDataset& data, const agents::AuditEnvironment& env,
                                           bool with_enriched, unsigned jobs);

agents::FusedVerdict fuse_variant(const ContractScores& scores, Variant v, const agents::PipelineConfig& cfg);

struct RepairStats {
    long contracts = 0;
    long patched = 0;
    long passed = 0;
};

struct EvalResult {
    std::vector<MetricsReport> rows;
    /// Per variant, per contract predictions in dataset order.
    std::vector<std::vector<std::pair<std::string, agents::FusedVerdict>>> predictions;
    std::vector<std::pair<std::string, std::string>> failures;
    long evaluated = 0;
    std::optional<RepairStats> repair;
};

EvalResult run_variants(const LabeledDataset& data, const agents::AuditEnvironment& env,
                        const std::vector<Variant>& variants, unsigned jobs);

/// Full pipeline over every vulnerable-predicted contract; counts patches and verified patches.
RepairStats repair_statistics(const LabeledDataset& data, const agents::AuditEnvironment& env, unsigned jobs);

/// Variant x {F1, Recall, Precision, Accuracy, FPR}.
std::string format_table(const EvalResult& result);
nlohmann::json to_json(const EvalResult& result);

/// Sweeps the distinct scores as thresholds and returns the F1-maximizing one, ties to the larger.
/// Throws Error unless both labels are present.
double calibrate_threshold(const std::vector<std::pair<double, Verdict>>& scored);

} // namespace scvm::eval
