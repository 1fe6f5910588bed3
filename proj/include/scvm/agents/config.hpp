#pragma once

#include "scvm/core/finding.hpp"
#include "scvm/llm/provider.hpp"
#include "scvm/retrieval/kb.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace scvm::agents {

/// Invalid configuration; the CLI maps it to exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

enum class DetectMode { Weighted, Voting, Enriched };

std::string_view to_string(DetectMode mode);
DetectMode mode_from_string(std::string_view text);

struct FusionWeights {
    double model = 0.7;
    double static_analysis = 0.1;
    double retrieval = 0.2;

    double of(Channel channel) const;
    /// Throws ConfigError unless all weights are >= 0 and sum to 1 within 1e-9.
    void validate() const;
    /// Drops one channel and rescales the others proportionally.
    FusionWeights without(Channel channel) const;
    friend bool operator==(const FusionWeights&, const FusionWeights&) = default;
};

struct ChannelToggles {
    bool static_analysis = true;
    bool retrieval = true;
    bool model = true;
    bool enabled(Channel channel) const;
};

struct EmbedderConfig {
    std::string kind = "hashing";
    std::size_t dimension = 256;
    retrieval::HttpEmbedderConfig http;
};

struct PipelineConfig {
    DetectMode mode = DetectMode::Weighted;
    FusionWeights weights;
    double threshold = kDefaultChannelThreshold;
    double model_threshold = kDefaultChannelThreshold;
    double retrieval_threshold = kDefaultChannelThreshold;
    int k = 5;
    /// Knowledge chunks retrieved per advisor or enriched detector prompt.
    int kb_k = 3;
    retrieval::ChunkingConfig chunking;
    EmbedderConfig embedder;

    llm::ProviderConfig detector;
    /// Shared by advisor, assessor and fixer.
    llm::ProviderConfig base;
    llm::ProviderConfig verifier;

    /// Rule file; the built-in rules when unset.
    std::optional<std::filesystem::path> rules;
    /// Snapshot root; when unset the corpus and knowledge directory are indexed in memory.
    std::optional<std::filesystem::path> index_root;
    std::optional<std::filesystem::path> corpus;
    std::optional<std::filesystem::path> kb_dir;
    std::filesystem::path output_dir = "scvm-out";
    std::optional<std::filesystem::path> exchange_log;
    int repair_attempts = 1;
    bool include_timings = false;

    /// Throws ConfigError on any violated rule.
    void validate() const;
};

/// Relative paths resolve against base_dir. Throws ConfigError.
PipelineConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const PipelineConfig& cfg);

std::unique_ptr<retrieval::Embedder> make_embedder(const EmbedderConfig& cfg);

} // namespace scvm::agents
