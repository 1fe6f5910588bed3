#include "scvm/agents/config.hpp"

#include <cmath>
#include <fstream>

namespace scvm::agents {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kWeightTolerance = 1e-9;

fs::path resolve(const fs::path& base, const std::string& p)
{
    fs::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

void check_unit(double v, const char* name)
{
    if (!(v >= 0.0 && v <= 1.0))
        throw ConfigError(std::string(name) + " must lie in [0, 1]");
}

} // namespace

std::string_view to_string(DetectMode mode)
{
    switch (mode) {
    case DetectMode::Weighted: return "weighted";
    case DetectMode::Voting: return "voting";
    case DetectMode::Enriched: return "enriched";
    }
    return "weighted";
}

DetectMode mode_from_string(std::string_view text)
{
    if (text == "weighted")
        return DetectMode::Weighted;
    if (text == "voting")
        return DetectMode::Voting;
    if (text == "enriched")
        return DetectMode::Enriched;
    throw ConfigError("unknown detection mode '" + std::string(text) + "' (expected weighted, voting or enriched)");
}

double FusionWeights::of(Channel channel) const
{
    switch (channel) {
    case Channel::Model: return model;
    case Channel::Static: return static_analysis;
    case Channel::Retrieval: return retrieval;
    }
    return 0.0;
}

void FusionWeights::validate() const
{
    for (double w : {model, static_analysis, retrieval}) {
        if (!std::isfinite(w) || w < 0.0)
            throw ConfigError("fusion weights must be non-negative");
    }
    const double sum = model + static_analysis + retrieval;
    if (std::abs(sum - 1.0) > kWeightTolerance)
        throw ConfigError("fusion weights must sum to 1 (got " + std::to_string(sum) + ")");
}

FusionWeights FusionWeights::without(Channel channel) const
{
    FusionWeights w = *this;
    switch (channel) {
    case Channel::Model: w.model = 0.0; break;
    case Channel::Static: w.static_analysis = 0.0; break;
    case Channel::Retrieval: w.retrieval = 0.0; break;
    }
    const double rest = w.model + w.static_analysis + w.retrieval;
    if (rest <= 0.0)
        throw ConfigError("removing the " + std::string(scvm::to_string(channel)) + " channel leaves no weight");
    w.model /= rest;
    w.static_analysis /= rest;
    w.retrieval /= rest;
    return w;
}

bool ChannelToggles::enabled(Channel channel) const
{
    switch (channel) {
    case Channel::Model: return model;
    case Channel::Static: return static_analysis;
    case Channel::Retrieval: return retrieval;
    }
    return false;
}

void PipelineConfig::validate() const
{
    weights.validate();
    check_unit(threshold, "threshold");
    check_unit(model_threshold, "model_threshold");
    check_unit(retrieval_threshold, "retrieval_threshold");
    if (k < 1)
        throw ConfigError("k must be at least 1");
    if (kb_k < 1)
        throw ConfigError("kb_k must be at least 1");
    if (repair_attempts < 0)
        throw ConfigError("repair_attempts must be non-negative");
    if (chunking.size == 0 || chunking.overlap >= chunking.size)
        throw ConfigError("chunk overlap must be smaller than chunk size");
    if (embedder.kind != "hashing" && embedder.kind != "http")
        throw ConfigError("unknown embedder kind: " + embedder.kind);
    if (embedder.dimension == 0)
        throw ConfigError("embedder dimension must be positive");
    for (const auto* p : {&detector, &base, &verifier}) {
        try {
            p->validate();
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            throw ConfigError(e.what());
        }
    }
    if (verifier.model == base.model)
        throw ConfigError("verifier model '" + verifier.model +
                          "' must differ from the model used by the fixer, advisor and assessor");
    if (!index_root && !corpus)
        throw ConfigError("config needs either index_root or corpus");
}

PipelineConfig config_from_json(const json& j, const fs::path& base_dir)
{
    if (!j.is_object())
        throw ConfigError("pipeline config must be an object");
    PipelineConfig c;
    try {
        if (j.contains("mode"))
            c.mode = mode_from_string(j.at("mode").get<std::string>());
        if (j.contains("weights")) {
            const auto& w = j.at("weights");
            c.weights.model = w.at("model").get<double>();
            c.weights.static_analysis = w.at("static").get<double>();
            c.weights.retrieval = w.at("retrieval").get<double>();
        }
        c.threshold = j.value("threshold", c.threshold);
        c.model_threshold = j.value("model_threshold", c.model_threshold);
        c.retrieval_threshold = j.value("retrieval_threshold", c.retrieval_threshold);
        c.k = j.value("k", c.k);
        c.kb_k = j.value("kb_k", c.kb_k);
        if (j.contains("chunking")) {
            c.chunking.size = j.at("chunking").value("size", c.chunking.size);
            c.chunking.overlap = j.at("chunking").value("overlap", c.chunking.overlap);
        }
        if (j.contains("embedder")) {
            const auto& e = j.at("embedder");
            c.embedder.kind = e.value("kind", c.embedder.kind);
            c.embedder.dimension = e.value("dimension", c.embedder.dimension);
            c.embedder.http.endpoint = e.value("endpoint", std::string());
            c.embedder.http.path = e.value("path", c.embedder.http.path);
            c.embedder.http.model = e.value("model", std::string());
            c.embedder.http.api_key_env = e.value("api_key_env", std::string());
            c.embedder.http.dimension = c.embedder.dimension;
        }
        const auto& providers = j.at("providers");
        c.detector = llm::provider_config_from_json(providers.at("detector"), base_dir);
        c.base = llm::provider_config_from_json(providers.at("base"), base_dir);
        c.verifier = llm::provider_config_from_json(providers.at("verifier"), base_dir);
        if (j.contains("rules"))
            c.rules = resolve(base_dir, j.at("rules").get<std::string>());
        if (j.contains("index_root"))
            c.index_root = resolve(base_dir, j.at("index_root").get<std::string>());
        if (j.contains("corpus"))
            c.corpus = resolve(base_dir, j.at("corpus").get<std::string>());
        if (j.contains("kb_dir"))
            c.kb_dir = resolve(base_dir, j.at("kb_dir").get<std::string>());
        if (j.contains("output_dir"))
            c.output_dir = resolve(base_dir, j.at("output_dir").get<std::string>());
        if (j.contains("exchange_log"))
            c.exchange_log = resolve(base_dir, j.at("exchange_log").get<std::string>());
        c.repair_attempts = j.value("repair_attempts", c.repair_attempts);
        c.include_timings = j.value("include_timings", c.include_timings);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed pipeline config: ") + e.what());
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    return c;
}

PipelineConfig load_config(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot read config " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded())
        throw ConfigError("config " + path.string() + " is not valid JSON");
    return config_from_json(j, fs::absolute(path).parent_path());
}

json config_to_json(const PipelineConfig& c)
{
    json j = {{"mode", to_string(c.mode)},
              {"weights", {{"model", c.weights.model}, {"static", c.weights.static_analysis}, {"retrieval", c.weights.retrieval}}},
              {"threshold", c.threshold},
              {"model_threshold", c.model_threshold},
              {"retrieval_threshold", c.retrieval_threshold},
              {"k", c.k},
              {"kb_k", c.kb_k},
              {"chunking", {{"size", c.chunking.size}, {"overlap", c.chunking.overlap}}},
              {"embedder", {{"kind", c.embedder.kind}, {"dimension", c.embedder.dimension}}},
              {"providers",
               {{"detector", llm::provider_config_to_json(c.detector)},
                {"base", llm::provider_config_to_json(c.base)},
                {"verifier", llm::provider_config_to_json(c.verifier)}}},
              {"output_dir", c.output_dir.generic_string()},
              {"repair_attempts", c.repair_attempts},
              {"include_timings", c.include_timings}};
    if (c.embedder.kind == "http") {
        j["embedder"]["endpoint"] = c.embedder.http.endpoint;
        j["embedder"]["path"] = c.embedder.http.path;
        j["embedder"]["model"] = c.embedder.http.model;
        if (!c.embedder.http.api_key_env.empty())
            j["embedder"]["api_key_env"] = c.embedder.http.api_key_env;
    }
    if (c.rules)
        j["rules"] = c.rules->generic_string();
    if (c.index_root)
        j["index_root"] = c.index_root->generic_string();
    if (c.corpus)
        j["corpus"] = c.corpus->generic_string();
    if (c.kb_dir)
        j["kb_dir"] = c.kb_dir->generic_string();
    if (c.exchange_log)
        j["exchange_log"] = c.exchange_log->generic_string();
    return j;
}

std::unique_ptr<retrieval::Embedder> make_embedder(const EmbedderConfig& cfg)
{
    if (cfg.kind == "hashing")
        return std::make_unique<retrieval::HashingEmbedder>(cfg.dimension);
    if (cfg.kind == "http") {
        auto http = cfg.http;
        http.dimension = cfg.dimension;
        return std::make_unique<retrieval::HttpEmbedder>(http);
    }
    throw ConfigError("unknown embedder kind: " + cfg.kind);
}

} // namespace scvm::agents
