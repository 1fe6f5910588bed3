#pragma once

#include "scvm/core/types.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace scvm::retrieval {

/// Maps text to a dense vector of fixed dimension. Implementations must be thread-safe.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::string id() const = 0;
    virtual std::size_t dimension() const = 0;
    virtual std::vector<double> embed(std::string_view text) const = 0;
};

/// Signed feature hashing of lowercased word terms (FNV-1a), L2-normalized.
class HashingEmbedder final : public Embedder {
public:
    explicit HashingEmbedder(std::size_t dimension = 256);
    std::string id() const override;
    std::size_t dimension() const override { return dim_; }
    std::vector<double> embed(std::string_view text) const override;

private:
    std::size_t dim_;
};

struct HttpEmbedderConfig {
    /// Base URL, e.g. "http://127.0.0.1:8080".
    std::string endpoint;
    std::string path = "/v1/embeddings";
    std::string model;
    std::size_t dimension = 0;
    /// Name of the environment variable holding a bearer token; empty for none.
    std::string api_key_env;
    std::chrono::milliseconds timeout{30000};
};

/// Adapter for a remote embedding service speaking {model, input} -> {data:[{embedding:[...]}]}.
class HttpEmbedder final : public Embedder {
public:
    explicit HttpEmbedder(HttpEmbedderConfig cfg);
    std::string id() const override;
    std::size_t dimension() const override { return cfg_.dimension; }
    std::vector<double> embed(std::string_view text) const override;

private:
    HttpEmbedderConfig cfg_;
};

/// Knowledge document before chunking. `source` and `swc_tags` come from the preamble.
struct KbDocument {
    std::string id;
    std::string source;
    std::vector<std::string> swc_tags;
    std::string text;
};

/// Parses a document with a leading metadata block:
///   ---
///   source: SWC Registry
///   swc_tags: SWC-105, SWC-106
///   ---
/// Throws Error when the block or either key is missing.
KbDocument parse_kb_document(std::string id, std::string_view text);

/// Every *.md and *.txt file below `dir`, sorted by relative path (which becomes the doc id).
std::vector<KbDocument> load_kb_documents(const std::filesystem::path& dir);

struct ChunkingConfig {
    std::size_t size = 512;
    std::size_t overlap = 64;
};

/// Half-open whitespace-token ranges covering n tokens; each chunk starts size-overlap after the previous one.
std::vector<std::pair<std::size_t, std::size_t>> chunk_ranges(std::size_t n, const ChunkingConfig& cfg = {});

struct KbChunk {
    std::string doc_id;
    std::size_t chunk_index = 0;
    std::string text;
    std::string source;
    std::vector<std::string> swc_tags;
    std::vector<double> embedding;
    friend bool operator==(const KbChunk&, const KbChunk&) = default;
};

struct KbIndex {
    std::vector<KbChunk> chunks;
    std::string embedder_id;
    std::size_t dimension = 0;
    std::uint64_t snapshot_version = 0;
    friend bool operator==(const KbIndex&, const KbIndex&) = default;
};

/// Chunks and embeds every document. Any embedder failure propagates; nothing partial is returned.
KbIndex build_kb_index(const std::vector<KbDocument>& docs, const Embedder& embedder, const ChunkingConfig& cfg = {});

struct KbHit {
    const KbChunk* chunk = nullptr;
    double similarity = 0.0;
};

/// Top-k chunks by cosine of embeddings, ties broken by (doc id, chunk index).
/// Throws Error when the embedder differs from the index's or dimensions disagree.
std::vector<KbHit> kb_search(std::string_view query, const KbIndex& index, const Embedder& embedder, std::size_t k);

double dense_cosine(const std::vector<double>& a, const std::vector<double>& b);

void to_json(nlohmann::json& j, const KbChunk& c);
void from_json(const nlohmann::json& j, KbChunk& c);

} // namespace scvm::retrieval
