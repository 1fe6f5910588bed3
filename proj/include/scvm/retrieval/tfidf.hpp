#pragma once

#include "scvm/core/finding.hpp"
#include "scvm/core/types.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace scvm::retrieval {

/// Lowercased alphanumeric runs of the source, with comments and string literal
/// contents dropped. Keywords are kept as ordinary terms.
std::vector<std::string> tokenize_for_tfidf(std::string_view source);

/// Sparse non-negative vector with a cached L2 norm.
class TfIdfVector {
public:
    TfIdfVector() = default;
    /// Throws Error on a negative or non-finite weight. Zero weights are dropped.
    explicit TfIdfVector(std::map<std::string, double> weights);

    const std::map<std::string, double>& weights() const { return weights_; }
    double norm() const { return norm_; }
    bool empty() const { return weights_.empty(); }
    double weight(const std::string& term) const;

    friend bool operator==(const TfIdfVector&, const TfIdfVector&) = default;

private:
    std::map<std::string, double> weights_;
    double norm_ = 0.0;
};

/// dot(a,b)/(|a||b|), 0 when either vector is zero.
double cosine(const TfIdfVector& a, const TfIdfVector& b);

struct CorpusDocument {
    std::string id;
    std::string source;
    Verdict label = Verdict::Safe;
    std::vector<std::string> classes;
};

struct IndexedDocument {
    std::string id;
    Verdict label = Verdict::Safe;
    std::vector<std::string> classes;
    TfIdfVector vector;
    friend bool operator==(const IndexedDocument&, const IndexedDocument&) = default;
};

struct CorpusIndex {
    std::vector<IndexedDocument> documents;
    std::map<std::string, double> idf;
    std::uint64_t snapshot_version = 0;

    /// Vector for unseen text under this index's idf table; unknown terms are ignored.
    TfIdfVector vectorize(std::string_view source) const;
    friend bool operator==(const CorpusIndex&, const CorpusIndex&) = default;
};

/// tf = count/len, idf = ln((1+N)/(1+df)) + 1, L2-normalized. Throws on empty input or duplicate ids.
CorpusIndex build_corpus_index(const std::vector<CorpusDocument>& docs);

struct RetrievalConfig {
    int k = 5;
    double threshold = kDefaultChannelThreshold;
};

struct Neighbor {
    std::string id;
    double similarity = 0.0;
    int rank = 0;
    Verdict label = Verdict::Safe;
    std::vector<std::string> classes;
    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// At most k neighbors by similarity descending, ties by id ascending.
/// Documents sharing the query's id are skipped.
std::vector<Neighbor> top_k(const SourceContract& query, const CorpusIndex& index, const RetrievalConfig& cfg);
std::vector<Neighbor> top_k(const std::string& query_id, const TfIdfVector& query, const CorpusIndex& index, int k);

/// Linear-rank weights (m+1-i)/sum for i = 1..m.
std::vector<double> rank_weights(std::size_t m);
double rank_weighted_probability(const std::vector<Neighbor>& neighbors);

/// Score is the rank-weighted vulnerable share of the neighbors. One contract-level
/// finding per neighbor class, when vulnerable, with confidence equal to the score.
ChannelResult retrieval_channel(const SourceContract& query, const CorpusIndex& index, const RetrievalConfig& cfg);

/// Corpus file: one record per line {id, source | source_path, label, classes[]}.
/// Relative source paths resolve against the corpus file's directory.
std::vector<CorpusDocument> load_corpus(const std::filesystem::path& path);
CorpusDocument corpus_document_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

void to_json(nlohmann::json& j, const Neighbor& n);
void from_json(const nlohmann::json& j, Neighbor& n);

} // namespace scvm::retrieval
