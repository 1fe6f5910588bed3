#include "scvm/retrieval/tfidf.hpp"

#include "scvm/core/log.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <unordered_map>

namespace scvm::retrieval {

namespace {

bool is_alnum(char c)
{
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

std::string read_text(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in)
        throw Error("cannot read " + p.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

TfIdfVector weigh(const std::vector<std::string>& terms, const std::map<std::string, double>& idf, bool require_known)
{
    if (terms.empty())
        return {};
    std::map<std::string, std::size_t> counts;
    for (const auto& t : terms)
        ++counts[t];
    const double len = static_cast<double>(terms.size());
    std::map<std::string, double> w;
    double sq = 0.0;
    for (const auto& [term, count] : counts) {
        auto it = idf.find(term);
        if (it == idf.end()) {
            if (require_known)
                throw Error("term missing from idf table: " + term);
            continue;
        }
        double v = (static_cast<double>(count) / len) * it->second;
        w[term] = v;
        sq += v * v;
    }
    const double n = std::sqrt(sq);
    if (n > 0.0) {
        for (auto& [term, v] : w)
            v /= n;
    }
    return TfIdfVector(std::move(w));
}

} // namespace

std::vector<std::string> tokenize_for_tfidf(std::string_view s)
{
    std::vector<std::string> out;
    std::size_t i = 0;
    const std::size_t n = s.size();
    while (i < n) {
        char c = s[i];
        if (c == '/' && i + 1 < n && s[i + 1] == '/') {
            while (i < n && s[i] != '\n')
                ++i;
        } else if (c == '/' && i + 1 < n && s[i + 1] == '*') {
            auto end = s.find("*/", i + 2);
            i = end == std::string_view::npos ? n : end + 2;
        } else if (c == '"' || c == '\'') {
            ++i;
            while (i < n && s[i] != c && s[i] != '\n') {
                if (s[i] == '\\' && i + 1 < n)
                    ++i;
                ++i;
            }
            ++i;
        } else if (is_alnum(c)) {
            std::string term;
            while (i < n && is_alnum(s[i]))
                term.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(s[i++]))));
            out.push_back(std::move(term));
        } else {
            ++i;
        }
    }
    return out;
}

TfIdfVector::TfIdfVector(std::map<std::string, double> weights)
{
    double sq = 0.0;
    for (auto it = weights.begin(); it != weights.end();) {
        if (!std::isfinite(it->second) || it->second < 0.0)
            throw Error("tf-idf weight must be finite and non-negative: " + it->first);
        if (it->second == 0.0) {
            it = weights.erase(it);
            continue;
        }
        sq += it->second * it->second;
        ++it;
    }
    weights_ = std::move(weights);
    norm_ = std::sqrt(sq);
}

double TfIdfVector::weight(const std::string& term) const
{
    auto it = weights_.find(term);
    return it == weights_.end() ? 0.0 : it->second;
}

double cosine(const TfIdfVector& a, const TfIdfVector& b)
{
    if (a.norm() == 0.0 || b.norm() == 0.0)
        return 0.0;
    const auto& small = a.weights().size() <= b.weights().size() ? a : b;
    const auto& large = &small == &a ? b : a;
    double dot = 0.0;
    for (const auto& [term, w] : small.weights())
        dot += w * large.weight(term);
    return std::clamp(dot / (a.norm() * b.norm()), 0.0, 1.0);
}

TfIdfVector CorpusIndex::vectorize(std::string_view source) const
{
    return weigh(tokenize_for_tfidf(source), idf, false);
}

CorpusIndex build_corpus_index(const std::vector<CorpusDocument>& docs)
{
    if (docs.empty())
        throw Error("cannot index an empty corpus");
    std::vector<std::vector<std::string>> terms;
    terms.reserve(docs.size());
    std::map<std::string, std::size_t> df;
    std::set<std::string> ids;
    for (const auto& d : docs) {
        if (!ids.insert(d.id).second)
            throw Error("duplicate corpus id: " + d.id);
        terms.push_back(tokenize_for_tfidf(d.source));
        for (const auto& t : std::set<std::string>(terms.back().begin(), terms.back().end()))
            ++df[t];
    }
    CorpusIndex index;
    const double N = static_cast<double>(docs.size());
    for (const auto& [term, count] : df)
        index.idf[term] = std::log((1.0 + N) / (1.0 + static_cast<double>(count))) + 1.0;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (terms[i].empty())
            log_warning("corpus document '" + docs[i].id + "' has no terms; indexed as a zero vector");
        index.documents.push_back({docs[i].id, docs[i].label, docs[i].classes, weigh(terms[i], index.idf, true)});
    }
    return index;
}

std::vector<Neighbor> top_k(const std::string& query_id, const TfIdfVector& query, const CorpusIndex& index, int k)
{
    if (k < 1)
        throw Error("k must be at least 1");
    std::vector<Neighbor> all;
    for (const auto& d : index.documents) {
        if (d.id == query_id)
            continue;
        all.push_back({d.id, cosine(query, d.vector), 0, d.label, d.classes});
    }
    auto order = [](const Neighbor& a, const Neighbor& b) {
        if (a.similarity != b.similarity)
            return a.similarity > b.similarity;
        return a.id < b.id;
    };
    const auto keep = std::min<std::size_t>(all.size(), static_cast<std::size_t>(k));
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), order);
    all.resize(keep);
    for (std::size_t i = 0; i < all.size(); ++i)
        all[i].rank = static_cast<int>(i) + 1;
    return all;
}

std::vector<Neighbor> top_k(const SourceContract& query, const CorpusIndex& index, const RetrievalConfig& cfg)
{
    return top_k(query.id(), index.vectorize(query.source()), index, cfg.k);
}

std::vector<double> rank_weights(std::size_t m)
{
    std::vector<double> w(m);
    const double total = static_cast<double>(m) * static_cast<double>(m + 1) / 2.0;
    for (std::size_t i = 1; i <= m; ++i)
        w[i - 1] = static_cast<double>(m + 1 - i) / total;
    return w;
}

double rank_weighted_probability(const std::vector<Neighbor>& neighbors)
{
    auto w = rank_weights(neighbors.size());
    double p = 0.0;
    for (std::size_t i = 0; i < neighbors.size(); ++i) {
        if (neighbors[i].label == Verdict::Vulnerable)
            p += w[i];
    }
    return std::clamp(p, 0.0, 1.0);
}

ChannelResult retrieval_channel(const SourceContract& query, const CorpusIndex& index, const RetrievalConfig& cfg)
{
    auto neighbors = top_k(query, index, cfg);
    double score = rank_weighted_probability(neighbors);
    std::vector<Finding> findings;
    std::set<std::string> seen;
    for (const auto& nb : neighbors) {
        if (nb.label != Verdict::Vulnerable)
            continue;
        for (const auto& cls : nb.classes) {
            auto vc = resolve_class(cls);
            if (!seen.insert(vc.name).second)
                continue;
            Finding f;
            f.contract_id = query.id();
            f.vclass = vc;
            f.location = {{0, 0}, std::string(kContractScope)};
            char sim[32];
            std::snprintf(sim, sizeof sim, "%.4f", nb.similarity);
            f.evidence = "similar to " + nb.id + " (rank " + std::to_string(nb.rank) + ", similarity " + sim + ")";
            f.channel = Channel::Retrieval;
            f.confidence = score;
            findings.push_back(std::move(f));
        }
    }
    std::sort(findings.begin(), findings.end(),
              [](const Finding& a, const Finding& b) { return a.vclass.name < b.vclass.name; });
    return make_channel_result(Channel::Retrieval, score, std::move(findings), cfg.threshold);
}

CorpusDocument corpus_document_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir)
{
    CorpusDocument d;
    try {
        d.id = j.at("id").get<std::string>();
        if (j.contains("source"))
            d.source = j.at("source").get<std::string>();
        else if (j.contains("source_path")) {
            std::filesystem::path p = j.at("source_path").get<std::string>();
            d.source = read_text(p.is_absolute() ? p : base_dir / p);
        } else
            throw Error("record needs 'source' or 'source_path'");
        d.label = verdict_from_string(j.at("label").get<std::string>());
        if (j.contains("classes"))
            d.classes = j.at("classes").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed corpus record: ") + e.what());
    }
    if (d.id.empty())
        throw Error("corpus record with empty id");
    return d;
}

std::vector<CorpusDocument> load_corpus(const std::filesystem::path& path)
{
    auto text = read_text(path);
    std::vector<CorpusDocument> docs;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string::npos)
            end = text.size();
        std::string_view line(text.data() + pos, end - pos);
        ++line_no;
        pos = end + 1;
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string_view::npos || line[first] == '#')
            continue;
        try {
            docs.push_back(corpus_document_from_json(nlohmann::json::parse(line), path.parent_path()));
        } catch (const nlohmann::json::exception& e) {
            throw Error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const Error& e) {
            throw Error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return docs;
}

void to_json(nlohmann::json& j, const Neighbor& n)
{
    j = {{"id", n.id}, {"similarity", n.similarity}, {"rank", n.rank}, {"label", to_string(n.label)},
         {"classes", n.classes}};
}

void from_json(const nlohmann::json& j, Neighbor& n)
{
    n.id = j.at("id").get<std::string>();
    n.similarity = j.at("similarity").get<double>();
    n.rank = j.at("rank").get<int>();
    n.label = verdict_from_string(j.at("label").get<std::string>());
    n.classes = j.at("classes").get<std::vector<std::string>>();
}

} // namespace scvm::retrieval
