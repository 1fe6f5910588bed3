#include "scvm/retrieval/kb.hpp"

#include "scvm/core/hash.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace scvm::retrieval {

namespace {

std::vector<std::string> word_terms(std::string_view text)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty())
        out.push_back(std::move(cur));
    return out;
}

std::vector<std::string> whitespace_tokens(std::string_view text)
{
    std::vector<std::string> out;
    std::istringstream in{std::string(text)};
    std::string tok;
    while (in >> tok)
        out.push_back(tok);
    return out;
}

std::string trim(std::string_view s)
{
    auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos)
        return {};
    auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_tags(std::string_view value)
{
    std::string v = trim(value);
    if (!v.empty() && v.front() == '[' && v.back() == ']')
        v = v.substr(1, v.size() - 2);
    std::vector<std::string> tags;
    std::size_t pos = 0;
    while (pos <= v.size()) {
        auto comma = v.find(',', pos);
        if (comma == std::string::npos)
            comma = v.size();
        auto tag = trim(std::string_view(v).substr(pos, comma - pos));
        if (!tag.empty())
            tags.push_back(tag);
        pos = comma + 1;
    }
    return tags;
}

} // namespace

HashingEmbedder::HashingEmbedder(std::size_t dimension) : dim_(dimension)
{
    if (dim_ == 0)
        throw Error("embedding dimension must be positive");
}

std::string HashingEmbedder::id() const
{
    return "hashing-fnv1a-" + std::to_string(dim_);
}

std::vector<double> HashingEmbedder::embed(std::string_view text) const
{
    std::vector<double> v(dim_, 0.0);
    for (const auto& term : word_terms(text)) {
        auto h = fnv1a64(term);
        v[h % dim_] += (h >> 63) ? -1.0 : 1.0;
    }
    double sq = 0.0;
    for (double x : v)
        sq += x * x;
    if (sq > 0.0) {
        const double n = std::sqrt(sq);
        for (double& x : v)
            x /= n;
    }
    return v;
}

KbDocument parse_kb_document(std::string id, std::string_view raw)
{
    auto text = normalize_newlines(raw);
    if (text.rfind("---\n", 0) != 0)
        throw Error("knowledge document " + id + ": missing metadata preamble");
    auto close = text.find("\n---", 3);
    if (close == std::string::npos)
        throw Error("knowledge document " + id + ": unterminated metadata preamble");
    KbDocument doc;
    doc.id = std::move(id);
    bool have_source = false, have_tags = false;
    std::istringstream meta(text.substr(4, close - 4 + 1));
    std::string line;
    while (std::getline(meta, line)) {
        if (trim(line).empty())
            continue;
        auto colon = line.find(':');
        if (colon == std::string::npos)
            throw Error("knowledge document " + doc.id + ": malformed metadata line '" + line + "'");
        auto key = trim(std::string_view(line).substr(0, colon));
        auto value = std::string_view(line).substr(colon + 1);
        if (key == "source") {
            doc.source = trim(value);
            have_source = !doc.source.empty();
        } else if (key == "swc_tags") {
            doc.swc_tags = split_tags(value);
            have_tags = true;
        }
    }
    if (!have_source)
        throw Error("knowledge document " + doc.id + ": metadata lacks 'source'");
    if (!have_tags)
        throw Error("knowledge document " + doc.id + ": metadata lacks 'swc_tags'");
    auto body = close + 4;
    if (body < text.size() && text[body] == '\n')
        ++body;
    doc.text = body < text.size() ? text.substr(body) : std::string();
    return doc;
}

std::vector<KbDocument> load_kb_documents(const std::filesystem::path& dir)
{
    if (!std::filesystem::is_directory(dir))
        throw Error("knowledge directory not found: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file())
            continue;
        auto ext = e.path().extension().string();
        if (ext == ".md" || ext == ".txt")
            files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<KbDocument> docs;
    for (const auto& f : files) {
        std::ifstream in(f, std::ios::binary);
        if (!in)
            throw Error("cannot read " + f.string());
        std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
        docs.push_back(parse_kb_document(std::filesystem::relative(f, dir).generic_string(), text));
    }
    return docs;
}

std::vector<std::pair<std::size_t, std::size_t>> chunk_ranges(std::size_t n, const ChunkingConfig& cfg)
{
    if (cfg.size == 0 || cfg.overlap >= cfg.size)
        throw Error("chunk overlap must be smaller than chunk size");
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t start = 0; start < n; start += cfg.size - cfg.overlap) {
        auto end = std::min(n, start + cfg.size);
        out.emplace_back(start, end);
        if (end == n)
            break;
    }
    return out;
}

KbIndex build_kb_index(const std::vector<KbDocument>& docs, const Embedder& embedder, const ChunkingConfig& cfg)
{
    KbIndex index;
    index.embedder_id = embedder.id();
    index.dimension = embedder.dimension();
    for (const auto& d : docs) {
        auto toks = whitespace_tokens(d.text);
        auto ranges = chunk_ranges(toks.size(), cfg);
        for (std::size_t c = 0; c < ranges.size(); ++c) {
            KbChunk chunk;
            chunk.doc_id = d.id;
            chunk.chunk_index = c;
            for (auto i = ranges[c].first; i < ranges[c].second; ++i) {
                if (i > ranges[c].first)
                    chunk.text.push_back(' ');
                chunk.text += toks[i];
            }
            chunk.source = d.source;
            chunk.swc_tags = d.swc_tags;
            chunk.embedding = embedder.embed(chunk.text);
            if (chunk.embedding.size() != index.dimension)
                throw Error("embedder returned " + std::to_string(chunk.embedding.size()) + " dimensions, expected " +
                            std::to_string(index.dimension));
            index.chunks.push_back(std::move(chunk));
        }
    }
    return index;
}

double dense_cosine(const std::vector<double>& a, const std::vector<double>& b)
{
    if (a.size() != b.size())
        throw Error("embedding dimension mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0)
        return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<KbHit> kb_search(std::string_view query, const KbIndex& index, const Embedder& embedder, std::size_t k)
{
    if (index.chunks.empty() || k == 0)
        return {};
    if (embedder.id() != index.embedder_id)
        throw Error("embedder '" + embedder.id() + "' does not match index embedder '" + index.embedder_id + "'");
    auto q = embedder.embed(query);
    if (q.size() != index.dimension)
        throw Error("query embedding has " + std::to_string(q.size()) + " dimensions, index has " +
                    std::to_string(index.dimension));
    std::vector<KbHit> hits;
    hits.reserve(index.chunks.size());
    for (const auto& c : index.chunks)
        hits.push_back({&c, dense_cosine(q, c.embedding)});
    auto order = [](const KbHit& a, const KbHit& b) {
        if (a.similarity != b.similarity)
            return a.similarity > b.similarity;
        if (a.chunk->doc_id != b.chunk->doc_id)
            return a.chunk->doc_id < b.chunk->doc_id;
        return a.chunk->chunk_index < b.chunk->chunk_index;
    };
    auto keep = std::min(k, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(), order);
    hits.resize(keep);
    return hits;
}

void to_json(nlohmann::json& j, const KbChunk& c)
{
    j = {{"doc_id", c.doc_id}, {"chunk_index", c.chunk_index}, {"text", c.text},
         {"source", c.source}, {"swc_tags", c.swc_tags},        {"embedding", c.embedding}};
}

void from_json(const nlohmann::json& j, KbChunk& c)
{
    c.doc_id = j.at("doc_id").get<std::string>();
    c.chunk_index = j.at("chunk_index").get<std::size_t>();
    c.text = j.at("text").get<std::string>();
    c.source = j.at("source").get<std::string>();
    c.swc_tags = j.at("swc_tags").get<std::vector<std::string>>();
    c.embedding = j.at("embedding").get<std::vector<double>>();
}

} // namespace scvm::retrieval
