#include "scvm/retrieval/snapshot.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <charconv>
#include <fstream>
#include <random>

namespace scvm::retrieval {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kFormat = 1;

void sync_path(const fs::path& p)
{
    int fd = ::open(p.c_str(), O_RDONLY);
    if (fd >= 0) {
        ::fsync(fd);
        ::close(fd);
    }
}

void write_durable(const fs::path& p, const std::string& content)
{
    {
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error("cannot write " + p.string());
        out << content;
        out.flush();
        if (!out)
            throw Error("short write to " + p.string());
    }
    sync_path(p);
}

std::string read_all(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in)
        throw Error("cannot read " + p.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::optional<std::uint64_t> parse_version_name(const std::string& s)
{
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
        return std::nullopt;
    return v;
}

std::uint64_t next_version(const fs::path& root)
{
    std::uint64_t max = current_version(root).value_or(0);
    for (const auto& e : fs::directory_iterator(root)) {
        if (e.is_directory()) {
            if (auto v = parse_version_name(e.path().filename().string()))
                max = std::max(max, *v);
        }
    }
    return max + 1;
}

std::string unique_suffix()
{
    std::random_device rd;
    return std::to_string(::getpid()) + "-" + std::to_string(rd());
}

std::vector<json> read_jsonl(const fs::path& p)
{
    std::vector<json> out;
    std::ifstream in(p, std::ios::binary);
    if (!in)
        throw Error("cannot read " + p.string());
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty())
            out.push_back(json::parse(line));
    }
    return out;
}

} // namespace

std::uint64_t publish_snapshot(const fs::path& root, const CorpusIndex& corpus, const KbIndex& kb,
                               const PublishOptions& opts)
{
    fs::create_directories(root);
    const auto version = next_version(root);
    const auto staging = root / (".staging-" + std::to_string(version) + "-" + unique_suffix());
    fs::create_directories(staging);
    try {
        json idf = corpus.idf;
        write_durable(staging / "idf.json", idf.dump());

        std::string vectors;
        for (const auto& d : corpus.documents) {
            json rec = {{"id", d.id},
                        {"label", to_string(d.label)},
                        {"classes", d.classes},
                        {"weights", d.vector.weights()}};
            vectors += rec.dump();
            vectors += '\n';
        }
        write_durable(staging / "vectors.jsonl", vectors);
        if (opts.crash == CrashPoint::MidWrite)
            throw SimulatedCrash("simulated crash while writing snapshot " + std::to_string(version));

        std::string chunks;
        for (const auto& c : kb.chunks) {
            chunks += json(c).dump();
            chunks += '\n';
        }
        write_durable(staging / "chunks.jsonl", chunks);

        json manifest = {{"format", kFormat},
                         {"version", version},
                         {"corpus_documents", corpus.documents.size()},
                         {"kb_chunks", kb.chunks.size()},
                         {"embedder_id", kb.embedder_id},
                         {"dimension", kb.dimension}};
        write_durable(staging / "manifest.json", manifest.dump(2));
        sync_path(staging);
        fs::rename(staging, root / std::to_string(version));
        sync_path(root);
    } catch (const SimulatedCrash&) {
        // a real crash leaves the staging directory behind; so does the simulation
        throw;
    } catch (...) {
        std::error_code ec;
        fs::remove_all(staging, ec);
        throw;
    }
    if (opts.crash == CrashPoint::BeforePointerSwap)
        throw SimulatedCrash("simulated crash before publishing pointer for " + std::to_string(version));

    const auto tmp = root / (".CURRENT-" + unique_suffix());
    write_durable(tmp, std::to_string(version) + "\n");
    fs::rename(tmp, root / "CURRENT");
    sync_path(root);
    return version;
}

std::optional<std::uint64_t> current_version(const fs::path& root)
{
    std::ifstream in(root / "CURRENT");
    if (!in)
        return std::nullopt;
    std::string s;
    in >> s;
    auto v = parse_version_name(s);
    if (!v)
        throw Error("corrupt pointer file " + (root / "CURRENT").string());
    return v;
}

std::shared_ptr<const Snapshot> load_snapshot(const fs::path& root)
{
    auto v = current_version(root);
    if (!v)
        throw Error("no snapshot published under " + root.string());
    return load_snapshot(root, *v);
}

std::shared_ptr<const Snapshot> load_snapshot(const fs::path& root, std::uint64_t version)
{
    const auto dir = root / std::to_string(version);
    auto snap = std::make_shared<Snapshot>();
    try {
        auto manifest = json::parse(read_all(dir / "manifest.json"));
        if (manifest.at("format").get<int>() != kFormat)
            throw Error("unsupported snapshot format in " + dir.string());
        if (manifest.at("version").get<std::uint64_t>() != version)
            throw Error("snapshot manifest version mismatch in " + dir.string());
        snap->version = version;

        snap->corpus.idf = json::parse(read_all(dir / "idf.json")).get<std::map<std::string, double>>();
        snap->corpus.snapshot_version = version;
        for (const auto& rec : read_jsonl(dir / "vectors.jsonl")) {
            IndexedDocument d;
            d.id = rec.at("id").get<std::string>();
            d.label = verdict_from_string(rec.at("label").get<std::string>());
            d.classes = rec.at("classes").get<std::vector<std::string>>();
            d.vector = TfIdfVector(rec.at("weights").get<std::map<std::string, double>>());
            snap->corpus.documents.push_back(std::move(d));
        }

        snap->kb.embedder_id = manifest.at("embedder_id").get<std::string>();
        snap->kb.dimension = manifest.at("dimension").get<std::size_t>();
        snap->kb.snapshot_version = version;
        for (const auto& rec : read_jsonl(dir / "chunks.jsonl"))
            snap->kb.chunks.push_back(rec.get<KbChunk>());

        if (snap->corpus.documents.size() != manifest.at("corpus_documents").get<std::size_t>() ||
            snap->kb.chunks.size() != manifest.at("kb_chunks").get<std::size_t>())
            throw Error("snapshot " + dir.string() + " is incomplete");
    } catch (const json::exception& e) {
        throw Error("corrupt snapshot " + dir.string() + ": " + e.what());
    }
    return snap;
}

SnapshotStore::SnapshotStore(fs::path root) : root_(std::move(root)) {}

std::shared_ptr<const Snapshot> SnapshotStore::current() const
{
    std::lock_guard lock(mutex_);
    if (!loaded_) {
        if (current_version(root_))
            snapshot_ = load_snapshot(root_);
        loaded_ = true;
    }
    return snapshot_;
}

std::uint64_t SnapshotStore::publish(const CorpusIndex& corpus, const KbIndex& kb, const PublishOptions& opts)
{
    std::lock_guard writer(writer_);
    auto v = publish_snapshot(root_, corpus, kb, opts);
    auto fresh = load_snapshot(root_, v);
    std::lock_guard lock(mutex_);
    snapshot_ = std::move(fresh);
    loaded_ = true;
    return v;
}

void SnapshotStore::refresh()
{
    auto v = current_version(root_);
    std::shared_ptr<const Snapshot> fresh = v ? load_snapshot(root_, *v) : nullptr;
    std::lock_guard lock(mutex_);
    snapshot_ = std::move(fresh);
    loaded_ = true;
}

} // namespace scvm::retrieval
