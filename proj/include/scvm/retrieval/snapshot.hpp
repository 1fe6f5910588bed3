#pragma once

#include "scvm/retrieval/kb.hpp"
#include "scvm/retrieval/tfidf.hpp"

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>

namespace scvm::retrieval {

/// Immutable pair of indexes published together under one version.
struct Snapshot {
    std::uint64_t version = 0;
    CorpusIndex corpus;
    KbIndex kb;
};

/// Where a simulated crash interrupts publication (tests and fault drills).
enum class CrashPoint {
    None,
    /// Some files written into the staging directory.
    MidWrite,
    /// Version directory in place, pointer not yet swapped.
    BeforePointerSwap,
};

struct PublishOptions {
    CrashPoint crash = CrashPoint::None;
};

/// Thrown by publish_snapshot when a CrashPoint fires.
class SimulatedCrash : public Error {
public:
    using Error::Error;
};

/// Layout: <root>/<version>/{manifest.json, idf.json, vectors.jsonl, chunks.jsonl} and <root>/CURRENT.
/// The version directory is staged then renamed; CURRENT is replaced by rename, so readers
/// never observe a partial snapshot. Single writer per root.
std::uint64_t publish_snapshot(const std::filesystem::path& root, const CorpusIndex& corpus, const KbIndex& kb,
                               const PublishOptions& opts = {});

/// Version named by CURRENT, if any.
std::optional<std::uint64_t> current_version(const std::filesystem::path& root);

/// Loads the version named by CURRENT. Throws Error when no snapshot was published.
std::shared_ptr<const Snapshot> load_snapshot(const std::filesystem::path& root);
std::shared_ptr<const Snapshot> load_snapshot(const std::filesystem::path& root, std::uint64_t version);

/// In-process handle: readers take a shared_ptr and keep it for the whole audit;
/// publish() writes to disk and then swaps the handle.
class SnapshotStore {
public:
    explicit SnapshotStore(std::filesystem::path root);

    /// Current snapshot, loading from disk on first use. Null when nothing was published.
    std::shared_ptr<const Snapshot> current() const;
    std::uint64_t publish(const CorpusIndex& corpus, const KbIndex& kb, const PublishOptions& opts = {});
    /// Re-reads CURRENT, picking up versions published by other processes.
    void refresh();
    const std::filesystem::path& root() const { return root_; }

private:
    std::filesystem::path root_;
    mutable std::mutex mutex_;
    std::mutex writer_;
    mutable std::shared_ptr<const Snapshot> snapshot_;
    mutable bool loaded_ = false;
};

} // namespace scvm::retrieval
