#pragma once

#include "scvm/core/types.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

namespace scvm::llm {

enum class ProviderKind { Http, Mock };

struct ProviderConfig {
    ProviderKind kind = ProviderKind::Mock;
    std::string model;
    /// Http: base URL such as "http://127.0.0.1:8000".
    std::string endpoint;
    std::string path = "/v1/chat/completions";
    /// Name of the environment variable holding the bearer token. The value is never logged.
    std::string api_key_env;
    double temperature = 0.0;
    int max_tokens = 2048;
    std::chrono::milliseconds timeout{60000};
    int retries = 2;
    /// Mock: transcript file.
    std::filesystem::path transcript;
    /// Mock: append unanswered prompts here. Runtime only, not serialized.
    std::filesystem::path record_misses;

    /// Throws Error when required fields for the kind are missing.
    void validate() const;
};

/// Relative transcript paths resolve against base_dir.
ProviderConfig provider_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json provider_config_to_json(const ProviderConfig& cfg);

struct ChatExchange {
    std::string role;
    std::string prompt;
    std::string fingerprint;
    std::string response;
    double latency_ms = 0.0;
    std::string provider;
    std::string model;
};

void to_json(nlohmann::json& j, const ChatExchange& e);

class TransportError : public Error {
public:
    using Error::Error;
};

class TimeoutError : public TransportError {
public:
    using TransportError::TransportError;
};

/// Stable hash of the prompt after collapsing whitespace runs and trimming.
std::string prompt_fingerprint(std::string_view prompt);

/// Chat-completion backend. Implementations are safe to call concurrently.
class Provider {
public:
    virtual ~Provider() = default;
    virtual ChatExchange complete(const std::string& role, const std::string& prompt) = 0;
    virtual std::string model_id() const = 0;
};

inline constexpr std::string_view kUnknownResponse = "UNKNOWN";

/// Replays a transcript keyed by (role, fingerprint). Unknown keys answer "UNKNOWN".
class MockProvider final : public Provider {
public:
    /// Transcript lines: {"role", "fingerprint", "response"}. Throws Error on malformed input.
    MockProvider(const std::filesystem::path& transcript, std::string model);
    MockProvider(std::map<std::pair<std::string, std::string>, std::string> entries, std::string model);

    ChatExchange complete(const std::string& role, const std::string& prompt) override;
    std::string model_id() const override { return model_; }

    /// Appends every miss as a transcript record with an empty response. Call before use.
    void record_misses_to(const std::filesystem::path& path);
    std::size_t size() const { return entries_.size(); }

private:
    std::map<std::pair<std::string, std::string>, std::string> entries_;
    std::string model_;
    std::optional<std::filesystem::path> miss_log_;
};

std::map<std::pair<std::string, std::string>, std::string> load_transcript(const std::filesystem::path& path);

/// Minimal chat-completion wire shape:
///   POST {model, messages:[{role:"user", content}], temperature, max_tokens}
///   -> {choices:[{message:{content}}]}
/// Transport failures and 5xx/429 answers are retried `retries` times.
class HttpProvider final : public Provider {
public:
    explicit HttpProvider(ProviderConfig cfg);
    ChatExchange complete(const std::string& role, const std::string& prompt) override;
    std::string model_id() const override { return cfg_.model; }

private:
    ProviderConfig cfg_;
};

std::shared_ptr<Provider> make_provider(const ProviderConfig& cfg);

/// Append-only JSONL record of every exchange; writes are serialized.
class ExchangeLog {
public:
    explicit ExchangeLog(const std::filesystem::path& path);
    void append(const ChatExchange& exchange);

private:
    std::mutex mutex_;
    std::ofstream out_;
};

/// Provider plus optional exchange log.
class Client {
public:
    Client() = default;
    Client(std::shared_ptr<Provider> provider, std::shared_ptr<ExchangeLog> log = nullptr)
        : provider_(std::move(provider)), log_(std::move(log))
    {
    }
    ChatExchange ask(const std::string& role, const std::string& prompt) const;
    std::string model_id() const { return provider_ ? provider_->model_id() : std::string(); }

private:
    std::shared_ptr<Provider> provider_;
    std::shared_ptr<ExchangeLog> log_;
};

} // namespace scvm::llm
