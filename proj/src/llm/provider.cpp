#include "scvm/llm/provider.hpp"

#include "scvm/core/hash.hpp"

#include <cctype>

namespace scvm::llm {

using nlohmann::json;

void ProviderConfig::validate() const
{
    if (model.empty())
        throw Error("provider config requires a model id");
    if (kind == ProviderKind::Mock && transcript.empty())
        throw Error("mock provider requires a transcript path");
    if (kind == ProviderKind::Http && endpoint.empty())
        throw Error("http provider requires an endpoint");
    if (retries < 0)
        throw Error("provider retries must be non-negative");
    if (max_tokens <= 0)
        throw Error("provider max_tokens must be positive");
    if (timeout.count() <= 0)
        throw Error("provider timeout must be positive");
}

ProviderConfig provider_config_from_json(const json& j, const std::filesystem::path& base_dir)
{
    ProviderConfig c;
    try {
        auto kind = j.at("kind").get<std::string>();
        if (kind == "mock")
            c.kind = ProviderKind::Mock;
        else if (kind == "http")
            c.kind = ProviderKind::Http;
        else
            throw Error("unknown provider kind: " + kind);
        c.model = j.at("model").get<std::string>();
        c.endpoint = j.value("endpoint", c.endpoint);
        c.path = j.value("path", c.path);
        c.api_key_env = j.value("api_key_env", c.api_key_env);
        c.temperature = j.value("temperature", c.temperature);
        c.max_tokens = j.value("max_tokens", c.max_tokens);
        c.timeout = std::chrono::milliseconds(j.value("timeout_ms", static_cast<long long>(c.timeout.count())));
        c.retries = j.value("retries", c.retries);
        if (j.contains("transcript")) {
            std::filesystem::path t = j.at("transcript").get<std::string>();
            c.transcript = t.empty() || t.is_absolute() || base_dir.empty() ? t : base_dir / t;
        }
    } catch (const json::exception& e) {
        throw Error(std::string("malformed provider config: ") + e.what());
    }
    return c;
}

json provider_config_to_json(const ProviderConfig& c)
{
    json j = {{"kind", c.kind == ProviderKind::Mock ? "mock" : "http"},
              {"model", c.model},
              {"temperature", c.temperature},
              {"max_tokens", c.max_tokens},
              {"timeout_ms", c.timeout.count()},
              {"retries", c.retries}};
    if (c.kind == ProviderKind::Http) {
        j["endpoint"] = c.endpoint;
        j["path"] = c.path;
        if (!c.api_key_env.empty())
            j["api_key_env"] = c.api_key_env;
    } else {
        j["transcript"] = c.transcript.generic_string();
    }
    return j;
}

void to_json(json& j, const ChatExchange& e)
{
    j = {{"role", e.role},         {"fingerprint", e.fingerprint}, {"provider", e.provider}, {"model", e.model},
         {"prompt", e.prompt},     {"response", e.response},       {"latency_ms", e.latency_ms}};
}

std::string prompt_fingerprint(std::string_view prompt)
{
    std::string norm;
    norm.reserve(prompt.size());
    bool pending_space = false;
    for (char c : prompt) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !norm.empty();
            continue;
        }
        if (pending_space)
            norm.push_back(' ');
        pending_space = false;
        norm.push_back(c);
    }
    return to_hex(fnv1a64(norm));
}

std::map<std::pair<std::string, std::string>, std::string> load_transcript(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot read transcript " + path.string());
    std::map<std::pair<std::string, std::string>, std::string> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        try {
            auto j = json::parse(line);
            auto key = std::make_pair(j.at("role").get<std::string>(), j.at("fingerprint").get<std::string>());
            auto response = j.at("response").get<std::string>();
            if (!entries.emplace(key, std::move(response)).second)
                throw Error("duplicate transcript key " + key.first + "/" + key.second);
        } catch (const json::exception& e) {
            throw Error(path.string() + ":" + std::to_string(line_no) + ": malformed transcript record: " + e.what());
        } catch (const Error& e) {
            throw Error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return entries;
}

MockProvider::MockProvider(const std::filesystem::path& transcript, std::string model)
    : entries_(load_transcript(transcript)), model_(std::move(model))
{
}

MockProvider::MockProvider(std::map<std::pair<std::string, std::string>, std::string> entries, std::string model)
    : entries_(std::move(entries)), model_(std::move(model))
{
}

void MockProvider::record_misses_to(const std::filesystem::path& path)
{
    miss_log_ = path;
}

ChatExchange MockProvider::complete(const std::string& role, const std::string& prompt)
{
    ChatExchange ex;
    ex.role = role;
    ex.prompt = prompt;
    ex.fingerprint = prompt_fingerprint(prompt);
    ex.provider = "mock";
    ex.model = model_;
    auto it = entries_.find({role, ex.fingerprint});
    if (it != entries_.end()) {
        ex.response = it->second;
        return ex;
    }
    ex.response = std::string(kUnknownResponse);
    // Several providers may share one miss file.
    static std::mutex file_mutex;
    std::lock_guard lock(file_mutex);
    if (miss_log_) {
        std::ofstream out(*miss_log_, std::ios::app | std::ios::binary);
        out << json{{"role", role}, {"fingerprint", ex.fingerprint}, {"response", ""}, {"prompt", prompt}}.dump()
            << '\n';
    }
    return ex;
}

std::shared_ptr<Provider> make_provider(const ProviderConfig& cfg)
{
    cfg.validate();
    if (cfg.kind == ProviderKind::Mock) {
        auto mock = std::make_shared<MockProvider>(cfg.transcript, cfg.model);
        if (!cfg.record_misses.empty())
            mock->record_misses_to(cfg.record_misses);
        return mock;
    }
    return std::make_shared<HttpProvider>(cfg);
}

ExchangeLog::ExchangeLog(const std::filesystem::path& path)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::app | std::ios::binary);
    if (!out_)
        throw Error("cannot open exchange log " + path.string());
}

void ExchangeLog::append(const ChatExchange& exchange)
{
    auto line = json(exchange).dump();
    std::lock_guard lock(mutex_);
    out_ << line << '\n';
    out_.flush();
}

ChatExchange Client::ask(const std::string& role, const std::string& prompt) const
{
    if (!provider_)
        throw Error("no provider configured for role " + role);
    auto ex = provider_->complete(role, prompt);
    if (log_)
        log_->append(ex);
    return ex;
}

} // namespace scvm::llm
