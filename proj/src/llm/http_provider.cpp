#include "scvm/llm/provider.hpp"

#include <httplib.h>

#include <cstdlib>
#include <thread>

namespace scvm::llm {

using nlohmann::json;

HttpProvider::HttpProvider(ProviderConfig cfg) : cfg_(std::move(cfg))
{
    cfg_.kind = ProviderKind::Http;
    cfg_.validate();
}

ChatExchange HttpProvider::complete(const std::string& role, const std::string& prompt)
{
    ChatExchange ex;
    ex.role = role;
    ex.prompt = prompt;
    ex.fingerprint = prompt_fingerprint(prompt);
    ex.provider = "http";
    ex.model = cfg_.model;

    json body = {{"model", cfg_.model},
                 {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
                 {"temperature", cfg_.temperature},
                 {"max_tokens", cfg_.max_tokens}};
    httplib::Headers headers;
    if (!cfg_.api_key_env.empty()) {
        if (const char* key = std::getenv(cfg_.api_key_env.c_str()))
            headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(cfg_.timeout - secs);
    const auto payload = body.dump();

    std::string last_error;
    const auto start = std::chrono::steady_clock::now();
    for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(100 * attempt));
        httplib::Client client(cfg_.endpoint);
        client.set_connection_timeout(secs.count(), usecs.count());
        client.set_read_timeout(secs.count(), usecs.count());
        client.set_write_timeout(secs.count(), usecs.count());
        const auto t0 = std::chrono::steady_clock::now();
        auto res = client.Post(cfg_.path, headers, payload, "application/json");
        const auto elapsed = std::chrono::steady_clock::now() - t0;
        if (!res) {
            if (res.error() == httplib::Error::ConnectionTimeout ||
                (res.error() == httplib::Error::Read && elapsed >= cfg_.timeout))
                throw TimeoutError("model request to " + cfg_.endpoint + " timed out after " +
                                   std::to_string(cfg_.timeout.count()) + " ms");
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500 || res->status == 429) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw TransportError("model endpoint returned HTTP " + std::to_string(res->status));
        try {
            ex.response = json::parse(res->body).at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception& e) {
            throw TransportError(std::string("malformed chat-completion response: ") + e.what());
        }
        ex.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        return ex;
    }
    throw TransportError("model request to " + cfg_.endpoint + " failed after " + std::to_string(cfg_.retries + 1) +
                         " attempts: " + last_error);
}

} // namespace scvm::llm
