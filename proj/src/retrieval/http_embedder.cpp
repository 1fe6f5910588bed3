#include "scvm/retrieval/kb.hpp"

#include <httplib.h>

#include <cstdlib>

namespace scvm::retrieval {

HttpEmbedder::HttpEmbedder(HttpEmbedderConfig cfg) : cfg_(std::move(cfg))
{
    if (cfg_.endpoint.empty())
        throw Error("http embedder requires an endpoint");
    if (cfg_.dimension == 0)
        throw Error("http embedder requires a positive dimension");
}

std::string HttpEmbedder::id() const
{
    return "http:" + cfg_.model + ":" + std::to_string(cfg_.dimension);
}

std::vector<double> HttpEmbedder::embed(std::string_view text) const
{
    httplib::Client client(cfg_.endpoint);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(cfg_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    if (!cfg_.api_key_env.empty()) {
        if (const char* key = std::getenv(cfg_.api_key_env.c_str()))
            headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    nlohmann::json body = {{"model", cfg_.model}, {"input", std::string(text)}};
    auto res = client.Post(cfg_.path, headers, body.dump(), "application/json");
    if (!res)
        throw Error("embedding request failed: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw Error("embedding request returned HTTP " + std::to_string(res->status));
    std::vector<double> v;
    try {
        v = nlohmann::json::parse(res->body).at("data").at(0).at("embedding").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed embedding response: ") + e.what());
    }
    if (v.size() != cfg_.dimension)
        throw Error("embedding service returned " + std::to_string(v.size()) + " dimensions, expected " +
                    std::to_string(cfg_.dimension));
    return v;
}

} // namespace scvm::retrieval
