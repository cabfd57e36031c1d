#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "cexrepair/common/errors.hpp"
#include "cexrepair/llm/gateway.hpp"

#include <json.hpp>

#include <cstdlib>

namespace cexrepair::llm {

using nlohmann::json;

LiveProvider::LiveProvider(LiveConfig cfg) : cfg_(std::move(cfg))
{
    if (cfg_.base_url.empty())
        throw ConfigError("LLM base URL not configured (CEXREPAIR_LLM_BASE_URL)");
    if (cfg_.model.empty())
        throw ConfigError("llm.model not configured");
}

LiveConfig LiveProvider::from_environment(LiveConfig cfg)
{
    if (cfg.base_url.empty())
        if (const char *v = std::getenv("CEXREPAIR_LLM_BASE_URL"))
            cfg.base_url = v;
    if (cfg.api_key.empty())
        if (const char *v = std::getenv("CEXREPAIR_LLM_API_KEY"))
            cfg.api_key = v;
    return cfg;
}

std::vector<Completion> LiveProvider::sample(const ProviderCall &call)
{
    // Split scheme://host[:port] from the path prefix.
    std::string url = cfg_.base_url;
    auto scheme_end = url.find("://");
    std::size_t host_begin = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    auto path_begin = url.find('/', host_begin);
    std::string origin = path_begin == std::string::npos ? url : url.substr(0, path_begin);
    std::string prefix = path_begin == std::string::npos ? "" : url.substr(path_begin);
    while (!prefix.empty() && prefix.back() == '/')
        prefix.pop_back();

    httplib::Client cli(origin);
    auto secs = static_cast<time_t>(cfg_.timeout_s);
    cli.set_read_timeout(secs, 0);
    cli.set_write_timeout(secs, 0);
    cli.set_connection_timeout(30, 0);
    httplib::Headers headers;
    if (!cfg_.api_key.empty())
        headers.emplace("Authorization", "Bearer " + cfg_.api_key);

    json body = {{"model", cfg_.model},
                 {"messages", json::array({{{"role", "user"}, {"content", call.prompt}}})},
                 {"temperature", call.temperature},
                 {"n", call.n_samples},
                 {"max_tokens", call.max_tokens}};
    auto res = cli.Post(prefix + "/chat/completions", headers, body.dump(), "application/json");
    if (!res)
        throw TransportError("request failed: " + httplib::to_string(res.error()));
    if (res->status == 429)
        throw RateLimited("HTTP 429");
    if (res->status == 401 || res->status == 403)
        throw AuthError("HTTP " + std::to_string(res->status));
    if (res->status >= 500)
        throw TransportError("HTTP " + std::to_string(res->status));
    if (res->status != 200)
        throw ProviderError("HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 500));

    json j;
    try {
        j = json::parse(res->body);
    } catch (const json::exception &e) {
        throw ProviderError(std::string("unparseable response: ") + e.what());
    }
    std::vector<Completion> out;
    for (auto &ch : j.value("choices", json::array())) {
        Completion c;
        if (ch.contains("message") && ch["message"].contains("content") && ch["message"]["content"].is_string())
            c.text = ch["message"]["content"].get<std::string>();
        out.push_back(std::move(c));
    }
    // Usage is reported per request; attribute it to the first completion.
    if (!out.empty() && j.contains("usage")) {
        out[0].usage.input_tokens = j["usage"].value("prompt_tokens", 0LL);
        out[0].usage.output_tokens = j["usage"].value("completion_tokens", 0LL);
    }
    return out;
}

} // namespace cexrepair::llm
