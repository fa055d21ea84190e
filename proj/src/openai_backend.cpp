#include "prefcon/llm_client.hpp"

#include <httplib.h>

namespace prefcon {

namespace {

std::string error_message(std::string const & body)
{
    try {
        auto const j = nlohmann::json::parse(body);
        if (j.contains("error") && j["error"].is_object() && j["error"].contains("message")) {
            return j["error"]["message"].get<std::string>();
        }
    } catch (nlohmann::json::exception const &) {
    }
    return body.substr(0, 200);
}

} // namespace

OpenAiBackend::OpenAiBackend(RemoteConfig config)
: config_(std::move(config))
{
    std::string const & url = config_.base_url;
    auto const scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("endpoint must be an absolute http(s) URL: " + url);
    }
    std::string const scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        throw ConfigError("unsupported endpoint scheme '" + scheme + "'");
    }
    auto const path_start = url.find('/', scheme_end + 3);
    scheme_host_port_ = url.substr(0, path_start);
    path_prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') {
        path_prefix_.pop_back();
    }
}

nlohmann::json OpenAiBackend::request_body(CompletionRequest const & request) const
{
    nlohmann::json body{
        {"model", request.model_id},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})},
        {"temperature", request.decoding.temperature},
        {"top_p", request.decoding.top_p},
        {"max_tokens", request.decoding.max_new_tokens},
    };
    if (config_.send_top_k) {
        body["top_k"] = request.decoding.top_k;
    }
    return body;
}

std::string OpenAiBackend::parse_reply(int status, std::string const & body)
{
    if (status == 401 || status == 403) {
        throw AuthError("backend rejected credentials (HTTP " + std::to_string(status) + "): " + error_message(body));
    }
    if (status == 429) {
        throw RateLimited("backend rate limit (HTTP 429): " + error_message(body));
    }
    if (status == 408 || status == 504) {
        throw Timeout("backend timed out (HTTP " + std::to_string(status) + ")");
    }
    if (status >= 500) {
        throw ServerError("backend failure (HTTP " + std::to_string(status) + "): " + error_message(body));
    }
    if (status != 200) {
        throw RequestRejected("backend rejected request (HTTP " + std::to_string(status) + "): " + error_message(body));
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (nlohmann::json::parse_error const & e) {
        throw MalformedBackendReply(std::string("reply is not JSON: ") + e.what());
    }
    if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
        throw MalformedBackendReply("reply has no choices");
    }
    auto const & choice = j["choices"][0];
    if (!choice.contains("message") || !choice["message"].contains("content")
        || !choice["message"]["content"].is_string()) {
        throw MalformedBackendReply("reply choice has no message content");
    }
    return choice["message"]["content"].get<std::string>();
}

ModelResponse OpenAiBackend::complete(CompletionRequest const & request)
{
    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);
    if (!config_.api_key.empty()) {
        client.set_bearer_token_auth(config_.api_key);
    }

    auto const start = std::chrono::steady_clock::now();
    auto res = client.Post(path_prefix_ + "/chat/completions", request_body(request).dump(), "application/json");
    auto const elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);

    if (!res) {
        auto const err = res.error();
        if (err == httplib::Error::Read || err == httplib::Error::Write || err == httplib::Error::ConnectionTimeout) {
            throw Timeout("transport timeout: " + httplib::to_string(err));
        }
        throw ServerError("transport failure: " + httplib::to_string(err));
    }

    ModelResponse out;
    out.text = parse_reply(res->status, res->body);
    out.latency = elapsed;
    out.metadata = {{"backend", "openai"}, {"http_status", res->status}};
    return out;
}

} // namespace prefcon
