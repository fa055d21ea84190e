#include "prefcon/llm_client.hpp"

#include "prefcon/digest.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace prefcon {

void DecodingConfig::validate() const
{
    if (!(temperature >= 0.0)) {
        throw ConfigError("temperature must be >= 0");
    }
    if (!(top_p > 0.0 && top_p <= 1.0)) {
        throw ConfigError("top_p must be in (0, 1]");
    }
    if (top_k < 0) {
        throw ConfigError("top_k must be >= 0");
    }
    if (max_new_tokens < 1) {
        throw ConfigError("max_new_tokens must be >= 1");
    }
}

nlohmann::json to_json(DecodingConfig const & c)
{
    return nlohmann::json{
        {"temperature", c.temperature},
        {"top_k", c.top_k},
        {"top_p", c.top_p},
        {"max_new_tokens", c.max_new_tokens},
    };
}

DecodingConfig decoding_from_json(nlohmann::json const & j)
{
    DecodingConfig c;
    try {
        c.temperature = j.value("temperature", c.temperature);
        c.top_k = j.value("top_k", c.top_k);
        c.top_p = j.value("top_p", c.top_p);
        c.max_new_tokens = j.value("max_new_tokens", c.max_new_tokens);
    } catch (nlohmann::json::exception const & e) {
        throw ConfigError(std::string("decoding config: ") + e.what());
    }
    c.validate();
    return c;
}

MockBackend::MockBackend(std::map<std::string, std::string> responses_by_digest)
: responses_(std::move(responses_by_digest))
{}

MockBackend MockBackend::from_file(std::filesystem::path const & path)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (nlohmann::json::parse_error const & e) {
        throw ConfigError("mock fixtures " + path.string() + ": " + e.what());
    }
    if (!j.is_object()) {
        throw ConfigError("mock fixtures " + path.string() + ": expected an object of digest -> text");
    }
    std::map<std::string, std::string> responses;
    for (auto const & [digest, text] : j.items()) {
        if (!text.is_string()) {
            throw ConfigError("mock fixtures " + path.string() + ": value for " + digest + " is not a string");
        }
        responses.emplace(digest, text.get<std::string>());
    }
    return MockBackend(std::move(responses));
}

ModelResponse MockBackend::complete(CompletionRequest const & request)
{
    std::string const digest = sha256_hex(request.prompt);
    auto it = responses_.find(digest);
    if (it == responses_.end()) {
        throw MockMiss("no mock fixture for prompt digest " + digest);
    }
    ModelResponse r;
    r.text = it->second;
    r.metadata = {{"backend", "mock"}, {"prompt_digest", digest}};
    return r;
}

std::chrono::milliseconds RetryPolicy::delay_before_retry(int retry_number) const
{
    double const raw = static_cast<double>(initial_delay.count()) * std::pow(multiplier, retry_number - 1);
    double const capped = std::min(raw, static_cast<double>(max_delay.count()));
    return std::chrono::milliseconds(static_cast<long long>(capped));
}

Sleeper real_sleeper()
{
    return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

ModelResponse complete(Backend & backend, CompletionRequest const & request, RetryPolicy const & retry, Sleeper const & sleep)
{
    request.decoding.validate();
    int const attempts = std::max(1, retry.max_attempts);
    for (int attempt = 1;; ++attempt) {
        try {
            return backend.complete(request);
        } catch (RateLimited const &) {
            if (attempt >= attempts) {
                throw;
            }
        } catch (Timeout const &) {
            if (attempt >= attempts) {
                throw;
            }
        } catch (ServerError const &) {
            if (attempt >= attempts) {
                throw;
            }
        }
        sleep(retry.delay_before_retry(attempt));
    }
}

} // namespace prefcon
