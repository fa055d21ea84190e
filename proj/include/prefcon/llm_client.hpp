#ifndef PREFCON_LLM_CLIENT_HPP
#define PREFCON_LLM_CLIENT_HPP

#include "prefcon/error.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>

namespace prefcon {

PREFCON_DEFINE_ERROR(AuthError);
PREFCON_DEFINE_ERROR(RateLimited);
PREFCON_DEFINE_ERROR(Timeout);
PREFCON_DEFINE_ERROR(MalformedBackendReply);
PREFCON_DEFINE_ERROR(MockMiss);
PREFCON_DEFINE_ERROR(ServerError);
PREFCON_DEFINE_ERROR(RequestRejected);
PREFCON_DEFINE_ERROR(ConfigError);

/// Sampling parameters forwarded to the backend. Defaults: temperature 0.1,
/// top-k 20, top-p 0.9, at most 30 new tokens.
struct DecodingConfig
{
    double temperature = 0.1;
    int top_k = 20;
    double top_p = 0.9;
    int max_new_tokens = 30;

    /// Throws ConfigError if any field is out of its domain.
    void validate() const;

    friend bool operator==(DecodingConfig const &, DecodingConfig const &) = default;
};

[[nodiscard]] nlohmann::json to_json(DecodingConfig const & config);
[[nodiscard]] DecodingConfig decoding_from_json(nlohmann::json const & j);

struct CompletionRequest
{
    std::string prompt;
    std::string model_id;
    DecodingConfig decoding;
};

struct ModelResponse
{
    std::string text; ///< verbatim, including any noise
    std::chrono::milliseconds latency{0};
    nlohmann::json metadata = nlohmann::json::object();
};

class Backend
{
public:
    virtual ~Backend() = default;

    /// Must be safe to call concurrently.
    [[nodiscard]] virtual ModelResponse complete(CompletionRequest const & request) = 0;

    [[nodiscard]] virtual std::string name() const = 0;
};

/// Offline backend: replies with fixture text keyed by SHA-256 of the prompt.
class MockBackend : public Backend
{
public:
    explicit MockBackend(std::map<std::string, std::string> responses_by_digest);

    /// Fixture file: a JSON object mapping hex prompt digests to reply text.
    [[nodiscard]] static MockBackend from_file(std::filesystem::path const & path);

    /// Throws MockMiss if the prompt digest has no fixture.
    [[nodiscard]] ModelResponse complete(CompletionRequest const & request) override;

    [[nodiscard]] std::string name() const override { return "mock"; }

private:
    std::map<std::string, std::string> responses_;
};

/// Connection settings for an OpenAI-compatible chat-completions endpoint.
struct RemoteConfig
{
    std::string base_url = "https://api.openai.com/v1"; ///< ".../chat/completions" is appended
    std::string api_key;
    std::chrono::seconds timeout{60};
    bool send_top_k = true; ///< top_k is an extension some servers reject
};

class OpenAiBackend : public Backend
{
public:
    explicit OpenAiBackend(RemoteConfig config);

    [[nodiscard]] ModelResponse complete(CompletionRequest const & request) override;

    [[nodiscard]] std::string name() const override { return "openai"; }

    /// Request body for the chat-completions call.
    [[nodiscard]] nlohmann::json request_body(CompletionRequest const & request) const;

    /// Maps an HTTP status and body to text or the matching error.
    [[nodiscard]] static std::string parse_reply(int status, std::string const & body);

private:
    RemoteConfig config_;
    std::string scheme_host_port_;
    std::string path_prefix_;
};

/// Capped exponential backoff: delay(n) = min(initial * multiplier^(n-1), max).
struct RetryPolicy
{
    int max_attempts = 4;
    std::chrono::milliseconds initial_delay{500};
    double multiplier = 2.0;
    std::chrono::milliseconds max_delay{8000};

    [[nodiscard]] std::chrono::milliseconds delay_before_retry(int retry_number) const;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

[[nodiscard]] Sleeper real_sleeper();

/// Calls backend.complete, retrying RateLimited, Timeout and ServerError.
/// The last error propagates once the attempt budget is spent.
[[nodiscard]] ModelResponse complete(
    Backend & backend,
    CompletionRequest const & request,
    RetryPolicy const & retry = {},
    Sleeper const & sleep = real_sleeper());

} // namespace prefcon

#endif // PREFCON_LLM_CLIENT_HPP
