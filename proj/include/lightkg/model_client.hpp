#pragma once

// Chat-completion client abstraction. HttpModelClient talks to any
// OpenAI-compatible `POST {base_url}/chat/completions` endpoint; MockModelClient
// answers from a fixture table keyed by prompt hash.

#include "lightkg/errors.hpp"

#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lightkg {

enum class Role { system, user, assistant };

std::string_view to_string(Role role);

struct ChatMessage {
    Role role = Role::user;
    std::string content;

    friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct CompletionParams {
    std::string model_name;
    double temperature = 0.0;
    int max_tokens = 1024;
    std::chrono::milliseconds timeout{60'000};
};

// Throws ConfigError on temperature < 0 or max_tokens < 1.
void validate(const CompletionParams& params);

// ---- errors ---------------------------------------------------------------

class ModelError : public Error {
public:
    using Error::Error;
};

class EndpointUnreachableError : public ModelError {
public:
    using ModelError::ModelError;
};

class HttpStatusError : public ModelError {
public:
    HttpStatusError(int status, std::string body_excerpt)
        : ModelError("HTTP " + std::to_string(status) + ": " + body_excerpt),
          status_(status),
          body_excerpt_(std::move(body_excerpt)) {}

    int status() const noexcept { return status_; }
    const std::string& body_excerpt() const noexcept { return body_excerpt_; }

private:
    int status_;
    std::string body_excerpt_;
};

class TimeoutError : public ModelError {
public:
    using ModelError::ModelError;
};

class MalformedResponseError : public ModelError {
public:
    using ModelError::ModelError;
};

class FixtureMissError : public ModelError {
public:
    explicit FixtureMissError(std::string hash)
        : ModelError("no fixture for prompt hash " + hash), hash_(std::move(hash)) {}
    const std::string& hash() const noexcept { return hash_; }

private:
    std::string hash_;
};

// ---- clients --------------------------------------------------------------

class ModelClient {
public:
    virtual ~ModelClient() = default;

    // Requires a non-empty message list ending in a user message (ConfigError
    // otherwise). Safe to call concurrently.
    virtual std::string complete(std::span<const ChatMessage> messages, const CompletionParams& params) const = 0;
};

// Hash of the concatenated message contents; the key for mock fixtures.
std::string prompt_hash(std::span<const ChatMessage> messages);

class MockModelClient final : public ModelClient {
public:
    explicit MockModelClient(std::map<std::string, std::string> fixtures) : fixtures_(std::move(fixtures)) {}

    // Throws FixtureMissError naming the hash when unregistered.
    std::string complete(std::span<const ChatMessage> messages, const CompletionParams& params) const override;

    const std::map<std::string, std::string>& fixtures() const noexcept { return fixtures_; }

private:
    std::map<std::string, std::string> fixtures_;
};

// Reads a `{hash: response}` JSON object.
MockModelClient load_mock_client(const std::string& path);

struct RetryPolicy {
    int retry_count = 2;
    std::chrono::milliseconds base_delay{250};
    double multiplier = 2.0;
    std::chrono::milliseconds max_delay{8'000};

    // Delay before retry number `retry` (1-based).
    std::chrono::milliseconds delay_for(int retry) const;
};

struct EndpointConfig {
    std::string base_url;  // e.g. http://localhost:8080/v1
    std::optional<std::string> api_key;
    RetryPolicy retry;
};

class HttpModelClient final : public ModelClient {
public:
    explicit HttpModelClient(EndpointConfig config);

    // Reads LIGHTKG_API_BASE (required) and LIGHTKG_API_KEY. Throws
    // ConfigError when the base url is unset.
    static HttpModelClient from_env(RetryPolicy retry = {});

    // Retries transient failures (connection errors, timeouts, 429 and 5xx)
    // up to retry_count times with exponential backoff. Other 4xx responses
    // and malformed bodies fail immediately.
    std::string complete(std::span<const ChatMessage> messages, const CompletionParams& params) const override;

    const EndpointConfig& config() const noexcept { return config_; }

    // Injectable sleep, so tests do not wait on backoff.
    void set_sleeper(std::function<void(std::chrono::milliseconds)> sleeper) { sleeper_ = std::move(sleeper); }

private:
    std::string attempt(const std::string& body, const CompletionParams& params) const;

    EndpointConfig config_;
    std::string scheme_host_port_;
    std::string path_prefix_;
    std::function<void(std::chrono::milliseconds)> sleeper_;
};

// JSON request body sent to /chat/completions.
std::string build_chat_request(std::span<const ChatMessage> messages, const CompletionParams& params);
// Extracts choices[0].message.content; throws MalformedResponseError.
std::string parse_chat_response(std::string_view body);

// Model name from LIGHTKG_MODEL, or `fallback`.
std::string model_from_env(std::string fallback);

}  // namespace lightkg
