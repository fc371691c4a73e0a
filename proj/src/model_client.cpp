#include "lightkg/model_client.hpp"

#include "lightkg/io.hpp"
#include "lightkg/text.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace lightkg {

namespace {

constexpr std::size_t kBodyExcerptChars = 200;

void check_messages(std::span<const ChatMessage> messages) {
    if (messages.empty()) throw ConfigError("complete() needs at least one message");
    if (messages.back().role != Role::user) throw ConfigError("the last message must have role=user");
    for (const auto& m : messages) {
        if (m.content.empty()) throw ConfigError("chat message content must be non-empty");
    }
}

bool transient_status(int status) { return status == 429 || status == 408 || status >= 500; }

}  // namespace

std::string_view to_string(Role role) {
    switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
    }
    return "user";
}

void validate(const CompletionParams& params) {
    if (!(params.temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
    if (params.max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
}

std::string prompt_hash(std::span<const ChatMessage> messages) {
    std::string joined;
    for (const auto& m : messages) joined += m.content;
    return text::hex64(text::fnv1a64(joined));
}

std::string MockModelClient::complete(std::span<const ChatMessage> messages, const CompletionParams& params) const {
    check_messages(messages);
    validate(params);
    auto hash = prompt_hash(messages);
    auto it = fixtures_.find(hash);
    if (it == fixtures_.end()) throw FixtureMissError(std::move(hash));
    return it->second;
}

MockModelClient load_mock_client(const std::string& path) {
    const std::string bytes = io::read_file(path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(bytes);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path + ": " + e.what(), e.byte);
    }
    if (!doc.is_object()) throw ParseError(path + ": fixtures must be a JSON object {hash: response}", 0);
    std::map<std::string, std::string> fixtures;
    for (const auto& [hash, response] : doc.items()) {
        if (!response.is_string()) throw ParseError(path + ": fixture '" + hash + "' is not a string", 0);
        fixtures.emplace(hash, response.get<std::string>());
    }
    return MockModelClient(std::move(fixtures));
}

std::chrono::milliseconds RetryPolicy::delay_for(int retry) const {
    const double scaled = static_cast<double>(base_delay.count()) * std::pow(multiplier, std::max(0, retry - 1));
    const double capped = std::min(scaled, static_cast<double>(max_delay.count()));
    return std::chrono::milliseconds(static_cast<std::int64_t>(capped));
}

std::string build_chat_request(std::span<const ChatMessage> messages, const CompletionParams& params) {
    nlohmann::ordered_json body;
    body["model"] = params.model_name;
    body["messages"] = nlohmann::ordered_json::array();
    for (const auto& m : messages) {
        body["messages"].push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
    }
    body["temperature"] = params.temperature;
    body["max_tokens"] = params.max_tokens;
    return body.dump();
}

std::string parse_chat_response(std::string_view body) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
        throw MalformedResponseError(std::string("response is not JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty())
        throw MalformedResponseError("response has no choices");
    const auto& first = doc["choices"][0];
    if (!first.is_object() || !first.contains("message") || !first["message"].is_object())
        throw MalformedResponseError("choices[0] has no message");
    const auto& message = first["message"];
    if (!message.contains("content") || !message["content"].is_string())
        throw MalformedResponseError("choices[0].message has no content field");
    return message["content"].get<std::string>();
}

std::string model_from_env(std::string fallback) {
    if (const char* m = std::getenv("LIGHTKG_MODEL"); m != nullptr && *m != '\0') return m;
    return fallback;
}

HttpModelClient::HttpModelClient(EndpointConfig config) : config_(std::move(config)) {
    std::string url = config_.base_url;
    while (!url.empty() && url.back() == '/') url.pop_back();
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint url needs a scheme: '" + config_.base_url + "'");
    const auto path_start = url.find('/', scheme_end + 3);
    scheme_host_port_ = url.substr(0, path_start);
    path_prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
    sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

HttpModelClient HttpModelClient::from_env(RetryPolicy retry) {
    const char* base = std::getenv("LIGHTKG_API_BASE");
    if (base == nullptr || *base == '\0') throw ConfigError("LIGHTKG_API_BASE is not set");
    EndpointConfig cfg;
    cfg.base_url = base;
    if (const char* key = std::getenv("LIGHTKG_API_KEY"); key != nullptr && *key != '\0') cfg.api_key = key;
    cfg.retry = retry;
    return HttpModelClient(std::move(cfg));
}

std::string HttpModelClient::attempt(const std::string& body, const CompletionParams& params) const {
    httplib::Client client(scheme_host_port_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(params.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(params.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    httplib::Headers headers;
    if (config_.api_key) headers.emplace("Authorization", "Bearer " + *config_.api_key);

    auto res = client.Post(path_prefix_ + "/chat/completions", headers, body, "application/json");
    if (!res) {
        const auto err = res.error();
        if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
            throw TimeoutError("request to " + scheme_host_port_ + " timed out or was cut off (" +
                               httplib::to_string(err) + ")");
        throw EndpointUnreachableError("cannot reach " + scheme_host_port_ + ": " + httplib::to_string(err));
    }
    if (res->status < 200 || res->status >= 300)
        throw HttpStatusError(res->status, res->body.substr(0, kBodyExcerptChars));
    return parse_chat_response(res->body);
}

std::string HttpModelClient::complete(std::span<const ChatMessage> messages, const CompletionParams& params) const {
    check_messages(messages);
    validate(params);
    const std::string body = build_chat_request(messages, params);
    const int attempts = 1 + std::max(0, config_.retry.retry_count);
    for (int i = 1;; ++i) {
        try {
            return attempt(body, params);
        } catch (const HttpStatusError& e) {
            if (!transient_status(e.status()) || i >= attempts) throw;
        } catch (const EndpointUnreachableError&) {
            if (i >= attempts) throw;
        } catch (const TimeoutError&) {
            if (i >= attempts) throw;
        }
        sleeper_(config_.retry.delay_for(i));
    }
}

}  // namespace lightkg
