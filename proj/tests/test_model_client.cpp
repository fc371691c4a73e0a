#include "lightkg/errors.hpp"
#include "lightkg/model_client.hpp"

#include <doctest.h>
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

using namespace lightkg;
using namespace std::chrono_literals;

namespace {

std::vector<ChatMessage> curie_messages() {
    return {{Role::system, "Extract triples."}, {Role::user, "Text: Marie Curie discovered radium in 1898."}};
}

CompletionParams params() {
    CompletionParams p;
    p.model_name = "test-model";
    p.timeout = 2000ms;
    return p;
}

std::string ok_body(const std::string& content) {
    return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump();
}

// Local chat endpoint whose behaviour is scripted per test.
class FakeEndpoint {
public:
    using Handler = std::function<void(const httplib::Request&, httplib::Response&, int attempt)>;

    explicit FakeEndpoint(Handler handler) : handler_(std::move(handler)) {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            const int n = ++hits_;
            last_auth_ = req.get_header_value("Authorization");
            last_body_ = req.body;
            handler_(req, res, n);
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeEndpoint() {
        server_.stop();
        thread_.join();
    }

    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
    int hits() const { return hits_; }
    std::string last_auth() const { return last_auth_; }
    std::string last_body() const { return last_body_; }

private:
    httplib::Server server_;
    Handler handler_;
    int port_ = 0;
    std::thread thread_;
    std::atomic<int> hits_{0};
    std::string last_auth_;
    std::string last_body_;
};

HttpModelClient client_for(const std::string& url, std::vector<std::chrono::milliseconds>* sleeps,
                           std::optional<std::string> key = std::nullopt) {
    EndpointConfig cfg;
    cfg.base_url = url;
    cfg.api_key = std::move(key);
    HttpModelClient c(cfg);
    c.set_sleeper([sleeps](std::chrono::milliseconds d) { sleeps->push_back(d); });
    return c;
}

}  // namespace

TEST_CASE("mock answers registered prompts deterministically") {
    const auto msgs = curie_messages();
    MockModelClient mock({{prompt_hash(msgs), "(Marie Curie | discovered | radium) {year=1898}"}});
    const std::string a = mock.complete(msgs, params());
    CHECK(a == "(Marie Curie | discovered | radium) {year=1898}");
    CHECK(mock.complete(msgs, params()) == a);
}

TEST_CASE("mock miss names the hash") {
    MockModelClient mock({});
    const auto msgs = curie_messages();
    try {
        mock.complete(msgs, params());
        FAIL("expected FixtureMissError");
    } catch (const FixtureMissError& e) {
        CHECK(e.hash() == prompt_hash(msgs));
        CHECK(std::string(e.what()).find(e.hash()) != std::string::npos);
    }
}

TEST_CASE("prompt hash is the hash of the concatenated contents") {
    const std::vector<ChatMessage> a = {{Role::system, "ab"}, {Role::user, "c"}};
    const std::vector<ChatMessage> b = {{Role::system, "a"}, {Role::user, "bc"}};
    CHECK(prompt_hash(a) == prompt_hash(b));
    CHECK(prompt_hash(a).size() == 16);
    CHECK(prompt_hash(a) != prompt_hash(curie_messages()));
}

TEST_CASE("message and parameter preconditions") {
    MockModelClient mock({});
    const std::vector<ChatMessage> none;
    CHECK_THROWS_AS(mock.complete(none, params()), ConfigError);
    const std::vector<ChatMessage> ends_with_system = {{Role::user, "x"}, {Role::system, "y"}};
    CHECK_THROWS_AS(mock.complete(ends_with_system, params()), ConfigError);
    const std::vector<ChatMessage> empty_content = {{Role::user, ""}};
    CHECK_THROWS_AS(mock.complete(empty_content, params()), ConfigError);

    CompletionParams p = params();
    p.temperature = -0.1;
    CHECK_THROWS_AS(validate(p), ConfigError);
    p = params();
    p.max_tokens = 0;
    CHECK_THROWS_AS(validate(p), ConfigError);
    CHECK_NOTHROW(validate(params()));
}

TEST_CASE("load_mock_client reads a hash map file") {
    const auto path = std::filesystem::temp_directory_path() / "lightkg_fixtures_test.json";
    std::ofstream(path) << R"({"abc": "response"})";
    const auto mock = load_mock_client(path.string());
    CHECK(mock.fixtures().at("abc") == "response");
    std::ofstream(path) << R"({"abc": 3})";
    CHECK_THROWS_AS(load_mock_client(path.string()), ParseError);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_mock_client(path.string()), IoError);
}

TEST_CASE("request and response wire format") {
    const auto msgs = curie_messages();
    const auto body = nlohmann::json::parse(build_chat_request(msgs, params()));
    CHECK(body["model"] == "test-model");
    CHECK(body["messages"].size() == 2);
    CHECK(body["messages"][0]["role"] == "system");
    CHECK(body["messages"][1]["content"] == msgs[1].content);
    CHECK(body["temperature"] == 0.0);
    CHECK(body["max_tokens"] == 1024);

    CHECK(parse_chat_response(ok_body("hi")) == "hi");
    CHECK_THROWS_AS(parse_chat_response("not json"), MalformedResponseError);
    CHECK_THROWS_AS(parse_chat_response(R"({"choices":[]})"), MalformedResponseError);
    CHECK_THROWS_AS(parse_chat_response(R"({"choices":[{"message":{"role":"assistant"}}]})"), MalformedResponseError);
}

TEST_CASE("backoff schedule") {
    RetryPolicy r;
    CHECK(r.delay_for(1) == 250ms);
    CHECK(r.delay_for(2) == 500ms);
    CHECK(r.delay_for(3) == 1000ms);
    CHECK(r.delay_for(10) == 8000ms);
}

TEST_CASE("HTTP 429 twice then 200 succeeds through retries") {
    FakeEndpoint server([](const httplib::Request&, httplib::Response& res, int attempt) {
        if (attempt <= 2) {
            res.status = 429;
            res.set_content("slow down", "text/plain");
        } else {
            res.set_content(ok_body("(a | b | c)"), "application/json");
        }
    });
    std::vector<std::chrono::milliseconds> sleeps;
    const auto client = client_for(server.base_url(), &sleeps, "secret-key");
    CHECK(client.complete(curie_messages(), params()) == "(a | b | c)");
    CHECK(server.hits() == 3);
    CHECK(sleeps == std::vector<std::chrono::milliseconds>{250ms, 500ms});
    CHECK(server.last_auth() == "Bearer secret-key");
    CHECK(nlohmann::json::parse(server.last_body())["model"] == "test-model");
}

TEST_CASE("no Authorization header without a key") {
    FakeEndpoint server([](const httplib::Request&, httplib::Response& res, int) {
        res.set_content(ok_body("x"), "application/json");
    });
    std::vector<std::chrono::milliseconds> sleeps;
    const auto client = client_for(server.base_url(), &sleeps);
    CHECK(client.complete(curie_messages(), params()) == "x");
    CHECK(server.last_auth().empty());
}

TEST_CASE("persistent 5xx gives up after 1 + retry_count attempts") {
    FakeEndpoint server([](const httplib::Request&, httplib::Response& res, int) {
        res.status = 503;
        res.set_content(std::string(500, 'x'), "text/plain");
    });
    std::vector<std::chrono::milliseconds> sleeps;
    const auto client = client_for(server.base_url(), &sleeps);
    try {
        client.complete(curie_messages(), params());
        FAIL("expected HttpStatusError");
    } catch (const HttpStatusError& e) {
        CHECK(e.status() == 503);
        CHECK(e.body_excerpt().size() == 200);
    }
    CHECK(server.hits() == 3);
    CHECK(sleeps.size() == 2);
}

TEST_CASE("non-transient 4xx and malformed bodies fail immediately") {
    FakeEndpoint bad_request([](const httplib::Request&, httplib::Response& res, int) {
        res.status = 400;
        res.set_content("bad", "text/plain");
    });
    std::vector<std::chrono::milliseconds> sleeps;
    CHECK_THROWS_AS(client_for(bad_request.base_url(), &sleeps).complete(curie_messages(), params()), HttpStatusError);
    CHECK(bad_request.hits() == 1);

    FakeEndpoint malformed([](const httplib::Request&, httplib::Response& res, int) {
        res.set_content(R"({"choices":[{"message":{}}]})", "application/json");
    });
    CHECK_THROWS_AS(client_for(malformed.base_url(), &sleeps).complete(curie_messages(), params()),
                    MalformedResponseError);
    CHECK(malformed.hits() == 1);
    CHECK(sleeps.empty());
}

TEST_CASE("unreachable endpoint fails after retries") {
    // Bind an ephemeral port and close it again without listening.
    int port = 0;
    {
        const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
        REQUIRE(::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
        socklen_t len = sizeof addr;
        ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
        port = ntohs(addr.sin_port);
        ::close(fd);
    }
    std::vector<std::chrono::milliseconds> sleeps;
    const auto client = client_for("http://127.0.0.1:" + std::to_string(port) + "/v1", &sleeps);
    CHECK_THROWS_AS(client.complete(curie_messages(), params()), EndpointUnreachableError);
    CHECK(sleeps.size() == 2);
}

TEST_CASE("slow endpoint times out") {
    FakeEndpoint server([](const httplib::Request&, httplib::Response& res, int) {
        std::this_thread::sleep_for(600ms);
        res.set_content(ok_body("late"), "application/json");
    });
    std::vector<std::chrono::milliseconds> sleeps;
    auto p = params();
    p.timeout = 150ms;
    const auto client = client_for(server.base_url(), &sleeps);
    CHECK_THROWS_AS(client.complete(curie_messages(), p), TimeoutError);
    CHECK(sleeps.size() == 2);
}

TEST_CASE("from_env requires a base url") {
    ::unsetenv("LIGHTKG_API_BASE");
    CHECK_THROWS_AS(HttpModelClient::from_env(), ConfigError);
    ::setenv("LIGHTKG_API_BASE", "http://localhost:9/v1", 1);
    ::setenv("LIGHTKG_API_KEY", "k", 1);
    const auto c = HttpModelClient::from_env();
    CHECK(c.config().base_url == "http://localhost:9/v1");
    CHECK(c.config().api_key == std::optional<std::string>("k"));
    ::unsetenv("LIGHTKG_API_BASE");
    ::unsetenv("LIGHTKG_API_KEY");
    CHECK_THROWS_AS(HttpModelClient(EndpointConfig{"localhost:8080", std::nullopt, {}}), ConfigError);
}

TEST_CASE("model name from the environment") {
    ::unsetenv("LIGHTKG_MODEL");
    CHECK(model_from_env("fallback") == "fallback");
    ::setenv("LIGHTKG_MODEL", "phi", 1);
    CHECK(model_from_env("fallback") == "phi");
    ::unsetenv("LIGHTKG_MODEL");
}
