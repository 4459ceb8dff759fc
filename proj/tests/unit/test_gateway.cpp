#include <catch_amalgamated.hpp>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <thread>

#include "fcforge/gateway.hpp"
#include "synthetic_llm.hpp"

using namespace fcforge;

namespace {

TemplateError::Kind template_kind(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const TemplateError& e) {
        return e.kind();
    }
    FAIL("no TemplateError");
    return TemplateError::Kind::NotFound;
}

// Local HTTP server on an ephemeral port, stopped on destruction.
class StubServer {
public:
    explicit StubServer(httplib::Server::Handler handler) {
        server_.Post("/v1/chat/completions", std::move(handler));
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~StubServer() {
        server_.stop();
        thread_.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

std::string chat_reply(const std::string& content) {
    return json{{"choices", json::array({json{{"message", {{"role", "assistant"}, {"content", content}}}}})}}.dump();
}

GatewayConfig http_config(const std::string& url) {
    GatewayConfig c;
    c.backend = "http";
    c.base_url = url;
    c.api_key_env = "FCFORGE_TEST_API_KEY";
    c.timeout_seconds = 5;
    c.backoff_initial_seconds = 0.01;
    c.backoff_max_seconds = 0.02;
    return c;
}

CompletionRequest request(std::string prompt) {
    CompletionRequest r;
    r.prompt = std::move(prompt);
    return r;
}

}  // namespace

TEST_CASE("templates render and reject bad input") {
    const auto t = PromptTemplate::from_body("t", "Write {number} questions for {func_name}. Braces: {{x}}");
    CHECK(t.required_vars() == std::set<std::string>{"number", "func_name"});
    CHECK(t.render({{"number", "5"}, {"func_name", "F"}}) == "Write 5 questions for F. Braces: {x}");
    // Values are inserted verbatim, never re-expanded.
    CHECK(t.render({{"number", "{func_name}"}, {"func_name", "F"}}) == "Write {func_name} questions for F. Braces: {x}");

    CHECK(template_kind([&] { t.render({{"number", "5"}}); }) == TemplateError::Kind::MissingVariable);
    CHECK(template_kind([] { PromptTemplate("t", "{a} {b}", {"a"}); }) == TemplateError::Kind::UnknownPlaceholder);
    CHECK(template_kind([] { PromptTemplate::from_body("t", "open { brace"); }) == TemplateError::Kind::Syntax);
    CHECK(template_kind([] { PromptTemplate::from_body("t", "{unterminated"); }) == TemplateError::Kind::Syntax);
    CHECK(template_kind([] { PromptTemplate::from_body("t", "stray } brace"); }) == TemplateError::Kind::Syntax);
    CHECK(template_kind([] { TemplateSet().get("missing"); }) == TemplateError::Kind::NotFound);
}

TEST_CASE("the shipped templates all parse") {
    const auto set = TemplateSet::load_dir(testing::data_path("templates"));
    for (const char* id : {"seed_question", "augment_replacement", "augment_rewriting", "augment_simplification",
                           "augment_error_introduction", "extract_call"}) {
        CHECK(set.contains(id));
    }
    CHECK(set.get("extract_call").required_vars().contains("question"));
}

TEST_CASE("line cleaning") {
    CHECK(clean_line("  1. What is Li Wei's salary?  ") == "What is Li Wei's salary?");
    CHECK(clean_line("2) \"Quoted question\"") == "Quoted question");
    CHECK(clean_line("- bullet") == "bullet");
    CHECK(clean_line("\xE2\x80\xA2 dot") == "dot");
    CHECK(clean_line("3\xE3\x80\x81\xE9\x97\xAE\xE9\xA2\x98") == "\xE9\x97\xAE\xE9\xA2\x98");
    CHECK(clean_line("\xE3\x80\x80\xE2\x80\x9C" "fancy\xE2\x80\x9D") == "fancy");
    CHECK(clean_line("2023 was a good year") == "2023 was a good year");
    CHECK(clean_line("   ").empty());

    const auto lines = parse_lines("1. a\n\n2. b\r\n3. c\n", 3);
    CHECK(lines == std::vector<std::string>{"a", "b", "c"});
    CHECK_THROWS_AS(parse_lines("1. a\n2. b", 3), CountMismatch);
    CHECK(parse_lines("1. a\n2. b", 3, 1).size() == 2);
    try {
        parse_lines("a\nb\nc\nd", 2);
        FAIL("expected CountMismatch");
    } catch (const CountMismatch& e) {
        CHECK(e.got == 4);
        CHECK(e.expected == 2);
    }
}

TEST_CASE("mock backend replays by prompt hash and misses loudly") {
    MockBackend mock;
    mock.script("hello", "world");
    CHECK(mock.send(request("hello")) == "world");
    try {
        mock.send(request("unknown"));
        FAIL("expected MockMiss");
    } catch (const GatewayError& e) {
        CHECK(e.kind() == GatewayError::Kind::MockMiss);
        CHECK_FALSE(e.transient());
    }
    MockBackend fallback({}, [](const CompletionRequest& r) -> std::optional<std::string> { return "echo:" + r.prompt; });
    CHECK(fallback.send(request("x")) == "echo:x");
}

TEST_CASE("recording backend writes a replayable fixture") {
    auto rec = std::make_unique<RecordingBackend>(std::make_unique<MockBackend>(
        std::map<std::string, std::string>{}, [](const CompletionRequest& r) -> std::optional<std::string> { return r.prompt + "!"; }));
    rec->send(request("a"));
    rec->send(request("b"));
    const auto path = std::filesystem::temp_directory_path() / "fcforge_recorded.json";
    rec->save(path);
    CHECK(rec->fixture().size() == 2);
    auto replay = MockBackend::from_file(path);
    CHECK(replay->send(request("a")) == "a!");
    CHECK(replay->send(request("b")) == "b!");
    std::filesystem::remove(path);
}

TEST_CASE("gateway config") {
    const GatewayConfig c = gateway_config_from_json(json{{"backend", "http"}, {"max_in_flight", 2}, {"model", "m"}});
    CHECK(c.backend == "http");
    CHECK(c.max_in_flight == 2);
    CHECK(gateway_config_from_json(gateway_config_to_json(c)).model == "m");
    CHECK_THROWS_AS(gateway_config_from_json(json{{"api_key", "sk-secret"}}), GatewayError);
    GatewayConfig bad;
    bad.max_in_flight = 0;
    CHECK_THROWS_AS(bad.check(), GatewayError);
    bad = GatewayConfig{};
    bad.backend = "grpc";
    CHECK_THROWS_AS(bad.check(), GatewayError);
}

TEST_CASE("concurrency never exceeds the in-flight bound") {
    struct Slow : Backend {
        std::atomic<int> now{0}, peak{0};
        std::string send(const CompletionRequest& r) override {
            const int n = ++now;
            int p = peak.load();
            while (n > p && !peak.compare_exchange_weak(p, n)) {}
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
            --now;
            return r.prompt;
        }
    };
    GatewayConfig cfg;
    cfg.max_in_flight = 3;
    auto backend = std::make_unique<Slow>();
    Slow* slow = backend.get();
    Gateway gw(cfg, std::move(backend));
    std::vector<std::thread> threads;
    for (int i = 0; i < 16; ++i) {
        threads.emplace_back([&, i] {
            for (int j = 0; j < 4; ++j) gw.complete(request(std::to_string(i * 10 + j)));
        });
    }
    for (auto& t : threads) t.join();
    CHECK(slow->peak.load() <= 3);
    CHECK(gw.stats().peak_in_flight <= 3);
    CHECK(gw.stats().requests == 64);
}

TEST_CASE("http backend retries rate limits and sends the bearer key") {
    ::setenv("FCFORGE_TEST_API_KEY", "sk-test-123", 1);
    std::atomic<int> calls{0};
    std::string auth, model;
    StubServer server([&](const httplib::Request& req, httplib::Response& res) {
        auth = req.get_header_value("Authorization");
        model = json::parse(req.body).at("model").get<std::string>();
        if (++calls <= 2) {
            res.status = 429;
            res.set_content("slow down", "text/plain");
            return;
        }
        res.set_content(chat_reply("1. hi"), "application/json");
    });
    Gateway gw(http_config(server.url()), make_http_backend(http_config(server.url())));
    CHECK(gw.complete(request("prompt")) == "1. hi");
    CHECK(calls == 3);
    CHECK(gw.stats().retries == 2);
    CHECK(gw.stats().attempts == 3);
    CHECK(auth == "Bearer sk-test-123");
    CHECK(model == "gpt-4");
    ::unsetenv("FCFORGE_TEST_API_KEY");
}

TEST_CASE("http backend errors") {
    SECTION("client errors are not retried") {
        std::atomic<int> calls{0};
        StubServer server([&](const httplib::Request&, httplib::Response& res) {
            ++calls;
            res.status = 400;
        });
        Gateway gw(http_config(server.url()), make_http_backend(http_config(server.url())));
        try {
            gw.complete(request("p"));
            FAIL("expected HttpStatus");
        } catch (const GatewayError& e) {
            CHECK(e.kind() == GatewayError::Kind::HttpStatus);
            CHECK(e.status() == 400);
        }
        CHECK(calls == 1);
    }
    SECTION("retries give up after the limit") {
        std::atomic<int> calls{0};
        StubServer server([&](const httplib::Request&, httplib::Response& res) {
            ++calls;
            res.status = 503;
        });
        auto cfg = http_config(server.url());
        cfg.max_retries = 2;
        Gateway gw(cfg, make_http_backend(cfg));
        CHECK_THROWS_WITH(gw.complete(request("p")), Catch::Matchers::ContainsSubstring("after 3 attempts"));
        CHECK(calls == 3);
    }
    SECTION("malformed bodies") {
        StubServer server([](const httplib::Request&, httplib::Response& res) { res.set_content("{}", "application/json"); });
        Gateway gw(http_config(server.url()), make_http_backend(http_config(server.url())));
        try {
            gw.complete(request("p"));
            FAIL("expected MalformedResponse");
        } catch (const GatewayError& e) {
            CHECK(e.kind() == GatewayError::Kind::MalformedResponse);
        }
    }
    SECTION("timeouts") {
        StubServer server([](const httplib::Request&, httplib::Response& res) {
            std::this_thread::sleep_for(std::chrono::milliseconds(400));
            res.set_content(chat_reply("late"), "application/json");
        });
        auto cfg = http_config(server.url());
        cfg.timeout_seconds = 0.05;
        cfg.max_retries = 0;
        Gateway gw(cfg, make_http_backend(cfg));
        try {
            gw.complete(request("p"));
            FAIL("expected Timeout");
        } catch (const GatewayError& e) {
            CHECK(e.kind() == GatewayError::Kind::Timeout);
        }
    }
    SECTION("bad urls") {
        auto cfg = http_config("ftp://example.com");
        CHECK_THROWS_AS(make_http_backend(cfg), GatewayError);
    }
}

TEST_CASE("empty prompts are rejected before any call") {
    Gateway gw(GatewayConfig{}, std::make_unique<MockBackend>());
    CHECK_THROWS_AS(gw.complete(request("")), GatewayError);
    CHECK(gw.stats().attempts == 0);
}
