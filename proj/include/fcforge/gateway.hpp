#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <set>
#include <string>
#include <vector>

#include "fcforge/util.hpp"

namespace fcforge {

// ---------------------------------------------------------------------------
// Prompt templates

class TemplateError : public Error {
public:
    enum class Kind { MissingVariable, UnknownPlaceholder, Syntax, NotFound };
    TemplateError(Kind kind, std::string name, const std::string& msg);
    Kind kind() const { return kind_; }
    const std::string& name() const { return name_; }

private:
    Kind kind_;
    std::string name_;
};

/// Text with `{name}` placeholders; `{{` and `}}` render as literal braces.
class PromptTemplate {
public:
    /// Required variables are exactly the placeholders found in `body`.
    static PromptTemplate from_body(std::string id, std::string body);
    /// Throws UnknownPlaceholder if `body` uses a name outside `required_vars`.
    PromptTemplate(std::string id, std::string body, std::set<std::string> required_vars);

    const std::string& id() const { return id_; }
    const std::string& body() const { return body_; }
    const std::set<std::string>& required_vars() const { return required_; }

    std::string render(const std::map<std::string, std::string>& vars) const;

private:
    struct Piece {
        bool is_var;
        std::string text;
    };
    PromptTemplate() = default;
    void parse();

    std::string id_;
    std::string body_;
    std::set<std::string> required_;
    std::vector<Piece> pieces_;
};

std::string render_prompt(const PromptTemplate& t, const std::map<std::string, std::string>& vars);

/// Templates keyed by id, loaded from `<dir>/<id>.txt`.
class TemplateSet {
public:
    TemplateSet() = default;
    static TemplateSet load_dir(const std::filesystem::path& dir);

    void add(PromptTemplate t);
    const PromptTemplate& get(const std::string& id) const;
    bool contains(const std::string& id) const { return templates_.contains(id); }
    std::vector<std::string> ids() const;

private:
    std::map<std::string, PromptTemplate> templates_;
};

// ---------------------------------------------------------------------------
// Completion

struct CompletionRequest {
    std::string model;
    std::string prompt;
    double temperature = 0.8;
    int max_tokens = 2048;
    std::optional<std::int64_t> seed;
    /// Template id and variables behind `prompt`. Never sent over the wire;
    /// used for logging and by programmatic mock responders.
    std::string template_id;
    std::map<std::string, std::string> vars;
};

struct GatewayConfig {
    std::string backend = "mock";  // "http" or "mock"
    std::string base_url = "https://api.openai.com/v1";
    std::string api_key_env = "OPENAI_API_KEY";
    std::string model = "gpt-4";
    double timeout_seconds = 60.0;
    int max_retries = 3;
    int max_in_flight = 4;
    double backoff_initial_seconds = 0.5;
    double backoff_max_seconds = 8.0;
    std::string mock_fixture;  // path of the prompt-hash -> reply map

    void check() const;
};

GatewayConfig gateway_config_from_json(const json& j);
json gateway_config_to_json(const GatewayConfig& c);

class GatewayError : public Error {
public:
    enum class Kind { Timeout, HttpStatus, Transport, MalformedResponse, MockMiss, Config };
    GatewayError(Kind kind, const std::string& msg, int status = 0);
    Kind kind() const { return kind_; }
    int status() const { return status_; }
    /// Worth retrying: timeouts, transport failures, 429 and 5xx.
    bool transient() const;

private:
    Kind kind_;
    int status_;
};

const char* to_string(GatewayError::Kind kind);

class Backend {
public:
    virtual ~Backend() = default;
    /// One attempt; throws GatewayError on failure.
    virtual std::string send(const CompletionRequest& req) = 0;
};

/// Key of a prompt in mock fixtures.
std::string prompt_key(const std::string& prompt);

class MockBackend : public Backend {
public:
    using Responder = std::function<std::optional<std::string>(const CompletionRequest&)>;

    MockBackend() = default;
    explicit MockBackend(std::map<std::string, std::string> fixture, Responder fallback = {});
    static std::unique_ptr<MockBackend> from_file(const std::filesystem::path& path, Responder fallback = {});

    /// Scripts a reply for an exact prompt.
    void script(const std::string& prompt, std::string reply);
    std::string send(const CompletionRequest& req) override;

private:
    std::map<std::string, std::string> fixture_;
    Responder fallback_;
};

/// Passes requests to an inner backend and remembers every reply, so a run
/// against a live endpoint can be replayed later through MockBackend.
class RecordingBackend : public Backend {
public:
    explicit RecordingBackend(std::unique_ptr<Backend> inner) : inner_(std::move(inner)) {}
    std::string send(const CompletionRequest& req) override;
    json fixture() const;
    void save(const std::filesystem::path& path) const;

private:
    std::unique_ptr<Backend> inner_;
    mutable std::mutex mu_;
    std::map<std::string, std::string> recorded_;
};

/// OpenAI-compatible chat completions over HTTP(S).
std::unique_ptr<Backend> make_http_backend(const GatewayConfig& cfg);

struct GatewayStats {
    std::int64_t requests = 0;  // logical completions
    std::int64_t attempts = 0;  // wire attempts including retries
    std::int64_t retries = 0;
    std::int64_t failures = 0;
    std::int64_t peak_in_flight = 0;
};

/// Thread-safe front end: bounds in-flight attempts and retries transient
/// failures with exponential backoff.
class Gateway {
public:
    Gateway(GatewayConfig cfg, std::unique_ptr<Backend> backend);
    ~Gateway();

    std::string complete(CompletionRequest req);
    const GatewayConfig& config() const { return cfg_; }
    GatewayStats stats() const;
    Backend& backend() { return *backend_; }

private:
    GatewayConfig cfg_;
    std::unique_ptr<Backend> backend_;
    std::counting_semaphore<1 << 16> slots_;
    mutable std::mutex mu_;
    GatewayStats stats_;
    std::int64_t in_flight_ = 0;
};

/// Builds a gateway from config: http, or mock backed by `mock_fixture`.
std::unique_ptr<Gateway> make_gateway(const GatewayConfig& cfg, MockBackend::Responder fallback = {});

std::string complete(Gateway& gw, const CompletionRequest& req);

// ---------------------------------------------------------------------------
// Line-oriented output

class CountMismatch : public Error {
public:
    CountMismatch(std::size_t got, std::size_t expected);
    std::size_t got;
    std::size_t expected;
};

/// Strips list markers ("-", "*", "•", "3.", "3)", "3、"), surrounding
/// quotes and whitespace from one line.
std::string clean_line(std::string_view line);

/// One question per non-blank line. Throws CountMismatch when the count is
/// off by more than `tolerance`.
std::vector<std::string> parse_lines(std::string_view raw, std::size_t expected, std::size_t tolerance = 0);

}  // namespace fcforge
