#include "fcforge/gateway.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace fcforge {

// ---------------------------------------------------------------------------
// Templates

namespace {

const char* template_kind_name(TemplateError::Kind k) {
    switch (k) {
        case TemplateError::Kind::MissingVariable: return "MissingVariable";
        case TemplateError::Kind::UnknownPlaceholder: return "UnknownPlaceholder";
        case TemplateError::Kind::Syntax: return "TemplateSyntax";
        case TemplateError::Kind::NotFound: return "TemplateNotFound";
    }
    return "?";
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

}  // namespace

TemplateError::TemplateError(Kind kind, std::string name, const std::string& msg)
    : Error(std::string(template_kind_name(kind)) + "(\"" + name + "\"): " + msg), kind_(kind), name_(std::move(name)) {}

PromptTemplate PromptTemplate::from_body(std::string id, std::string body) {
    PromptTemplate t;
    t.id_ = std::move(id);
    t.body_ = std::move(body);
    t.parse();
    for (const auto& p : t.pieces_) {
        if (p.is_var) t.required_.insert(p.text);
    }
    return t;
}

PromptTemplate::PromptTemplate(std::string id, std::string body, std::set<std::string> required_vars)
    : id_(std::move(id)), body_(std::move(body)), required_(std::move(required_vars)) {
    parse();
    for (const auto& p : pieces_) {
        if (p.is_var && !required_.contains(p.text)) {
            throw TemplateError(TemplateError::Kind::UnknownPlaceholder, p.text, "template " + id_ + " does not declare it");
        }
    }
}

void PromptTemplate::parse() {
    pieces_.clear();
    std::string text;
    const std::string& b = body_;
    for (std::size_t i = 0; i < b.size(); ++i) {
        const char c = b[i];
        if (c == '{') {
            if (i + 1 < b.size() && b[i + 1] == '{') {
                text += '{';
                ++i;
                continue;
            }
            std::size_t j = i + 1;
            if (j >= b.size() || !ident_start(b[j])) {
                throw TemplateError(TemplateError::Kind::Syntax, "{",
                                    "template " + id_ + ": '{' at byte " + std::to_string(i) + " opens no placeholder");
            }
            while (j < b.size() && ident_char(b[j])) ++j;
            if (j >= b.size() || b[j] != '}') {
                throw TemplateError(TemplateError::Kind::Syntax, b.substr(i + 1, j - i - 1),
                                    "template " + id_ + ": unterminated placeholder at byte " + std::to_string(i));
            }
            if (!text.empty()) pieces_.push_back({false, std::move(text)});
            text.clear();
            pieces_.push_back({true, b.substr(i + 1, j - i - 1)});
            i = j;
        } else if (c == '}') {
            if (i + 1 < b.size() && b[i + 1] == '}') {
                text += '}';
                ++i;
                continue;
            }
            throw TemplateError(TemplateError::Kind::Syntax, "}",
                                "template " + id_ + ": stray '}' at byte " + std::to_string(i));
        } else {
            text += c;
        }
    }
    if (!text.empty()) pieces_.push_back({false, std::move(text)});
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& vars) const {
    for (const auto& name : required_) {
        if (!vars.contains(name)) {
            throw TemplateError(TemplateError::Kind::MissingVariable, name, "template " + id_ + " needs it");
        }
    }
    std::string out;
    for (const auto& p : pieces_) out += p.is_var ? vars.at(p.text) : p.text;
    return out;
}

std::string render_prompt(const PromptTemplate& t, const std::map<std::string, std::string>& vars) {
    return t.render(vars);
}

TemplateSet TemplateSet::load_dir(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw IoError("template directory not found: " + dir.string());
    TemplateSet set;
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) set.add(PromptTemplate::from_body(f.stem().string(), read_file(f)));
    return set;
}

void TemplateSet::add(PromptTemplate t) {
    const std::string id = t.id();
    templates_.insert_or_assign(id, std::move(t));
}

const PromptTemplate& TemplateSet::get(const std::string& id) const {
    auto it = templates_.find(id);
    if (it == templates_.end()) throw TemplateError(TemplateError::Kind::NotFound, id, "no such template");
    return it->second;
}

std::vector<std::string> TemplateSet::ids() const {
    std::vector<std::string> out;
    for (const auto& [id, _] : templates_) out.push_back(id);
    return out;
}

// ---------------------------------------------------------------------------
// Config

void GatewayConfig::check() const {
    auto bad = [](const std::string& m) { throw GatewayError(GatewayError::Kind::Config, m); };
    if (backend != "http" && backend != "mock") bad("backend must be http or mock, got '" + backend + "'");
    if (max_in_flight < 1 || max_in_flight > (1 << 16)) bad("max_in_flight must be in [1, 65536]");
    if (max_retries < 0) bad("max_retries must be >= 0");
    if (!(timeout_seconds > 0)) bad("timeout must be positive");
    if (backoff_initial_seconds < 0 || backoff_max_seconds < 0) bad("backoff must be >= 0");
    if (model.empty()) bad("model must be set");
}

GatewayConfig gateway_config_from_json(const json& j) {
    GatewayConfig c;
    if (!j.is_object()) throw GatewayError(GatewayError::Kind::Config, "gateway config must be an object");
    for (const auto& [key, v] : j.items()) {
        try {
            if (key == "backend") c.backend = v.get<std::string>();
            else if (key == "base_url") c.base_url = v.get<std::string>();
            else if (key == "api_key_env") c.api_key_env = v.get<std::string>();
            else if (key == "model") c.model = v.get<std::string>();
            else if (key == "timeout") c.timeout_seconds = v.get<double>();
            else if (key == "max_retries") c.max_retries = v.get<int>();
            else if (key == "max_in_flight") c.max_in_flight = v.get<int>();
            else if (key == "backoff_initial") c.backoff_initial_seconds = v.get<double>();
            else if (key == "backoff_max") c.backoff_max_seconds = v.get<double>();
            else if (key == "mock_fixture") c.mock_fixture = v.get<std::string>();
            else if (key == "api_key") throw GatewayError(GatewayError::Kind::Config, "API keys are read from the environment only; set api_key_env");
            else throw GatewayError(GatewayError::Kind::Config, "unknown gateway key '" + key + "'");
        } catch (const json::exception& e) {
            throw GatewayError(GatewayError::Kind::Config, "gateway key '" + key + "': " + e.what());
        }
    }
    c.check();
    return c;
}

json gateway_config_to_json(const GatewayConfig& c) {
    return json{{"backend", c.backend},
                {"base_url", c.base_url},
                {"api_key_env", c.api_key_env},
                {"model", c.model},
                {"timeout", c.timeout_seconds},
                {"max_retries", c.max_retries},
                {"max_in_flight", c.max_in_flight},
                {"backoff_initial", c.backoff_initial_seconds},
                {"backoff_max", c.backoff_max_seconds},
                {"mock_fixture", c.mock_fixture}};
}

// ---------------------------------------------------------------------------
// Errors and backends

const char* to_string(GatewayError::Kind kind) {
    switch (kind) {
        case GatewayError::Kind::Timeout: return "Timeout";
        case GatewayError::Kind::HttpStatus: return "HttpStatus";
        case GatewayError::Kind::Transport: return "Transport";
        case GatewayError::Kind::MalformedResponse: return "MalformedResponse";
        case GatewayError::Kind::MockMiss: return "MockMiss";
        case GatewayError::Kind::Config: return "Config";
    }
    return "?";
}

GatewayError::GatewayError(Kind kind, const std::string& msg, int status)
    : Error(std::string(to_string(kind)) + ": " + msg), kind_(kind), status_(status) {}

bool GatewayError::transient() const {
    switch (kind_) {
        case Kind::Timeout:
        case Kind::Transport: return true;
        case Kind::HttpStatus: return status_ == 429 || status_ >= 500;
        default: return false;
    }
}

std::string prompt_key(const std::string& prompt) { return sha256_hex(prompt); }

MockBackend::MockBackend(std::map<std::string, std::string> fixture, Responder fallback)
    : fixture_(std::move(fixture)), fallback_(std::move(fallback)) {}

std::unique_ptr<MockBackend> MockBackend::from_file(const std::filesystem::path& path, Responder fallback) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw GatewayError(GatewayError::Kind::Config, "mock fixture " + path.string() + " is not JSON: " + e.what());
    }
    if (!j.is_object()) throw GatewayError(GatewayError::Kind::Config, "mock fixture must map prompt hashes to replies");
    std::map<std::string, std::string> fixture;
    for (const auto& [k, v] : j.items()) {
        if (!v.is_string()) throw GatewayError(GatewayError::Kind::Config, "mock reply for " + k + " is not a string");
        fixture.emplace(k, v.get<std::string>());
    }
    return std::make_unique<MockBackend>(std::move(fixture), std::move(fallback));
}

void MockBackend::script(const std::string& prompt, std::string reply) {
    fixture_.insert_or_assign(prompt_key(prompt), std::move(reply));
}

std::string MockBackend::send(const CompletionRequest& req) {
    if (auto it = fixture_.find(prompt_key(req.prompt)); it != fixture_.end()) return it->second;
    if (fallback_) {
        if (auto reply = fallback_(req)) return *reply;
    }
    throw GatewayError(GatewayError::Kind::MockMiss,
                       "no scripted reply for prompt " + prompt_key(req.prompt).substr(0, 12) +
                           (req.template_id.empty() ? "" : " (template " + req.template_id + ")"));
}

std::string RecordingBackend::send(const CompletionRequest& req) {
    std::string reply = inner_->send(req);
    std::lock_guard lock(mu_);
    recorded_.insert_or_assign(prompt_key(req.prompt), reply);
    return reply;
}

json RecordingBackend::fixture() const {
    std::lock_guard lock(mu_);
    json j = json::object();
    for (const auto& [k, v] : recorded_) j[k] = v;
    return j;
}

void RecordingBackend::save(const std::filesystem::path& path) const { write_file(path, fixture().dump(1) + "\n"); }

// ---------------------------------------------------------------------------
// Gateway

Gateway::Gateway(GatewayConfig cfg, std::unique_ptr<Backend> backend)
    : cfg_(std::move(cfg)), backend_(std::move(backend)), slots_((cfg_.check(), cfg_.max_in_flight)) {
    if (!backend_) throw GatewayError(GatewayError::Kind::Config, "gateway has no backend");
}

Gateway::~Gateway() = default;

GatewayStats Gateway::stats() const {
    std::lock_guard lock(mu_);
    return stats_;
}

std::string Gateway::complete(CompletionRequest req) {
    if (req.prompt.empty()) throw GatewayError(GatewayError::Kind::Config, "empty prompt");
    if (req.model.empty()) req.model = cfg_.model;
    if (!(req.temperature >= 0)) throw GatewayError(GatewayError::Kind::Config, "temperature must be >= 0");
    if (req.max_tokens < 1) throw GatewayError(GatewayError::Kind::Config, "max_tokens must be positive");
    {
        std::lock_guard lock(mu_);
        ++stats_.requests;
    }
    double backoff = cfg_.backoff_initial_seconds;
    for (int attempt = 0;; ++attempt) {
        slots_.acquire();
        {
            std::lock_guard lock(mu_);
            ++stats_.attempts;
            stats_.peak_in_flight = std::max(stats_.peak_in_flight, ++in_flight_);
        }
        auto release = [&] {
            {
                std::lock_guard lock(mu_);
                --in_flight_;
            }
            slots_.release();
        };
        try {
            std::string reply = backend_->send(req);
            release();
            return reply;
        } catch (const GatewayError& e) {
            release();
            if (!e.transient() || attempt >= cfg_.max_retries) {
                std::lock_guard lock(mu_);
                ++stats_.failures;
                if (attempt > 0) {
                    throw GatewayError(e.kind(), std::string(e.what()) + " (after " + std::to_string(attempt + 1) + " attempts)",
                                       e.status());
                }
                throw;
            }
        } catch (...) {
            release();
            throw;
        }
        {
            std::lock_guard lock(mu_);
            ++stats_.retries;
        }
        std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
        backoff = std::min(backoff * 2.0, cfg_.backoff_max_seconds);
    }
}

std::unique_ptr<Gateway> make_gateway(const GatewayConfig& cfg, MockBackend::Responder fallback) {
    cfg.check();
    std::unique_ptr<Backend> backend;
    if (cfg.backend == "http") {
        backend = make_http_backend(cfg);
    } else if (!cfg.mock_fixture.empty()) {
        backend = MockBackend::from_file(cfg.mock_fixture, std::move(fallback));
    } else {
        backend = std::make_unique<MockBackend>(std::map<std::string, std::string>{}, std::move(fallback));
    }
    return std::make_unique<Gateway>(cfg, std::move(backend));
}

std::string complete(Gateway& gw, const CompletionRequest& req) { return gw.complete(req); }

// ---------------------------------------------------------------------------
// Line parsing

CountMismatch::CountMismatch(std::size_t got_, std::size_t expected_)
    : Error("CountMismatch{got=" + std::to_string(got_) + ", expected=" + std::to_string(expected_) + "}"),
      got(got_),
      expected(expected_) {}

namespace {

// Length of a whitespace sequence at the front of `s` (ASCII, NBSP, ideographic space).
std::size_t leading_space(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        const unsigned char c = static_cast<unsigned char>(s[i]);
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f') {
            ++i;
        } else if (s.substr(i, 2) == "\xC2\xA0") {
            i += 2;
        } else if (s.substr(i, 3) == "\xE3\x80\x80") {
            i += 3;
        } else {
            break;
        }
    }
    return i;
}

std::string_view trim_space(std::string_view s) {
    s.remove_prefix(leading_space(s));
    while (!s.empty()) {
        const unsigned char c = static_cast<unsigned char>(s.back());
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f') {
            s.remove_suffix(1);
        } else if (s.ends_with("\xC2\xA0")) {
            s.remove_suffix(2);
        } else if (s.ends_with("\xE3\x80\x80")) {
            s.remove_suffix(3);
        } else {
            break;
        }
    }
    return s;
}

// Length of a list marker plus its trailing whitespace, or 0.
std::size_t marker_length(std::string_view s) {
    std::size_t n = 0;
    if (s.starts_with("-") || s.starts_with("*")) {
        n = 1;
    } else if (s.starts_with("\xE2\x80\xA2")) {  // bullet
        n = 3;
    } else {
        while (n < s.size() && std::isdigit(static_cast<unsigned char>(s[n]))) ++n;
        if (n == 0 || n > 9) return 0;
        if (s.substr(n).starts_with("\xE3\x80\x81")) return n + 3 + leading_space(s.substr(n + 3));  // 、
        if (n >= s.size() || (s[n] != '.' && s[n] != ')')) return 0;
        ++n;
    }
    const std::size_t sp = leading_space(s.substr(n));
    if (sp == 0 && n < s.size()) return 0;
    return n + sp;
}

std::string_view strip_quotes(std::string_view s) {
    static const std::pair<std::string_view, std::string_view> pairs[] = {
        {"\"", "\""}, {"'", "'"}, {"\xE2\x80\x9C", "\xE2\x80\x9D"}, {"\xE2\x80\x98", "\xE2\x80\x99"},
        {"\xE3\x80\x8C", "\xE3\x80\x8D"}};
    for (const auto& [open, close] : pairs) {
        if (s.size() >= open.size() + close.size() && s.starts_with(open) && s.ends_with(close)) {
            return s.substr(open.size(), s.size() - open.size() - close.size());
        }
    }
    return s;
}

}  // namespace

std::string clean_line(std::string_view line) {
    std::string_view s = trim_space(line);
    for (;;) {
        std::string_view before = s;
        if (std::size_t m = marker_length(s)) s = trim_space(s.substr(m));
        s = trim_space(strip_quotes(s));
        if (s == before) break;
    }
    return std::string(s);
}

std::vector<std::string> parse_lines(std::string_view raw, std::size_t expected, std::size_t tolerance) {
    if (expected < 1) throw Error("parse_lines: expected count must be >= 1");
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= raw.size()) {
        std::size_t end = raw.find('\n', start);
        if (end == std::string_view::npos) end = raw.size();
        std::string line = clean_line(raw.substr(start, end - start));
        if (!line.empty()) out.push_back(std::move(line));
        start = end + 1;
    }
    const std::size_t diff = out.size() > expected ? out.size() - expected : expected - out.size();
    if (diff > tolerance) throw CountMismatch(out.size(), expected);
    return out;
}

}  // namespace fcforge
