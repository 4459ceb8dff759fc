#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <chrono>
#include <cstdlib>

#include "fcforge/gateway.hpp"

namespace fcforge {

namespace {

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string path;    // prefix, no trailing slash
};

Endpoint split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw GatewayError(GatewayError::Kind::Config, "base_url lacks a scheme: " + url);
    const std::string scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        throw GatewayError(GatewayError::Kind::Config, "unsupported scheme in base_url: " + scheme);
    }
    const auto path_start = url.find('/', scheme_end + 3);
    Endpoint e;
    e.origin = url.substr(0, path_start);
    e.path = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!e.path.empty() && e.path.back() == '/') e.path.pop_back();
    return e;
}

class HttpBackend : public Backend {
public:
    explicit HttpBackend(const GatewayConfig& cfg) : cfg_(cfg), endpoint_(split_url(cfg.base_url)) {
        if (const char* key = std::getenv(cfg.api_key_env.c_str()); key && *key) api_key_ = key;
    }

    std::string send(const CompletionRequest& req) override {
        httplib::Client client(endpoint_.origin);
        const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
            std::chrono::duration<double>(cfg_.timeout_seconds));
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);

        json body{{"model", req.model},
                  {"messages", json::array({json{{"role", "user"}, {"content", req.prompt}}})},
                  {"temperature", req.temperature},
                  {"max_tokens", req.max_tokens}};
        if (req.seed) body["seed"] = *req.seed;

        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

        const auto started = std::chrono::steady_clock::now();
        auto res = client.Post(endpoint_.path + "/chat/completions", headers, body.dump(), "application/json");
        if (!res) {
            const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
            const auto err = res.error();
            if (err == httplib::Error::ConnectionTimeout ||
                (err == httplib::Error::Read && elapsed >= cfg_.timeout_seconds * 0.9)) {
                throw GatewayError(GatewayError::Kind::Timeout,
                                   "no response within " + std::to_string(cfg_.timeout_seconds) + " s");
            }
            throw GatewayError(GatewayError::Kind::Transport, httplib::to_string(err));
        }
        if (res->status < 200 || res->status >= 300) {
            throw GatewayError(GatewayError::Kind::HttpStatus,
                               "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200), res->status);
        }
        try {
            const json reply = json::parse(res->body);
            return reply.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception& e) {
            throw GatewayError(GatewayError::Kind::MalformedResponse, e.what());
        }
    }

private:
    GatewayConfig cfg_;
    Endpoint endpoint_;
    std::string api_key_;
};

}  // namespace

std::unique_ptr<Backend> make_http_backend(const GatewayConfig& cfg) { return std::make_unique<HttpBackend>(cfg); }

}  // namespace fcforge
