#pragma once

// HTTP client for an external embedding service. POSTs {"text": ...} and
// mean-pools the returned per-token vectors into one fixed-width embedding.

#include <memory>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "aura/context.hpp"
#include "aura/error.hpp"

namespace aura::context {

struct ServiceEmbedderConfig {
    std::string url = "http://127.0.0.1:8753/embed";
    std::size_t dim = 256;
    int timeout_ms = 2000;
    int max_retries = 2;  // attempts = 1 + max_retries
};

class ServiceEmbedder final : public TextEmbedder {
public:
    explicit ServiceEmbedder(ServiceEmbedderConfig cfg) : cfg_(std::move(cfg)) {
        parse_url(cfg_.url, scheme_host_port_, path_);
    }

    std::size_t dim() const override { return cfg_.dim; }

    TextEmbedding embed(const std::string& text) const override {
        if (text.empty()) throw ValueError("embed_text: empty text");
        nlohmann::json req;
        req["text"] = text;
        const std::string body = req.dump();

        std::string last_error;
        for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
            httplib::Client cli(scheme_host_port_);
            cli.set_connection_timeout(0, cfg_.timeout_ms * 1000);
            cli.set_read_timeout(0, cfg_.timeout_ms * 1000);
            cli.set_write_timeout(0, cfg_.timeout_ms * 1000);
            auto res = cli.Post(path_, body, "application/json");
            if (!res) {
                last_error = "transport failure: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status < 200 || res->status >= 300) {
                last_error = "service returned status " + std::to_string(res->status);
                continue;
            }
            return parse_response(res->body);
        }
        throw TransportError("embedding service unreachable after " +
                                 std::to_string(cfg_.max_retries + 1) + " attempts (" +
                                 last_error + ")",
                             /*retries_exhausted=*/true);
    }

private:
    TextEmbedding parse_response(const std::string& body) const {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("embedding service response is not JSON: ") + e.what());
        }
        if (!j.contains("vectors") || !j["vectors"].is_array() || j["vectors"].empty())
            throw ParseError("embedding service response missing non-empty 'vectors' array");
        const auto& vecs = j["vectors"];
        TextEmbedding e;
        e.token_count = vecs.size();
        e.vector.assign(cfg_.dim, 0.0);
        for (const auto& v : vecs) {
            if (!v.is_array() || v.size() != cfg_.dim)
                throw ParseError("embedding service vector width " + std::to_string(v.size()) +
                                 " does not match configured dim " + std::to_string(cfg_.dim));
            for (std::size_t i = 0; i < cfg_.dim; ++i) e.vector[i] += v[i].get<double>();
        }
        const double inv = 1.0 / static_cast<double>(e.token_count);
        for (double& x : e.vector) x *= inv;
        return e;
    }

    static void parse_url(const std::string& url, std::string& scheme_host_port,
                          std::string& path) {
        const auto scheme_end = url.find("://");
        if (scheme_end == std::string::npos)
            throw ConfigError("embedder.url must start with http:// or https://, got " + url);
        const auto path_start = url.find('/', scheme_end + 3);
        if (path_start == std::string::npos) {
            scheme_host_port = url;
            path = "/";
        } else {
            scheme_host_port = url.substr(0, path_start);
            path = url.substr(path_start);
        }
    }

    ServiceEmbedderConfig cfg_;
    std::string scheme_host_port_;
    std::string path_;
};

}  // namespace aura::context
