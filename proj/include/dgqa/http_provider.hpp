#pragma once

// OpenAI-compatible HTTP provider. Generation goes through the chat
// completions route; scoring uses the legacy completions route with
// echo+logprobs (the only widely deployed way to get token logprobs for
// a supplied continuation); embeddings take pre-tokenized input so the
// similarity code controls token boundaries.
//
// TLS is opt-in: define DGQA_ENABLE_TLS before including this header
// (and link OpenSSL::SSL) to allow https:// endpoints.

#ifdef DGQA_ENABLE_TLS
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif

#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include <httplib.h>

#include "dgqa/errors.hpp"
#include "dgqa/io.hpp"
#include "dgqa/llm_gateway.hpp"
#include "dgqa/text.hpp"

namespace dgqa {

struct HttpProviderConfig {
    std::string name = "openai-compat";
    std::string base_url;      // e.g. "http://127.0.0.1:8000" or ".../v1-prefixed"
    std::string api_key_env;   // env var holding the bearer token; empty = unauthenticated
    bool supports_logprobs = false;
    bool supports_embeddings = false;
    std::string tokenizer = "provider/unknown";
    int timeout_seconds = 120;
};

class HttpProvider : public Provider {
public:
    explicit HttpProvider(HttpProviderConfig config) : config_(std::move(config)) {
        if (config_.base_url.empty())
            throw CapabilityError("http provider requires a base_url");
        split_url(config_.base_url, origin_, prefix_);
        if (!config_.api_key_env.empty()) {
            const char* v = std::getenv(config_.api_key_env.c_str());
            if (v == nullptr || *v == '\0')
                throw CapabilityError("credential environment variable '" +
                                      config_.api_key_env + "' is not set");
            api_key_ = v;
        }
    }

    std::string name() const override { return config_.name; }
    std::string tokenizer_id() const override { return config_.tokenizer; }

    ProviderCapabilities capabilities() const override {
        return {true, config_.supports_logprobs, config_.supports_embeddings};
    }

    std::string complete(const GenerationRequest& request) override {
        Json body{{"model", request.model_id},
                  {"temperature", request.decoding.greedy ? 0.0 : request.decoding.temperature},
                  {"max_tokens", request.decoding.max_tokens}};
        Json msgs = Json::array();
        for (const auto& m : request.prompt)
            msgs.push_back(Json{{"role", m.role}, {"content", m.content}});
        body["messages"] = std::move(msgs);

        const Json reply = post("/v1/chat/completions", body);
        try {
            return reply.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const Json::exception& e) {
            throw ProviderError(std::string("malformed chat completion reply: ") + e.what());
        }
    }

    std::vector<TokenLogprob> token_logprobs(const ScoreRequest& request) override {
        if (!config_.supports_logprobs)
            throw CapabilityError("provider '" + config_.name +
                                  "' is not configured for logprob scoring");
        Json body{{"model", request.model_id},
                  {"prompt", request.context + request.continuation},
                  {"max_tokens", 0},
                  {"echo", true},
                  {"logprobs", 0},
                  {"temperature", 0.0}};
        const Json reply = post("/v1/completions", body);
        try {
            const Json& lp = reply.at("choices").at(0).at("logprobs");
            const auto& tokens = lp.at("tokens");
            const auto& probs = lp.at("token_logprobs");
            const auto& offsets = lp.at("text_offset");
            const auto boundary = static_cast<long long>(request.context.size());
            std::vector<TokenLogprob> out;
            for (std::size_t i = 0; i < tokens.size(); ++i) {
                // Tokens straddling the boundary belong to the context;
                // only tokens starting at/after it are the continuation.
                if (offsets.at(i).get<long long>() < boundary) continue;
                if (probs.at(i).is_null())
                    throw ProviderError("provider omitted a logprob inside the continuation");
                out.push_back({tokens.at(i).get<std::string>(), probs.at(i).get<double>()});
            }
            return out;
        } catch (const Json::exception& e) {
            throw ProviderError(std::string("malformed echo-logprobs reply: ") + e.what());
        }
    }

    std::vector<std::vector<double>> embed_tokens(const EmbedRequest& request) override {
        if (!config_.supports_embeddings)
            throw CapabilityError("provider '" + config_.name +
                                  "' is not configured for embeddings");
        const auto tokens = whitespace_tokenizer()(request.text);
        if (tokens.empty()) return {};
        Json body{{"model", request.model_id}, {"input", tokens}};
        const Json reply = post("/v1/embeddings", body);
        try {
            std::vector<std::vector<double>> out(tokens.size());
            for (const auto& item : reply.at("data"))
                out.at(item.at("index").get<std::size_t>()) =
                    item.at("embedding").get<std::vector<double>>();
            return out;
        } catch (const Json::exception& e) {
            throw ProviderError(std::string("malformed embeddings reply: ") + e.what());
        }
    }

private:
    Json post(const std::string& route, const Json& body) {
        httplib::Client client(origin_);
        client.set_read_timeout(config_.timeout_seconds, 0);
        client.set_connection_timeout(10, 0);
        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

        auto res = client.Post(prefix_ + route, headers, body.dump(), "application/json");
        if (!res)
            throw TransportError("connection to " + origin_ + " failed: " +
                                 httplib::to_string(res.error()));
        if (res->status == 429 || res->status >= 500)
            throw TransportError("provider returned HTTP " + std::to_string(res->status) +
                                 " for " + route);
        if (res->status < 200 || res->status >= 300)
            throw ProviderError("provider rejected " + route + " with HTTP " +
                                std::to_string(res->status) + ": " + res->body);
        return parse_json(res->body, "provider reply for " + route);
    }

    /// "http://host:port/some/prefix" -> origin "http://host:port",
    /// prefix "/some/prefix" (joined ahead of each route).
    static void split_url(const std::string& url, std::string& origin, std::string& prefix) {
        const auto scheme = url.find("://");
        const auto host_start = scheme == std::string::npos ? 0 : scheme + 3;
        const auto slash = url.find('/', host_start);
        if (slash == std::string::npos) {
            origin = url;
            prefix.clear();
        } else {
            origin = url.substr(0, slash);
            prefix = url.substr(slash);
            while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
        }
    }

    HttpProviderConfig config_;
    std::string origin_;
    std::string prefix_;
    std::string api_key_;
};

}  // namespace dgqa
