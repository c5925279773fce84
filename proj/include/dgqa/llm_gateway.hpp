#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "dgqa/errors.hpp"
#include "dgqa/hash.hpp"
#include "dgqa/io.hpp"
#include "dgqa/random.hpp"
#include "dgqa/text.hpp"

namespace dgqa {

struct Message {
    std::string role;  // "system" | "user" | "assistant"
    std::string content;
};

struct Decoding {
    double temperature = 0.0;
    int max_tokens = 1024;
    bool greedy = true;
};

struct GenerationRequest {
    std::string model_id;
    std::vector<Message> prompt;
    Decoding decoding;
};

struct ScoreRequest {
    std::string model_id;
    std::string context;
    std::string continuation;  // must be non-empty
};

struct TokenLogprob {
    std::string token;
    double logprob = 0.0;  // <= 0
};

struct EmbedRequest {
    std::string model_id;
    std::string text;
};

// ---------------------------------------------------------------------------
// Canonicalization: the cache key is a pure function of the request.
// Field order is fixed by sorted JSON keys; prompt content is passed
// through byte-for-byte. The greedy flag forces temperature to 0 so the
// two spellings of deterministic decoding share one key.
// ---------------------------------------------------------------------------

inline std::string canonical_request(const GenerationRequest& r) {
    Json msgs = Json::array();
    for (const auto& m : r.prompt) msgs.push_back(Json{{"role", m.role}, {"content", m.content}});
    const double temp = r.decoding.greedy ? 0.0 : r.decoding.temperature;
    Json j{{"kind", "complete"},
           {"model_id", r.model_id},
           {"messages", std::move(msgs)},
           {"decoding",
            Json{{"temperature", temp},
                 {"max_tokens", r.decoding.max_tokens},
                 {"greedy", r.decoding.greedy}}}};
    return j.dump();
}

inline std::string canonical_request(const ScoreRequest& r) {
    Json j{{"kind", "score"},
           {"model_id", r.model_id},
           {"context", r.context},
           {"continuation", r.continuation}};
    return j.dump();
}

inline std::string canonical_request(const EmbedRequest& r) {
    Json j{{"kind", "embed"}, {"model_id", r.model_id}, {"text", r.text}};
    return j.dump();
}

template <typename Request>
std::string cache_key(const Request& r) {
    return sha256_hex(canonical_request(r));
}

// ---------------------------------------------------------------------------
// Provider interface
// ---------------------------------------------------------------------------

struct ProviderCapabilities {
    bool generation = true;
    bool logprobs = true;
    bool embeddings = true;
};

class Provider {
public:
    virtual ~Provider() = default;

    virtual std::string name() const = 0;
    virtual ProviderCapabilities capabilities() const = 0;

    /// May throw TransportError (retryable) or ProviderError.
    virtual std::string complete(const GenerationRequest& request) = 0;
    virtual std::vector<TokenLogprob> token_logprobs(const ScoreRequest& request) = 0;
    virtual std::vector<std::vector<double>> embed_tokens(const EmbedRequest& request) = 0;

    /// Tokenizer identity recorded alongside scoring fixtures, so
    /// perplexities are labeled rather than assumed comparable.
    virtual std::string tokenizer_id() const { return name() + "/default"; }
};

/// Deterministic offline provider. Behaviors are injectable for tests;
/// the defaults synthesize plausible, reproducible output from the
/// request content alone so full pipelines can run with no network.
class MockProvider : public Provider {
public:
    std::function<std::string(const GenerationRequest&)> on_complete;
    std::function<std::vector<TokenLogprob>(const ScoreRequest&)> on_score;
    std::function<std::vector<std::vector<double>>(const EmbedRequest&)> on_embed;

    std::string name() const override { return "mock"; }
    ProviderCapabilities capabilities() const override { return {}; }
    std::string tokenizer_id() const override { return "mock/whitespace"; }

    std::string complete(const GenerationRequest& request) override {
        calls_++;
        if (on_complete) return on_complete(request);
        return default_complete(request);
    }

    std::vector<TokenLogprob> token_logprobs(const ScoreRequest& request) override {
        calls_++;
        if (request.continuation.empty())
            throw ProviderError("score request with empty continuation");
        if (on_score) return on_score(request);
        return default_score(request);
    }

    std::vector<std::vector<double>> embed_tokens(const EmbedRequest& request) override {
        calls_++;
        if (on_embed) return on_embed(request);
        return default_embed(request);
    }

    int calls() const { return calls_; }

    /// Whitespace tokens scored with a stable pseudo-random logprob in
    /// [-3, -0.5] derived from (model, token).
    static std::vector<TokenLogprob> default_score(const ScoreRequest& request) {
        std::vector<TokenLogprob> out;
        for (const auto& tok : whitespace_tokenizer()(request.continuation)) {
            Rng rng(hash64(request.model_id + "\x1f" + tok));
            out.push_back({tok, -0.5 - 2.5 * rng.unit()});
        }
        if (out.empty()) out.push_back({request.continuation, -1.0});
        return out;
    }

    /// Unit vectors (dim 16) derived from (model, token).
    static std::vector<std::vector<double>> default_embed(const EmbedRequest& request) {
        std::vector<std::vector<double>> vecs;
        for (const auto& tok : whitespace_tokenizer()(request.text)) {
            Rng rng(hash64(request.model_id + "\x1f" + tok));
            std::vector<double> v(16);
            double norm = 0;
            for (auto& x : v) {
                x = 2.0 * rng.unit() - 1.0;
                norm += x * x;
            }
            norm = std::sqrt(norm);
            for (auto& x : v) x /= norm > 0 ? norm : 1.0;
            vecs.push_back(std::move(v));
        }
        return vecs;
    }

    static std::string default_complete(const GenerationRequest& request);

private:
    std::atomic<int> calls_{0};
};

// ---------------------------------------------------------------------------
// File cache: one file per entry, filename = hex key. Insertion is
// at-most-once per key; a retry that races an earlier success keeps the
// first response.
// ---------------------------------------------------------------------------

class RequestCache {
public:
    RequestCache() = default;
    explicit RequestCache(std::filesystem::path dir) : dir_(std::move(dir)) {
        if (!dir_.empty()) std::filesystem::create_directories(dir_);
    }

    bool enabled() const { return !dir_.empty(); }

    std::optional<Json> lookup(const std::string& key) const {
        if (!enabled()) return std::nullopt;
        std::lock_guard<std::mutex> lock(mutex_);
        const auto path = dir_ / (key + ".json");
        if (!std::filesystem::exists(path)) return std::nullopt;
        return load_json(path).at("response");
    }

    void insert(const std::string& key, const std::string& canonical, const Json& response) {
        if (!enabled()) return;
        std::lock_guard<std::mutex> lock(mutex_);
        const auto path = dir_ / (key + ".json");
        if (std::filesystem::exists(path)) return;  // at-most-once
        Json entry{{"key", key},
                   {"request", canonical},
                   {"response", response},
                   {"timestamp", now_iso8601()}};
        write_file(path, entry.dump(2) + "\n");
    }

    static std::string now_iso8601() {
        const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        char buf[32];
        std::tm tm {};
        gmtime_r(&t, &tm);
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
        return buf;
    }

private:
    std::filesystem::path dir_;
    mutable std::mutex mutex_;
};

// ---------------------------------------------------------------------------
// Gateway
// ---------------------------------------------------------------------------

enum class GatewayMode {
    live,    // no cache
    record,  // call through, persist responses
    replay,  // cache only; any miss is an error, zero network traffic
};

struct RetryPolicy {
    int attempts = 3;
    std::chrono::milliseconds initial_backoff{250};
};

struct GatewayConfig {
    GatewayMode mode = GatewayMode::record;
    std::filesystem::path cache_dir;
    RetryPolicy retry;
    std::size_t concurrency = 4;  // bound on in-flight provider calls
};

class Gateway {
public:
    Gateway(std::shared_ptr<Provider> provider, GatewayConfig config)
        : provider_(std::move(provider)),
          config_(config),
          cache_(config.mode == GatewayMode::live ? RequestCache{}
                                                  : RequestCache{config.cache_dir}) {
        if (config_.mode != GatewayMode::live && config_.cache_dir.empty())
            throw ValidationError("gateway cache_dir required in record/replay mode");
    }

    const GatewayConfig& config() const { return config_; }
    Provider& provider() { return *provider_; }
    std::string tokenizer_id() const { return provider_->tokenizer_id(); }

    /// Number of calls that actually reached the provider. Replay runs
    /// must end with this at zero.
    int outbound_calls() const { return outbound_.load(); }

    std::string complete(const GenerationRequest& request) {
        Json out = transact(request, [&](const GenerationRequest& r) {
            std::string text = provider_->complete(r);
            if (trim(text).empty())
                throw ProviderError("provider returned an empty completion", cache_key(r));
            return Json(text);
        });
        return out.get<std::string>();
    }

    std::vector<TokenLogprob> token_logprobs(const ScoreRequest& request) {
        if (request.continuation.empty())
            throw ValidationError("score request requires a non-empty continuation");
        Json out = transact(request, [&](const ScoreRequest& r) {
            auto toks = provider_->token_logprobs(r);
            Json arr = Json::array();
            for (const auto& t : toks) arr.push_back(Json{{"token", t.token}, {"logprob", t.logprob}});
            return arr;
        });
        std::vector<TokenLogprob> toks;
        for (const auto& t : out) toks.push_back({t.at("token").get<std::string>(),
                                                  t.at("logprob").get<double>()});
        return toks;
    }

    std::vector<std::vector<double>> embed_tokens(const EmbedRequest& request) {
        Json out = transact(request, [&](const EmbedRequest& r) {
            auto vecs = provider_->embed_tokens(r);
            std::size_t dim = vecs.empty() ? 0 : vecs.front().size();
            for (const auto& v : vecs)
                if (v.size() != dim)
                    throw ProviderError("embedding dimension mismatch across tokens",
                                        cache_key(r));
            return Json(vecs);
        });
        return out.get<std::vector<std::vector<double>>>();
    }

private:
    struct Slot {  // bounded in-flight provider calls
        explicit Slot(Gateway& g) : g_(g) {
            std::unique_lock<std::mutex> lock(g_.slot_mutex_);
            g_.slot_cv_.wait(lock, [&] { return g_.in_flight_ < g_.config_.concurrency; });
            ++g_.in_flight_;
        }
        ~Slot() {
            {
                std::lock_guard<std::mutex> lock(g_.slot_mutex_);
                --g_.in_flight_;
            }
            g_.slot_cv_.notify_one();
        }
        Gateway& g_;
    };

    template <typename Request, typename Call>
    Json transact(const Request& request, Call&& call) {
        const std::string canonical = canonical_request(request);
        const std::string key = sha256_hex(canonical);

        if (auto hit = cache_.lookup(key)) return *hit;
        if (config_.mode == GatewayMode::replay)
            throw DependencyError("replay cache miss for request key " + key, "record");

        Json response = with_retries(key, [&] {
            Slot slot(*this);
            outbound_++;
            return call(request);
        });
        cache_.insert(key, canonical, response);
        return response;
    }

    template <typename F>
    Json with_retries(const std::string& key, F&& f) {
        auto backoff = config_.retry.initial_backoff;
        for (int attempt = 1;; ++attempt) {
            try {
                return f();
            } catch (const TransportError&) {
                if (attempt >= config_.retry.attempts) throw;
                std::this_thread::sleep_for(backoff);
                backoff *= 2;
            } catch (const CapabilityError&) {
                throw;  // configuration problem; retrying cannot help
            } catch (const ProviderError& e) {
                // Non-retryable; surface with the request key attached.
                throw ProviderError(std::string(e.what()) + " [request " + key + "]", key);
            }
        }
    }

    std::shared_ptr<Provider> provider_;
    GatewayConfig config_;
    RequestCache cache_;
    std::atomic<int> outbound_{0};
    std::mutex slot_mutex_;
    std::condition_variable slot_cv_;
    std::size_t in_flight_ = 0;
};

// ---------------------------------------------------------------------------
// MockProvider default completion: recognizes the toolkit's prompt
// shapes by their terminal marker and synthesizes deterministic,
// plausible output from the prompt content alone.
// ---------------------------------------------------------------------------

namespace detail {

/// Content of the LAST `begin` block, up to the earliest of `ends`
/// (or end of text). Last occurrence wins so few-shot exemplars
/// earlier in the prompt are skipped.
inline std::string last_block(const std::string& text, const std::string& begin,
                              const std::vector<std::string>& ends) {
    const auto pos = text.rfind(begin);
    if (pos == std::string::npos) return "";
    const auto start = pos + begin.size();
    auto stop = text.size();
    for (const auto& e : ends) {
        const auto p = text.find(e, start);
        if (p != std::string::npos && p < stop) stop = p;
    }
    return std::string(trim(text.substr(start, stop - start)));
}

inline std::vector<std::string> content_words(std::string_view text) {
    static const std::vector<std::string> kStop = {
        "the", "and", "for", "you", "your", "can", "how", "what", "does",
        "this", "that", "with", "about", "section", "manual", "user"};
    std::vector<std::string> out;
    for (const auto& tok : whitespace_tokenizer()(normalize_loose(text))) {
        if (tok.size() < 3) continue;
        if (std::find(kStop.begin(), kStop.end(), tok) != kStop.end()) continue;
        if (std::find(out.begin(), out.end(), tok) == out.end()) out.push_back(tok);
    }
    return out;
}

/// Fraction of a's content words that also occur in b.
inline double word_overlap(const std::string& a, const std::string& b) {
    const auto wa = content_words(a);
    if (wa.empty()) return 1.0;
    const auto wb = content_words(b);
    std::size_t hit = 0;
    for (const auto& w : wa)
        if (std::find(wb.begin(), wb.end(), w) != wb.end()) ++hit;
    return static_cast<double>(hit) / static_cast<double>(wa.size());
}

inline std::string first_sentence(const std::string& text) {
    auto flat = std::string(trim(text));
    for (auto& c : flat)
        if (c == '\n' || c == '\t') c = ' ';
    const auto dot = flat.find(". ");
    if (dot != std::string::npos) return flat.substr(0, dot + 1);
    return flat;
}

inline bool ends_with_marker(const std::string& text, const std::string& marker) {
    const auto t = trim(text);
    return t.size() >= marker.size() && t.substr(t.size() - marker.size()) == marker;
}

}  // namespace detail

inline std::string MockProvider::default_complete(const GenerationRequest& request) {
    std::string text;
    for (const auto& m : request.prompt) {
        if (!text.empty()) text += "\n";
        text += m.content;
    }
    using detail::last_block;

    // Answer evaluation: terminal "EVALUATION:" with no verdict yet.
    if (detail::ends_with_marker(text, "EVALUATION:"))
        return "Good. There are no errors.";

    // Minimal rewrite: echo the flagged answer (an identity rewrite is
    // the most conservative deterministic default).
    if (detail::ends_with_marker(text, "REWRITE:")) {
        auto ans = last_block(text, "\nANSWER:", {"\nEVALUATION:", "\nREWRITE:"});
        return ans.empty() ? "(no answer)" : ans;
    }

    // Atomic fact verification against a document.
    if (detail::ends_with_marker(text, "***JUDGMENT:")) {
        const auto fact = last_block(text, "***FACT:", {"\n***"});
        const auto doc = last_block(text, "***DOCUMENT:", {"\n***"});
        return detail::word_overlap(fact, doc) >= 0.5 ? "True" : "False";
    }

    // Atomic fact extraction from a model response.
    if (detail::ends_with_marker(text, "***FACTS:")) {
        const auto response = last_block(text, "***RESPONSE:", {"\n***"});
        std::vector<std::string> clauses;
        for (auto part : split(response, '.')) {
            const auto c = trim(part);
            if (!c.empty()) clauses.emplace_back(c);
        }
        if (clauses.empty()) clauses.emplace_back(trim(response));
        std::string out;
        for (std::size_t i = 0; i < clauses.size(); ++i)
            out += std::to_string(i + 1) + ". " + clauses[i] + ".\n";
        return out;
    }

    // Synthetic pair generation: honor the requested pair count.
    if (detail::ends_with_marker(text, "***PAIRS:")) {
        const auto doc = last_block(text, "***DOCUMENT:", {"\n***"});
        std::size_t n = 1;
        if (const auto g = text.find("Generate "); g != std::string::npos) {
            std::size_t i = g + 9, val = 0;
            while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])))
                val = val * 10 + (text[i++] - '0');
            if (val > 0) n = val;
        }
        const auto words = detail::content_words(doc);
        const auto lede = detail::first_sentence(doc);
        std::string out;
        for (std::size_t i = 0; i < n; ++i) {
            const std::string& w = words.empty() ? std::string("it")
                                                 : words[i % words.size()];
            out += std::to_string(i + 1) + ". ***QUESTION:\n\nHow do I use the " + w +
                   " described here?\n\n***ANSWER:\n\nThe " + w +
                   " works as described: " + lede + "\n\n";
        }
        return out;
    }

    // Passage assignment: pick the manual path whose text best covers
    // the question's words.
    if (detail::ends_with_marker(text, "***PATH:")) {
        const auto question = last_block(text, "***QUESTION:", {"\n***"});
        const auto manual = last_block(text, "***MANUAL:", {"\n***"});
        try {
            const Json entries = Json::parse(manual);
            std::string best;
            double best_score = -1.0;
            for (const auto& e : entries) {
                const double s = detail::word_overlap(
                    question, e.at("text").get<std::string>() + " " +
                                  e.at("path").get<std::string>());
                if (s > best_score) {
                    best_score = s;
                    best = e.at("path").get<std::string>();
                }
            }
            if (!best.empty()) return best;
        } catch (const Json::exception&) {
            // fall through to the generic fallback below
        }
    }

    // Document-grounded answering: answer from the passage when the
    // question's words are covered, refuse when they are not.
    if (detail::ends_with_marker(text, "***ANSWER:")) {
        const auto question = last_block(text, "***QUESTION:", {"\n***"});
        const auto doc = last_block(text, "***DOCUMENT:", {"\n***"});
        if (detail::word_overlap(question, doc) < 0.34) {
            const auto words = detail::content_words(question);
            std::string topic;
            for (std::size_t i = 0; i < words.size() && i < 4; ++i)
                topic += (i ? " " : "") + words[i];
            if (topic.empty()) topic = "that";
            return "I'm sorry, I can't find any information about " + topic +
                   " in the provided section of the user manual.";
        }
        return detail::first_sentence(doc);
    }

    return "I'm sorry, I can't find any information about that in the provided "
           "section of the user manual.";
}

}  // namespace dgqa
