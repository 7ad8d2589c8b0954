// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "localv/errors.hpp"
#include "localv/text.hpp"

namespace localv {

using json = nlohmann::json;

struct ChatMessage {
    std::string role;
    std::string content;
};

struct TokenUsage {
    long prompt_tokens = 0;
    long completion_tokens = 0;

    long total() const { return prompt_tokens + completion_tokens; }
    TokenUsage& operator+=(const TokenUsage& o) {
        prompt_tokens += o.prompt_tokens;
        completion_tokens += o.completion_tokens;
        return *this;
    }
};

struct CompletionParams {
    double temperature = 0.0;
    std::string model; // empty = provider default
};

struct CompletionResult {
    std::string text;
    TokenUsage usage;
};

struct Capabilities {
    bool chat_completion = false;
    bool token_logprobs = false;
};

namespace detail {

inline std::string canonical_chat_request(const std::vector<ChatMessage>& messages) {
    std::string buf = "chat";
    for (const auto& m : messages) {
        buf += '\x1e';
        buf += m.role;
        buf += '\x1f';
        buf += m.content;
    }
    return buf;
}

inline std::string canonical_logprob_request(const std::string& prompt,
                                             const std::string& continuation) {
    std::string buf = "logprobs";
    buf += '\x1e';
    buf += prompt;
    buf += '\x1f';
    buf += continuation;
    return buf;
}

} // namespace detail

/// Capability contract shared by live and replay backends. Token counters
/// accumulate across calls and are safe under concurrent use.
class CompletionProvider {
public:
    virtual ~CompletionProvider() = default;

    virtual Capabilities capabilities() const = 0;
    virtual std::string model_id() const = 0;

    CompletionResult complete(const std::vector<ChatMessage>& messages,
                              const CompletionParams& params = {}) {
        if (!capabilities().chat_completion)
            throw Error(ErrorCode::CapabilityMissing, "provider lacks chat_completion");
        CompletionResult r = do_complete(messages, params);
        add_usage(r.usage);
        return r;
    }

    std::vector<double> logprobs(const std::string& prompt, const std::string& continuation) {
        if (!capabilities().token_logprobs)
            throw Error(ErrorCode::CapabilityMissing, "provider lacks token_logprobs");
        return do_logprobs(prompt, continuation);
    }

    TokenUsage counters() const {
        return {prompt_tokens_.load(std::memory_order_relaxed),
                completion_tokens_.load(std::memory_order_relaxed)};
    }

protected:
    virtual CompletionResult do_complete(const std::vector<ChatMessage>&,
                                         const CompletionParams&) = 0;
    virtual std::vector<double> do_logprobs(const std::string&, const std::string&) = 0;

    void add_usage(const TokenUsage& u) {
        prompt_tokens_.fetch_add(u.prompt_tokens, std::memory_order_relaxed);
        completion_tokens_.fetch_add(u.completion_tokens, std::memory_order_relaxed);
    }

private:
    std::atomic<long> prompt_tokens_{0};
    std::atomic<long> completion_tokens_{0};
};

// ---------------------------------------------------------------------------
// Transcripts

struct Exchange {
    std::string kind; // "chat" | "logprobs"
    std::string request_hash;
    json request;              // messages array or {prompt, continuation}
    std::string response_text; // chat only
    TokenUsage usage;
    std::optional<std::vector<double>> logprobs;
};

struct Transcript {
    std::string scenario;
    std::vector<Exchange> exchanges;

    json to_json() const {
        json exs = json::array();
        for (const auto& e : exchanges) {
            json j{{"kind", e.kind},
                   {"request_hash", e.request_hash},
                   {"request", e.request},
                   {"response", e.response_text},
                   {"usage",
                    {{"prompt_tokens", e.usage.prompt_tokens},
                     {"completion_tokens", e.usage.completion_tokens}}}};
            if (e.logprobs) j["logprobs"] = *e.logprobs;
            exs.push_back(std::move(j));
        }
        return json{{"scenario", scenario}, {"exchanges", std::move(exs)}};
    }

    static Transcript from_json(const json& j) {
        Transcript t;
        t.scenario = j.value("scenario", "");
        for (const auto& je : j.at("exchanges")) {
            Exchange e;
            e.kind = je.value("kind", "chat");
            e.request_hash = je.value("request_hash", "");
            e.request = je.value("request", json::object());
            e.response_text = je.value("response", "");
            if (je.contains("usage")) {
                e.usage.prompt_tokens = je["usage"].value("prompt_tokens", 0L);
                e.usage.completion_tokens = je["usage"].value("completion_tokens", 0L);
            }
            if (je.contains("logprobs"))
                e.logprobs = je["logprobs"].get<std::vector<double>>();
            t.exchanges.push_back(std::move(e));
        }
        return t;
    }

    void save(const std::string& path) const { write_file(path, to_json().dump(2) + "\n"); }

    static Transcript load(const std::string& path) {
        return from_json(json::parse(read_file(path)));
    }
};

/// Serves committed transcripts deterministically and offline. Requests are
/// matched by content hash against the first unconsumed exchange with that
/// hash, which keeps duplicate requests ordered while tolerating concurrent
/// callers arriving out of order.
class ReplayProvider : public CompletionProvider {
public:
    explicit ReplayProvider(Transcript transcript, std::string model = "replay")
        : transcript_(std::move(transcript)), model_(std::move(model)),
          consumed_(transcript_.exchanges.size(), false) {}

    static ReplayProvider from_file(const std::string& path) {
        return ReplayProvider(Transcript::load(path));
    }

    Capabilities capabilities() const override { return {true, true}; }
    std::string model_id() const override { return model_; }

    size_t remaining() const {
        std::lock_guard<std::mutex> lock(mu_);
        size_t n = 0;
        for (bool c : consumed_)
            if (!c) ++n;
        return n;
    }

protected:
    CompletionResult do_complete(const std::vector<ChatMessage>& messages,
                                 const CompletionParams&) override {
        const std::string hash = fnv1a_hex(detail::canonical_chat_request(messages));
        const Exchange& e = take(hash, "chat");
        CompletionResult r;
        r.text = e.response_text;
        r.usage = e.usage;
        if (r.usage.prompt_tokens == 0) {
            for (const auto& m : messages) r.usage.prompt_tokens += approx_token_count(m.content);
        }
        if (r.usage.completion_tokens == 0)
            r.usage.completion_tokens = approx_token_count(r.text);
        return r;
    }

    std::vector<double> do_logprobs(const std::string& prompt,
                                    const std::string& continuation) override {
        if (continuation.empty()) return {};
        const std::string hash =
            fnv1a_hex(detail::canonical_logprob_request(prompt, continuation));
        const Exchange& e = take(hash, "logprobs");
        return e.logprobs.value_or(std::vector<double>{});
    }

private:
    const Exchange& take(const std::string& hash, const std::string& kind) {
        std::lock_guard<std::mutex> lock(mu_);
        std::string next_hash = "<exhausted>";
        bool noted = false;
        for (size_t i = 0; i < transcript_.exchanges.size(); ++i) {
            if (consumed_[i]) continue;
            const Exchange& e = transcript_.exchanges[i];
            if (!noted) {
                next_hash = e.request_hash;
                noted = true;
            }
            if (e.kind == kind && e.request_hash == hash) {
                consumed_[i] = true;
                return e;
            }
        }
        throw Error(ErrorCode::ReplayMismatch,
                    "no scripted exchange for request " + hash + " (next unconsumed: " +
                        next_hash + ")");
    }

    Transcript transcript_;
    std::string model_;
    std::vector<bool> consumed_;
    mutable std::mutex mu_;
};

/// Wraps a live provider and records every exchange for later replay.
class RecordingProvider : public CompletionProvider {
public:
    RecordingProvider(CompletionProvider& inner, std::string scenario)
        : inner_(inner) {
        transcript_.scenario = std::move(scenario);
    }

    Capabilities capabilities() const override { return inner_.capabilities(); }
    std::string model_id() const override { return inner_.model_id(); }

    const Transcript& transcript() const { return transcript_; }
    void save(const std::string& path) const {
        std::lock_guard<std::mutex> lock(mu_);
        transcript_.save(path);
    }

protected:
    CompletionResult do_complete(const std::vector<ChatMessage>& messages,
                                 const CompletionParams& params) override {
        CompletionResult r = inner_.complete(messages, params);
        Exchange e;
        e.kind = "chat";
        e.request_hash = fnv1a_hex(detail::canonical_chat_request(messages));
        e.request = json::array();
        for (const auto& m : messages)
            e.request.push_back({{"role", m.role}, {"content", m.content}});
        e.response_text = r.text;
        e.usage = r.usage;
        {
            std::lock_guard<std::mutex> lock(mu_);
            transcript_.exchanges.push_back(std::move(e));
        }
        return r;
    }

    std::vector<double> do_logprobs(const std::string& prompt,
                                    const std::string& continuation) override {
        auto lp = inner_.logprobs(prompt, continuation);
        Exchange e;
        e.kind = "logprobs";
        e.request_hash = fnv1a_hex(detail::canonical_logprob_request(prompt, continuation));
        e.request = {{"prompt", prompt}, {"continuation", continuation}};
        e.logprobs = lp;
        {
            std::lock_guard<std::mutex> lock(mu_);
            transcript_.exchanges.push_back(std::move(e));
        }
        return lp;
    }

private:
    CompletionProvider& inner_;
    Transcript transcript_;
    mutable std::mutex mu_;
};

// ---------------------------------------------------------------------------
// HTTP backend (chat-completions wire shape)

struct HttpProviderConfig {
    std::string base_url;   // e.g. http://127.0.0.1:8080
    std::string api_key;
    std::string model = "default";
    std::string chat_path = "/v1/chat/completions";
    std::string completions_path = "/v1/completions";
    int timeout_s = 60;

    /// Environment overrides: LOCALV_ENDPOINT, LOCALV_API_KEY, LOCALV_MODEL,
    /// LOCALV_TIMEOUT_S.
    static HttpProviderConfig from_env() {
        HttpProviderConfig cfg;
        if (const char* v = std::getenv("LOCALV_ENDPOINT")) cfg.base_url = v;
        if (const char* v = std::getenv("LOCALV_API_KEY")) cfg.api_key = v;
        if (const char* v = std::getenv("LOCALV_MODEL")) cfg.model = v;
        if (const char* v = std::getenv("LOCALV_TIMEOUT_S")) cfg.timeout_s = std::atoi(v);
        return cfg;
    }
};

class HttpProvider : public CompletionProvider {
public:
    explicit HttpProvider(HttpProviderConfig cfg) : cfg_(std::move(cfg)) {
        if (cfg_.base_url.empty())
            throw Error(ErrorCode::ProviderUnavailable, "no endpoint configured");
    }

    Capabilities capabilities() const override { return {true, true}; }
    std::string model_id() const override { return cfg_.model; }

protected:
    CompletionResult do_complete(const std::vector<ChatMessage>& messages,
                                 const CompletionParams& params) override;
    std::vector<double> do_logprobs(const std::string& prompt,
                                    const std::string& continuation) override;

private:
    json post_json(const std::string& path, const json& body);

    HttpProviderConfig cfg_;
};

} // namespace localv

// The httplib implementation lives in a separate header so translation units
// that only need replay providers avoid the heavy include.
#if !defined(LOCALV_NO_HTTP)
#include "localv/providers_http.hpp"
#endif
