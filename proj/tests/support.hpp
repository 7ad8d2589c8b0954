// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdio>
#include <deque>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "localv/providers.hpp"
#include "localv/text.hpp"

namespace testsupport {

inline std::string fixture_dir() { return LOCALV_FIXTURE_DIR; }

inline std::string fixture_path(const std::string& rel) { return fixture_dir() + "/" + rel; }

inline std::string read_fixture(const std::string& rel) {
    return localv::read_file(fixture_path(rel));
}

/// Unique scratch directory under the build tree, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = (std::filesystem::temp_directory_path() /
                 ("localv_" + tag + "_" + std::to_string(::getpid()) + "_" +
                  std::to_string(counter.fetch_add(1))))
                    .string();
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::string& path() const { return path_; }
    std::string file(const std::string& rel) const { return path_ + "/" + rel; }

private:
    std::string path_;
};

/// Deterministic stand-in for a live endpoint: replies come from a queue of
/// (matcher, response) rules, first match wins. Used to record fixture
/// transcripts and to drive loops without committed files.
class ScriptedProvider : public localv::CompletionProvider {
public:
    using Matcher = std::function<bool(const std::vector<localv::ChatMessage>&)>;

    localv::Capabilities capabilities() const override { return {true, true}; }
    std::string model_id() const override { return "scripted"; }

    void reply_when(Matcher matcher, std::string response) {
        rules_.push_back({std::move(matcher), std::move(response)});
    }
    void reply_always(std::string response) {
        reply_when([](const auto&) { return true; }, std::move(response));
    }
    void script_logprobs(std::vector<double> lp) { logprob_queue_.push_back(std::move(lp)); }

protected:
    localv::CompletionResult do_complete(const std::vector<localv::ChatMessage>& messages,
                                         const localv::CompletionParams&) override {
        for (const auto& [matcher, response] : rules_) {
            if (!matcher(messages)) continue;
            localv::CompletionResult r;
            r.text = response;
            for (const auto& m : messages)
                r.usage.prompt_tokens += localv::approx_token_count(m.content);
            r.usage.completion_tokens = localv::approx_token_count(response);
            return r;
        }
        throw localv::Error(localv::ErrorCode::ProviderUnavailable, "no scripted rule matched");
    }

    std::vector<double> do_logprobs(const std::string&, const std::string& continuation) override {
        if (continuation.empty()) return {};
        if (logprob_queue_.empty())
            throw localv::Error(localv::ErrorCode::ProviderUnavailable, "no scripted logprobs");
        auto lp = logprob_queue_.front();
        logprob_queue_.pop_front();
        return lp;
    }

private:
    std::vector<std::pair<Matcher, std::string>> rules_;
    std::deque<std::vector<double>> logprob_queue_;
};

inline bool prompt_contains(const std::vector<localv::ChatMessage>& messages,
                            const std::string& needle) {
    for (const auto& m : messages)
        if (m.content.find(needle) != std::string::npos) return true;
    return false;
}

} // namespace testsupport
