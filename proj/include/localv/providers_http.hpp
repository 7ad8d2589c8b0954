// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <httplib.h>

#include "localv/providers.hpp"

namespace localv {

inline json HttpProvider::post_json(const std::string& path, const json& body) {
    httplib::Client client(cfg_.base_url);
    client.set_connection_timeout(cfg_.timeout_s, 0);
    client.set_read_timeout(cfg_.timeout_s, 0);
    httplib::Headers headers;
    if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res)
        throw Error(ErrorCode::ProviderUnavailable,
                    "request to " + cfg_.base_url + path + " failed: " +
                        httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300)
        throw Error(ErrorCode::ProviderUnavailable,
                    "endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body);
    try {
        return json::parse(res->body);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ProviderUnavailable, std::string("bad response JSON: ") + e.what());
    }
}

inline CompletionResult HttpProvider::do_complete(const std::vector<ChatMessage>& messages,
                                                  const CompletionParams& params) {
    json msgs = json::array();
    for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
    json body{{"model", params.model.empty() ? cfg_.model : params.model},
              {"messages", std::move(msgs)},
              {"temperature", params.temperature}};
    json resp = post_json(cfg_.chat_path, body);
    CompletionResult r;
    try {
        r.text = resp.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ProviderUnavailable,
                    std::string("response missing choices[0].message.content: ") + e.what());
    }
    if (resp.contains("usage")) {
        r.usage.prompt_tokens = resp["usage"].value("prompt_tokens", 0L);
        r.usage.completion_tokens = resp["usage"].value("completion_tokens", 0L);
    }
    return r;
}

inline std::vector<double> HttpProvider::do_logprobs(const std::string& prompt,
                                                     const std::string& continuation) {
    if (continuation.empty()) return {};
    // Echoed-prompt form of the completions API: token logprobs for the
    // concatenation come back with text offsets; keep the continuation's part.
    json body{{"model", cfg_.model},
              {"prompt", prompt + continuation},
              {"max_tokens", 0},
              {"echo", true},
              {"logprobs", 0}};
    json resp = post_json(cfg_.completions_path, body);
    std::vector<double> out;
    try {
        const json& lp = resp.at("choices").at(0).at("logprobs");
        const auto& offsets = lp.at("text_offset");
        const auto& values = lp.at("token_logprobs");
        for (size_t i = 0; i < values.size() && i < offsets.size(); ++i) {
            if (offsets[i].get<long>() >= static_cast<long>(prompt.size()) && !values[i].is_null())
                out.push_back(values[i].get<double>());
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ProviderUnavailable,
                    std::string("response missing logprobs fields: ") + e.what());
    }
    return out;
}

} // namespace localv
