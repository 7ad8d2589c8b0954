// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "localv/corpus.hpp"
#include "localv/doc_index.hpp"
#include "localv/errors.hpp"
#include "localv/planner.hpp"
#include "localv/providers.hpp"
#include "localv/text.hpp"

namespace localv {

struct Fragment {
    std::string subtask_id;
    std::string code_text;
    std::vector<std::string> placeholder_ids;
    std::string transcript_ref; // hash of the prompt that produced it
};

struct GenerateOptions {
    bool whole_document = false; // context ablation: every paragraph body attached
    bool neighbor_labels = false; // include surrounding placeholder labels only
    int parallelism = 1;
};

/// Code-block extraction: first fenced block wins (```verilog preferred);
/// otherwise the whole message when it looks like Verilog.
inline std::string extract_code_block(const std::string& response) {
    size_t pos = 0;
    std::optional<std::string> any_block;
    while (true) {
        size_t open = response.find("```", pos);
        if (open == std::string::npos) break;
        size_t lang_end = response.find('\n', open + 3);
        if (lang_end == std::string::npos) break;
        std::string lang = trim(response.substr(open + 3, lang_end - open - 3));
        size_t close = response.find("```", lang_end + 1);
        if (close == std::string::npos) break;
        std::string body = response.substr(lang_end + 1, close - lang_end - 1);
        if (lang == "verilog" || lang == "v" || lang == "systemverilog") return body;
        if (!any_block) any_block = body;
        pos = close + 3;
    }
    if (any_block) return *any_block;
    // fallback: accept the full message when it contains Verilog-looking lines
    for (const auto& line : split_lines(response)) {
        std::string t = trim(line);
        if (t.rfind("module", 0) == 0 || t.rfind("assign", 0) == 0 || t.rfind("wire", 0) == 0 ||
            t.rfind("reg", 0) == 0 || t.rfind("always", 0) == 0 || t.rfind("input", 0) == 0 ||
            t.rfind("output", 0) == 0 || t.rfind("`", 0) == 0 || t.rfind("endmodule", 0) == 0)
            return response;
    }
    throw Error(ErrorCode::FragmentExtractionError, "no code block in response");
}

namespace detail {

inline std::string skeleton_excerpt(const Skeleton& skeleton, const SubTask& subtask) {
    auto regions = skeleton_blocks(skeleton);
    auto lines = split_lines(skeleton.text);
    std::string out;
    for (const auto& r : regions) {
        bool owned = std::find(subtask.placeholder_ids.begin(), subtask.placeholder_ids.end(),
                               r.placeholder_id) != subtask.placeholder_ids.end();
        if (!owned) continue;
        for (int l = r.first_line; l <= r.last_line && l >= 1 &&
                                   static_cast<size_t>(l) <= lines.size();
             ++l) {
            out += lines[static_cast<size_t>(l) - 1];
            out += '\n';
        }
    }
    return out;
}

} // namespace detail

/// Prompt assembly is fixed: description, skeleton excerpt, then referenced
/// paragraph bodies in document order. Nothing outside the sub-task's
/// sections is attached unless whole_document is set.
inline std::vector<ChatMessage> fragment_prompt(const SubTask& subtask, const Specification& spec,
                                                const DocumentIndex& index,
                                                const Skeleton& skeleton,
                                                const GenerateOptions& options = {}) {
    std::string user = "Sub-task: " + subtask.id + "\n" + subtask.description + "\n\n";
    user += "Skeleton block to fill:\n" + detail::skeleton_excerpt(skeleton, subtask) + "\n";
    if (options.neighbor_labels) {
        user += "Surrounding blocks (labels only):\n";
        for (const auto& ph : skeleton.placeholders) {
            bool owned = std::find(subtask.placeholder_ids.begin(), subtask.placeholder_ids.end(),
                                   ph.id) != subtask.placeholder_ids.end();
            if (!owned) user += "  " + ph.id + ": " + ph.label + "\n";
        }
        user += "\n";
    }
    user += "Reference documentation:\n";
    std::vector<size_t> sections;
    if (options.whole_document) {
        for (size_t i = 0; i < spec.paragraphs.size(); ++i) sections.push_back(i);
    } else {
        for (const auto& key : subtask.required_section_indexes) {
            auto idx = index.resolve_key(key);
            if (!idx)
                throw Error(ErrorCode::ConfigError,
                            "sub-task '" + subtask.id + "' references unresolved " + key);
            sections.push_back(*idx);
        }
        std::sort(sections.begin(), sections.end());
        sections.erase(std::unique(sections.begin(), sections.end()), sections.end());
    }
    for (size_t idx : sections) {
        if (idx < spec.paragraphs.size()) {
            user += "[" + DocumentIndex::section_key(idx) + "]\n";
            user += spec.paragraphs[idx].body;
            if (!user.empty() && user.back() != '\n') user += '\n';
        }
    }
    return {
        {"system",
         "You are an RTL engineer. Implement the requested skeleton block in synthesizable "
         "Verilog using only the referenced documentation. Reply with one fenced code block."},
        {"user", user},
    };
}

inline Fragment generate_fragment(const SubTask& subtask, const Specification& spec,
                                  const DocumentIndex& index, const Skeleton& skeleton,
                                  CompletionProvider& provider,
                                  const GenerateOptions& options = {}) {
    auto messages = fragment_prompt(subtask, spec, index, skeleton, options);
    CompletionResult result = provider.complete(messages);
    Fragment frag;
    frag.subtask_id = subtask.id;
    frag.placeholder_ids = subtask.placeholder_ids;
    frag.code_text = extract_code_block(result.text);
    frag.transcript_ref = fnv1a_hex(detail::canonical_chat_request(messages));
    return frag;
}

/// Carries whatever completed before the failing sub-task.
class GenerateBatchError : public Error {
public:
    GenerateBatchError(std::string failed_subtask, std::string reason,
                       std::vector<Fragment> partial)
        : Error(ErrorCode::GenerationFailed,
                "sub-task '" + failed_subtask + "' failed: " + reason),
          failed_subtask_(std::move(failed_subtask)), partial_(std::move(partial)) {}

    const std::string& failed_subtask() const { return failed_subtask_; }
    const std::vector<Fragment>& partial() const { return partial_; }

private:
    std::string failed_subtask_;
    std::vector<Fragment> partial_;
};

/// Sub-tasks run independently across up to `parallelism` workers; the result
/// list always follows plan order.
inline std::vector<Fragment> generate_all(const Plan& plan, const Specification& spec,
                                          const DocumentIndex& index,
                                          CompletionProvider& provider,
                                          const GenerateOptions& options = {}) {
    const size_t n = plan.subproblems.size();
    std::vector<std::optional<Fragment>> slots(n);
    std::vector<std::pair<size_t, std::string>> failures;
    std::mutex mu;
    std::atomic<size_t> next{0};

    int workers = std::max(1, options.parallelism);
    auto work = [&]() {
        while (true) {
            size_t k = next.fetch_add(1);
            if (k >= n) return;
            try {
                Fragment f = generate_fragment(plan.subproblems[k], spec, index, plan.skeleton,
                                               provider, options);
                std::lock_guard<std::mutex> lock(mu);
                slots[k] = std::move(f);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(mu);
                failures.push_back({k, e.what()});
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    if (!failures.empty()) {
        std::sort(failures.begin(), failures.end());
        std::vector<Fragment> partial;
        for (auto& s : slots)
            if (s) partial.push_back(std::move(*s));
        throw GenerateBatchError(plan.subproblems[failures.front().first].id,
                                 failures.front().second, std::move(partial));
    }
    std::vector<Fragment> out;
    out.reserve(n);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

} // namespace localv
