// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "localv/corpus.hpp"
#include "localv/doc_index.hpp"
#include "localv/errors.hpp"
#include "localv/providers.hpp"
#include "localv/retriever.hpp"
#include "localv/text.hpp"

namespace localv {

// Skeleton placeholders are "// === SUBTASK k: label ===" comment blocks;
// each block is one placeholder group filled by exactly one sub-task.

struct Placeholder {
    std::string id; // "subtask_<k>"
    int line = 0;   // 1-based line of the block header
    std::string label;
};

struct Skeleton {
    std::string text;
    std::vector<Placeholder> placeholders;
};

struct SubTask {
    std::string id;
    std::string description;
    std::vector<std::string> required_section_indexes; // "section_<i>" keys
    std::vector<std::string> placeholder_ids;
};

struct Plan {
    Skeleton skeleton;
    std::vector<SubTask> subproblems;
};

struct PlanIssue {
    enum class Kind {
        DanglingSection,
        UncoveredPlaceholder,
        OverlapPlaceholder,
        EmptyDescription,
        UnknownPlaceholder,
    };
    Kind kind;
    std::string detail;
};

namespace detail {

/// Matches "// === SUBTASK <k>[: label] ===" after leading whitespace.
inline std::optional<std::pair<int, std::string>> parse_subtask_marker(const std::string& line) {
    std::string t = trim(line);
    if (t.rfind("//", 0) != 0) return std::nullopt;
    t = trim(t.substr(2));
    if (t.rfind("===", 0) != 0) return std::nullopt;
    t = trim(t.substr(3));
    if (t.rfind("SUBTASK", 0) != 0) return std::nullopt;
    t = trim(t.substr(7));
    size_t p = 0;
    while (p < t.size() && std::isdigit(static_cast<unsigned char>(t[p]))) ++p;
    if (p == 0) return std::nullopt;
    int num = std::stoi(t.substr(0, p));
    std::string rest = trim(t.substr(p));
    if (!rest.empty() && rest.front() == ':') rest = trim(rest.substr(1));
    // strip the trailing === fence
    while (!rest.empty() && (rest.back() == '=' || rest.back() == ' ')) rest.pop_back();
    return std::make_pair(num, rest);
}

inline std::optional<int> subtask_number_in(const std::string& text) {
    size_t pos = text.find("SUBTASK");
    while (pos != std::string::npos) {
        size_t p = pos + 7;
        while (p < text.size() && text[p] == ' ') ++p;
        size_t q = p;
        while (q < text.size() && std::isdigit(static_cast<unsigned char>(text[q]))) ++q;
        if (q > p) return std::stoi(text.substr(p, q - p));
        pos = text.find("SUBTASK", pos + 1);
    }
    return std::nullopt;
}

} // namespace detail

inline Skeleton parse_skeleton(const std::string& text) {
    Skeleton sk;
    sk.text = text;
    auto lines = split_lines(text);
    for (size_t i = 0; i < lines.size(); ++i) {
        auto marker = detail::parse_subtask_marker(lines[i]);
        if (!marker) continue;
        Placeholder ph;
        ph.id = "subtask_" + std::to_string(marker->first);
        ph.line = static_cast<int>(i) + 1;
        ph.label = marker->second;
        sk.placeholders.push_back(std::move(ph));
    }
    return sk;
}

struct BlockRegion {
    std::string placeholder_id;
    int first_line = 0; // 1-based, the block header line
    int last_line = 0;  // inclusive
};

/// Each placeholder block runs from its header to the line before the next
/// header. A trailing endmodule line stays outside the final block so splicing
/// keeps the envelope.
inline std::vector<BlockRegion> skeleton_blocks(const Skeleton& skeleton) {
    std::vector<BlockRegion> regions;
    auto lines = split_lines(skeleton.text);
    int tail = static_cast<int>(lines.size());
    while (tail >= 1 && trim(lines[static_cast<size_t>(tail) - 1]).empty()) --tail;
    int envelope_end = tail;
    if (tail >= 1 && trim(lines[static_cast<size_t>(tail) - 1]) == "endmodule")
        envelope_end = tail - 1;
    for (size_t k = 0; k < skeleton.placeholders.size(); ++k) {
        BlockRegion r;
        r.placeholder_id = skeleton.placeholders[k].id;
        r.first_line = skeleton.placeholders[k].line;
        r.last_line = (k + 1 < skeleton.placeholders.size())
                          ? skeleton.placeholders[k + 1].line - 1
                          : envelope_end;
        regions.push_back(r);
    }
    return regions;
}

// --- plan JSON: {"skeleton": "...", "subproblems": [{id, description,
//     required_section_indexes}]} ---

inline json plan_to_json(const Plan& plan) {
    json subs = json::array();
    for (const auto& s : plan.subproblems) {
        subs.push_back({{"id", s.id},
                        {"description", s.description},
                        {"required_section_indexes", s.required_section_indexes}});
    }
    return json{{"skeleton", plan.skeleton.text}, {"subproblems", std::move(subs)}};
}

inline Plan plan_from_json(const json& j) {
    Plan plan;
    plan.skeleton = parse_skeleton(j.at("skeleton").get<std::string>());
    size_t ordinal = 0;
    for (const auto& js : j.at("subproblems")) {
        SubTask st;
        st.id = js.at("id").get<std::string>();
        st.description = js.value("description", "");
        if (js.contains("required_section_indexes"))
            st.required_section_indexes =
                js["required_section_indexes"].get<std::vector<std::string>>();
        if (js.contains("placeholder_ids")) {
            st.placeholder_ids = js["placeholder_ids"].get<std::vector<std::string>>();
        } else {
            // Descriptions reference their pseudocode block; fall back to order.
            auto num = detail::subtask_number_in(st.description);
            size_t k = num ? static_cast<size_t>(*num) : ordinal + 1;
            st.placeholder_ids = {"subtask_" + std::to_string(k)};
        }
        plan.subproblems.push_back(std::move(st));
        ++ordinal;
    }
    return plan;
}

inline std::vector<PlanIssue> validate_plan(const Plan& plan, const DocumentIndex& index) {
    std::vector<PlanIssue> issues;
    std::set<std::string> skeleton_ids;
    for (const auto& ph : plan.skeleton.placeholders) skeleton_ids.insert(ph.id);

    std::map<std::string, std::vector<std::string>> owners; // placeholder -> task ids
    for (const auto& st : plan.subproblems) {
        if (trim(st.description).empty())
            issues.push_back({PlanIssue::Kind::EmptyDescription, "sub-task '" + st.id + "'"});
        for (const auto& key : st.required_section_indexes) {
            if (!index.resolve_key(key))
                issues.push_back({PlanIssue::Kind::DanglingSection,
                                  "sub-task '" + st.id + "' references " + key});
        }
        for (const auto& pid : st.placeholder_ids) {
            owners[pid].push_back(st.id);
            if (!skeleton_ids.count(pid))
                issues.push_back({PlanIssue::Kind::UnknownPlaceholder,
                                  "sub-task '" + st.id + "' claims missing placeholder " + pid});
        }
    }
    for (const auto& [pid, tasks] : owners) {
        if (tasks.size() > 1) {
            std::string who;
            for (const auto& t : tasks) who += (who.empty() ? "" : ", ") + t;
            issues.push_back(
                {PlanIssue::Kind::OverlapPlaceholder, pid + " claimed by " + who});
        }
    }
    for (const auto& pid : skeleton_ids) {
        if (!owners.count(pid))
            issues.push_back({PlanIssue::Kind::UncoveredPlaceholder, pid + " has no sub-task"});
    }
    return issues;
}

struct PlanOptions {
    bool include_bodies = false; // planner sees summaries + lexical sets by default
    int repair_attempts = 2;     // re-prompts on unparseable output
    size_t repair_budget = 3;    // sections fetched per repaired sub-task
    RetrievalWeights weights;
};

inline std::vector<ChatMessage> plan_prompt(const DocumentIndex& index,
                                            const TargetModule& target,
                                            const PlanOptions& options) {
    std::string doc = "Target module: " + target.module_name + "\n\nIndexed sections:\n";
    for (const auto& e : index.entries) {
        doc += DocumentIndex::section_key(e.paragraph_index) + ": " + e.semantic_summary + "\n";
        auto ids = e.lexical.all();
        if (!ids.empty()) {
            doc += "  identifiers:";
            for (const auto& id : ids) doc += " " + id;
            doc += "\n";
        }
        if (options.include_bodies && e.paragraph_index < index.paragraph_bodies.size()) {
            doc += "  body:\n" + index.paragraph_bodies[e.paragraph_index] + "\n";
        }
    }
    return {
        {"system",
         "You are a Verilog planning agent. Produce a code skeleton and sub-task plan for the "
         "target module. Reply with a single JSON object of the form "
         "{\"skeleton\": \"<pseudo-code with '// === SUBTASK k: label ===' blocks>\", "
         "\"subproblems\": [{\"id\": str, \"description\": str, "
         "\"required_section_indexes\": [\"section_<i>\", ...]}]}. Every SUBTASK block in the "
         "skeleton must correspond to exactly one subproblem, in order."},
        {"user", doc},
    };
}

namespace detail {

/// Extracts the outermost JSON object from a model reply (optionally fenced).
inline std::optional<json> extract_json_object(const std::string& text) {
    size_t start = text.find('{');
    size_t end = text.rfind('}');
    if (start == std::string::npos || end == std::string::npos || end <= start)
        return std::nullopt;
    try {
        return json::parse(text.substr(start, end - start + 1));
    } catch (const json::exception&) {
        return std::nullopt;
    }
}

} // namespace detail

inline Plan make_plan(const DocumentIndex& index, const TargetModule& target,
                      CompletionProvider& provider, const PlanOptions& options = {}) {
    auto messages = plan_prompt(index, target, options);
    std::string raw;
    std::optional<json> parsed;
    for (int attempt = 0; attempt <= options.repair_attempts; ++attempt) {
        if (attempt > 0) {
            messages.push_back({"assistant", raw});
            messages.push_back({"user",
                                "That reply was not a parseable plan JSON object. Reply again "
                                "with only the JSON object described before."});
        }
        raw = provider.complete(messages).text;
        parsed = detail::extract_json_object(raw);
        if (parsed && parsed->contains("skeleton") && parsed->contains("subproblems")) break;
        parsed.reset();
    }
    if (!parsed)
        throw Error(ErrorCode::PlanParseError,
                    "unparseable plan after " + std::to_string(options.repair_attempts) +
                        " repairs; last reply: " + raw);

    Plan plan = plan_from_json(*parsed);

    // Repair dangling section references by retrieving on the description.
    for (auto& st : plan.subproblems) {
        std::vector<std::string> valid;
        bool had_invalid = false;
        for (const auto& key : st.required_section_indexes) {
            if (index.resolve_key(key)) valid.push_back(key);
            else had_invalid = true;
        }
        if (had_invalid && valid.empty()) {
            RetrievalQuery q;
            q.purpose = QueryPurpose::Planning;
            q.query_text = st.description;
            auto toks = identifier_tokens(st.description);
            q.query_entities.insert(toks.begin(), toks.end());
            q.budget = options.repair_budget;
            auto res = retrieve(index, q, options.weights);
            for (size_t idx : res.paragraph_indices)
                valid.push_back(DocumentIndex::section_key(idx));
        }
        st.required_section_indexes = std::move(valid);
    }
    return plan;
}

} // namespace localv
