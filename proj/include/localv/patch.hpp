// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "localv/errors.hpp"
#include "localv/text.hpp"

namespace localv {

using json = nlohmann::json;

// Line-addressed edit engine. Actions apply sequentially against the evolving
// buffer: line numbers in action k refer to the buffer as left by action k-1.
// Scripts that touch higher lines first therefore avoid renumbering hazards,
// and that is the ordering the debugger prompt requests.

struct EditAction {
    enum class Op { DeleteBlock, AddBlock };
    Op op = Op::DeleteBlock;
    int start_line = 0; // delete_block, 1-based inclusive
    int end_line = 0;
    int line = 0; // add_block: content's first line becomes this line
    std::vector<std::string> content;
};

struct EditScript {
    std::vector<EditAction> actions;
};

struct EditIssue {
    size_t action_index = 0;
    ErrorCode code = ErrorCode::InvalidAction;
    std::string message;
};

namespace detail {

inline std::string check_action(const EditAction& a, size_t buffer_lines) {
    if (a.op == EditAction::Op::DeleteBlock) {
        if (a.start_line < 1 || a.end_line < a.start_line)
            return "delete_block range [" + std::to_string(a.start_line) + "," +
                   std::to_string(a.end_line) + "] is invalid";
        if (static_cast<size_t>(a.end_line) > buffer_lines)
            return "delete_block end " + std::to_string(a.end_line) + " past buffer of " +
                   std::to_string(buffer_lines) + " lines";
        return "";
    }
    if (a.line < 1) return "add_block line " + std::to_string(a.line) + " is not 1-based";
    if (static_cast<size_t>(a.line) > buffer_lines + 1)
        return "add_block line " + std::to_string(a.line) + " past buffer of " +
               std::to_string(buffer_lines) + " lines";
    for (const auto& c : a.content)
        if (c.find('\n') != std::string::npos) return "add_block content has embedded newline";
    return "";
}

inline bool is_range_error(const EditAction& a, size_t buffer_lines) {
    if (a.op == EditAction::Op::DeleteBlock)
        return a.start_line >= 1 && a.end_line >= a.start_line &&
               static_cast<size_t>(a.end_line) > buffer_lines;
    return a.line >= 1 && static_cast<size_t>(a.line) > buffer_lines + 1;
}

} // namespace detail

inline std::string apply_script(const std::string& source, const EditScript& script) {
    bool trailing = ends_with_newline(source);
    std::vector<std::string> lines = split_lines(source);
    for (size_t k = 0; k < script.actions.size(); ++k) {
        const EditAction& a = script.actions[k];
        std::string err = detail::check_action(a, lines.size());
        if (!err.empty()) {
            ErrorCode code = detail::is_range_error(a, lines.size()) ? ErrorCode::EditOutOfRange
                                                                     : ErrorCode::InvalidAction;
            throw Error(code, "action " + std::to_string(k) + ": " + err);
        }
        if (a.op == EditAction::Op::DeleteBlock) {
            lines.erase(lines.begin() + (a.start_line - 1), lines.begin() + a.end_line);
        } else {
            lines.insert(lines.begin() + (a.line - 1), a.content.begin(), a.content.end());
        }
    }
    return join_lines(lines, trailing);
}

/// Dry run reporting every violation without mutating anything.
inline std::vector<EditIssue> validate_script(const std::string& source,
                                              const EditScript& script) {
    std::vector<EditIssue> issues;
    std::vector<std::string> lines = split_lines(source);
    for (size_t k = 0; k < script.actions.size(); ++k) {
        const EditAction& a = script.actions[k];
        std::string err = detail::check_action(a, lines.size());
        if (!err.empty()) {
            EditIssue issue;
            issue.action_index = k;
            issue.code = detail::is_range_error(a, lines.size()) ? ErrorCode::EditOutOfRange
                                                                 : ErrorCode::InvalidAction;
            issue.message = err;
            issues.push_back(std::move(issue));
            continue; // keep simulating with the action skipped
        }
        if (a.op == EditAction::Op::DeleteBlock) {
            lines.erase(lines.begin() + (a.start_line - 1), lines.begin() + a.end_line);
        } else {
            lines.insert(lines.begin() + (a.line - 1), a.content.begin(), a.content.end());
        }
    }
    return issues;
}

// Wire format matches the debugger output: {"fix_operations": [...]}.

inline json edit_script_to_json(const EditScript& script) {
    json ops = json::array();
    for (const auto& a : script.actions) {
        if (a.op == EditAction::Op::DeleteBlock) {
            ops.push_back({{"operation", "delete_block"},
                           {"start_line", a.start_line},
                           {"end_line", a.end_line}});
        } else {
            ops.push_back({{"operation", "add_block"}, {"line", a.line}, {"content", a.content}});
        }
    }
    return json{{"fix_operations", std::move(ops)}};
}

inline EditScript edit_script_from_json(const json& j) {
    EditScript script;
    if (!j.contains("fix_operations") || !j["fix_operations"].is_array())
        throw Error(ErrorCode::InvalidAction, "missing fix_operations array");
    for (const auto& op : j["fix_operations"]) {
        EditAction a;
        const std::string kind = op.value("operation", "");
        if (kind == "delete_block") {
            a.op = EditAction::Op::DeleteBlock;
            if (!op.contains("start_line") || !op.contains("end_line"))
                throw Error(ErrorCode::InvalidAction, "delete_block missing line fields");
            a.start_line = op["start_line"].get<int>();
            a.end_line = op["end_line"].get<int>();
        } else if (kind == "add_block") {
            a.op = EditAction::Op::AddBlock;
            if (!op.contains("line") || !op.contains("content"))
                throw Error(ErrorCode::InvalidAction, "add_block missing line/content fields");
            a.line = op["line"].get<int>();
            a.content = op["content"].get<std::vector<std::string>>();
        } else {
            throw Error(ErrorCode::InvalidAction, "unknown operation '" + kind + "'");
        }
        script.actions.push_back(std::move(a));
    }
    return script;
}

} // namespace localv
