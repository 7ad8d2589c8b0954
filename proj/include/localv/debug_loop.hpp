// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "localv/doc_index.hpp"
#include "localv/errors.hpp"
#include "localv/patch.hpp"
#include "localv/providers.hpp"
#include "localv/retriever.hpp"
#include "localv/sim.hpp"
#include "localv/text.hpp"
#include "localv/verilog_ast.hpp"

namespace localv {

// Iterative debug loop: simulate, localize failing signals through the driver
// graph, retrieve the locally relevant sections, ask the debugger agent for a
// line-addressed edit script, apply, repeat until pass or budget exhaustion.

struct IterationRecord {
    SimulationOutcome outcome;
    std::optional<TraceReport> trace;
    std::vector<size_t> retrieved_sections;
    EditScript script;
    bool script_applied = false;
    std::string note; // set when the iteration degraded to a no-op
    TokenUsage tokens;
};

struct DebugState {
    int iterations = 0;
    std::string current_code;
    std::vector<IterationRecord> history;
    int budget = 10;
    bool passed = false;
    bool best_effort = false; // budget exhausted without a pass
};

struct DebugOptions {
    int t_max = 10;
    int trace_depth = 3;
    size_t retrieval_budget = 8;
    size_t waveform_window = 8;
    RetrievalWeights weights;
};

/// Fixed assembly order: waveform, errors, numbered code, docs. Code is
/// always rendered with 1-based line numbers and trace-implicated lines are
/// marked, so emitted edit scripts stay anchored.
inline std::string build_debug_prompt(const SimulationOutcome& outcome,
                                      const std::optional<TraceReport>& trace_report,
                                      const std::string& code,
                                      const std::vector<std::pair<std::string, std::string>>& docs,
                                      size_t waveform_window = 8) {
    std::string prompt;
    if (outcome.has_waveform) {
        std::vector<std::string> signals = outcome.failing_signals;
        if (trace_report)
            for (const auto& [sig, d] : trace_report->closure) {
                (void)d;
                signals.push_back(sig);
            }
        if (!signals.empty()) {
            prompt += "=== WAVEFORM ===\n";
            prompt += extract_waveform_context(outcome, signals, waveform_window);
            prompt += '\n';
        }
    }
    if (!outcome.error_log.empty()) {
        prompt += "=== ERRORS ===\n" + outcome.error_log;
        if (prompt.back() != '\n') prompt += '\n';
        prompt += '\n';
    }
    prompt += "=== CODE ===\n";
    std::set<int> marked;
    if (trace_report)
        marked.insert(trace_report->implicated_lines.begin(),
                      trace_report->implicated_lines.end());
    auto lines = split_lines(code);
    char buf[32];
    for (size_t i = 0; i < lines.size(); ++i) {
        int ln = static_cast<int>(i) + 1;
        std::snprintf(buf, sizeof(buf), "%c%5d| ", marked.count(ln) ? '>' : ' ', ln);
        prompt += buf;
        prompt += lines[i];
        prompt += '\n';
    }
    if (!docs.empty()) {
        prompt += "\n=== DOCS ===\n";
        for (const auto& [key, body] : docs) {
            prompt += "[" + key + "]\n" + body;
            if (prompt.back() != '\n') prompt += '\n';
        }
    }
    return prompt;
}

/// Pulls the fix_operations object out of a debugger reply (fenced or bare).
inline EditScript parse_fix_operations(const std::string& response) {
    size_t key = response.find("fix_operations");
    if (key == std::string::npos)
        throw Error(ErrorCode::InvalidAction, "reply lacks fix_operations");
    size_t start = response.rfind('{', key);
    if (start == std::string::npos)
        throw Error(ErrorCode::InvalidAction, "reply lacks a JSON object");
    // take the balanced object starting at `start`
    int depth = 0;
    size_t end = start;
    bool in_string = false;
    for (size_t i = start; i < response.size(); ++i) {
        char c = response[i];
        if (in_string) {
            if (c == '\\') ++i;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}') {
            --depth;
            if (depth == 0) {
                end = i;
                break;
            }
        }
    }
    if (depth != 0) throw Error(ErrorCode::InvalidAction, "unbalanced JSON object in reply");
    json j;
    try {
        j = json::parse(response.substr(start, end - start + 1));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidAction, std::string("bad edit-script JSON: ") + e.what());
    }
    return edit_script_from_json(j);
}

inline std::vector<ChatMessage> debugger_messages(const std::string& prompt) {
    return {
        {"system",
         "You are a Verilog debugging agent. Analyze the failure context and reply with one "
         "JSON object {\"fix_operations\": [...]} using delete_block "
         "{start_line, end_line} and add_block {line, content} operations against the numbered "
         "code. Order operations from higher line numbers to lower."},
        {"user", prompt},
    };
}

namespace detail {

inline std::vector<std::string> known_roots(const DriverGraph& graph,
                                            const std::vector<std::string>& candidates) {
    std::vector<std::string> roots;
    for (const auto& c : candidates)
        if (graph.signals.count(c)) roots.push_back(c);
    return roots;
}

} // namespace detail

inline DebugState debug(const std::string& candidate_code, Simulator& sim,
                        const DocumentIndex& index, CompletionProvider* provider,
                        const std::string& workspace, const DebugOptions& options = {}) {
    if (options.t_max < 0) throw Error(ErrorCode::ConfigError, "t_max must be >= 0");
    DebugState state;
    state.current_code = candidate_code;
    state.budget = options.t_max;

    while (state.iterations < options.t_max) {
        SimulationOutcome outcome = sim.run(state.current_code, workspace);
        if (outcome.pass) {
            state.passed = true;
            return state;
        }
        IterationRecord rec;
        rec.outcome = outcome;

        // Fault localization; compile failures have no signals to trace.
        std::optional<TraceReport> trace_report;
        if (outcome.phase == SimPhase::Simulate && !outcome.failing_signals.empty()) {
            try {
                auto ast = parse_verilog(state.current_code);
                auto graph = build_driver_graph(ast);
                auto roots = detail::known_roots(graph, outcome.failing_signals);
                if (!roots.empty())
                    trace_report = trace(graph, roots, options.trace_depth);
            } catch (const Error&) {
                // unparseable candidate: retrieval falls back to the error log
            }
        }
        rec.trace = trace_report;

        // Retrieval: identifiers become entities, the raw log is the query.
        RetrievalQuery q;
        q.purpose = QueryPurpose::Debugging;
        q.budget = options.retrieval_budget;
        q.query_text = outcome.error_log;
        for (const auto& s : outcome.failing_signals) q.query_entities.insert(s);
        auto log_ids = identifier_tokens(outcome.error_log);
        q.query_entities.insert(log_ids.begin(), log_ids.end());
        if (trace_report) {
            q.query_entities.insert(trace_report->implicated_identifiers.begin(),
                                    trace_report->implicated_identifiers.end());
        }
        std::vector<std::pair<std::string, std::string>> docs;
        auto res = retrieve(index, q, options.weights);
        for (size_t idx : res.paragraph_indices) {
            rec.retrieved_sections.push_back(idx);
            if (idx < index.paragraph_bodies.size())
                docs.push_back({DocumentIndex::section_key(idx), index.paragraph_bodies[idx]});
        }

        if (!provider) {
            rec.note = "no provider; iteration recorded as no-op";
            state.history.push_back(std::move(rec));
            ++state.iterations;
            continue;
        }

        const std::string prompt = build_debug_prompt(outcome, trace_report, state.current_code,
                                                      docs, options.waveform_window);
        auto messages = debugger_messages(prompt);
        TokenUsage before = provider->counters();

        std::optional<EditScript> script;
        std::string reply;
        for (int attempt = 0; attempt < 2 && !script; ++attempt) {
            if (attempt > 0) {
                messages.push_back({"assistant", reply});
                messages.push_back({"user",
                                    "That reply was not a valid fix_operations JSON object. "
                                    "Reply again with only the JSON object."});
            }
            try {
                reply = provider->complete(messages).text;
                script = parse_fix_operations(reply);
            } catch (const Error& e) {
                if (e.code() == ErrorCode::ReplayMismatch || e.code() == ErrorCode::ProviderUnavailable)
                    throw;
                script.reset();
            }
        }
        TokenUsage after = provider->counters();
        rec.tokens.prompt_tokens = after.prompt_tokens - before.prompt_tokens;
        rec.tokens.completion_tokens = after.completion_tokens - before.completion_tokens;

        if (!script) {
            rec.note = "unparseable edit script after re-prompt; no-op";
        } else {
            rec.script = *script;
            try {
                state.current_code = apply_script(state.current_code, *script);
                rec.script_applied = true;
            } catch (const Error& e) {
                rec.note = std::string("edit script failed to apply: ") + e.what();
            }
        }
        state.history.push_back(std::move(rec));
        ++state.iterations;
    }
    // Budget exhausted without a passing run; return best effort.
    state.best_effort = true;
    return state;
}

// --- report serialization ---

inline json outcome_to_json(const SimulationOutcome& o) {
    return json{{"pass", o.pass},
                {"phase", o.phase == SimPhase::Compile ? "compile" : "simulate"},
                {"error_log", o.error_log},
                {"failing_signals", o.failing_signals}};
}

inline json trace_to_json(const TraceReport& t) {
    json dd = json::object();
    for (const auto& [root, drivers] : t.direct_drivers) dd[root] = drivers;
    json closure = json::object();
    for (const auto& [sig, depth] : t.closure) closure[sig] = depth;
    return json{{"root_signals", t.root_signals},
                {"direct_drivers", dd},
                {"closure", closure},
                {"implicated_lines", t.implicated_lines},
                {"implicated_identifiers",
                 std::vector<std::string>(t.implicated_identifiers.begin(),
                                          t.implicated_identifiers.end())},
                {"has_cycle", t.has_cycle},
                {"max_depth", t.max_depth}};
}

inline json debug_state_to_json(const DebugState& s) {
    json hist = json::array();
    for (const auto& rec : s.history) {
        json h{{"outcome", outcome_to_json(rec.outcome)},
               {"retrieved_sections", rec.retrieved_sections},
               {"script", edit_script_to_json(rec.script)},
               {"script_applied", rec.script_applied},
               {"note", rec.note},
               {"tokens",
                {{"prompt_tokens", rec.tokens.prompt_tokens},
                 {"completion_tokens", rec.tokens.completion_tokens}}}};
        if (rec.trace) h["trace"] = trace_to_json(*rec.trace);
        hist.push_back(std::move(h));
    }
    return json{{"iterations", s.iterations},
                {"budget", s.budget},
                {"passed", s.passed},
                {"best_effort", s.best_effort},
                {"history", std::move(hist)}};
}

} // namespace localv
