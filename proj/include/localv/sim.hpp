// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <map>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "localv/errors.hpp"
#include "localv/text.hpp"

namespace localv {

using json = nlohmann::json;

enum class SimPhase { Compile, Simulate };

struct SimulationOutcome {
    bool pass = false;
    SimPhase phase = SimPhase::Simulate;
    std::string error_log;
    std::vector<std::string> failing_signals;
    std::map<std::string, std::vector<std::string>> waveform_digest; // signal -> sampled values
    bool has_waveform = false;
};

struct SimConfig {
    // Templates take {src}, {tb} and {out} placeholders and run under /bin/sh.
    std::string compile_cmd;
    std::string run_cmd;
    std::string testbench_path;
    std::string waveform_path; // VCD produced by the run step, optional
    double timeout_s = 60;
    std::vector<std::string> fail_patterns = {R"(signal\s+([A-Za-z_][A-Za-z0-9_$]*)\s+mismatch)"};
};

/// First capture group of each pattern names a failing signal.
inline std::vector<std::string> extract_failing_signals(
    const std::string& log, const std::vector<std::string>& patterns) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& p : patterns) {
        std::regex re(p);
        auto begin = std::sregex_iterator(log.begin(), log.end(), re);
        for (auto it = begin; it != std::sregex_iterator(); ++it) {
            if (it->size() < 2) continue;
            std::string sig = (*it)[1].str();
            if (seen.insert(sig).second) out.push_back(sig);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Minimal VCD value-change reader: $var declarations then #time / value
// change records, scalar (0x, 1x) and vector (b0101 x) forms.

inline std::map<std::string, std::vector<std::string>> read_vcd(const std::string& text) {
    std::map<std::string, std::string> code_to_name;
    std::map<std::string, std::vector<std::string>> digest;
    bool in_defs = true;
    for (const auto& raw : split_lines(text)) {
        std::string line = trim(raw);
        if (line.empty()) continue;
        if (in_defs) {
            if (line.rfind("$var", 0) == 0) {
                // $var wire 1 ! clk $end
                std::vector<std::string> parts;
                std::string cur;
                for (char c : line) {
                    if (std::isspace(static_cast<unsigned char>(c))) {
                        if (!cur.empty()) parts.push_back(cur);
                        cur.clear();
                    } else {
                        cur += c;
                    }
                }
                if (!cur.empty()) parts.push_back(cur);
                if (parts.size() >= 5) {
                    code_to_name[parts[3]] = parts[4];
                    digest[parts[4]];
                }
                continue;
            }
            if (line.rfind("$enddefinitions", 0) == 0) {
                in_defs = false;
                continue;
            }
            continue;
        }
        if (line[0] == '#') continue; // timestamps delimit events implicitly
        if (line[0] == 'b' || line[0] == 'B') {
            size_t sp = line.find(' ');
            if (sp == std::string::npos) continue;
            std::string value = line.substr(1, sp - 1);
            std::string code = trim(line.substr(sp + 1));
            auto it = code_to_name.find(code);
            if (it != code_to_name.end()) digest[it->second].push_back(value);
            continue;
        }
        if (line[0] == '0' || line[0] == '1' || line[0] == 'x' || line[0] == 'z' ||
            line[0] == 'X' || line[0] == 'Z') {
            std::string code = line.substr(1);
            auto it = code_to_name.find(code);
            if (it != code_to_name.end()) digest[it->second].push_back(line.substr(0, 1));
            continue;
        }
    }
    return digest;
}

// ---------------------------------------------------------------------------
// Simulator backends

class Simulator {
public:
    virtual ~Simulator() = default;
    /// Runs the candidate in the given workspace directory.
    virtual SimulationOutcome run(const std::string& candidate_code,
                                  const std::string& workspace) = 0;
};

namespace detail {

inline std::string substitute(std::string tmpl, const std::string& key, const std::string& value) {
    const std::string pat = "{" + key + "}";
    size_t pos;
    while ((pos = tmpl.find(pat)) != std::string::npos) tmpl.replace(pos, pat.size(), value);
    return tmpl;
}

struct ExecResult {
    int exit_code = 0;
    std::string output;
};

inline ExecResult run_shell(const std::string& command, double timeout_s) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.0f", timeout_s);
    std::string quoted;
    for (char c : command) {
        if (c == '\'') quoted += "'\\''";
        else quoted += c;
    }
    std::string full = "timeout " + std::string(buf) + "s sh -c '" + quoted + "' 2>&1";
    FILE* pipe = popen(full.c_str(), "r");
    if (!pipe) throw Error(ErrorCode::ToolUnavailable, "cannot spawn shell");
    ExecResult r;
    char chunk[4096];
    size_t got;
    while ((got = fread(chunk, 1, sizeof(chunk), pipe)) > 0) r.output.append(chunk, got);
    int status = pclose(pipe);
    r.exit_code = (status >= 0 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
    return r;
}

} // namespace detail

/// Drives an external simulator through shell command templates; the compile
/// step and run step are separate so failures map onto phases.
class CommandSimulator : public Simulator {
public:
    explicit CommandSimulator(SimConfig config) : cfg_(std::move(config)) {}

    SimulationOutcome run(const std::string& candidate_code,
                          const std::string& workspace) override {
        const std::string src = workspace + "/candidate.v";
        const std::string out = workspace + "/sim_out";
        write_file(src, candidate_code);
        SimulationOutcome outcome;
        if (!cfg_.compile_cmd.empty()) {
            auto r = detail::run_shell(fill(cfg_.compile_cmd, src, out), cfg_.timeout_s);
            if (r.exit_code == 124)
                throw Error(ErrorCode::SimTimeout, "compile step exceeded timeout");
            if (r.exit_code == 127)
                throw Error(ErrorCode::ToolUnavailable, "compile command not found: " + r.output);
            if (r.exit_code != 0) {
                outcome.pass = false;
                outcome.phase = SimPhase::Compile;
                outcome.error_log = r.output;
                return outcome;
            }
        }
        auto r = detail::run_shell(fill(cfg_.run_cmd, src, out), cfg_.timeout_s);
        if (r.exit_code == 124) throw Error(ErrorCode::SimTimeout, "simulation exceeded timeout");
        if (r.exit_code == 127)
            throw Error(ErrorCode::ToolUnavailable, "run command not found: " + r.output);
        outcome.phase = SimPhase::Simulate;
        outcome.error_log = r.output;
        outcome.failing_signals = extract_failing_signals(r.output, cfg_.fail_patterns);
        outcome.pass = r.exit_code == 0 && outcome.failing_signals.empty();
        if (!cfg_.waveform_path.empty()) {
            try {
                outcome.waveform_digest =
                    read_vcd(read_file(detail::substitute(cfg_.waveform_path, "out", out)));
                outcome.has_waveform = !outcome.waveform_digest.empty();
            } catch (const Error&) {
                // missing waveform is not an error
            }
        }
        if (outcome.pass) outcome.failing_signals.clear();
        return outcome;
    }

private:
    std::string fill(const std::string& tmpl, const std::string& src, const std::string& out) {
        std::string s = detail::substitute(tmpl, "src", src);
        s = detail::substitute(s, "tb", cfg_.testbench_path);
        return detail::substitute(s, "out", out);
    }

    SimConfig cfg_;
};

/// Scripted outcomes keyed by attempt number; attempts beyond the script
/// repeat the last entry. Failing signals come from the fixture when given,
/// otherwise from the log patterns, mirroring the command backend.
class MockSimulator : public Simulator {
public:
    explicit MockSimulator(json fixture,
                           std::vector<std::string> patterns =
                               SimConfig{}.fail_patterns)
        : fixture_(std::move(fixture)), patterns_(std::move(patterns)) {
        if (!fixture_.contains("outcomes") || !fixture_["outcomes"].is_array() ||
            fixture_["outcomes"].empty())
            throw Error(ErrorCode::ConfigError, "mock fixture needs a non-empty outcomes array");
    }

    static MockSimulator from_file(const std::string& path) {
        return MockSimulator(json::parse(read_file(path)));
    }

    SimulationOutcome run(const std::string&, const std::string&) override {
        const auto& arr = fixture_["outcomes"];
        size_t idx = std::min(static_cast<size_t>(attempt_), arr.size() - 1);
        ++attempt_;
        const json& o = arr[idx];
        SimulationOutcome outcome;
        outcome.pass = o.value("pass", false);
        outcome.phase = o.value("phase", "simulate") == "compile" ? SimPhase::Compile
                                                                  : SimPhase::Simulate;
        outcome.error_log = o.value("error_log", "");
        if (o.contains("failing_signals")) {
            outcome.failing_signals = o["failing_signals"].get<std::vector<std::string>>();
        } else if (!outcome.pass && outcome.phase == SimPhase::Simulate) {
            outcome.failing_signals = extract_failing_signals(outcome.error_log, patterns_);
        }
        if (o.contains("waveform") && outcome.phase == SimPhase::Simulate) {
            for (const auto& [sig, vals] : o["waveform"].items())
                outcome.waveform_digest[sig] = vals.get<std::vector<std::string>>();
            outcome.has_waveform = !outcome.waveform_digest.empty();
        }
        if (outcome.pass) outcome.failing_signals.clear();
        return outcome;
    }

    void reset() { attempt_ = 0; }
    int attempts() const { return attempt_; }

private:
    json fixture_;
    std::vector<std::string> patterns_;
    int attempt_ = 0;
};

// ---------------------------------------------------------------------------

/// Aligned text table of the named signals' last `window` events. A marker
/// row flags events where the listed signals disagree; unknown signals are
/// skipped with a note.
inline std::string extract_waveform_context(const SimulationOutcome& outcome,
                                            const std::vector<std::string>& signals,
                                            size_t window) {
    std::string out;
    if (outcome.waveform_digest.empty()) return "(no waveform data)\n";
    std::vector<std::pair<std::string, const std::vector<std::string>*>> rows;
    size_t max_len = 0;
    for (const auto& sig : signals) {
        auto it = outcome.waveform_digest.find(sig);
        if (it == outcome.waveform_digest.end()) {
            out += "(signal " + sig + " not in waveform)\n";
            continue;
        }
        rows.push_back({sig, &it->second});
        max_len = std::max(max_len, it->second.size());
    }
    if (rows.empty()) return out.empty() ? "(no waveform data)\n" : out;

    size_t events = std::min(window, max_len);
    size_t start = max_len - events;
    size_t name_w = 5; // "event"
    for (const auto& [sig, vals] : rows) {
        (void)vals;
        name_w = std::max(name_w, sig.size());
    }
    std::vector<size_t> col_w(events, 1);
    auto value_at = [&](const std::vector<std::string>& vals, size_t e) -> std::string {
        // shorter sequences are right-aligned to the latest event
        size_t offset = max_len - vals.size();
        if (e < offset) return "-";
        return vals[e - offset];
    };
    for (size_t e = 0; e < events; ++e) {
        col_w[e] = std::to_string(start + e).size();
        for (const auto& [sig, vals] : rows) {
            (void)sig;
            col_w[e] = std::max(col_w[e], value_at(*vals, start + e).size());
        }
    }
    auto pad = [](const std::string& s, size_t w) {
        return s + std::string(w > s.size() ? w - s.size() : 0, ' ');
    };
    out += pad("event", name_w) + " |";
    for (size_t e = 0; e < events; ++e) out += " " + pad(std::to_string(start + e), col_w[e]);
    out += '\n';
    for (const auto& [sig, vals] : rows) {
        out += pad(sig, name_w) + " |";
        for (size_t e = 0; e < events; ++e) out += " " + pad(value_at(*vals, start + e), col_w[e]);
        out += '\n';
    }
    if (rows.size() >= 2) {
        std::string marks;
        bool any = false;
        marks += pad("", name_w) + " |";
        for (size_t e = 0; e < events; ++e) {
            std::string first = value_at(*rows[0].second, start + e);
            bool differ = false;
            for (size_t r = 1; r < rows.size(); ++r)
                if (value_at(*rows[r].second, start + e) != first) differ = true;
            marks += " " + pad(differ ? "*" : "", col_w[e]);
            any = any || differ;
        }
        marks += '\n';
        if (any) out += marks;
    }
    return out;
}

} // namespace localv
