// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "localv/corpus.hpp"
#include "localv/debug_loop.hpp"
#include "localv/doc_index.hpp"
#include "localv/errors.hpp"
#include "localv/evalharness.hpp"
#include "localv/generator.hpp"
#include "localv/merger.hpp"
#include "localv/planner.hpp"
#include "localv/providers.hpp"
#include "localv/retriever.hpp"
#include "localv/sim.hpp"
#include "localv/text.hpp"

namespace localv {

struct RunConfig {
    // provider
    std::string provider_mode = "none"; // "replay" | "http" | "none"
    std::string transcript_path;
    // simulator
    std::string sim_mode = "mock"; // "mock" | "command"
    std::string sim_fixture;
    SimConfig sim;
    // knobs
    RetrievalWeights retrieval;
    size_t retrieval_budget = 8;
    double tau = 0.1;
    int t_max = 10;
    int parallelism = 1;
    Bm25Params bm25;
    std::string workspace = "ws";
    bool whole_document = false; // context ablation for the generate stage
    bool resume = false;

    void validate() const {
        if (tau <= 0) throw Error(ErrorCode::ConfigError, "tau must be > 0");
        if (t_max < 0) throw Error(ErrorCode::ConfigError, "t_max must be >= 0");
        if (retrieval_budget < 1) throw Error(ErrorCode::ConfigError, "budget must be >= 1");
        if (parallelism < 1) throw Error(ErrorCode::ConfigError, "parallelism must be >= 1");
        if (provider_mode != "none" && provider_mode != "replay" && provider_mode != "http")
            throw Error(ErrorCode::ConfigError, "provider mode must be none|replay|http");
        if (sim_mode != "mock" && sim_mode != "command")
            throw Error(ErrorCode::ConfigError, "sim mode must be mock|command");
        if (provider_mode == "replay" && transcript_path.empty())
            throw Error(ErrorCode::ConfigError, "replay provider needs a transcript path");
        if (sim_mode == "mock" && sim_fixture.empty())
            throw Error(ErrorCode::ConfigError, "mock simulator needs a fixture path");
    }

    static RunConfig from_json(const json& j) {
        RunConfig c;
        if (j.contains("provider")) {
            const auto& p = j["provider"];
            c.provider_mode = p.value("mode", c.provider_mode);
            c.transcript_path = p.value("transcript", c.transcript_path);
        }
        if (j.contains("simulator")) {
            const auto& s = j["simulator"];
            c.sim_mode = s.value("mode", c.sim_mode);
            c.sim_fixture = s.value("fixture", c.sim_fixture);
            c.sim.compile_cmd = s.value("compile", c.sim.compile_cmd);
            c.sim.run_cmd = s.value("run", c.sim.run_cmd);
            c.sim.testbench_path = s.value("testbench", c.sim.testbench_path);
            c.sim.waveform_path = s.value("waveform", c.sim.waveform_path);
            c.sim.timeout_s = s.value("timeout_s", c.sim.timeout_s);
            if (s.contains("fail_patterns"))
                c.sim.fail_patterns = s["fail_patterns"].get<std::vector<std::string>>();
        }
        if (j.contains("retrieval")) {
            const auto& r = j["retrieval"];
            c.retrieval.w_lex = r.value("w_lex", c.retrieval.w_lex);
            c.retrieval.w_sem = r.value("w_sem", c.retrieval.w_sem);
            c.retrieval.strict = r.value("strict", c.retrieval.strict);
            c.retrieval_budget = r.value("budget", c.retrieval_budget);
        }
        if (j.contains("bm25")) {
            c.bm25.k1 = j["bm25"].value("k1", c.bm25.k1);
            c.bm25.b = j["bm25"].value("b", c.bm25.b);
            c.retrieval.bm25 = c.bm25;
        }
        c.tau = j.value("tau", c.tau);
        c.t_max = j.value("t_max", c.t_max);
        c.parallelism = j.value("parallelism", c.parallelism);
        c.workspace = j.value("workspace", c.workspace);
        c.whole_document = j.value("whole_document", c.whole_document);
        return c;
    }

    /// Precedence below CLI flags: env vars beat the config file.
    void apply_env() {
        if (const char* v = std::getenv("LOCALV_PROVIDER_MODE")) provider_mode = v;
        if (const char* v = std::getenv("LOCALV_TRANSCRIPT")) transcript_path = v;
        if (const char* v = std::getenv("LOCALV_SIM_MODE")) sim_mode = v;
        if (const char* v = std::getenv("LOCALV_SIM_FIXTURE")) sim_fixture = v;
        if (const char* v = std::getenv("LOCALV_TMAX")) t_max = std::atoi(v);
        if (const char* v = std::getenv("LOCALV_TAU")) tau = std::atof(v);
    }

    static RunConfig load(const std::string& path) {
        RunConfig c = from_json(json::parse(read_file(path)));
        c.apply_env();
        return c;
    }
};

inline std::unique_ptr<CompletionProvider> make_provider(const RunConfig& config) {
    if (config.provider_mode == "replay")
        return std::make_unique<ReplayProvider>(Transcript::load(config.transcript_path));
    if (config.provider_mode == "http")
        return std::make_unique<HttpProvider>(HttpProviderConfig::from_env());
    return nullptr;
}

inline std::unique_ptr<Simulator> make_simulator(const RunConfig& config) {
    if (config.sim_mode == "mock")
        return std::make_unique<MockSimulator>(json::parse(read_file(config.sim_fixture)),
                                               config.sim.fail_patterns);
    return std::make_unique<CommandSimulator>(config.sim);
}

struct RunReport {
    std::string module_name;
    std::string workspace;
    std::vector<std::string> stages_run;
    std::vector<std::string> stages_skipped;
    size_t n_subtasks = 0;
    int debug_iterations = 0;
    bool passed = false;
    bool best_effort = false;
    std::map<std::string, long> tokens_per_role;

    json to_json() const {
        return json{{"module_name", module_name},
                    {"workspace", workspace},
                    {"stages_run", stages_run},
                    {"stages_skipped", stages_skipped},
                    {"n_subtasks", n_subtasks},
                    {"debug_iterations", debug_iterations},
                    {"passed", passed},
                    {"best_effort", best_effort},
                    {"tokens_per_role", tokens_per_role}};
    }
};

/// Stage failures carry the stage name for the CLI exit path.
class StageError : public Error {
public:
    StageError(std::string stage, const Error& cause)
        : Error(cause.code(), "stage '" + stage + "' failed: " + cause.what()),
          stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

namespace detail {

inline bool file_exists(const std::string& path) {
    std::error_code ec;
    return std::filesystem::exists(path, ec);
}

inline long role_delta(CompletionProvider* provider, TokenUsage& last) {
    if (!provider) return 0;
    TokenUsage now = provider->counters();
    long delta = now.total() - last.total();
    last = now;
    return delta;
}

} // namespace detail

/// Runs index -> plan -> generate -> merge -> debug, persisting every
/// intermediate artifact under the workspace. With resume, stages whose
/// outputs already exist are loaded instead of recomputed. A non-null
/// provider_override replaces the configured provider (used for recording).
inline RunReport run_pipeline(const RunConfig& config, const std::string& doc_path,
                              const std::string& module_name,
                              CompletionProvider* provider_override = nullptr) {
    config.validate();
    if (!is_verilog_identifier(module_name))
        throw Error(ErrorCode::ConfigError, "'" + module_name + "' is not a legal module name");

    const std::string ws = config.workspace;
    std::filesystem::create_directories(ws);
    RunReport report;
    report.module_name = module_name;
    report.workspace = ws;

    std::unique_ptr<CompletionProvider> owned;
    if (!provider_override) owned = make_provider(config);
    CompletionProvider* provider_ptr = provider_override ? provider_override : owned.get();
    TokenUsage usage_mark = provider_ptr ? provider_ptr->counters() : TokenUsage{};
    auto note_tokens = [&](const std::string& role) {
        long d = detail::role_delta(provider_ptr, usage_mark);
        if (d > 0) report.tokens_per_role[role] += d;
    };

    auto run_stage = [&](const std::string& name, const std::string& output,
                         auto&& compute) {
        if (config.resume && detail::file_exists(output)) {
            report.stages_skipped.push_back(name);
            return;
        }
        try {
            compute();
        } catch (const StageError&) {
            throw;
        } catch (const Error& e) {
            write_file(ws + "/report.json", report.to_json().dump(2) + "\n");
            throw StageError(name, e);
        }
        report.stages_run.push_back(name);
    };

    // --- index ---
    const std::string index_path = ws + "/index.json";
    Specification spec;
    run_stage("index", index_path, [&] {
        spec = segment_document(read_file(doc_path), module_name);
        DocumentIndex index = build_index(spec, provider_ptr);
        write_file(index_path, index_to_json(index).dump(2) + "\n");
        note_tokens("indexer");
    });
    if (spec.paragraphs.empty()) spec = segment_document(read_file(doc_path), module_name);
    DocumentIndex index = index_from_json(json::parse(read_file(index_path)));

    // --- plan ---
    const std::string plan_path = ws + "/plan.json";
    run_stage("plan", plan_path, [&] {
        if (!provider_ptr)
            throw Error(ErrorCode::ProviderUnavailable, "planning needs a provider");
        PlanOptions popts;
        popts.weights = config.retrieval;
        Plan plan = make_plan(index, TargetModule{module_name, spec.doc_id}, *provider_ptr, popts);
        write_file(plan_path, plan_to_json(plan).dump(2) + "\n");
        note_tokens("planner");
    });
    Plan plan = plan_from_json(json::parse(read_file(plan_path)));

    report.n_subtasks = plan.subproblems.size();

    // --- generate ---
    const std::string frag_manifest = ws + "/fragments/manifest.json";
    run_stage("generate", frag_manifest, [&] {
        if (!provider_ptr)
            throw Error(ErrorCode::ProviderUnavailable, "generation needs a provider");
        GenerateOptions gopts;
        gopts.parallelism = config.parallelism;
        gopts.whole_document = config.whole_document;
        auto fragments = generate_all(plan, spec, index, *provider_ptr, gopts);
        json manifest = json::array();
        for (size_t k = 0; k < fragments.size(); ++k) {
            const std::string rel = "frag_" + std::to_string(k) + "_" +
                                    fragments[k].subtask_id + ".v";
            write_file(ws + "/fragments/" + rel, fragments[k].code_text);
            manifest.push_back({{"file", rel},
                                {"subtask_id", fragments[k].subtask_id},
                                {"placeholder_ids", fragments[k].placeholder_ids},
                                {"transcript_ref", fragments[k].transcript_ref}});
        }
        write_file(frag_manifest, manifest.dump(2) + "\n");
        note_tokens("rtl");
    });
    std::vector<Fragment> fragments;
    for (const auto& je : json::parse(read_file(frag_manifest))) {
        Fragment f;
        f.subtask_id = je.at("subtask_id").get<std::string>();
        f.placeholder_ids = je.at("placeholder_ids").get<std::vector<std::string>>();
        f.transcript_ref = je.value("transcript_ref", "");
        f.code_text = read_file(ws + "/fragments/" + je.at("file").get<std::string>());
        fragments.push_back(std::move(f));
    }

    // --- merge ---
    const std::string candidate_path = ws + "/candidate.v";
    run_stage("merge", candidate_path, [&] {
        CandidateModule cm =
            merge(plan.skeleton, fragments, index, provider_ptr, config.retrieval);
        write_file(candidate_path, cm.code_text);
        json notes = json::array();
        for (const auto& n : cm.merge_notes)
            notes.push_back({{"conflict", n.conflict}, {"resolution", n.resolution}});
        write_file(ws + "/merge.json",
                   json{{"module_name", cm.module_name}, {"merge_notes", notes}}.dump(2) + "\n");
        note_tokens("merger");
    });
    const std::string candidate = read_file(candidate_path);

    // --- debug ---
    const std::string final_path = ws + "/final.v";
    run_stage("debug", final_path, [&] {
        auto sim = make_simulator(config);
        DebugOptions dopts;
        dopts.t_max = config.t_max;
        dopts.retrieval_budget = config.retrieval_budget;
        dopts.weights = config.retrieval;
        DebugState state = debug(candidate, *sim, index, provider_ptr, ws, dopts);
        write_file(final_path, state.current_code);
        write_file(ws + "/debug.json", debug_state_to_json(state).dump(2) + "\n");
        report.debug_iterations = state.iterations;
        report.passed = state.passed;
        report.best_effort = state.best_effort;
        note_tokens("debugger");
    });
    if (report.debug_iterations == 0 && detail::file_exists(ws + "/debug.json")) {
        json dj = json::parse(read_file(ws + "/debug.json"));
        report.debug_iterations = dj.value("iterations", 0);
        report.passed = dj.value("passed", false);
        report.best_effort = dj.value("best_effort", false);
    }

    write_file(ws + "/report.json", report.to_json().dump(2) + "\n");
    return report;
}

} // namespace localv
