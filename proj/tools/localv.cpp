// SPDX-License-Identifier: Apache-2.0
//
// localv: pipeline driver for document-indexed Verilog generation plus the
// standalone information-locality analyzer and AST trace utilities.

#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "localv/corpus.hpp"
#include "localv/debug_loop.hpp"
#include "localv/doc_index.hpp"
#include "localv/errors.hpp"
#include "localv/evalharness.hpp"
#include "localv/generator.hpp"
#include "localv/locality.hpp"
#include "localv/merger.hpp"
#include "localv/patch.hpp"
#include "localv/pipeline.hpp"
#include "localv/planner.hpp"
#include "localv/providers.hpp"
#include "localv/retriever.hpp"
#include "localv/sim.hpp"
#include "localv/verilog_ast.hpp"

using localv::json;

namespace {

localv::RunConfig load_config(const std::string& config_path) {
    localv::RunConfig cfg;
    if (!config_path.empty()) {
        cfg = localv::RunConfig::load(config_path);
    } else {
        cfg.apply_env();
    }
    return cfg;
}

json segmentation_json(const localv::Specification& spec) {
    json paragraphs = json::array();
    for (const auto& p : spec.paragraphs) {
        json jp{{"index", p.index},
                {"body", p.body},
                {"char_span", {p.char_span.start, p.char_span.end}}};
        if (p.heading) jp["heading"] = *p.heading;
        paragraphs.push_back(std::move(jp));
    }
    return json{{"doc_id", spec.doc_id}, {"paragraphs", std::move(paragraphs)}};
}

json units_json(const std::vector<localv::CodeUnit>& units) {
    json arr = json::array();
    for (const auto& u : units) {
        arr.push_back({{"index", u.index},
                       {"kind", localv::unit_kind_name(u.kind)},
                       {"line_span", {u.line_span.first, u.line_span.last}},
                       {"text", u.text}});
    }
    return arr;
}

void emit(const std::string& out_path, const json& payload) {
    if (out_path.empty() || out_path == "-") {
        std::cout << payload.dump(2) << "\n";
    } else {
        localv::write_file(out_path, payload.dump(2) + "\n");
    }
}

std::set<std::string> split_csv(const std::string& csv) {
    std::set<std::string> out;
    size_t pos = 0;
    while (pos <= csv.size()) {
        size_t next = csv.find(',', pos);
        std::string item = localv::trim(
            next == std::string::npos ? csv.substr(pos) : csv.substr(pos, next - pos));
        if (!item.empty()) out.insert(item);
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"localv: locality-aware Verilog generation pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "Run configuration JSON");

    // --- segment ---
    auto* seg = app.add_subcommand("segment", "Segment a document or Verilog source to JSON");
    std::string seg_doc, seg_code, seg_out;
    bool seg_strict = false;
    seg->add_option("--doc", seg_doc, "Markdown/text document")->check(CLI::ExistingFile);
    seg->add_option("--code", seg_code, "Verilog source")->check(CLI::ExistingFile);
    seg->add_option("--out", seg_out, "Output JSON path (default stdout)");
    seg->add_flag("--strict", seg_strict, "Fail on unbalanced Verilog instead of falling back");

    // --- index ---
    auto* idx = app.add_subcommand("index", "Build the dual-level document index");
    std::string idx_doc, idx_out = "index.json";
    bool idx_no_semantic = false;
    idx->add_option("--doc", idx_doc, "Specification document")->required()->check(CLI::ExistingFile);
    idx->add_option("--out", idx_out, "Index output path");
    idx->add_flag("--no-semantic", idx_no_semantic, "Skip provider summaries (lexical only)");

    // --- locality ---
    auto* loc = app.add_subcommand("locality", "Information-locality analysis of a doc/code pair");
    std::string loc_doc, loc_code, loc_scorer = "bm25", loc_out = "report.json", loc_heatmap;
    double loc_tau = 0.1, loc_k1 = 1.2, loc_b = 0.75;
    loc->add_option("--doc", loc_doc)->required()->check(CLI::ExistingFile);
    loc->add_option("--code", loc_code)->required()->check(CLI::ExistingFile);
    loc->add_option("--scorer", loc_scorer, "bm25 or logprob")
        ->check(CLI::IsMember({"bm25", "logprob"}));
    loc->add_option("--tau", loc_tau, "Softmax temperature");
    loc->add_option("--k1", loc_k1, "BM25 k1");
    loc->add_option("--b", loc_b, "BM25 b");
    loc->add_option("--out", loc_out, "Report JSON path");
    loc->add_option("--heatmap", loc_heatmap, "Heatmap CSV/JSON path");

    // --- retrieve ---
    auto* ret = app.add_subcommand("retrieve", "Query the index for relevant sections");
    std::string ret_index, ret_query, ret_entities;
    size_t ret_budget = 8;
    ret->add_option("--index", ret_index)->required()->check(CLI::ExistingFile);
    ret->add_option("--query", ret_query, "Free-text query");
    ret->add_option("--entities", ret_entities, "Comma-separated identifiers");
    ret->add_option("--budget", ret_budget, "Max sections returned");

    // --- plan ---
    auto* pln = app.add_subcommand("plan", "Produce the skeleton + sub-task plan");
    std::string pln_index, pln_module, pln_out = "plan.json";
    pln->add_option("--index", pln_index)->required()->check(CLI::ExistingFile);
    pln->add_option("--module", pln_module, "Target module name")->required();
    pln->add_option("--out", pln_out);

    // --- generate ---
    auto* gen = app.add_subcommand("generate", "Generate fragments for every sub-task");
    std::string gen_plan, gen_doc, gen_index, gen_out = "fragments";
    gen->add_option("--plan", gen_plan)->required()->check(CLI::ExistingFile);
    gen->add_option("--doc", gen_doc)->required()->check(CLI::ExistingFile);
    gen->add_option("--index", gen_index)->required()->check(CLI::ExistingFile);
    gen->add_option("--out", gen_out, "Fragment output directory");

    // --- merge ---
    auto* mrg = app.add_subcommand("merge", "Splice fragments into a candidate module");
    std::string mrg_plan, mrg_frags, mrg_index, mrg_out = "candidate.v";
    mrg->add_option("--plan", mrg_plan)->required()->check(CLI::ExistingFile);
    mrg->add_option("--fragments", mrg_frags, "Fragment directory")->required();
    mrg->add_option("--index", mrg_index)->required()->check(CLI::ExistingFile);
    mrg->add_option("--out", mrg_out);

    // --- trace ---
    auto* trc = app.add_subcommand("trace", "Trace failing signals through the driver graph");
    std::string trc_src, trc_signals, trc_out;
    int trc_depth = 3;
    trc->add_option("--src", trc_src)->required()->check(CLI::ExistingFile);
    trc->add_option("--signals", trc_signals, "Comma-separated root signals")->required();
    trc->add_option("--depth", trc_depth, "Max trace depth");
    trc->add_option("--out", trc_out, "Trace JSON path (default stdout)");

    // --- debug ---
    auto* dbg = app.add_subcommand("debug", "Run the iterative debug loop on a candidate");
    std::string dbg_src, dbg_ws = "ws", dbg_index, dbg_out = "final.v", dbg_report = "debug.json";
    int dbg_iters = -1;
    dbg->add_option("--src", dbg_src)->required()->check(CLI::ExistingFile);
    dbg->add_option("--workspace", dbg_ws);
    dbg->add_option("--index", dbg_index)->required()->check(CLI::ExistingFile);
    dbg->add_option("--max-iters", dbg_iters, "Debug iteration budget");
    dbg->add_option("--out", dbg_out);
    dbg->add_option("--report", dbg_report);

    // --- eval ---
    auto* evl = app.add_subcommand("eval", "Aggregate task results into a suite report");
    std::string evl_suite, evl_out = "report.json", evl_csv;
    evl->add_option("--suite", evl_suite)->required()->check(CLI::ExistingFile);
    evl->add_option("--out", evl_out);
    evl->add_option("--csv", evl_csv);

    // --- run ---
    auto* run = app.add_subcommand("run", "Full pipeline: index, plan, generate, merge, debug");
    std::string run_doc, run_module, run_ws;
    bool run_resume = false;
    run->add_option("--doc", run_doc)->required()->check(CLI::ExistingFile);
    run->add_option("--module", run_module, "Target module name")->required();
    run->add_option("--workspace", run_ws, "Workspace directory (overrides config)");
    run->add_flag("--resume", run_resume, "Skip stages with persisted outputs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2; // usage errors exit 2
    }

    try {
        localv::RunConfig cfg = load_config(config_path);

        if (*seg) {
            if (seg_doc.empty() && seg_code.empty())
                throw localv::Error(localv::ErrorCode::ConfigError, "need --doc or --code");
            json out = json::object();
            if (!seg_doc.empty()) {
                auto spec = localv::segment_document(localv::read_file(seg_doc), seg_doc);
                out["document"] = segmentation_json(spec);
            }
            if (!seg_code.empty()) {
                auto units = localv::segment_verilog(localv::read_file(seg_code), seg_strict);
                out["units"] = units_json(units);
            }
            emit(seg_out, out);
        } else if (*idx) {
            auto spec = localv::segment_document(localv::read_file(idx_doc), idx_doc);
            std::unique_ptr<localv::CompletionProvider> provider;
            if (!idx_no_semantic) provider = localv::make_provider(cfg);
            auto index = localv::build_index(spec, provider.get());
            emit(idx_out, localv::index_to_json(index));
        } else if (*loc) {
            auto spec = localv::segment_document(localv::read_file(loc_doc), loc_doc);
            auto units = localv::segment_verilog(localv::read_file(loc_code));
            localv::RelevanceMatrix matrix;
            if (loc_scorer == "bm25") {
                matrix = localv::score_bm25(spec.paragraphs, units, {loc_k1, loc_b});
            } else {
                auto provider = localv::make_provider(cfg);
                if (!provider)
                    throw localv::Error(localv::ErrorCode::ProviderUnavailable,
                                        "logprob scorer needs a provider (see --config)");
                matrix = localv::score_logprob(spec.paragraphs, units, *provider);
            }
            auto report = localv::entropy_report(matrix, loc_tau);
            emit(loc_out, localv::locality_report_to_json(report));
            if (!loc_heatmap.empty()) localv::export_heatmap(matrix, report, loc_heatmap);
        } else if (*ret) {
            auto index = localv::index_from_json(json::parse(localv::read_file(ret_index)));
            localv::RetrievalQuery query;
            query.query_text = ret_query;
            query.query_entities = split_csv(ret_entities);
            query.budget = ret_budget;
            auto result = localv::retrieve(index, query, cfg.retrieval);
            json sections = json::array();
            for (size_t i = 0; i < result.paragraph_indices.size(); ++i)
                sections.push_back(
                    {{"section", localv::DocumentIndex::section_key(result.paragraph_indices[i])},
                     {"score", result.scores[i]}});
            emit("", json{{"method", result.method}, {"results", sections}});
        } else if (*pln) {
            auto index = localv::index_from_json(json::parse(localv::read_file(pln_index)));
            auto provider = localv::make_provider(cfg);
            if (!provider)
                throw localv::Error(localv::ErrorCode::ProviderUnavailable,
                                    "planning needs a provider (see --config)");
            localv::PlanOptions popts;
            popts.weights = cfg.retrieval;
            auto plan = localv::make_plan(index, {pln_module, index.doc_id}, *provider, popts);
            emit(pln_out, localv::plan_to_json(plan));
        } else if (*gen) {
            auto plan = localv::plan_from_json(json::parse(localv::read_file(gen_plan)));
            auto spec = localv::segment_document(localv::read_file(gen_doc), gen_doc);
            auto index = localv::index_from_json(json::parse(localv::read_file(gen_index)));
            auto provider = localv::make_provider(cfg);
            if (!provider)
                throw localv::Error(localv::ErrorCode::ProviderUnavailable,
                                    "generation needs a provider (see --config)");
            localv::GenerateOptions gopts;
            gopts.parallelism = cfg.parallelism;
            gopts.whole_document = cfg.whole_document;
            auto fragments = localv::generate_all(plan, spec, index, *provider, gopts);
            json manifest = json::array();
            for (size_t k = 0; k < fragments.size(); ++k) {
                const std::string rel =
                    "frag_" + std::to_string(k) + "_" + fragments[k].subtask_id + ".v";
                localv::write_file(gen_out + "/" + rel, fragments[k].code_text);
                manifest.push_back({{"file", rel},
                                    {"subtask_id", fragments[k].subtask_id},
                                    {"placeholder_ids", fragments[k].placeholder_ids},
                                    {"transcript_ref", fragments[k].transcript_ref}});
            }
            localv::write_file(gen_out + "/manifest.json", manifest.dump(2) + "\n");
        } else if (*mrg) {
            auto plan = localv::plan_from_json(json::parse(localv::read_file(mrg_plan)));
            auto index = localv::index_from_json(json::parse(localv::read_file(mrg_index)));
            std::vector<localv::Fragment> fragments;
            json manifest = json::parse(localv::read_file(mrg_frags + "/manifest.json"));
            for (const auto& je : manifest) {
                localv::Fragment f;
                f.subtask_id = je.at("subtask_id").get<std::string>();
                f.placeholder_ids = je.at("placeholder_ids").get<std::vector<std::string>>();
                f.code_text =
                    localv::read_file(mrg_frags + "/" + je.at("file").get<std::string>());
                fragments.push_back(std::move(f));
            }
            auto provider = localv::make_provider(cfg);
            auto cm = localv::merge(plan.skeleton, fragments, index, provider.get(),
                                    cfg.retrieval);
            localv::write_file(mrg_out, cm.code_text);
        } else if (*trc) {
            auto ast = localv::parse_verilog(localv::read_file(trc_src));
            auto graph = localv::build_driver_graph(ast);
            std::vector<std::string> roots;
            for (const auto& s : split_csv(trc_signals)) roots.push_back(s);
            auto report = localv::trace(graph, roots, trc_depth);
            emit(trc_out, localv::trace_to_json(report));
        } else if (*dbg) {
            auto index = localv::index_from_json(json::parse(localv::read_file(dbg_index)));
            auto provider = localv::make_provider(cfg);
            auto sim = localv::make_simulator(cfg);
            localv::DebugOptions dopts;
            dopts.t_max = dbg_iters >= 0 ? dbg_iters : cfg.t_max;
            dopts.retrieval_budget = cfg.retrieval_budget;
            dopts.weights = cfg.retrieval;
            auto state = localv::debug(localv::read_file(dbg_src), *sim, index, provider.get(),
                                       dbg_ws, dopts);
            localv::write_file(dbg_out, state.current_code);
            localv::write_file(dbg_report, localv::debug_state_to_json(state).dump(2) + "\n");
            std::cout << (state.passed ? "pass" : "best-effort") << " after "
                      << state.iterations << " iterations\n";
        } else if (*evl) {
            json suite = json::parse(localv::read_file(evl_suite));
            std::vector<localv::TaskResult> results;
            for (const auto& jt : suite.at("tasks")) {
                localv::TaskResult t;
                t.task_id = jt.at("task_id").get<std::string>();
                t.group = jt.value("group", "");
                if (jt.contains("results")) {
                    const auto& r = jt["results"];
                    t.n_samples = r.value("n_samples", 0);
                    t.n_syntax_pass = r.value("n_syntax_pass", 0);
                    t.n_func_pass = r.value("n_func_pass", 0);
                    t.debug_iters_used = r.value("debug_iters_used", 0);
                    if (r.contains("tokens_per_role"))
                        t.tokens_per_role =
                            r["tokens_per_role"].get<std::map<std::string, long>>();
                } else if (jt.contains("workspace")) {
                    json rj = json::parse(
                        localv::read_file(jt["workspace"].get<std::string>() + "/report.json"));
                    t.n_samples = 1;
                    t.n_func_pass = rj.value("passed", false) ? 1 : 0;
                    t.n_syntax_pass = t.n_func_pass;
                    t.debug_iters_used = rj.value("debug_iterations", 0);
                    if (rj.contains("tokens_per_role"))
                        t.tokens_per_role =
                            rj["tokens_per_role"].get<std::map<std::string, long>>();
                }
                results.push_back(std::move(t));
            }
            localv::AggregateOptions aopts;
            if (suite.contains("ks")) aopts.ks = suite["ks"].get<std::vector<int>>();
            auto report = localv::aggregate(results, aopts);
            emit(evl_out, localv::suite_report_to_json(report));
            if (!evl_csv.empty())
                localv::write_file(evl_csv, localv::suite_report_to_csv(report));
        } else if (*run) {
            if (!run_ws.empty()) cfg.workspace = run_ws;
            cfg.resume = run_resume;
            auto report = localv::run_pipeline(cfg, run_doc, run_module);
            std::cout << report.to_json().dump(2) << "\n";
        }
    } catch (const localv::StageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const localv::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
