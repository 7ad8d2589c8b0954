// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "localv/debug_loop.hpp"
#include "localv/errors.hpp"

namespace localv {

struct TaskResult {
    std::string task_id;
    std::string group; // IP family, e.g. "SDC" | "AES" | "E203"
    int n_samples = 0;
    int n_syntax_pass = 0;
    int n_func_pass = 0;
    std::map<std::string, long> tokens_per_role;
    int debug_iters_used = 0;
};

/// Unbiased estimator 1 - C(n-c, k)/C(n, k), evaluated in log space.
inline double pass_at_k(int n, int c, int k) {
    if (k < 1 || k > n) throw Error(ErrorCode::InvalidK, "need 1 <= k <= n");
    if (c < 0 || c > n) throw Error(ErrorCode::InvalidK, "need 0 <= c <= n");
    if (c == 0) return 0.0;
    if (n - c < k) return 1.0;
    // C(n-c, k)/C(n, k) = exp(lgamma terms)
    double log_ratio = std::lgamma(n - c + 1.0) - std::lgamma(n - c - k + 1.0) -
                       (std::lgamma(n + 1.0) - std::lgamma(n - k + 1.0));
    return 1.0 - std::exp(log_ratio);
}

struct GroupStats {
    double syntax_rate = 0.0; // mean per-task Pass@1
    double func_rate = 0.0;
    size_t n_tasks = 0;
};

struct AggregateOptions {
    std::vector<int> ks = {1};
    bool group_weighted_all = false; // "ALL" averages groups instead of tasks
};

struct SuiteReport {
    std::vector<TaskResult> tasks;
    std::map<std::string, GroupStats> groups;
    GroupStats overall;
    std::map<int, double> func_pass_at_k; // task-averaged
    std::map<std::string, long> tokens_per_role;
};

inline SuiteReport aggregate(const std::vector<TaskResult>& results,
                             const AggregateOptions& options = {}) {
    if (results.empty()) throw Error(ErrorCode::EmptySuite, "no task results");
    SuiteReport rep;
    rep.tasks = results;
    std::map<std::string, std::vector<const TaskResult*>> by_group;
    for (const auto& t : results) {
        if (t.n_samples <= 0)
            throw Error(ErrorCode::EmptySuite, "task " + t.task_id + " has no samples");
        by_group[t.group.empty() ? "ALL" : t.group].push_back(&t);
        for (const auto& [role, n] : t.tokens_per_role) rep.tokens_per_role[role] += n;
    }
    auto rate = [](const TaskResult& t, bool syntax) {
        int c = syntax ? t.n_syntax_pass : t.n_func_pass;
        return static_cast<double>(c) / static_cast<double>(t.n_samples);
    };
    for (const auto& [group, tasks] : by_group) {
        GroupStats g;
        g.n_tasks = tasks.size();
        for (const auto* t : tasks) {
            g.syntax_rate += rate(*t, true);
            g.func_rate += rate(*t, false);
        }
        g.syntax_rate /= static_cast<double>(tasks.size());
        g.func_rate /= static_cast<double>(tasks.size());
        rep.groups[group] = g;
    }
    if (options.group_weighted_all) {
        for (const auto& [group, g] : rep.groups) {
            (void)group;
            rep.overall.syntax_rate += g.syntax_rate;
            rep.overall.func_rate += g.func_rate;
        }
        rep.overall.syntax_rate /= static_cast<double>(rep.groups.size());
        rep.overall.func_rate /= static_cast<double>(rep.groups.size());
        rep.overall.n_tasks = results.size();
    } else {
        for (const auto& t : results) {
            rep.overall.syntax_rate += rate(t, true);
            rep.overall.func_rate += rate(t, false);
        }
        rep.overall.syntax_rate /= static_cast<double>(results.size());
        rep.overall.func_rate /= static_cast<double>(results.size());
        rep.overall.n_tasks = results.size();
    }
    for (int k : options.ks) {
        double sum = 0;
        size_t counted = 0;
        for (const auto& t : results) {
            if (k > t.n_samples) continue;
            sum += pass_at_k(t.n_samples, t.n_func_pass, k);
            ++counted;
        }
        if (counted) rep.func_pass_at_k[k] = sum / static_cast<double>(counted);
    }
    return rep;
}

struct TokenReport {
    std::map<std::string, long> per_role;       // planner/retriever/rtl/merger/debugger
    std::vector<long> cumulative_by_iteration;  // [0] = pre-debug total, then +iteration
};

inline TokenReport token_report(const std::map<std::string, long>& stage_tokens,
                                const DebugState& debug_state) {
    TokenReport rep;
    rep.per_role = stage_tokens;
    long base = 0;
    for (const auto& [role, n] : stage_tokens)
        if (role != "debugger") base += n;
    long cum = base;
    rep.cumulative_by_iteration.push_back(cum);
    long debugger = 0;
    for (const auto& rec : debug_state.history) {
        debugger += rec.tokens.total();
        cum += rec.tokens.total();
        rep.cumulative_by_iteration.push_back(cum);
    }
    rep.per_role["debugger"] += debugger;
    return rep;
}

inline json suite_report_to_json(const SuiteReport& rep) {
    json tasks = json::array();
    for (const auto& t : rep.tasks) {
        tasks.push_back({{"task_id", t.task_id},
                         {"group", t.group},
                         {"n_samples", t.n_samples},
                         {"n_syntax_pass", t.n_syntax_pass},
                         {"n_func_pass", t.n_func_pass},
                         {"tokens_per_role", t.tokens_per_role},
                         {"debug_iters_used", t.debug_iters_used}});
    }
    json groups = json::object();
    for (const auto& [name, g] : rep.groups)
        groups[name] = {{"syntax_rate", g.syntax_rate},
                        {"func_rate", g.func_rate},
                        {"n_tasks", g.n_tasks}};
    json patk = json::object();
    for (const auto& [k, v] : rep.func_pass_at_k) patk[std::to_string(k)] = v;
    return json{{"tasks", std::move(tasks)},
                {"groups", std::move(groups)},
                {"overall",
                 {{"syntax_rate", rep.overall.syntax_rate},
                  {"func_rate", rep.overall.func_rate},
                  {"n_tasks", rep.overall.n_tasks}}},
                {"func_pass_at_k", std::move(patk)},
                {"tokens_per_role", rep.tokens_per_role}};
}

inline std::string suite_report_to_csv(const SuiteReport& rep) {
    std::string csv = "task_id,group,n_samples,n_syntax_pass,n_func_pass,debug_iters_used\n";
    for (const auto& t : rep.tasks) {
        csv += t.task_id + "," + t.group + "," + std::to_string(t.n_samples) + "," +
               std::to_string(t.n_syntax_pass) + "," + std::to_string(t.n_func_pass) + "," +
               std::to_string(t.debug_iters_used) + "\n";
    }
    return csv;
}

} // namespace localv
