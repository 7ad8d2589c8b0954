// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "localv/bm25.hpp"
#include "localv/doc_index.hpp"
#include "localv/errors.hpp"
#include "localv/text.hpp"

namespace localv {

enum class QueryPurpose { Planning, Merging, Debugging };

struct RetrievalQuery {
    QueryPurpose purpose = QueryPurpose::Planning;
    std::string query_text;
    std::set<std::string> query_entities;
    size_t budget = 8;
};

struct RetrievalResult {
    std::vector<size_t> paragraph_indices; // score-ordered
    std::vector<double> scores;            // non-increasing
    std::string method = "hybrid";
};

struct RetrievalWeights {
    double w_lex = 0.6;
    double w_sem = 0.4;
    bool strict = true; // zero-score paragraphs never returned
    Bm25Params bm25;
};

namespace detail {

inline double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 0.0;
    size_t inter = 0;
    for (const auto& x : a)
        if (b.count(x)) ++inter;
    size_t uni = a.size() + b.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

} // namespace detail

/// Hybrid scoring: entity-overlap Jaccard against the lexical sets plus BM25
/// of the query text against summary + body. Both channels are normalized by
/// their per-query maximum so the weights compare like with like. Ties break
/// by ascending paragraph index, so results are reproducible.
inline RetrievalResult retrieve(const DocumentIndex& index, const RetrievalQuery& query,
                                const RetrievalWeights& weights = {}) {
    if (query.budget < 1) throw Error(ErrorCode::ConfigError, "budget must be >= 1");
    if (index.entries.empty()) throw Error(ErrorCode::ConfigError, "empty index");

    std::vector<std::vector<std::string>> docs;
    docs.reserve(index.entries.size());
    for (size_t i = 0; i < index.entries.size(); ++i) {
        std::string text = index.entries[i].semantic_summary;
        if (i < index.paragraph_bodies.size()) {
            text += "\n";
            text += index.paragraph_bodies[i];
        }
        docs.push_back(identifier_tokens(text));
    }
    Bm25Index bm25(docs, weights.bm25);
    auto qtoks = identifier_tokens(query.query_text);
    std::set<std::string> qset(qtoks.begin(), qtoks.end());

    std::vector<double> lex(index.entries.size()), sem(index.entries.size());
    double lex_max = 0, sem_max = 0;
    for (size_t i = 0; i < index.entries.size(); ++i) {
        lex[i] = detail::jaccard(query.query_entities, index.entries[i].lexical.all());
        sem[i] = qset.empty() ? 0.0 : bm25.score(qset, i);
        lex_max = std::max(lex_max, lex[i]);
        sem_max = std::max(sem_max, sem[i]);
    }
    std::vector<std::pair<double, size_t>> ranked;
    for (size_t i = 0; i < index.entries.size(); ++i) {
        double score = weights.w_lex * (lex_max > 0 ? lex[i] / lex_max : 0.0) +
                       weights.w_sem * (sem_max > 0 ? sem[i] / sem_max : 0.0);
        ranked.push_back({score, i});
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });

    RetrievalResult result;
    result.method = "hybrid";
    for (const auto& [score, idx] : ranked) {
        if (result.paragraph_indices.size() >= query.budget) break;
        if (weights.strict && score <= 0.0) continue;
        result.paragraph_indices.push_back(idx);
        result.scores.push_back(score);
    }
    return result;
}

struct RetrievalScore {
    double precision = 0.0;
    double recall = 0.0;
    bool empty_prediction = false; // precision 1.0 by convention when flagged
};

inline RetrievalScore score_retrieval(const RetrievalResult& predicted,
                                      const std::set<size_t>& golden) {
    if (golden.empty()) throw Error(ErrorCode::ConfigError, "golden set must be non-empty");
    RetrievalScore s;
    if (predicted.paragraph_indices.empty()) {
        s.empty_prediction = true;
        s.precision = 1.0;
        s.recall = 0.0;
        return s;
    }
    size_t hit = 0;
    for (size_t p : predicted.paragraph_indices)
        if (golden.count(p)) ++hit;
    s.precision = static_cast<double>(hit) / static_cast<double>(predicted.paragraph_indices.size());
    s.recall = static_cast<double>(hit) / static_cast<double>(golden.size());
    return s;
}

} // namespace localv
