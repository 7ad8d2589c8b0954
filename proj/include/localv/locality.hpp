// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "localv/bm25.hpp"
#include "localv/corpus.hpp"
#include "localv/errors.hpp"
#include "localv/providers.hpp"
#include "localv/text.hpp"

namespace localv {

// Information-locality metric: per-unit relevance scores over paragraphs are
// z-scored, softmaxed into a source distribution, and summarized as
// normalized entropy averaged across units.

struct RelevanceMatrix {
    size_t n_paragraphs = 0;
    size_t m_units = 0;
    std::vector<double> scores; // row-major: scores[i * m_units + j]
    std::string scorer_id;
    std::vector<size_t> empty_query_units; // columns with no query tokens (all-zero)

    double at(size_t i, size_t j) const { return scores[i * m_units + j]; }
    double& at(size_t i, size_t j) { return scores[i * m_units + j]; }

    std::vector<double> column(size_t j) const {
        std::vector<double> col(n_paragraphs);
        for (size_t i = 0; i < n_paragraphs; ++i) col[i] = at(i, j);
        return col;
    }
};

struct SourceDistribution {
    std::vector<double> probs;
    double temperature = 0.1;
};

struct LocalityReport {
    std::vector<double> per_unit_entropy;    // bits
    std::vector<double> per_unit_normalized; // H / log2(N)
    double corpus_average = 0.0;
    size_t n = 0;
    size_t m = 0;
    double tau = 0.1;
    std::string scorer_id;
    bool degenerate_single_paragraph = false; // N == 1: H_norm conventionally 1.0
};

inline RelevanceMatrix score_bm25(const std::vector<Paragraph>& paragraphs,
                                  const std::vector<CodeUnit>& units,
                                  Bm25Params params = {}) {
    RelevanceMatrix m;
    m.n_paragraphs = paragraphs.size();
    m.m_units = units.size();
    m.scorer_id = "bm25";
    m.scores.assign(m.n_paragraphs * m.m_units, 0.0);

    std::vector<std::vector<std::string>> docs;
    docs.reserve(paragraphs.size());
    for (const auto& p : paragraphs) docs.push_back(identifier_tokens(p.body));
    Bm25Index index(docs, params);

    for (size_t j = 0; j < units.size(); ++j) {
        auto toks = identifier_tokens(units[j].text);
        std::set<std::string> query(toks.begin(), toks.end());
        if (query.empty()) {
            m.empty_query_units.push_back(j);
            continue;
        }
        for (size_t i = 0; i < paragraphs.size(); ++i) m.at(i, j) = index.score(query, i);
    }
    return m;
}

inline RelevanceMatrix score_logprob(const std::vector<Paragraph>& paragraphs,
                                     const std::vector<CodeUnit>& units,
                                     CompletionProvider& provider) {
    RelevanceMatrix m;
    m.n_paragraphs = paragraphs.size();
    m.m_units = units.size();
    m.scorer_id = "logprob:" + provider.model_id();
    m.scores.assign(m.n_paragraphs * m.m_units, 0.0);
    std::set<size_t> flagged;
    for (size_t i = 0; i < paragraphs.size(); ++i) {
        for (size_t j = 0; j < units.size(); ++j) {
            std::vector<double> lp;
            try {
                lp = provider.logprobs(paragraphs[i].body, units[j].text);
            } catch (const Error& e) {
                throw Error(ErrorCode::ProviderUnavailable,
                            "logprob scoring failed at cell (" + std::to_string(i) + "," +
                                std::to_string(j) + "): " + e.what());
            }
            if (lp.empty()) {
                flagged.insert(j);
                continue;
            }
            double sum = 0;
            for (double v : lp) sum += v;
            m.at(i, j) = sum / static_cast<double>(lp.size());
        }
    }
    m.empty_query_units.assign(flagged.begin(), flagged.end());
    return m;
}

/// Z-score (population sigma) then temperature softmax with max-subtraction.
/// Flat columns (sigma = 0) and single-paragraph corpora yield the uniform
/// distribution.
inline SourceDistribution zscore_softmax(std::span<const double> column, double temperature) {
    if (temperature <= 0.0) throw Error(ErrorCode::ConfigError, "temperature must be positive");
    const size_t n = column.size();
    if (n == 0) throw Error(ErrorCode::ConfigError, "empty score column");
    for (double v : column)
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteScore, "non-finite score");

    SourceDistribution dist;
    dist.temperature = temperature;
    if (n == 1) {
        dist.probs = {1.0};
        return dist;
    }
    double mu = 0;
    for (double v : column) mu += v;
    mu /= static_cast<double>(n);
    double var = 0;
    for (double v : column) var += (v - mu) * (v - mu);
    var /= static_cast<double>(n);
    double sigma = std::sqrt(var);
    if (sigma == 0.0) {
        dist.probs.assign(n, 1.0 / static_cast<double>(n));
        return dist;
    }
    std::vector<double> z(n);
    double zmax = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < n; ++i) {
        z[i] = (column[i] - mu) / sigma / temperature;
        zmax = std::max(zmax, z[i]);
    }
    double denom = 0;
    dist.probs.resize(n);
    for (size_t i = 0; i < n; ++i) {
        dist.probs[i] = std::exp(z[i] - zmax);
        denom += dist.probs[i];
    }
    for (double& p : dist.probs) p /= denom;
    return dist;
}

inline double entropy_bits(std::span<const double> probs) {
    double h = 0;
    for (double p : probs)
        if (p > 0) h -= p * std::log2(p);
    return h;
}

inline LocalityReport entropy_report(const RelevanceMatrix& matrix, double temperature) {
    LocalityReport rep;
    rep.n = matrix.n_paragraphs;
    rep.m = matrix.m_units;
    rep.tau = temperature;
    rep.scorer_id = matrix.scorer_id;
    rep.degenerate_single_paragraph = matrix.n_paragraphs == 1;
    const double hmax = matrix.n_paragraphs >= 2
                            ? std::log2(static_cast<double>(matrix.n_paragraphs))
                            : 0.0;
    double total = 0;
    for (size_t j = 0; j < matrix.m_units; ++j) {
        auto col = matrix.column(j);
        auto dist = zscore_softmax(col, temperature);
        double h = entropy_bits(dist.probs);
        double hn = rep.degenerate_single_paragraph ? 1.0 : (hmax > 0 ? h / hmax : 0.0);
        rep.per_unit_entropy.push_back(h);
        rep.per_unit_normalized.push_back(hn);
        total += hn;
    }
    rep.corpus_average = matrix.m_units ? total / static_cast<double>(matrix.m_units) : 0.0;
    return rep;
}

inline json locality_report_to_json(const LocalityReport& rep) {
    return json{{"n", rep.n},
                {"m", rep.m},
                {"tau", rep.tau},
                {"scorer_id", rep.scorer_id},
                {"per_unit_entropy", rep.per_unit_entropy},
                {"per_unit_normalized", rep.per_unit_normalized},
                {"corpus_average", rep.corpus_average},
                {"degenerate_single_paragraph", rep.degenerate_single_paragraph}};
}

/// Per-column min-max scaling to [0,1]; constant columns scale to all zeros.
inline std::vector<double> heatmap_grid(const RelevanceMatrix& matrix) {
    std::vector<double> grid(matrix.scores.size(), 0.0);
    for (size_t j = 0; j < matrix.m_units; ++j) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < matrix.n_paragraphs; ++i) {
            lo = std::min(lo, matrix.at(i, j));
            hi = std::max(hi, matrix.at(i, j));
        }
        const double range = hi - lo;
        for (size_t i = 0; i < matrix.n_paragraphs; ++i) {
            grid[i * matrix.m_units + j] = range > 0 ? (matrix.at(i, j) - lo) / range : 0.0;
        }
    }
    return grid;
}

/// CSV layout: header row of unit labels, one row per paragraph, then a
/// per-unit H_norm row and the corpus average. A .json path writes the same
/// content as an object.
inline void export_heatmap(const RelevanceMatrix& matrix, const LocalityReport& report,
                           const std::string& path) {
    auto grid = heatmap_grid(matrix);
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
        json rows = json::array();
        for (size_t i = 0; i < matrix.n_paragraphs; ++i) {
            json row = json::array();
            for (size_t j = 0; j < matrix.m_units; ++j)
                row.push_back(grid[i * matrix.m_units + j]);
            rows.push_back(std::move(row));
        }
        json out{{"grid", std::move(rows)},
                 {"per_unit_normalized", report.per_unit_normalized},
                 {"corpus_average", report.corpus_average}};
        write_file(path, out.dump(2) + "\n");
        return;
    }
    std::string csv;
    char buf[64];
    csv += "paragraph";
    for (size_t j = 0; j < matrix.m_units; ++j) {
        std::snprintf(buf, sizeof(buf), ",c%zu", j);
        csv += buf;
    }
    csv += '\n';
    for (size_t i = 0; i < matrix.n_paragraphs; ++i) {
        std::snprintf(buf, sizeof(buf), "d%zu", i);
        csv += buf;
        for (size_t j = 0; j < matrix.m_units; ++j) {
            std::snprintf(buf, sizeof(buf), ",%.12g", grid[i * matrix.m_units + j]);
            csv += buf;
        }
        csv += '\n';
    }
    csv += "H_norm";
    for (size_t j = 0; j < matrix.m_units; ++j) {
        std::snprintf(buf, sizeof(buf), ",%.12g", report.per_unit_normalized[j]);
        csv += buf;
    }
    csv += '\n';
    std::snprintf(buf, sizeof(buf), "H_bar_norm,%.12g\n", report.corpus_average);
    csv += buf;
    write_file(path, csv);
}

} // namespace localv
