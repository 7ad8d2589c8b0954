// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace localv {

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

// Okapi BM25 over pre-tokenized documents. IDF uses the +1 smoothed
// Robertson form, so scores stay non-negative; absent terms contribute zero
// through tf = 0. Queries score unique terms once.
class Bm25Index {
public:
    explicit Bm25Index(const std::vector<std::vector<std::string>>& docs, Bm25Params params = {})
        : params_(params), n_docs_(docs.size()) {
        tf_.resize(docs.size());
        dl_.resize(docs.size());
        double total = 0;
        for (size_t i = 0; i < docs.size(); ++i) {
            dl_[i] = static_cast<double>(docs[i].size());
            total += dl_[i];
            for (const auto& t : docs[i]) ++tf_[i][t];
        }
        avgdl_ = docs.empty() ? 0.0 : total / static_cast<double>(docs.size());
        for (const auto& doc : tf_)
            for (const auto& [term, freq] : doc) {
                (void)freq;
                ++df_[term];
            }
    }

    double idf(const std::string& term) const {
        auto it = df_.find(term);
        double df = (it == df_.end()) ? 0.0 : static_cast<double>(it->second);
        return std::log((static_cast<double>(n_docs_) - df + 0.5) / (df + 0.5) + 1.0);
    }

    double score(const std::set<std::string>& query_terms, size_t doc) const {
        if (doc >= tf_.size()) return 0.0;
        double s = 0.0;
        const auto& tf = tf_[doc];
        for (const auto& term : query_terms) {
            auto it = tf.find(term);
            if (it == tf.end()) continue;
            double f = static_cast<double>(it->second);
            double denom =
                f + params_.k1 * (1.0 - params_.b + params_.b * dl_[doc] / (avgdl_ > 0 ? avgdl_ : 1.0));
            s += idf(term) * f * (params_.k1 + 1.0) / denom;
        }
        return s;
    }

    size_t size() const { return n_docs_; }

private:
    Bm25Params params_;
    size_t n_docs_;
    std::vector<std::map<std::string, int>> tf_;
    std::vector<double> dl_;
    double avgdl_ = 0.0;
    std::map<std::string, int> df_;
};

} // namespace localv
