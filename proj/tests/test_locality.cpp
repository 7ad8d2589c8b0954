// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "bm25_oracle.hpp"
#include "localv/locality.hpp"
#include "support.hpp"

using namespace localv;
using Catch::Matchers::WithinAbs;

namespace {

Paragraph make_paragraph(size_t index, std::string body) {
    Paragraph p;
    p.index = index;
    p.body = std::move(body);
    return p;
}

CodeUnit make_unit(size_t index, std::string text) {
    CodeUnit u;
    u.index = index;
    u.text = std::move(text);
    return u;
}

} // namespace

TEST_CASE("bm25 scores zero for paragraphs lacking the unit's tokens") {
    std::vector<Paragraph> paras = {
        make_paragraph(0, "the fifo_full flag and fifo_wptr counter"),
        make_paragraph(1, "totally unrelated prose about timing closure"),
    };
    std::vector<CodeUnit> units = {make_unit(0, "assign fifo_full = fifo_wptr == 4'hF;")};
    auto m = score_bm25(paras, units);
    CHECK(m.at(0, 0) > 0.0);
    CHECK(m.at(1, 0) == 0.0);
}

TEST_CASE("bm25 on a single paragraph degenerates to the uniform distribution") {
    std::vector<Paragraph> paras = {make_paragraph(0, "one lonely section about a counter")};
    std::vector<CodeUnit> units = {make_unit(0, "assign q = counter;"),
                                   make_unit(1, "assign r = other;")};
    auto m = score_bm25(paras, units);
    REQUIRE(m.n_paragraphs == 1);
    REQUIRE(m.m_units == 2);
    auto rep = entropy_report(m, 0.1);
    for (size_t j = 0; j < 2; ++j) {
        auto dist = zscore_softmax(m.column(j), 0.1);
        REQUIRE(dist.probs.size() == 1);
        CHECK_THAT(dist.probs[0], WithinAbs(1.0, 1e-12));
    }
    CHECK(rep.degenerate_single_paragraph);
    CHECK(rep.per_unit_normalized[0] == 1.0);
}

TEST_CASE("bm25 empty-token unit is flagged and scored all-zero") {
    std::vector<Paragraph> paras = {make_paragraph(0, "words here"),
                                    make_paragraph(1, "more words")};
    std::vector<CodeUnit> units = {make_unit(0, "1234 5678 ... !!")};
    auto m = score_bm25(paras, units);
    REQUIRE(m.empty_query_units == std::vector<size_t>{0});
    CHECK(m.at(0, 0) == 0.0);
    CHECK(m.at(1, 0) == 0.0);
}

TEST_CASE("bm25 matches the naive reference on a hand-built toy corpus") {
    std::vector<Paragraph> paras = {
        make_paragraph(0, "adder stage with carry_out and sum_lo registers"),
        make_paragraph(1, "carry_out propagates through the lookahead tree"),
        make_paragraph(2, "the fifo section: wptr rptr and full flags"),
    };
    std::vector<CodeUnit> units = {
        make_unit(0, "assign carry_out = a & b; assign sum_lo = a ^ b;"),
        make_unit(1, "assign full = wptr == rptr;"),
    };
    Bm25Params params; // k1=1.2 b=0.75
    auto m = score_bm25(paras, units, params);
    for (size_t j = 0; j < units.size(); ++j) {
        std::vector<std::string> bodies;
        for (const auto& p : paras) bodies.push_back(p.body);
        auto expected =
            bm25_oracle::score_unit_against_all(bodies, units[j].text, params.k1, params.b);
        for (size_t i = 0; i < paras.size(); ++i)
            CHECK_THAT(m.at(i, j), WithinAbs(expected[i], 1e-9));
    }
}

TEST_CASE("bm25 equals the naive reference on random corpora") {
    std::mt19937 rng(7);
    std::uniform_int_distribution<int> n_paras(1, 6), n_units(1, 5), n_words(1, 12),
        vocab(0, 19);
    for (int t = 0; t < 60; ++t) {
        std::vector<Paragraph> paras;
        std::vector<std::string> bodies;
        int np = n_paras(rng);
        for (int i = 0; i < np; ++i) {
            std::string body;
            int w = n_words(rng);
            for (int k = 0; k < w; ++k) body += "tok" + std::to_string(vocab(rng)) + " ";
            paras.push_back(make_paragraph(static_cast<size_t>(i), body));
            bodies.push_back(body);
        }
        std::vector<CodeUnit> units;
        int nu = n_units(rng);
        for (int j = 0; j < nu; ++j) {
            std::string text;
            int w = n_words(rng);
            for (int k = 0; k < w; ++k) text += "tok" + std::to_string(vocab(rng)) + " ";
            units.push_back(make_unit(static_cast<size_t>(j), text));
        }
        auto m = score_bm25(paras, units);
        for (size_t j = 0; j < units.size(); ++j) {
            auto expected = bm25_oracle::score_unit_against_all(bodies, units[j].text, 1.2, 0.75);
            for (size_t i = 0; i < paras.size(); ++i)
                REQUIRE_THAT(m.at(i, j), WithinAbs(expected[i], 1e-9));
        }
    }
}

TEST_CASE("score_logprob averages per-token logprobs from the provider") {
    std::vector<Paragraph> paras = {make_paragraph(0, "doc a"), make_paragraph(1, "doc b")};
    std::vector<CodeUnit> units = {make_unit(0, "assign y = x;"), make_unit(1, "wire z;")};

    Transcript t;
    t.scenario = "logprob";
    auto add = [&](const std::string& prompt, const std::string& cont,
                   std::vector<double> lp) {
        Exchange e;
        e.kind = "logprobs";
        e.request_hash = fnv1a_hex(detail::canonical_logprob_request(prompt, cont));
        e.logprobs = std::move(lp);
        t.exchanges.push_back(std::move(e));
    };
    // scripted per-cell token logprobs; cell score is their mean
    add("doc a", "assign y = x;", {-1.0, -2.0, -3.0});  // -> -2.0
    add("doc a", "wire z;", {-0.5});                    // single token -> itself
    add("doc b", "assign y = x;", {-1.0, -1.0});        // -> -1.0
    add("doc b", "wire z;", {-4.0, 0.0});               // -> -2.0

    ReplayProvider provider(t);
    auto m = score_logprob(paras, units, provider);
    CHECK_THAT(m.at(0, 0), WithinAbs(-2.0, 1e-12));
    CHECK_THAT(m.at(0, 1), WithinAbs(-0.5, 1e-12));
    CHECK_THAT(m.at(1, 0), WithinAbs(-1.0, 1e-12));
    CHECK_THAT(m.at(1, 1), WithinAbs(-2.0, 1e-12));
}

TEST_CASE("score_logprob constant scripted values give a constant matrix") {
    std::vector<Paragraph> paras = {make_paragraph(0, "p0"), make_paragraph(1, "p1")};
    std::vector<CodeUnit> units = {make_unit(0, "assign a = b;")};
    Transcript t;
    for (const auto* doc : {"p0", "p1"}) {
        Exchange e;
        e.kind = "logprobs";
        e.request_hash = fnv1a_hex(detail::canonical_logprob_request(doc, "assign a = b;"));
        e.logprobs = std::vector<double>{-1.0, -1.0, -1.0, -1.0};
        t.exchanges.push_back(std::move(e));
    }
    ReplayProvider provider(t);
    auto m = score_logprob(paras, units, provider);
    CHECK_THAT(m.at(0, 0), WithinAbs(-1.0, 1e-12));
    CHECK_THAT(m.at(1, 0), WithinAbs(-1.0, 1e-12));
}

TEST_CASE("score_logprob wraps provider failures with the failing cell") {
    std::vector<Paragraph> paras = {make_paragraph(0, "p0")};
    std::vector<CodeUnit> units = {make_unit(0, "assign a = b;")};
    Transcript empty;
    ReplayProvider provider(empty);
    CHECK_THROWS_MATCHES(score_logprob(paras, units, provider), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.code() == ErrorCode::ProviderUnavailable &&
                                    std::string(e.what()).find("(0,0)") != std::string::npos;
                         }));
}

TEST_CASE("zscore_softmax degenerate cases") {
    auto flat = zscore_softmax(std::vector<double>{1, 1, 1}, 0.1);
    REQUIRE(flat.probs.size() == 3);
    for (double p : flat.probs) CHECK_THAT(p, WithinAbs(1.0 / 3.0, 1e-12));

    auto single = zscore_softmax(std::vector<double>{5}, 0.7);
    REQUIRE(single.probs == std::vector<double>{1.0});
}

TEST_CASE("zscore_softmax closed form for [2,0] at tau 0.1") {
    auto dist = zscore_softmax(std::vector<double>{2, 0}, 0.1);
    // z = [1,-1] with population sigma, scaled by 1/tau -> softmax([10,-10])
    const double expected_hi = 1.0 / (1.0 + std::exp(-20.0));
    const double expected_lo = std::exp(-20.0) / (1.0 + std::exp(-20.0));
    CHECK_THAT(dist.probs[0], WithinAbs(expected_hi, 1e-15));
    CHECK_THAT(dist.probs[1], WithinAbs(expected_lo, 1e-15));
    CHECK_THAT(dist.probs[1], WithinAbs(2.06e-9, 1e-10));
}

TEST_CASE("zscore_softmax rejects non-finite scores") {
    CHECK_THROWS_MATCHES(
        zscore_softmax(std::vector<double>{1.0, std::numeric_limits<double>::quiet_NaN()}, 0.1),
        Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
            return e.code() == ErrorCode::NonFiniteScore;
        }));
}

TEST_CASE("entropy of uniform, delta and mixed distributions") {
    CHECK_THAT(entropy_bits(std::vector<double>{0.25, 0.25, 0.25, 0.25}), WithinAbs(2.0, 1e-12));
    CHECK_THAT(entropy_bits(std::vector<double>{1.0, 0.0, 0.0}), WithinAbs(0.0, 1e-12));
    const double h = entropy_bits(std::vector<double>{0.5, 0.25, 0.25});
    CHECK_THAT(h, WithinAbs(1.5, 1e-12));
    CHECK_THAT(h / std::log2(3.0), WithinAbs(0.9464, 5e-5));
}

TEST_CASE("entropy_report normalizes by log2 N and averages across units") {
    // build a matrix whose first column is flat (max entropy) and second peaked
    RelevanceMatrix m;
    m.n_paragraphs = 4;
    m.m_units = 2;
    m.scorer_id = "test";
    m.scores = {
        1, 9, //
        1, 0, //
        1, 0, //
        1, 0, //
    };
    auto rep = entropy_report(m, 0.1);
    REQUIRE(rep.per_unit_normalized.size() == 2);
    CHECK_THAT(rep.per_unit_normalized[0], WithinAbs(1.0, 1e-12)); // sigma=0 -> uniform
    CHECK(rep.per_unit_normalized[1] < 0.1);
    CHECK_THAT(rep.corpus_average,
               WithinAbs((rep.per_unit_normalized[0] + rep.per_unit_normalized[1]) / 2, 1e-12));
}

TEST_CASE("probability sums and normalized entropy bounds hold on random columns") {
    std::mt19937 rng(123);
    std::uniform_real_distribution<double> val(-50, 50);
    std::uniform_int_distribution<int> len(2, 40);
    for (int t = 0; t < 500; ++t) {
        std::vector<double> col(static_cast<size_t>(len(rng)));
        for (auto& v : col) v = val(rng);
        auto dist = zscore_softmax(col, 0.1);
        double sum = 0;
        for (double p : dist.probs) {
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
            sum += p;
        }
        REQUIRE_THAT(sum, WithinAbs(1.0, 1e-9));
        double hn = entropy_bits(dist.probs) / std::log2(static_cast<double>(col.size()));
        REQUIRE(hn >= 0.0);
        REQUIRE(hn <= 1.0 + 1e-12);
    }
}

TEST_CASE("zscore_softmax is invariant to positive affine transforms") {
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> val(-10, 10), scale(0.1, 25.0), shift(-100, 100);
    std::uniform_int_distribution<int> len(2, 20);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> col(static_cast<size_t>(len(rng)));
        for (auto& v : col) v = val(rng);
        double a = scale(rng), b = shift(rng);
        std::vector<double> transformed(col.size());
        for (size_t i = 0; i < col.size(); ++i) transformed[i] = a * col[i] + b;
        auto d0 = zscore_softmax(col, 0.1);
        auto d1 = zscore_softmax(transformed, 0.1);
        for (size_t i = 0; i < col.size(); ++i)
            REQUIRE_THAT(d1.probs[i], WithinAbs(d0.probs[i], 1e-9));
    }
}

TEST_CASE("lowering the temperature never increases entropy") {
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> val(-5, 5);
    std::uniform_int_distribution<int> len(2, 16);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> col(static_cast<size_t>(len(rng)));
        for (auto& v : col) v = val(rng);
        double h_hot = entropy_bits(zscore_softmax(col, 1.0).probs);
        double h_cold = entropy_bits(zscore_softmax(col, 0.1).probs);
        REQUIRE(h_cold <= h_hot + 1e-9);
    }
}

TEST_CASE("heatmap scales each column to [0,1] and constant columns to zero") {
    RelevanceMatrix m;
    m.n_paragraphs = 3;
    m.m_units = 2;
    m.scores = {
        2, 7, //
        4, 7, //
        6, 7, //
    };
    auto grid = heatmap_grid(m);
    CHECK_THAT(grid[0 * 2 + 0], WithinAbs(0.0, 1e-12));
    CHECK_THAT(grid[1 * 2 + 0], WithinAbs(0.5, 1e-12));
    CHECK_THAT(grid[2 * 2 + 0], WithinAbs(1.0, 1e-12));
    for (size_t i = 0; i < 3; ++i) CHECK(grid[i * 2 + 1] == 0.0); // constant column

    RelevanceMatrix one;
    one.n_paragraphs = 1;
    one.m_units = 1;
    one.scores = {42.0};
    CHECK(heatmap_grid(one)[0] == 0.0);
}

TEST_CASE("exported heatmap re-reads to an independent rescaling") {
    testsupport::TempDir tmp("heatmap");
    std::vector<Paragraph> paras = {
        make_paragraph(0, "alpha beta gamma"),
        make_paragraph(1, "alpha alpha delta"),
        make_paragraph(2, "epsilon zeta"),
    };
    std::vector<CodeUnit> units = {make_unit(0, "assign x = alpha;"),
                                   make_unit(1, "assign y = epsilon & zeta;")};
    auto m = score_bm25(paras, units);
    auto rep = entropy_report(m, 0.1);

    const std::string path = tmp.file("grid.csv");
    export_heatmap(m, rep, path);
    std::string csv = read_file(path);

    // independent recomputation of per-column min-max scaling
    auto lines = split_lines(csv);
    REQUIRE(lines.size() == 1 + 3 + 1 + 1); // header, rows, H_norm, H_bar_norm
    for (size_t i = 0; i < 3; ++i) {
        auto cells = lines[i + 1];
        double lo = std::min({m.at(0, 0), m.at(1, 0), m.at(2, 0)});
        double hi = std::max({m.at(0, 0), m.at(1, 0), m.at(2, 0)});
        double expect = hi > lo ? (m.at(i, 0) - lo) / (hi - lo) : 0.0;
        double got = std::stod(cells.substr(cells.find(',') + 1));
        REQUIRE_THAT(got, WithinAbs(expect, 1e-9));
    }
    CHECK(lines[4].rfind("H_norm,", 0) == 0);
    CHECK(lines[5].rfind("H_bar_norm,", 0) == 0);
    double avg = std::stod(lines[5].substr(lines[5].find(',') + 1));
    CHECK_THAT(avg, WithinAbs(rep.corpus_average, 1e-9));

    // JSON flavor carries the same grid
    const std::string jpath = tmp.file("grid.json");
    export_heatmap(m, rep, jpath);
    auto j = json::parse(read_file(jpath));
    auto grid = heatmap_grid(m);
    for (size_t i = 0; i < 3; ++i)
        for (size_t k = 0; k < 2; ++k)
            REQUIRE_THAT(j["grid"][i][k].get<double>(), WithinAbs(grid[i * 2 + k], 1e-12));
}
