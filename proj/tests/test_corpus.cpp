// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "localv/corpus.hpp"
#include "support.hpp"

using namespace localv;

TEST_CASE("segment_document splits at headings with no preamble") {
    auto spec = segment_document("## A\nalpha text\n## B\nbeta text\n## C\ngamma text\n");
    REQUIRE(spec.paragraphs.size() == 3);
    CHECK(spec.paragraphs[0].heading == "A");
    CHECK(spec.paragraphs[1].heading == "B");
    CHECK(spec.paragraphs[2].heading == "C");
    CHECK(spec.paragraphs[0].body == "## A\nalpha text\n");
}

TEST_CASE("segment_document keeps preamble as paragraph 0") {
    auto spec = segment_document("intro line\nmore intro\n## A\nsection body\n");
    REQUIRE(spec.paragraphs.size() == 2);
    CHECK_FALSE(spec.paragraphs[0].heading.has_value());
    CHECK(spec.paragraphs[0].body == "intro line\nmore intro\n");
    CHECK(spec.paragraphs[1].heading == "A");
}

TEST_CASE("segment_document splits on any heading depth") {
    auto spec = segment_document("# top\n## sub\n### subsub\n#### deep\n");
    REQUIRE(spec.paragraphs.size() == 4);
}

TEST_CASE("segment_document rejects empty input") {
    CHECK_THROWS_MATCHES(segment_document(""), Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.code() == ErrorCode::EmptyDocument;
                         }));
}

TEST_CASE("segment_document normalizes lone CR to LF before spans") {
    auto spec = segment_document("intro\r## A\rbody\n");
    REQUIRE(spec.paragraphs.size() == 2);
    CHECK(spec.paragraphs[1].heading == "A");
    // reconstruction against the normalized source
    std::string joined;
    for (const auto& p : spec.paragraphs) joined += p.body;
    CHECK(joined == spec.source_text);
}

TEST_CASE("e203_srams document aligns to its headings and keeps table rows") {
    auto spec = segment_document(testsupport::read_fixture("e203_srams_doc.md"), "e203_srams");
    std::vector<std::string> headings;
    for (const auto& p : spec.paragraphs)
        if (p.heading) headings.push_back(*p.heading);
    REQUIRE(headings.size() == spec.paragraphs.size()); // no preamble
    CHECK(headings.front() == "e203_srams Design Documentation");
    CHECK(std::find(headings.begin(), headings.end(), "1. Introduction") != headings.end());
    CHECK(std::find(headings.begin(), headings.end(), "6. Limitations") != headings.end());
    CHECK(std::find(headings.begin(), headings.end(), "ITCM RAM Interface") != headings.end());

    // interface table rows stay inside their section body
    bool found = false;
    for (const auto& p : spec.paragraphs) {
        if (p.heading == "ITCM RAM Interface") {
            found = true;
            CHECK(p.body.find("| itcm_ram_cs | Input | 1 |") != std::string::npos);
            CHECK(p.body.find("| itcm_ram_we | Input | 1 |") != std::string::npos);
        }
    }
    CHECK(found);
}

static std::string random_document(std::mt19937& rng) {
    std::uniform_int_distribution<int> n_parts(0, 18), word_len(0, 10), depth(1, 4),
        coin(0, 3);
    std::string doc;
    int parts = n_parts(rng);
    for (int i = 0; i < parts; ++i) {
        if (coin(rng) == 0) {
            doc += std::string(static_cast<size_t>(depth(rng)), '#');
            doc += " heading" + std::to_string(i);
        } else {
            int len = word_len(rng);
            for (int w = 0; w < len; ++w) doc += "word" + std::to_string(w) + " ";
        }
        if (coin(rng) != 3) doc += '\n';
    }
    return doc;
}

TEST_CASE("segment_document round trip and monotone spans hold on random docs") {
    std::mt19937 rng(41);
    int checked = 0;
    for (int t = 0; t < 300; ++t) {
        std::string doc = random_document(rng);
        if (doc.empty()) continue;
        ++checked;
        auto spec = segment_document(doc);
        std::string joined;
        size_t prev_end = 0;
        for (const auto& p : spec.paragraphs) {
            CHECK(!p.body.empty());
            CHECK(p.char_span.start == prev_end);
            CHECK(p.char_span.end > p.char_span.start);
            prev_end = p.char_span.end;
            joined += p.body;
            CHECK(p.body == spec.source_text.substr(p.char_span.start,
                                                    p.char_span.end - p.char_span.start));
        }
        REQUIRE(joined == spec.source_text);
        CHECK(spec.source_text == doc); // no CR in generator, normalization is identity

        auto again = segment_document(doc);
        REQUIRE(again.paragraphs.size() == spec.paragraphs.size());
    }
    CHECK(checked > 200);
}

TEST_CASE("segment_verilog yields one unit per assign") {
    auto units = segment_verilog("module t(input a, input b, output y, output z);\n"
                                 "assign y = a;\n"
                                 "assign z = b;\n"
                                 "endmodule\n");
    REQUIRE(units.size() == 2);
    CHECK(units[0].kind == UnitKind::ContinuousAssign);
    CHECK(units[1].kind == UnitKind::ContinuousAssign);
    CHECK(units[0].text == "assign y = a;");
}

TEST_CASE("segment_verilog counts block, assigns and instantiation as units") {
    auto units = segment_verilog(
        "module t(input clk, input a, input b, output reg q, output y, output z);\n"
        "always @(posedge clk) begin\n"
        "  q <= a & b;\n"
        "end\n"
        "assign y = a;\n"
        "assign z = b;\n"
        "sub u_sub (.x(a), .o(z));\n"
        "endmodule\n");
    REQUIRE(units.size() == 4);
    CHECK(units[0].kind == UnitKind::ProceduralBlock);
    CHECK(units[1].kind == UnitKind::ContinuousAssign);
    CHECK(units[2].kind == UnitKind::ContinuousAssign);
    CHECK(units[3].kind == UnitKind::Instantiation);
}

TEST_CASE("e203_srams golden code segments into the documented unit mix") {
    auto units = segment_verilog(testsupport::read_fixture("e203_srams_golden.v"));
    int assigns = 0, insts = 0, decls = 0, directives = 0;
    std::vector<std::string> inst_names;
    for (const auto& u : units) {
        switch (u.kind) {
            case UnitKind::ContinuousAssign: ++assigns; break;
            case UnitKind::Instantiation:
                ++insts;
                inst_names.push_back(u.text);
                break;
            case UnitKind::Declaration: ++decls; break;
            case UnitKind::Directive: ++directives; break;
            default: break;
        }
    }
    CHECK(assigns == 2);
    CHECK(insts == 2);
    CHECK(decls == 2);
    CHECK(directives >= 5); // `include plus the ifdef/endif pairs
    REQUIRE(inst_names.size() == 2);
    CHECK(inst_names[0].find("u_e203_itcm_ram") != std::string::npos);
    CHECK(inst_names[1].find("u_e203_dtcm_ram") != std::string::npos);

    // unit spans are ordered and non-overlapping
    for (size_t i = 1; i < units.size(); ++i)
        CHECK(units[i - 1].line_span.last <= units[i].line_span.first);
}

TEST_CASE("segment_verilog falls back to blank-line groups on malformed input") {
    const std::string bad = "not verilog at all\nstill not\n\nsecond group here\n";
    auto units = segment_verilog(bad);
    REQUIRE(units.size() == 2);
    CHECK(units[0].kind == UnitKind::Other);
    CHECK(units[0].text == "not verilog at all\nstill not");
    CHECK(units[1].text == "second group here");
}

TEST_CASE("segment_verilog strict mode reports unbalanced sources") {
    const std::string unbalanced =
        "module t(input a, output reg y);\nalways @(*) begin\n  y = a;\nendmodule\n";
    CHECK_THROWS_MATCHES(segment_verilog(unbalanced, true), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.code() == ErrorCode::SegmentationFailed &&
                                    std::string(e.what()).find("line") != std::string::npos;
                         }));
    // lenient mode still produces units
    CHECK_FALSE(segment_verilog(unbalanced, false).empty());
}

TEST_CASE("segment_verilog is deterministic") {
    const std::string src = testsupport::read_fixture("e203_srams_golden.v");
    auto a = segment_verilog(src);
    auto b = segment_verilog(src);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].text == b[i].text);
        CHECK(a[i].kind == b[i].kind);
    }
}
