// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include "localv/generator.hpp"
#include "localv/merger.hpp"
#include "localv/planner.hpp"
#include "support.hpp"

using namespace localv;

namespace {

const char* kSkeleton =
    "// === SUBTASK 1: Header ===\n"
    "module toy (\n"
    "// <ports>\n"
    ");\n"
    "// === SUBTASK 2: Logic ===\n"
    "// <logic>\n"
    "endmodule\n";

Fragment frag(const std::string& id, int k, const std::string& code) {
    Fragment f;
    f.subtask_id = id;
    f.placeholder_ids = {"subtask_" + std::to_string(k)};
    f.code_text = code;
    return f;
}

std::vector<Fragment> clean_fragments() {
    return {
        frag("header", 1,
             "// === SUBTASK 1: Header ===\n"
             "module toy (\n"
             "  input  in_a,\n"
             "  input  in_c,\n"
             "  output out_b\n"
             ");"),
        frag("logic", 2,
             "// === SUBTASK 2: Logic ===\n"
             "wire mid;\n"
             "assign mid = in_a & in_c;\n"
             "assign out_b = mid;"),
    };
}

DocumentIndex toy_index() {
    auto spec = segment_document("## ports\nin_a, in_c and out_b ports\n"
                                 "## logic\nout_b follows in_a and in_c\n"
                                 "## ready\nthe ready flag must be declared once\n");
    return build_index(spec);
}

} // namespace

TEST_CASE("splice replaces blocks and keeps skeleton boilerplate") {
    auto sk = parse_skeleton(kSkeleton);
    auto result = splice(sk, clean_fragments());
    CHECK(result.conflicts.empty());
    CHECK(result.draft.find("module toy (") != std::string::npos);
    CHECK(result.draft.find("assign out_b = mid;") != std::string::npos);
    CHECK(result.draft.find("<ports>") == std::string::npos);
    CHECK(result.draft.find("<logic>") == std::string::npos);
    // trailing endmodule preserved from the skeleton
    auto lines = split_lines(result.draft);
    CHECK(trim(lines.back()) == "endmodule");
    // provenance covers every line
    REQUIRE_FALSE(result.provenance.empty());
    CHECK(result.provenance.front().first_line == 1);
    CHECK(result.provenance.back().last_line == static_cast<int>(lines.size()));
    bool has_skeleton_prov = false, has_frag_prov = false;
    for (const auto& p : result.provenance) {
        if (p.fragment_id == "skeleton") has_skeleton_prov = true;
        if (p.fragment_id == "logic") has_frag_prov = true;
    }
    CHECK(has_skeleton_prov);
    CHECK(has_frag_prov);
}

TEST_CASE("splice with a missing fragment raises MergeCoverageError") {
    auto sk = parse_skeleton(kSkeleton);
    std::vector<Fragment> one = {clean_fragments()[0]};
    CHECK_THROWS_MATCHES(splice(sk, one), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.code() == ErrorCode::MergeCoverageError;
                         }));
}

TEST_CASE("duplicate declarations across fragments are detected") {
    auto sk = parse_skeleton(kSkeleton);
    auto frags = clean_fragments();
    frags[0].code_text += "\nwire ready;";
    frags[1].code_text += "\nwire ready;";
    auto result = splice(sk, frags);
    REQUIRE_FALSE(result.conflicts.empty());
    bool dup = false;
    for (const auto& c : result.conflicts)
        if (c.kind == MergeConflict::Kind::DuplicateDeclaration && c.identifier == "ready")
            dup = true;
    CHECK(dup);
}

TEST_CASE("cross-fragment references resolve through the spliced symbol table") {
    // fragment 2 references in_a/in_c declared by fragment 1: no conflicts
    auto sk = parse_skeleton(kSkeleton);
    auto result = splice(sk, clean_fragments());
    CHECK(result.conflicts.empty());
}

TEST_CASE("undeclared identifiers are flagged") {
    auto sk = parse_skeleton(kSkeleton);
    auto frags = clean_fragments();
    frags[1].code_text += "\nassign out_b = phantom_sig;";
    auto result = splice(sk, frags);
    bool undeclared = false;
    for (const auto& c : result.conflicts)
        if (c.kind == MergeConflict::Kind::UndeclaredIdentifier &&
            c.identifier == "phantom_sig")
            undeclared = true;
    CHECK(undeclared);
}

TEST_CASE("assigning to an input port is a port mismatch") {
    auto sk = parse_skeleton(kSkeleton);
    auto frags = clean_fragments();
    frags[1].code_text += "\nassign in_a = 1'b0;";
    auto result = splice(sk, frags);
    bool mismatch = false;
    for (const auto& c : result.conflicts)
        if (c.kind == MergeConflict::Kind::PortMismatch && c.identifier == "in_a")
            mismatch = true;
    CHECK(mismatch);
}

TEST_CASE("conflict-free merge is a provider-free pass-through") {
    auto sk = parse_skeleton(kSkeleton);
    auto cm = merge(sk, clean_fragments(), toy_index(), nullptr);
    CHECK(cm.merge_notes.empty());
    CHECK(cm.module_name == "toy");
    CHECK(cm.code_text == splice(sk, clean_fragments()).draft);
}

TEST_CASE("merging identical inputs twice is byte-identical") {
    auto sk = parse_skeleton(kSkeleton);
    auto a = merge(sk, clean_fragments(), toy_index(), nullptr);
    auto b = merge(sk, clean_fragments(), toy_index(), nullptr);
    CHECK(a.code_text == b.code_text);
}

TEST_CASE("conflicts trigger retrieval and a provider rewrite with notes") {
    auto sk = parse_skeleton(kSkeleton);
    auto frags = clean_fragments();
    frags[0].code_text += "\nwire ready;";
    frags[1].code_text += "\nwire ready;";

    const std::string fixed =
        "module toy (\n  input  in_a,\n  input  in_c,\n  output out_b\n);\n"
        "wire ready;\n"
        "wire mid;\n"
        "assign mid = in_a & in_c;\n"
        "assign out_b = mid;\n"
        "endmodule\n";
    testsupport::ScriptedProvider provider;
    provider.reply_when(
        [](const auto& messages) {
            return testsupport::prompt_contains(messages, "Detected conflicts");
        },
        "```verilog\n" + fixed + "```");
    auto cm = merge(sk, frags, toy_index(), &provider);
    CHECK(cm.code_text == fixed);
    REQUIRE(cm.merge_notes.size() == 1);
    CHECK(cm.merge_notes[0].resolution == "provider");
    CHECK(cm.merge_notes[0].conflict.find("ready") != std::string::npos);
    CHECK(cm.module_name == "toy");
}

TEST_CASE("provider failure with outstanding conflicts carries the draft") {
    auto sk = parse_skeleton(kSkeleton);
    auto frags = clean_fragments();
    frags[0].code_text += "\nwire ready;";
    frags[1].code_text += "\nwire ready;";
    testsupport::ScriptedProvider provider; // no rules: every call fails
    try {
        merge(sk, frags, toy_index(), &provider);
        FAIL("expected MergeUnresolved");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MergeUnresolved);
        CHECK(std::string(e.what()).find("module toy (") != std::string::npos);
    }
}

TEST_CASE("a rewrite that loses the envelope is rejected") {
    auto sk = parse_skeleton(kSkeleton);
    auto frags = clean_fragments();
    frags[0].code_text += "\nwire ready;";
    frags[1].code_text += "\nwire ready;";
    testsupport::ScriptedProvider provider;
    provider.reply_always("```verilog\nassign out_b = in_a;\n```"); // no module header
    CHECK_THROWS_MATCHES(merge(sk, frags, toy_index(), &provider), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.code() == ErrorCode::MergeUnresolved;
                         }));
}

TEST_CASE("the committed four-fragment scenario splices into one clean envelope") {
    ReplayProvider provider(Transcript::load(
        testsupport::fixture_path("e203_exu/transcripts/scenario.json")));
    auto spec = segment_document(testsupport::read_fixture("e203_exu/doc.md"), "e203_exu");
    auto index = build_index(spec, &provider);
    auto plan = make_plan(index, TargetModule{"e203_exu", "e203_exu"}, provider);
    auto frags = generate_all(plan, spec, index, provider);
    REQUIRE(frags.size() == 4);

    auto result = splice(plan.skeleton, frags);
    CHECK(result.conflicts.empty());
    auto ast = parse_verilog(result.draft);
    CHECK(ast.module_name == "e203_exu");
    CHECK(ast.balanced);
    int envelopes = 0;
    for (const auto& tok : vl::lex(result.draft))
        if (tok.kind == vl::TokKind::Ident && tok.text == "module") ++envelopes;
    CHECK(envelopes == 1);

    auto cm = merge(plan.skeleton, frags, index, nullptr);
    CHECK(cm.module_name == "e203_exu");
    CHECK(cm.merge_notes.empty());
}
