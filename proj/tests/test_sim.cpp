// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include "localv/sim.hpp"
#include "support.hpp"

using namespace localv;

TEST_CASE("mock simulator serves scripted outcomes by attempt") {
    json fixture{{"outcomes",
                  json::array({json{{"pass", false},
                                    {"phase", "compile"},
                                    {"error_log", "syntax error line 12"}},
                               json{{"pass", true}}})}};
    MockSimulator sim(fixture);
    auto first = sim.run("module m(); endmodule", "/tmp");
    CHECK_FALSE(first.pass);
    CHECK(first.phase == SimPhase::Compile);
    CHECK(first.error_log == "syntax error line 12");
    CHECK(first.failing_signals.empty()); // compile failures carry no signals

    auto second = sim.run("module m(); endmodule", "/tmp");
    CHECK(second.pass);
    CHECK(second.failing_signals.empty());

    // beyond the script the last outcome repeats
    auto third = sim.run("module m(); endmodule", "/tmp");
    CHECK(third.pass);
    CHECK(sim.attempts() == 3);
}

TEST_CASE("mock failing signals come from the log-pattern parser") {
    json fixture{{"outcomes",
                  json::array({json{
                      {"pass", false},
                      {"phase", "simulate"},
                      {"error_log",
                       "TB: signal exu_active mismatch (expected 1, got 0)\n"
                       "TB: signal core_wfi mismatch (expected 0, got 1)\n"}}})}};
    MockSimulator sim(fixture);
    auto outcome = sim.run("x", "/tmp");
    CHECK(outcome.failing_signals == std::vector<std::string>{"exu_active", "core_wfi"});
}

TEST_CASE("mock runs are deterministic after reset") {
    auto sim = MockSimulator::from_file(
        testsupport::fixture_path("e203_exu/sim_pass_after_fix.json"));
    auto a1 = sim.run("x", "/tmp");
    auto a2 = sim.run("x", "/tmp");
    sim.reset();
    auto b1 = sim.run("x", "/tmp");
    auto b2 = sim.run("x", "/tmp");
    CHECK(a1.pass == b1.pass);
    CHECK(a1.error_log == b1.error_log);
    CHECK(a1.failing_signals == b1.failing_signals);
    CHECK(a2.pass == b2.pass);
    CHECK(a1.waveform_digest == b1.waveform_digest);
}

TEST_CASE("extract_failing_signals applies every configured pattern") {
    const std::string log = "warning\nsignal a_b mismatch at 10\nFAIL net xyz wrong\n";
    auto sigs = extract_failing_signals(
        log, {R"(signal\s+([A-Za-z_][A-Za-z0-9_$]*)\s+mismatch)",
              R"(FAIL net\s+([A-Za-z_][A-Za-z0-9_$]*))"});
    CHECK(sigs == std::vector<std::string>{"a_b", "xyz"});
}

TEST_CASE("vcd reader collects per-signal value sequences") {
    const std::string vcd =
        "$timescale 1ns $end\n"
        "$var wire 1 ! clk $end\n"
        "$var wire 8 \" bus $end\n"
        "$enddefinitions $end\n"
        "#0\n0!\nb00000000 \"\n"
        "#5\n1!\n"
        "#10\n0!\nb00001111 \"\n";
    auto digest = read_vcd(vcd);
    REQUIRE(digest.count("clk"));
    REQUIRE(digest.count("bus"));
    CHECK(digest["clk"] == std::vector<std::string>{"0", "1", "0"});
    CHECK(digest["bus"] == std::vector<std::string>{"00000000", "00001111"});
}

TEST_CASE("waveform context renders an aligned window") {
    SimulationOutcome outcome;
    outcome.waveform_digest["clk"] = {"0", "1", "0", "1"};
    outcome.has_waveform = true;
    auto table = extract_waveform_context(outcome, {"clk"}, 4);
    auto lines = split_lines(table);
    REQUIRE(lines.size() == 2);
    CHECK(lines[0].find("event") != std::string::npos);
    CHECK(lines[1].find("clk") != std::string::npos);
    CHECK(lines[1].find("0 1 0 1") != std::string::npos);
}

TEST_CASE("waveform context windows the last events") {
    SimulationOutcome outcome;
    outcome.waveform_digest["d"] = {"9", "8", "7", "6", "5"};
    outcome.has_waveform = true;
    auto table = extract_waveform_context(outcome, {"d"}, 2);
    CHECK(table.find("6 5") != std::string::npos);
    CHECK(table.find("9") == std::string::npos);
}

TEST_CASE("waveform context notes unknown signals and empty digests") {
    SimulationOutcome empty;
    CHECK(extract_waveform_context(empty, {"x"}, 4) == "(no waveform data)\n");

    SimulationOutcome outcome;
    outcome.waveform_digest["clk"] = {"0", "1"};
    outcome.has_waveform = true;
    auto table = extract_waveform_context(outcome, {"ghost", "clk"}, 4);
    CHECK(table.find("(signal ghost not in waveform)") != std::string::npos);
    CHECK(table.find("clk") != std::string::npos);
}

TEST_CASE("waveform context marks the event where two signals diverge") {
    SimulationOutcome outcome;
    outcome.waveform_digest["got"] = {"1", "1", "1", "0"};
    outcome.waveform_digest["ref"] = {"1", "1", "1", "1"};
    outcome.has_waveform = true;
    auto table = extract_waveform_context(outcome, {"got", "ref"}, 4);
    auto lines = split_lines(table);
    REQUIRE(lines.size() == 4); // header, got, ref, marker
    CHECK(lines[3].find('*') != std::string::npos);
    // the marker sits under event 3, the divergence point
    size_t star = lines[3].find('*');
    size_t ev3 = lines[0].find('3');
    CHECK(star == ev3);
}

TEST_CASE("command simulator maps compile failures to the compile phase") {
    testsupport::TempDir ws("sim");
    SimConfig cfg;
    cfg.compile_cmd = "echo 'bad syntax near line 3'; exit 1";
    cfg.run_cmd = "true";
    CommandSimulator sim(cfg);
    auto outcome = sim.run("module m(); endmodule", ws.path());
    CHECK_FALSE(outcome.pass);
    CHECK(outcome.phase == SimPhase::Compile);
    CHECK(outcome.error_log.find("bad syntax") != std::string::npos);
}

TEST_CASE("command simulator passes and fails on the run step") {
    testsupport::TempDir ws("sim");
    SimConfig cfg;
    cfg.compile_cmd = "true";
    cfg.run_cmd = "echo ok";
    CommandSimulator sim(cfg);
    auto outcome = sim.run("module m(); endmodule", ws.path());
    CHECK(outcome.pass);
    CHECK(outcome.phase == SimPhase::Simulate);

    SimConfig bad = cfg;
    bad.run_cmd = "echo 'signal foo mismatch'; exit 1";
    CommandSimulator sim2(bad);
    auto fail = sim2.run("module m(); endmodule", ws.path());
    CHECK_FALSE(fail.pass);
    CHECK(fail.failing_signals == std::vector<std::string>{"foo"});
}

TEST_CASE("command simulator substitutes {src} and writes the candidate") {
    testsupport::TempDir ws("sim");
    SimConfig cfg;
    cfg.run_cmd = "grep -q endmodule {src}";
    CommandSimulator sim(cfg);
    auto outcome = sim.run("module m(); endmodule\n", ws.path());
    CHECK(outcome.pass);
}

TEST_CASE("missing tools raise ToolUnavailable") {
    testsupport::TempDir ws("sim");
    SimConfig cfg;
    cfg.run_cmd = "definitely_not_a_real_simulator_binary_xyz";
    CommandSimulator sim(cfg);
    CHECK_THROWS_MATCHES(sim.run("x", ws.path()), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.code() == ErrorCode::ToolUnavailable;
                         }));
}

TEST_CASE("overrunning the timeout raises SimTimeout") {
    testsupport::TempDir ws("sim");
    SimConfig cfg;
    cfg.run_cmd = "sleep 5";
    cfg.timeout_s = 1;
    CommandSimulator sim(cfg);
    CHECK_THROWS_MATCHES(sim.run("x", ws.path()), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.code() == ErrorCode::SimTimeout;
                         }));
}
