#include <doctest.h>

#include <filesystem>
#include <stdexcept>
#include <string>

#include "cprep/errors.hpp"
#include "cprep/rm_text.hpp"

using namespace cprep;

namespace {

const char* kOrder2 =
    "SYMBOLS: P1, P2\n"
    "STATES: u0, u1, u2\n"
    "INITIAL: u0\n"
    "TERMINAL: u2\n"
    "TRANSITIONS:\n"
    "(u0, P1) --> next=u1; r=0\n"
    "(u0, not P1) --> next=u0; r=0\n"
    "(u1, P2) --> next=u2; r=1\n"
    "(u1, not P2) --> next=u1; r=0\n";

int parse_error_line(const std::string& text) {
  try {
    parse_rm(text);
  } catch (const ParseError& error) {
    return error.line();
  }
  return -1;  // no error raised
}

}  // namespace

TEST_SUITE("rm_text") {
  TEST_CASE("parses the order-2 machine") {
    const RewardMachine rm = parse_rm(kOrder2);
    CHECK(rm.state_count() == 3);
    CHECK(rm.vocabulary.size() == 2);
    CHECK(rm.initial == 0);
    CHECK(rm.is_terminal(2));
    CHECK_FALSE(rm.is_terminal(0));
    CHECK(rm.transition_count() == 4);
    REQUIRE(rm.outgoing[0].size() == 2);
    CHECK(rm.outgoing[0][0].guard.positives == std::vector<int>{0});
    CHECK(rm.outgoing[0][1].guard.negatives == std::vector<int>{0});
    CHECK(rm.outgoing[1][0].reward == doctest::Approx(1.0));
    CHECK(rm.outgoing[1][1].reward == 0.0);
    CHECK(rm.state_id("u1") == 1);
    CHECK_THROWS_AS(rm.state_id("nope"), std::invalid_argument);
  }

  TEST_CASE("comments and blank lines are ignored everywhere") {
    const std::string text =
        "# leading comment\n"
        "\n"
        "SYMBOLS: A   # trailing comment\n"
        "STATES: u0, u1\n"
        "\n"
        "INITIAL: u0\n"
        "TERMINAL: u1\n"
        "TRANSITIONS:\n"
        "# comment between transitions\n"
        "(u0, A) --> next=u1; r=1\n";
    const RewardMachine rm = parse_rm(text);
    CHECK(rm.vocabulary.size() == 1);
    CHECK(rm.transition_count() == 1);
  }

  TEST_CASE("optional trailing semicolon after the reward is accepted") {
    const RewardMachine rm = parse_rm(
        "SYMBOLS: A\n"
        "STATES: u0, u1\n"
        "INITIAL: u0\n"
        "TERMINAL: u1\n"
        "TRANSITIONS:\n"
        "(u0, A) --> next=u1; r=0.5;\n");
    CHECK(rm.outgoing[0][0].reward == doctest::Approx(0.5));
  }

  TEST_CASE("failures carry 1-based source line numbers") {
    SUBCASE("sections out of order") {
      CHECK(parse_error_line("STATES: u0\nSYMBOLS: A\n") == 1);
    }
    SUBCASE("missing section at end of input") {
      CHECK(parse_error_line("SYMBOLS: A\nSTATES: u0\n") == 2);
    }
    SUBCASE("undeclared symbol in a guard") {
      const std::string text =
          "SYMBOLS: A\n"
          "STATES: u0, u1\n"
          "INITIAL: u0\n"
          "TERMINAL: u1\n"
          "TRANSITIONS:\n"
          "(u0, B) --> next=u1; r=1\n";
      CHECK(parse_error_line(text) == 6);
    }
    SUBCASE("undeclared next state") {
      const std::string text =
          "SYMBOLS: A\n"
          "STATES: u0, u1\n"
          "INITIAL: u0\n"
          "TERMINAL: u1\n"
          "TRANSITIONS:\n"
          "(u0, A) --> next=u9; r=1\n";
      CHECK(parse_error_line(text) == 6);
    }
    SUBCASE("malformed reward") {
      const std::string text =
          "SYMBOLS: A\n"
          "STATES: u0, u1\n"
          "INITIAL: u0\n"
          "TERMINAL: u1\n"
          "TRANSITIONS:\n"
          "(u0, A) --> next=u1; r=abc\n";
      CHECK(parse_error_line(text) == 6);
    }
    SUBCASE("duplicate state names") {
      CHECK(parse_error_line("SYMBOLS: A\nSTATES: u0, u0\n") == 2);
    }
    SUBCASE("reserved words cannot name symbols") {
      CHECK(parse_error_line("SYMBOLS: not\nSTATES: u0\n") == 1);
      CHECK(parse_error_line("SYMBOLS: and\nSTATES: u0\n") == 1);
    }
    SUBCASE("transition on the TRANSITIONS header line") {
      const std::string text =
          "SYMBOLS: A\n"
          "STATES: u0, u1\n"
          "INITIAL: u0\n"
          "TERMINAL: u1\n"
          "TRANSITIONS: (u0, A) --> next=u1; r=1\n";
      CHECK(parse_error_line(text) == 5);
    }
    SUBCASE("contradictory guard") {
      const std::string text =
          "SYMBOLS: A\n"
          "STATES: u0, u1\n"
          "INITIAL: u0\n"
          "TERMINAL: u1\n"
          "TRANSITIONS:\n"
          "(u0, A and not A) --> next=u1; r=1\n";
      CHECK(parse_error_line(text) == 6);
    }
    SUBCASE("dead-end state is caught at end of parse") {
      const std::string text =
          "SYMBOLS: A\n"
          "STATES: u0, u1, u2\n"
          "INITIAL: u0\n"
          "TERMINAL: u2\n"
          "TRANSITIONS:\n"
          "(u0, A) --> next=u1; r=0\n";  // u1 is non-terminal but has no exits
      CHECK(parse_error_line(text) == 6);
    }
    SUBCASE("undeclared initial state") {
      CHECK(parse_error_line("SYMBOLS: A\nSTATES: u0\nINITIAL: zz\n") == 3);
    }
    SUBCASE("undeclared terminal state") {
      CHECK(parse_error_line("SYMBOLS: A\nSTATES: u0\nINITIAL: u0\nTERMINAL: zz\n") == 4);
    }
  }

  TEST_CASE("serialization round-trips and is canonical") {
    const RewardMachine rm = parse_rm(kOrder2);
    const std::string canonical = serialize_rm(rm);
    CHECK(canonical == kOrder2);
    const RewardMachine again = parse_rm(canonical);
    CHECK(serialize_rm(again) == canonical);
    CHECK(again.state_names == rm.state_names);
    CHECK(again.initial == rm.initial);
    CHECK(again.transition_count() == rm.transition_count());
  }

  TEST_CASE("serialization rejects empty guards") {
    RewardMachine rm = parse_rm(kOrder2);
    rm.outgoing[0][0].guard.positives.clear();
    CHECK_THROWS_AS(serialize_rm(rm), std::invalid_argument);
  }

  TEST_CASE("dot output covers every state and transition") {
    const RewardMachine rm = parse_rm(kOrder2);
    const std::string dot = to_dot(rm);
    CHECK(dot.find("digraph") != std::string::npos);
    for (const std::string& name : rm.state_names) {
      CHECK(dot.find(name) != std::string::npos);
    }
    CHECK(dot.find("doublecircle") != std::string::npos);
    std::size_t edges = 0;
    for (std::size_t pos = dot.find("->"); pos != std::string::npos; pos = dot.find("->", pos + 2)) {
      ++edges;
    }
    // One edge per declared transition plus the start marker.
    CHECK(edges == static_cast<std::size_t>(rm.transition_count()) + 1);
  }

  TEST_CASE("machine files load from disk") {
    const std::filesystem::path file = std::filesystem::path(CPREP_DATA_DIR) / "order2.rm";
    const RewardMachine rm = load_rm(file);
    CHECK(rm.state_count() == 3);
    CHECK_THROWS_AS(load_rm("definitely_missing_file.rm"), std::runtime_error);
  }
}
