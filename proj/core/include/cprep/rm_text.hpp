#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "cprep/reward_machine.hpp"

namespace cprep {

/// Parses the textual machine format:
///
///   # comment
///   SYMBOLS: P1, P2
///   STATES: u0, u1, u_acc
///   INITIAL: u0
///   TERMINAL: u_acc
///   TRANSITIONS:
///   (u0, P1) --> next=u1; r=0
///   (u1, P2 and not P1) --> next=u_acc; r=1
///
/// Sections appear in the order shown; '#' comments and blank lines are
/// ignored everywhere.  Guards are conjunctions of literals joined by "and",
/// with "not" negating a single symbol.  Transitions keep file order, which
/// is also their matching priority.  Throws ParseError (with a 1-based line
/// number) on malformed input, including references to undeclared states or
/// symbols.  The returned machine has been checked against the hard
/// structural invariants.
RewardMachine parse_rm(std::string_view text);

/// Reads and parses a machine file.  Throws std::runtime_error when the file
/// cannot be read and ParseError on malformed content.
RewardMachine load_rm(const std::filesystem::path& path);

/// Canonical serialization: fixed section order, states in id order,
/// transitions in declaration order, rewards printed as shortest
/// round-tripping decimals.  parse_rm(serialize_rm(m)) reproduces m exactly.
std::string serialize_rm(const RewardMachine& rm);

/// Graphviz rendering; terminal states are drawn as double circles and each
/// edge shows its guard and reward.
std::string to_dot(const RewardMachine& rm);

}  // namespace cprep
