#include "cprep/reward_machine.hpp"

#include <algorithm>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace cprep {

SymbolVocabulary::SymbolVocabulary(std::vector<std::string> symbols)
    : symbols_(std::move(symbols)) {
  for (int i = 0; i < static_cast<int>(symbols_.size()); ++i) {
    if (symbols_[static_cast<std::size_t>(i)].empty()) {
      throw std::invalid_argument("vocabulary symbol must be non-empty");
    }
    auto [it, inserted] = index_.emplace(symbols_[static_cast<std::size_t>(i)], i);
    (void)it;
    if (!inserted) {
      throw std::invalid_argument("duplicate vocabulary symbol: " +
                                  symbols_[static_cast<std::size_t>(i)]);
    }
  }
}

std::optional<int> SymbolVocabulary::find(const std::string& symbol) const {
  auto it = index_.find(symbol);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int SymbolVocabulary::index_of(const std::string& symbol) const {
  auto found = find(symbol);
  if (!found) throw std::invalid_argument("unknown symbol: " + symbol);
  return *found;
}

Label Label::from_indices(int width, std::initializer_list<int> on) {
  Label label(width);
  for (int i : on) label.set(i);
  return label;
}

Label Label::from_indices(int width, const std::vector<int>& on) {
  Label label(width);
  for (int i : on) label.set(i);
  return label;
}

int Label::count() const {
  return static_cast<int>(std::count(bits_.begin(), bits_.end(), true));
}

bool Label::any() const {
  return std::find(bits_.begin(), bits_.end(), true) != bits_.end();
}

std::vector<int> Label::on_indices() const {
  std::vector<int> on;
  for (int i = 0; i < width(); ++i) {
    if (bits_[static_cast<std::size_t>(i)]) on.push_back(i);
  }
  return on;
}

std::string Label::to_string(const SymbolVocabulary& vocab) const {
  std::ostringstream out;
  out << '{';
  bool first = true;
  for (int i : on_indices()) {
    if (!first) out << ", ";
    first = false;
    out << vocab.name(i);
  }
  out << '}';
  return out.str();
}

bool Guard::satisfied(const Label& label) const {
  for (int i : positives) {
    if (!label.test(i)) return false;
  }
  for (int i : negatives) {
    if (label.test(i)) return false;
  }
  return true;
}

void Guard::normalize() {
  auto tidy = [](std::vector<int>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  tidy(positives);
  tidy(negatives);
  for (int p : positives) {
    if (std::binary_search(negatives.begin(), negatives.end(), p)) {
      throw std::invalid_argument("guard uses a symbol both positively and negatively");
    }
  }
}

int RewardMachine::transition_count() const {
  int total = 0;
  for (const auto& list : outgoing) total += static_cast<int>(list.size());
  return total;
}

int RewardMachine::state_id(const std::string& name) const {
  for (int i = 0; i < state_count(); ++i) {
    if (state_names[static_cast<std::size_t>(i)] == name) return i;
  }
  throw std::invalid_argument("unknown machine state: " + name);
}

RmStepResult rm_step(const RewardMachine& rm, int state, const Label& label) {
  if (state < 0 || state >= rm.state_count()) {
    throw std::invalid_argument("rm_step: state id out of range");
  }
  if (rm.is_terminal(state)) {
    throw std::invalid_argument("rm_step: cannot step a terminal state");
  }
  if (label.width() != rm.vocabulary.size()) {
    throw std::invalid_argument("rm_step: label width does not match vocabulary");
  }
  for (const RmTransition& t : rm.outgoing[static_cast<std::size_t>(state)]) {
    if (t.guard.satisfied(label)) {
      return RmStepResult{t.to, t.reward, true};
    }
  }
  return RmStepResult{state, 0.0, false};
}

RmRunState make_run_state(const RewardMachine& rm) {
  return make_run_state(rm, rm.initial);
}

RmRunState make_run_state(const RewardMachine& rm, int start_state) {
  if (start_state < 0 || start_state >= rm.state_count()) {
    throw std::invalid_argument("make_run_state: state id out of range");
  }
  RmRunState run;
  run.current = start_state;
  run.last_label = Label(rm.vocabulary.size());
  run.terminated = rm.is_terminal(start_state);
  return run;
}

double advance(const RewardMachine& rm, RmRunState& run, const Label& label) {
  if (run.terminated) {
    throw std::invalid_argument("advance: run already reached a terminal state");
  }
  RmStepResult step = rm_step(rm, run.current, label);
  run.current = step.next;
  run.last_label = label;
  run.terminated = rm.is_terminal(step.next);
  return step.reward;
}

std::string issue_name(RmIssue issue) {
  switch (issue) {
    case RmIssue::BadInitialState: return "bad-initial-state";
    case RmIssue::BadStateReference: return "bad-state-reference";
    case RmIssue::BadSymbolReference: return "bad-symbol-reference";
    case RmIssue::TerminalWithOutgoing: return "terminal-with-outgoing";
    case RmIssue::DeadEndState: return "dead-end-state";
    case RmIssue::UnreachableState: return "unreachable-state";
    case RmIssue::OverlappingGuards: return "overlapping-guards";
    case RmIssue::ContradictoryGuard: return "contradictory-guard";
  }
  return "unknown";
}

namespace {

std::string state_label(const RewardMachine& rm, int u) {
  if (u >= 0 && u < rm.state_count()) return rm.state_names[static_cast<std::size_t>(u)];
  return "#" + std::to_string(u);
}

/// Checks whether two guards can both match some label: every shared symbol
/// must be constrained consistently.
bool guards_can_overlap(const Guard& a, const Guard& b) {
  for (int p : a.positives) {
    if (std::find(b.negatives.begin(), b.negatives.end(), p) != b.negatives.end()) return false;
  }
  for (int n : a.negatives) {
    if (std::find(b.positives.begin(), b.positives.end(), n) != b.positives.end()) return false;
  }
  return true;
}

bool guard_contradicts(const Guard& g) {
  for (int p : g.positives) {
    if (std::find(g.negatives.begin(), g.negatives.end(), p) != g.negatives.end()) return true;
  }
  return false;
}

}  // namespace

std::vector<RmDiagnostic> validate_rm(const RewardMachine& rm) {
  std::vector<RmDiagnostic> issues;
  const int n = rm.state_count();
  const int vocab = rm.vocabulary.size();

  if (static_cast<int>(rm.terminal.size()) != n || static_cast<int>(rm.outgoing.size()) != n) {
    issues.push_back({RmIssue::BadStateReference, -1, -1, -1,
                      "state arrays disagree on the number of states"});
    return issues;
  }
  if (rm.initial < 0 || rm.initial >= n) {
    issues.push_back({RmIssue::BadInitialState, rm.initial, -1, -1,
                      "initial state id " + std::to_string(rm.initial) + " out of range"});
  }

  bool references_ok = true;
  for (int u = 0; u < n; ++u) {
    const auto& list = rm.outgoing[static_cast<std::size_t>(u)];
    if (rm.is_terminal(u) && !list.empty()) {
      issues.push_back({RmIssue::TerminalWithOutgoing, u, -1, -1,
                        "terminal state " + state_label(rm, u) + " declares outgoing transitions"});
    }
    if (!rm.is_terminal(u) && list.empty()) {
      issues.push_back({RmIssue::DeadEndState, u, -1, -1,
                        "non-terminal state " + state_label(rm, u) + " has no outgoing transitions"});
    }
    for (int ti = 0; ti < static_cast<int>(list.size()); ++ti) {
      const RmTransition& t = list[static_cast<std::size_t>(ti)];
      if (t.from != u || t.to < 0 || t.to >= n) {
        references_ok = false;
        issues.push_back({RmIssue::BadStateReference, u, ti, -1,
                          "transition " + std::to_string(ti) + " of state " + state_label(rm, u) +
                              " references an unknown state"});
      }
      for (int sym : t.guard.positives) {
        if (sym < 0 || sym >= vocab) {
          issues.push_back({RmIssue::BadSymbolReference, u, ti, -1,
                            "guard symbol index " + std::to_string(sym) + " out of range"});
        }
      }
      for (int sym : t.guard.negatives) {
        if (sym < 0 || sym >= vocab) {
          issues.push_back({RmIssue::BadSymbolReference, u, ti, -1,
                            "guard symbol index " + std::to_string(sym) + " out of range"});
        }
      }
      if (guard_contradicts(t.guard)) {
        issues.push_back({RmIssue::ContradictoryGuard, u, ti, -1,
                          "guard of transition " + std::to_string(ti) + " from " +
                              state_label(rm, u) + " can never match"});
      }
    }
  }

  // Reachability from the initial state over declared transitions.
  if (rm.initial >= 0 && rm.initial < n && references_ok) {
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    std::queue<int> frontier;
    seen[static_cast<std::size_t>(rm.initial)] = true;
    frontier.push(rm.initial);
    while (!frontier.empty()) {
      const int u = frontier.front();
      frontier.pop();
      for (const RmTransition& t : rm.outgoing[static_cast<std::size_t>(u)]) {
        if (!seen[static_cast<std::size_t>(t.to)]) {
          seen[static_cast<std::size_t>(t.to)] = true;
          frontier.push(t.to);
        }
      }
    }
    for (int u = 0; u < n; ++u) {
      if (!seen[static_cast<std::size_t>(u)]) {
        issues.push_back({RmIssue::UnreachableState, u, -1, -1,
                          "state " + state_label(rm, u) + " is unreachable from the initial state"});
      }
    }
  }

  // Guard overlap: two transitions from the same state that can match the
  // same label make the declaration order semantically significant.  Guards
  // with out-of-range symbols are already flagged above and cannot be
  // evaluated against labels, so they are skipped here.
  const auto guard_in_range = [vocab](const Guard& guard) {
    const auto ok = [vocab](int sym) { return sym >= 0 && sym < vocab; };
    return std::all_of(guard.positives.begin(), guard.positives.end(), ok) &&
           std::all_of(guard.negatives.begin(), guard.negatives.end(), ok);
  };
  for (int u = 0; u < n; ++u) {
    const auto& list = rm.outgoing[static_cast<std::size_t>(u)];
    for (int a = 0; a < static_cast<int>(list.size()); ++a) {
      for (int b = a + 1; b < static_cast<int>(list.size()); ++b) {
        const Guard& ga = list[static_cast<std::size_t>(a)].guard;
        const Guard& gb = list[static_cast<std::size_t>(b)].guard;
        if (!guard_in_range(ga) || !guard_in_range(gb)) continue;
        if (guard_contradicts(ga) || guard_contradicts(gb)) continue;
        bool overlap;
        if (vocab <= 16) {
          overlap = false;
          const std::uint32_t space = 1u << vocab;
          for (std::uint32_t mask = 0; mask < space; ++mask) {
            Label label(vocab);
            for (int s = 0; s < vocab; ++s) {
              if (mask & (1u << s)) label.set(s);
            }
            if (ga.satisfied(label) && gb.satisfied(label)) {
              overlap = true;
              break;
            }
          }
        } else {
          overlap = guards_can_overlap(ga, gb);
        }
        if (overlap) {
          issues.push_back({RmIssue::OverlappingGuards, u, a, b,
                            "transitions " + std::to_string(a) + " and " + std::to_string(b) +
                                " from " + state_label(rm, u) + " can match the same label"});
        }
      }
    }
  }
  return issues;
}

void check_rm(const RewardMachine& rm) {
  for (const RmDiagnostic& d : validate_rm(rm)) {
    switch (d.issue) {
      case RmIssue::BadInitialState:
      case RmIssue::BadStateReference:
      case RmIssue::BadSymbolReference:
      case RmIssue::TerminalWithOutgoing:
      case RmIssue::DeadEndState:
      case RmIssue::ContradictoryGuard:
        throw std::invalid_argument("malformed machine: " + d.message);
      case RmIssue::UnreachableState:
      case RmIssue::OverlappingGuards:
        break;  // advisory only
    }
  }
}

}  // namespace cprep
