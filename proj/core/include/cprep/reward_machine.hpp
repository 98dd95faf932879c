#pragma once

#include <functional>
#include <initializer_list>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace cprep {

/// Ordered set of propositional symbols.  Indices are stable and every other
/// machine structure refers to symbols by index.
class SymbolVocabulary {
 public:
  SymbolVocabulary() = default;
  explicit SymbolVocabulary(std::vector<std::string> symbols);

  int size() const { return static_cast<int>(symbols_.size()); }
  const std::string& name(int index) const { return symbols_.at(static_cast<std::size_t>(index)); }
  const std::vector<std::string>& names() const { return symbols_; }

  std::optional<int> find(const std::string& symbol) const;
  /// Like find(), but throws std::invalid_argument for unknown symbols.
  int index_of(const std::string& symbol) const;

  friend bool operator==(const SymbolVocabulary& a, const SymbolVocabulary& b) {
    return a.symbols_ == b.symbols_;
  }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, int> index_;
};

/// Truth assignment over a vocabulary: bit i set means symbol i holds.
/// Treated as a value; width is fixed at construction.
class Label {
 public:
  Label() = default;
  explicit Label(int width) : bits_(static_cast<std::size_t>(width), false) {}

  static Label from_indices(int width, std::initializer_list<int> on);
  static Label from_indices(int width, const std::vector<int>& on);

  int width() const { return static_cast<int>(bits_.size()); }
  bool test(int i) const { return bits_.at(static_cast<std::size_t>(i)); }
  void set(int i, bool value = true) { bits_.at(static_cast<std::size_t>(i)) = value; }
  int count() const;
  bool any() const;
  std::vector<int> on_indices() const;

  friend bool operator==(const Label& a, const Label& b) { return a.bits_ == b.bits_; }

  /// Renders as e.g. "{P1, S4}" using vocabulary names.
  std::string to_string(const SymbolVocabulary& vocab) const;

 private:
  std::vector<bool> bits_;
};

/// Conjunction of symbol literals.  Empty guard matches every label.
struct Guard {
  std::vector<int> positives;  ///< symbol indices that must hold
  std::vector<int> negatives;  ///< symbol indices that must not hold

  bool satisfied(const Label& label) const;
  /// Sorts and deduplicates the literal lists; throws std::invalid_argument
  /// if a symbol appears both positively and negatively.
  void normalize();
};

struct RmTransition {
  int from = 0;
  Guard guard;
  int to = 0;
  double reward = 0.0;
};

/// Mealy-style reward machine.  States are dense ids [0, state_count).
/// Outgoing transitions keep declaration order: the first transition whose
/// guard matches an emitted label fires; if none match the machine stays in
/// place with reward 0.  Terminal states declare no outgoing transitions.
struct RewardMachine {
  std::vector<std::string> state_names;
  int initial = 0;
  std::vector<bool> terminal;
  std::vector<std::vector<RmTransition>> outgoing;  ///< indexed by source state
  SymbolVocabulary vocabulary;

  int state_count() const { return static_cast<int>(state_names.size()); }
  bool is_terminal(int u) const { return terminal.at(static_cast<std::size_t>(u)); }
  int transition_count() const;
  /// Resolves a state name; throws std::invalid_argument if absent.
  int state_id(const std::string& name) const;
};

struct RmStepResult {
  int next = 0;
  double reward = 0.0;
  bool moved = false;  ///< true when a declared transition fired
};

/// Applies one emitted label.  Throws std::invalid_argument when stepping a
/// terminal state or when the label width does not match the vocabulary.
RmStepResult rm_step(const RewardMachine& rm, int state, const Label& label);

/// Mutable cursor for running a machine alongside an episode.
struct RmRunState {
  int current = 0;
  Label last_label;     ///< all-false before the first step
  bool terminated = false;
};

RmRunState make_run_state(const RewardMachine& rm);
RmRunState make_run_state(const RewardMachine& rm, int start_state);

/// Advances the cursor by one emitted label and returns the machine reward.
double advance(const RewardMachine& rm, RmRunState& run, const Label& label);

/// Contract for mapping environment experience to emitted labels.
template <class State, class Action>
using LabelingFunction = std::function<Label(const State&, Action, const State&)>;

enum class RmIssue {
  BadInitialState,
  BadStateReference,
  BadSymbolReference,
  TerminalWithOutgoing,
  DeadEndState,        ///< non-terminal state without outgoing transitions
  UnreachableState,
  OverlappingGuards,   ///< two transitions from one state can match the same label
  ContradictoryGuard,  ///< guard requires a symbol both present and absent
};

struct RmDiagnostic {
  RmIssue issue;
  int state = -1;        ///< primary state involved, -1 when not applicable
  int transition = -1;   ///< index into outgoing[state], -1 when not applicable
  int other = -1;        ///< second transition index for overlap reports
  std::string message;
};

/// Structural audit.  Returns every detected issue; an empty result means the
/// machine is well-formed.  Guard overlap is checked exhaustively over the
/// label space when the vocabulary has at most 16 symbols and by literal
/// contradiction analysis otherwise.
std::vector<RmDiagnostic> validate_rm(const RewardMachine& rm);

/// Throws std::invalid_argument describing the first issue when the machine
/// breaks a hard structural invariant (bad references, terminal with
/// outgoing transitions, dead ends).  Soft findings (unreachable states,
/// overlapping guards) do not throw.
void check_rm(const RewardMachine& rm);

std::string issue_name(RmIssue issue);

}  // namespace cprep
