#include "cprep/rm_text.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "cprep/errors.hpp"
#include "cprep/numeric_text.hpp"

namespace cprep {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_commas(std::string_view s) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t comma = s.find(',', start);
    if (comma == std::string_view::npos) comma = s.size();
    std::string_view part = trim(s.substr(start, comma - start));
    if (!part.empty()) parts.emplace_back(part);
    start = comma + 1;
  }
  return parts;
}

bool valid_name(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  }
  return true;
}

struct Line {
  int number;
  std::string text;
};

/// Strips comments and blank lines, remembering source line numbers.
std::vector<Line> significant_lines(std::string_view text) {
  std::vector<Line> lines;
  int number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    ++number;
    std::string_view raw = text.substr(pos, eol - pos);
    std::size_t hash = raw.find('#');
    if (hash != std::string_view::npos) raw = raw.substr(0, hash);
    raw = trim(raw);
    if (!raw.empty()) lines.push_back({number, std::string(raw)});
    if (eol == text.size()) break;
    pos = eol + 1;
  }
  return lines;
}

struct Cursor {
  const std::vector<Line>& lines;
  std::size_t at = 0;

  bool done() const { return at >= lines.size(); }
  const Line& peek() const { return lines[at]; }
  const Line& take() { return lines[at++]; }
  int line_here() const { return done() ? (lines.empty() ? 1 : lines.back().number) : lines[at].number; }
};

/// Consumes a "NAME:" header line and returns the text after the colon.
std::pair<std::string, int> expect_section(Cursor& cur, const char* name) {
  if (cur.done()) {
    throw ParseError(cur.line_here(), std::string("missing ") + name + " section");
  }
  const Line& line = cur.peek();
  const std::string prefix = std::string(name) + ":";
  if (line.text.rfind(prefix, 0) != 0) {
    throw ParseError(line.number, std::string("expected ") + name + " section, found: " + line.text);
  }
  cur.take();
  return {std::string(trim(std::string_view(line.text).substr(prefix.size()))), line.number};
}

Guard parse_guard(std::string_view text, const SymbolVocabulary& vocab, int line) {
  Guard guard;
  std::size_t pos = 0;
  bool saw_literal = false;
  while (true) {
    // Each literal is "SYMBOL" or "not SYMBOL"; literals are joined by "and".
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    std::size_t start = pos;
    while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    std::string_view token = text.substr(start, pos - start);
    if (token.empty()) {
      throw ParseError(line, "guard must contain at least one literal");
    }
    bool negated = false;
    if (token == "not") {
      negated = true;
      while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
      start = pos;
      while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
      token = text.substr(start, pos - start);
      if (token.empty()) throw ParseError(line, "'not' must be followed by a symbol");
    }
    auto symbol = vocab.find(std::string(token));
    if (!symbol) {
      throw ParseError(line, "guard references undeclared symbol '" + std::string(token) + "'");
    }
    (negated ? guard.negatives : guard.positives).push_back(*symbol);
    saw_literal = true;

    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos >= text.size()) break;
    start = pos;
    while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    std::string_view connective = text.substr(start, pos - start);
    if (connective != "and") {
      throw ParseError(line, "expected 'and' between guard literals, found '" +
                                 std::string(connective) + "'");
    }
  }
  if (!saw_literal) throw ParseError(line, "guard must contain at least one literal");
  try {
    guard.normalize();
  } catch (const std::invalid_argument& e) {
    throw ParseError(line, e.what());
  }
  return guard;
}

RmTransition parse_transition(const Line& line, const RewardMachine& rm) {
  const std::string& text = line.text;
  const int n = line.number;
  if (text.empty() || text.front() != '(') {
    throw ParseError(n, "transition must start with '(', found: " + text);
  }
  std::size_t comma = text.find(',');
  if (comma == std::string::npos) throw ParseError(n, "transition is missing ',' after the source state");
  std::string from_name(trim(std::string_view(text).substr(1, comma - 1)));
  std::size_t close = text.find(')', comma);
  if (close == std::string::npos) throw ParseError(n, "transition is missing ')'");
  std::string_view guard_text = trim(std::string_view(text).substr(comma + 1, close - comma - 1));

  std::size_t arrow = text.find("-->", close);
  if (arrow == std::string::npos) throw ParseError(n, "transition is missing '-->'");
  std::string_view rest = trim(std::string_view(text).substr(arrow + 3));
  if (rest.rfind("next=", 0) != 0) {
    throw ParseError(n, "expected 'next=STATE' after '-->'");
  }
  rest.remove_prefix(5);
  std::size_t semi = rest.find(';');
  if (semi == std::string_view::npos) throw ParseError(n, "expected ';' after the next state");
  std::string to_name(trim(rest.substr(0, semi)));
  std::string_view reward_part = trim(rest.substr(semi + 1));
  if (reward_part.rfind("r=", 0) != 0) {
    throw ParseError(n, "expected 'r=FLOAT' after ';'");
  }
  reward_part.remove_prefix(2);
  if (!reward_part.empty() && reward_part.back() == ';') {
    reward_part = trim(reward_part.substr(0, reward_part.size() - 1));
  }

  auto lookup = [&](const std::string& name) {
    for (int i = 0; i < rm.state_count(); ++i) {
      if (rm.state_names[static_cast<std::size_t>(i)] == name) return i;
    }
    throw ParseError(n, "transition references undeclared state '" + name + "'");
  };

  RmTransition t;
  t.from = lookup(from_name);
  t.guard = parse_guard(guard_text, rm.vocabulary, n);
  t.to = lookup(to_name);

  double reward = 0.0;
  auto result = std::from_chars(reward_part.data(), reward_part.data() + reward_part.size(), reward);
  if (result.ec != std::errc{} || result.ptr != reward_part.data() + reward_part.size()) {
    throw ParseError(n, "could not parse reward value '" + std::string(reward_part) + "'");
  }
  t.reward = reward;
  return t;
}

}  // namespace

RewardMachine parse_rm(std::string_view text) {
  const std::vector<Line> lines = significant_lines(text);
  Cursor cur{lines};
  RewardMachine rm;

  auto [symbols_text, symbols_line] = expect_section(cur, "SYMBOLS");
  std::vector<std::string> symbols = split_commas(symbols_text);
  for (const std::string& s : symbols) {
    if (!valid_name(s)) throw ParseError(symbols_line, "invalid symbol name '" + s + "'");
    if (s == "and" || s == "not") {
      throw ParseError(symbols_line, "'" + s + "' is a reserved word and cannot name a symbol");
    }
  }
  try {
    rm.vocabulary = SymbolVocabulary(symbols);
  } catch (const std::invalid_argument& e) {
    throw ParseError(symbols_line, e.what());
  }

  auto [states_text, states_line] = expect_section(cur, "STATES");
  rm.state_names = split_commas(states_text);
  if (rm.state_names.empty()) throw ParseError(states_line, "STATES section declares no states");
  for (const std::string& s : rm.state_names) {
    if (!valid_name(s)) throw ParseError(states_line, "invalid state name '" + s + "'");
  }
  for (std::size_t i = 0; i < rm.state_names.size(); ++i) {
    for (std::size_t j = i + 1; j < rm.state_names.size(); ++j) {
      if (rm.state_names[i] == rm.state_names[j]) {
        throw ParseError(states_line, "duplicate state name '" + rm.state_names[i] + "'");
      }
    }
  }
  rm.terminal.assign(rm.state_names.size(), false);
  rm.outgoing.assign(rm.state_names.size(), {});

  auto [initial_text, initial_line] = expect_section(cur, "INITIAL");
  {
    bool found = false;
    for (int i = 0; i < rm.state_count(); ++i) {
      if (rm.state_names[static_cast<std::size_t>(i)] == initial_text) {
        rm.initial = i;
        found = true;
        break;
      }
    }
    if (!found) {
      throw ParseError(initial_line, "initial state '" + initial_text + "' is not declared");
    }
  }

  auto [terminal_text, terminal_line] = expect_section(cur, "TERMINAL");
  for (const std::string& name : split_commas(terminal_text)) {
    bool found = false;
    for (int i = 0; i < rm.state_count(); ++i) {
      if (rm.state_names[static_cast<std::size_t>(i)] == name) {
        rm.terminal[static_cast<std::size_t>(i)] = true;
        found = true;
        break;
      }
    }
    if (!found) {
      throw ParseError(terminal_line, "terminal state '" + name + "' is not declared");
    }
  }

  auto [transitions_text, transitions_line] = expect_section(cur, "TRANSITIONS");
  if (!transitions_text.empty()) {
    throw ParseError(transitions_line, "TRANSITIONS header must not share its line with a transition");
  }
  while (!cur.done()) {
    const Line& line = cur.take();
    RmTransition t = parse_transition(line, rm);
    if (rm.is_terminal(t.from)) {
      throw ParseError(line.number, "terminal state '" +
                                        rm.state_names[static_cast<std::size_t>(t.from)] +
                                        "' cannot have outgoing transitions");
    }
    rm.outgoing[static_cast<std::size_t>(t.from)].push_back(std::move(t));
  }

  try {
    check_rm(rm);
  } catch (const std::invalid_argument& e) {
    throw ParseError(lines.empty() ? 1 : lines.back().number, e.what());
  }
  return rm;
}

RewardMachine load_rm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open machine file: " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_rm(buffer.str());
}

namespace {

std::string render_guard(const RewardMachine& rm, const Guard& guard, const char* and_word) {
  std::ostringstream out;
  bool first = true;
  for (int p : guard.positives) {
    if (!first) out << and_word;
    first = false;
    out << rm.vocabulary.name(p);
  }
  for (int neg : guard.negatives) {
    if (!first) out << and_word;
    first = false;
    out << "not " << rm.vocabulary.name(neg);
  }
  return out.str();
}

}  // namespace

std::string serialize_rm(const RewardMachine& rm) {
  std::ostringstream out;
  out << "SYMBOLS:";
  for (int i = 0; i < rm.vocabulary.size(); ++i) {
    out << (i == 0 ? " " : ", ") << rm.vocabulary.name(i);
  }
  out << "\nSTATES:";
  for (int i = 0; i < rm.state_count(); ++i) {
    out << (i == 0 ? " " : ", ") << rm.state_names[static_cast<std::size_t>(i)];
  }
  out << "\nINITIAL: " << rm.state_names[static_cast<std::size_t>(rm.initial)];
  out << "\nTERMINAL:";
  bool first = true;
  for (int i = 0; i < rm.state_count(); ++i) {
    if (!rm.is_terminal(i)) continue;
    out << (first ? " " : ", ") << rm.state_names[static_cast<std::size_t>(i)];
    first = false;
  }
  out << "\nTRANSITIONS:\n";
  for (int u = 0; u < rm.state_count(); ++u) {
    for (const RmTransition& t : rm.outgoing[static_cast<std::size_t>(u)]) {
      if (t.guard.positives.empty() && t.guard.negatives.empty()) {
        throw std::invalid_argument("cannot serialize a transition with an empty guard");
      }
      out << '(' << rm.state_names[static_cast<std::size_t>(t.from)] << ", "
          << render_guard(rm, t.guard, " and ") << ") --> next="
          << rm.state_names[static_cast<std::size_t>(t.to)] << "; r=" << format_double(t.reward)
          << '\n';
    }
  }
  return out.str();
}

std::string to_dot(const RewardMachine& rm) {
  std::ostringstream out;
  out << "digraph machine {\n  rankdir=LR;\n  node [shape=circle];\n";
  out << "  __start [shape=point, label=\"\"];\n";
  for (int u = 0; u < rm.state_count(); ++u) {
    out << "  " << rm.state_names[static_cast<std::size_t>(u)];
    if (rm.is_terminal(u)) out << " [shape=doublecircle]";
    out << ";\n";
  }
  out << "  __start -> " << rm.state_names[static_cast<std::size_t>(rm.initial)] << ";\n";
  for (int u = 0; u < rm.state_count(); ++u) {
    for (const RmTransition& t : rm.outgoing[static_cast<std::size_t>(u)]) {
      out << "  " << rm.state_names[static_cast<std::size_t>(t.from)] << " -> "
          << rm.state_names[static_cast<std::size_t>(t.to)] << " [label=\""
          << render_guard(rm, t.guard, " & ") << " / " << format_double(t.reward) << "\"];\n";
    }
  }
  out << "}\n";
  return out.str();
}

}  // namespace cprep
