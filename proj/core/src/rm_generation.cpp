#include "cprep/rm_generation.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace cprep {

SectorDecomposition make_sectors(const GridMap& map, int block_rows, int block_cols) {
  if (block_rows < 1 || block_cols < 1 || map.height() % block_rows != 0 ||
      map.width() % block_cols != 0) {
    throw std::invalid_argument("make_sectors: block size must evenly tile the grid");
  }
  SectorDecomposition dec;
  dec.block_rows = block_rows;
  dec.block_cols = block_cols;
  dec.rows = map.height() / block_rows;
  dec.cols = map.width() / block_cols;
  dec.sector_of.resize(static_cast<std::size_t>(map.cell_count()));
  for (int i = 0; i < map.cell_count(); ++i) {
    const Coord c = map.cell_at(i);
    dec.sector_of[static_cast<std::size_t>(i)] =
        (c.row / block_rows) * dec.cols + (c.col / block_cols);
  }
  dec.adjacency.assign(static_cast<std::size_t>(dec.sector_count()), {});
  auto link = [&](Coord a, Coord b) {
    if (map.blocked(a, b)) return;
    const int sa = dec.sector_of[static_cast<std::size_t>(map.cell_index(a))];
    const int sb = dec.sector_of[static_cast<std::size_t>(map.cell_index(b))];
    if (sa == sb) return;
    auto& list_a = dec.adjacency[static_cast<std::size_t>(sa)];
    auto& list_b = dec.adjacency[static_cast<std::size_t>(sb)];
    if (std::find(list_a.begin(), list_a.end(), sb) == list_a.end()) list_a.push_back(sb);
    if (std::find(list_b.begin(), list_b.end(), sa) == list_b.end()) list_b.push_back(sa);
  };
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) {
      if (c + 1 < map.width()) link({r, c}, {r, c + 1});
      if (r + 1 < map.height()) link({r, c}, {r + 1, c});
    }
  }
  for (auto& list : dec.adjacency) std::sort(list.begin(), list.end());
  return dec;
}

namespace {

std::string sector_state_name(int sector) { return "u_s" + std::to_string(sector + 1); }

/// Status suffix for MultiPoint ("v" + one visited flag per entity) and
/// PickupDropoff (one of w/c/d per passenger).
std::string status_suffix(EnvKind env, int entity_count, int code) {
  std::string suffix;
  if (env == EnvKind::MultiPoint) {
    suffix = "_v";
    for (int e = 0; e < entity_count; ++e) {
      suffix += ((code >> e) & 1) ? '1' : '0';
    }
  } else if (env == EnvKind::PickupDropoff) {
    suffix = "_";
    int rest = code;
    for (int p = 0; p < entity_count; ++p) {
      const int st = rest % 3;
      rest /= 3;
      suffix += st == 0 ? 'w' : (st == 1 ? 'c' : 'd');
    }
  }
  return suffix;
}

int pow_int(int base, int exp) {
  int value = 1;
  for (int i = 0; i < exp; ++i) value *= base;
  return value;
}

}  // namespace

GeneratedRm gen_sector_rm(const Cmdp& family, const Context& context) {
  if (family.env == EnvKind::OrderedNav) {
    throw std::invalid_argument("gen_sector_rm: OrderedNav uses the visit-order template");
  }
  const TaskLayout layout = resolve_layout(family, context);
  const SectorDecomposition dec =
      make_sectors(layout.map, family.options.sector_rows, family.options.sector_cols);
  const int k = dec.sector_count();
  const int n = family.entity_count;

  // Number of incomplete status codes (the complete code maps to the terminal).
  int status_codes = 1;
  int full_code = 0;
  switch (family.env) {
    case EnvKind::GridNav:
      status_codes = 1;
      full_code = -1;  // completion is the G event itself
      break;
    case EnvKind::MultiPoint:
      status_codes = pow_int(2, n) - 1;
      full_code = pow_int(2, n) - 1;
      break;
    case EnvKind::PickupDropoff:
      status_codes = pow_int(3, n) - 1;
      full_code = pow_int(3, n) - 1;
      break;
    case EnvKind::OrderedNav:
      break;
  }

  RewardMachine rm;
  std::vector<std::string> symbols;
  for (int s = 0; s < k; ++s) symbols.push_back("S" + std::to_string(s + 1));
  const int event_base = k;
  switch (family.env) {
    case EnvKind::GridNav:
      symbols.push_back("G");
      break;
    case EnvKind::MultiPoint:
      for (int e = 0; e < n; ++e) symbols.push_back("A" + std::to_string(e + 1));
      break;
    case EnvKind::PickupDropoff:
      for (int p = 0; p < n; ++p) symbols.push_back("P" + std::to_string(p + 1));
      for (int p = 0; p < n; ++p) symbols.push_back("D" + std::to_string(p + 1));
      break;
    case EnvKind::OrderedNav:
      break;
  }
  rm.vocabulary = SymbolVocabulary(symbols);
  const int vocab_size = rm.vocabulary.size();

  auto state_id = [&](int sector, int code) { return sector * status_codes + code; };
  const int terminal_id = k * status_codes;
  for (int s = 0; s < k; ++s) {
    for (int code = 0; code < status_codes; ++code) {
      rm.state_names.push_back(sector_state_name(s) + status_suffix(family.env, n, code));
    }
  }
  rm.state_names.push_back("u_goal");
  rm.terminal.assign(rm.state_names.size(), false);
  rm.terminal[static_cast<std::size_t>(terminal_id)] = true;
  rm.outgoing.assign(rm.state_names.size(), {});
  rm.initial = state_id(0, 0);

  auto add = [&](int from, int symbol, int to, double reward) {
    RmTransition t;
    t.from = from;
    t.guard.positives = {symbol};
    t.to = to;
    t.reward = reward;
    rm.outgoing[static_cast<std::size_t>(from)].push_back(std::move(t));
  };

  const std::vector<Coord>& cells = layout.entity_cells;
  auto sector_of_entity = [&](int slot) { return dec.sector_of_cell(layout.map, cells[static_cast<std::size_t>(slot)]); };

  for (int s = 0; s < k; ++s) {
    for (int code = 0; code < status_codes; ++code) {
      const int from = state_id(s, code);
      // Event transitions first: first-match semantics favor completing an
      // objective step over registering the (unchanged) sector.
      switch (family.env) {
        case EnvKind::GridNav:
          if (sector_of_entity(0) == s) {
            add(from, event_base, terminal_id, 1.0);
          }
          break;
        case EnvKind::MultiPoint:
          for (int e = 0; e < n; ++e) {
            if ((code >> e) & 1) continue;
            if (sector_of_entity(e) != s) continue;
            const int next_code = code | (1 << e);
            if (next_code == full_code) {
              add(from, event_base + e, terminal_id, 1.0);
            } else {
              add(from, event_base + e, state_id(s, next_code), 0.0);
            }
          }
          break;
        case EnvKind::PickupDropoff:
          for (int p = 0; p < n; ++p) {
            const int st = (code / pow_int(3, p)) % 3;
            if (st == 0 && sector_of_entity(2 * p) == s) {
              add(from, event_base + p, state_id(s, code + pow_int(3, p)), 0.0);
            } else if (st == 1 && sector_of_entity(2 * p + 1) == s) {
              const int next_code = code + pow_int(3, p);
              if (next_code == full_code) {
                add(from, event_base + n + p, terminal_id, 1.0);
              } else {
                add(from, event_base + n + p, state_id(s, next_code), 0.0);
              }
            }
          }
          break;
        case EnvKind::OrderedNav:
          break;
      }
      for (int neighbor : dec.adjacency[static_cast<std::size_t>(s)]) {
        add(from, neighbor, state_id(neighbor, code), 0.0);
      }
    }
  }
  check_rm(rm);

  GeneratedRm out;
  out.rm = std::move(rm);
  out.resolution = RmResolution::Partial;

  const EnvKind env = family.env;
  const int entity_count = n;
  const GridMap map = layout.map;
  const std::vector<Coord> entity_cells = cells;
  const std::vector<int> sector_of = dec.sector_of;

  auto status_code_of = [env, entity_count](const EnvState& state) {
    int code = 0;
    if (env == EnvKind::MultiPoint) {
      for (int e = 0; e < entity_count; ++e) {
        if (state.status[static_cast<std::size_t>(e)] != 0) code |= 1 << e;
      }
    } else if (env == EnvKind::PickupDropoff) {
      int scale = 1;
      for (int p = 0; p < entity_count; ++p) {
        code += static_cast<int>(state.status[static_cast<std::size_t>(p)]) * scale;
        scale *= 3;
      }
    }
    return code;
  };

  // Captures are all by value: the returned closure outlives this frame.
  out.initial_state = [status_code_of, status_codes, terminal_id, map,
                       sector_of](const EnvState& state) {
    const int code = status_code_of(state);
    if (code >= status_codes) return terminal_id;
    const int sector = sector_of[static_cast<std::size_t>(map.cell_index(state.agent))];
    return sector * status_codes + code;
  };

  const int k_sectors = k;
  out.labeler = [env, entity_count, vocab_size, k_sectors, map, sector_of, entity_cells](
                    const EnvState& before, int action, const EnvState& after) {
    Label label(vocab_size);
    label.set(sector_of[static_cast<std::size_t>(map.cell_index(after.agent))]);
    switch (env) {
      case EnvKind::GridNav:
        if (action == kActionInteract && before.agent == entity_cells[0]) {
          label.set(k_sectors);
        }
        break;
      case EnvKind::MultiPoint:
        for (int e = 0; e < entity_count; ++e) {
          if (before.status[static_cast<std::size_t>(e)] == 0 &&
              after.status[static_cast<std::size_t>(e)] != 0) {
            label.set(k_sectors + e);
          }
        }
        break;
      case EnvKind::PickupDropoff:
        for (int p = 0; p < entity_count; ++p) {
          const auto a = before.status[static_cast<std::size_t>(p)];
          const auto b = after.status[static_cast<std::size_t>(p)];
          if (a == static_cast<std::uint8_t>(PassengerStatus::Waiting) &&
              b == static_cast<std::uint8_t>(PassengerStatus::Carried)) {
            label.set(k_sectors + p);
          } else if (a == static_cast<std::uint8_t>(PassengerStatus::Carried) &&
                     b == static_cast<std::uint8_t>(PassengerStatus::Delivered)) {
            label.set(k_sectors + entity_count + p);
          }
        }
        break;
      case EnvKind::OrderedNav:
        break;
    }
    return label;
  };
  return out;
}

GeneratedRm gen_order_rm(const Cmdp& family, const Context& context) {
  if (family.env != EnvKind::OrderedNav) {
    throw std::invalid_argument("gen_order_rm: only OrderedNav uses the visit-order template");
  }
  const TaskLayout layout = resolve_layout(family, context);
  const int n = family.entity_count;

  RewardMachine rm;
  std::vector<std::string> symbols;
  for (int e = 0; e < n; ++e) symbols.push_back("P" + std::to_string(e + 1));
  rm.vocabulary = SymbolVocabulary(symbols);
  for (int kth = 0; kth <= n; ++kth) rm.state_names.push_back("u" + std::to_string(kth));
  rm.terminal.assign(rm.state_names.size(), false);
  rm.terminal[static_cast<std::size_t>(n)] = true;
  rm.outgoing.assign(rm.state_names.size(), {});
  rm.initial = 0;

  for (int kth = 0; kth < n; ++kth) {
    const int entity = layout.visit_order[static_cast<std::size_t>(kth)];
    RmTransition advance_edge;
    advance_edge.from = kth;
    advance_edge.guard.positives = {entity};
    advance_edge.to = kth + 1;
    advance_edge.reward = (kth + 1 == n) ? 1.0 : 0.0;
    rm.outgoing[static_cast<std::size_t>(kth)].push_back(std::move(advance_edge));

    RmTransition wait_edge;
    wait_edge.from = kth;
    wait_edge.guard.negatives = {entity};
    wait_edge.to = kth;
    wait_edge.reward = 0.0;
    rm.outgoing[static_cast<std::size_t>(kth)].push_back(std::move(wait_edge));
  }
  check_rm(rm);

  GeneratedRm out;
  out.rm = std::move(rm);
  out.resolution = RmResolution::Full;
  const int entity_count = n;
  out.initial_state = [entity_count](const EnvState& state) {
    int visited = 0;
    for (int e = 0; e < entity_count; ++e) {
      if (state.status[static_cast<std::size_t>(e)] != 0) ++visited;
    }
    return visited;
  };
  out.labeler = [entity_count](const EnvState& before, int /*action*/, const EnvState& after) {
    Label label(entity_count);
    for (int e = 0; e < entity_count; ++e) {
      if (before.status[static_cast<std::size_t>(e)] == 0 &&
          after.status[static_cast<std::size_t>(e)] != 0) {
        label.set(e);
      }
    }
    return label;
  };
  return out;
}

GeneratedRm generate(const Cmdp& family, const Context& context) {
  return family.env == EnvKind::OrderedNav ? gen_order_rm(family, context)
                                           : gen_sector_rm(family, context);
}

}  // namespace cprep
