#include "cprep/gridworld.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace cprep {

GridMap::GridMap(int width, int height) : width_(width), height_(height) {
  if (width < 1 || height < 1) {
    throw std::invalid_argument("GridMap: dimensions must be positive");
  }
  walls_.assign(static_cast<std::size_t>(interior_edge_count()), 0);
}

int GridMap::cell_index(Coord c) const {
  if (!in_bounds(c)) throw std::invalid_argument("cell_index: coordinate out of bounds");
  return c.row * width_ + c.col;
}

Coord GridMap::cell_at(int index) const {
  if (index < 0 || index >= cell_count()) {
    throw std::invalid_argument("cell_at: index out of bounds");
  }
  return Coord{index / width_, index % width_};
}

void GridMap::set_wall(int edge, bool present) {
  walls_.at(static_cast<std::size_t>(edge)) = present ? 1 : 0;
}

int GridMap::wall_count() const {
  return static_cast<int>(std::count(walls_.begin(), walls_.end(), 1));
}

bool GridMap::blocked(Coord from, Coord to) const {
  if (!in_bounds(from) || !in_bounds(to)) {
    throw std::invalid_argument("blocked: coordinate out of bounds");
  }
  const int dr = to.row - from.row;
  const int dc = to.col - from.col;
  if (std::abs(dr) + std::abs(dc) != 1) {
    throw std::invalid_argument("blocked: cells are not orthogonally adjacent");
  }
  if (dc != 0) {  // east/west edge
    const int col = std::min(from.col, to.col);
    const int edge = from.row * (width_ - 1) + col;
    return walls_[static_cast<std::size_t>(edge)] != 0;
  }
  const int row = std::min(from.row, to.row);
  const int edge = height_ * (width_ - 1) + row * width_ + from.col;
  return walls_[static_cast<std::size_t>(edge)] != 0;
}

bool GridMap::connected() const {
  std::vector<bool> seen(static_cast<std::size_t>(cell_count()), false);
  std::queue<Coord> frontier;
  frontier.push({0, 0});
  seen[0] = true;
  int reached = 1;
  const Coord deltas[4] = {{-1, 0}, {1, 0}, {0, 1}, {0, -1}};
  while (!frontier.empty()) {
    const Coord at = frontier.front();
    frontier.pop();
    for (const Coord& d : deltas) {
      const Coord next{at.row + d.row, at.col + d.col};
      if (!in_bounds(next)) continue;
      if (blocked(at, next)) continue;
      const int idx = cell_index(next);
      if (!seen[static_cast<std::size_t>(idx)]) {
        seen[static_cast<std::size_t>(idx)] = true;
        ++reached;
        frontier.push(next);
      }
    }
  }
  return reached == cell_count();
}

GridMap GridMap::with_walls(int width, int height, const std::vector<std::uint8_t>& bits) {
  GridMap map(width, height);
  if (static_cast<int>(bits.size()) != map.interior_edge_count()) {
    throw std::invalid_argument("with_walls: wall vector length does not match the grid");
  }
  for (int e = 0; e < map.interior_edge_count(); ++e) {
    map.set_wall(e, bits[static_cast<std::size_t>(e)] != 0);
  }
  return map;
}

const char* env_code(EnvKind env) {
  switch (env) {
    case EnvKind::GridNav: return "GN";
    case EnvKind::MultiPoint: return "MP";
    case EnvKind::PickupDropoff: return "PD";
    case EnvKind::OrderedNav: return "ON";
  }
  return "?";
}

const char* space_code(ContextSpace space) {
  switch (space) {
    case ContextSpace::EntityLocation: return "EL";
    case ContextSpace::ChangingMap: return "CM";
    case ContextSpace::PoiOrder: return "PO";
  }
  return "?";
}

EnvKind parse_env_code(const std::string& code) {
  if (code == "GN") return EnvKind::GridNav;
  if (code == "MP") return EnvKind::MultiPoint;
  if (code == "PD") return EnvKind::PickupDropoff;
  if (code == "ON") return EnvKind::OrderedNav;
  throw std::invalid_argument("unknown environment code: " + code);
}

ContextSpace parse_space_code(const std::string& code) {
  if (code == "EL") return ContextSpace::EntityLocation;
  if (code == "CM") return ContextSpace::ChangingMap;
  if (code == "PO") return ContextSpace::PoiOrder;
  throw std::invalid_argument("unknown context-space code: " + code);
}

std::string context_key(const Context& context) {
  std::ostringstream out;
  switch (context.space) {
    case ContextSpace::EntityLocation: {
      out << "EL:";
      for (std::size_t i = 0; i < context.entities.size(); ++i) {
        if (i > 0) out << ';';
        out << '(' << context.entities[i].row << ',' << context.entities[i].col << ')';
      }
      break;
    }
    case ContextSpace::ChangingMap: {
      out << "CM:";
      for (std::uint8_t bit : context.walls) out << (bit ? '1' : '0');
      break;
    }
    case ContextSpace::PoiOrder: {
      out << "PO:";
      for (std::size_t i = 0; i < context.order.size(); ++i) {
        if (i > 0) out << ',';
        out << context.order[i];
      }
      break;
    }
  }
  return out.str();
}

std::string describe_context(const Context& context) { return context_key(context); }

Context parse_context(const std::string& text) {
  auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw std::invalid_argument("context string is missing its space tag: " + text);
  }
  Context context;
  const std::string tag = text.substr(0, colon);
  const std::string body = text.substr(colon + 1);
  context.space = parse_space_code(tag);
  switch (context.space) {
    case ContextSpace::EntityLocation: {
      std::istringstream in(body);
      std::string part;
      while (std::getline(in, part, ';')) {
        int row = 0, col = 0;
        if (std::sscanf(part.c_str(), "(%d,%d)", &row, &col) != 2) {
          throw std::invalid_argument("bad entity coordinate: " + part);
        }
        context.entities.push_back({row, col});
      }
      break;
    }
    case ContextSpace::ChangingMap: {
      for (char c : body) {
        if (c != '0' && c != '1') throw std::invalid_argument("bad wall flag in context: " + text);
        context.walls.push_back(c == '1' ? 1 : 0);
      }
      break;
    }
    case ContextSpace::PoiOrder: {
      std::istringstream in(body);
      std::string part;
      while (std::getline(in, part, ',')) {
        context.order.push_back(std::stoi(part));
      }
      break;
    }
  }
  return context;
}

int Cmdp::slot_count() const {
  return env == EnvKind::PickupDropoff ? 2 * entity_count : entity_count;
}

Cmdp make_cmdp(EnvKind env, ContextSpace space, CmdpOptions options) {
  const bool ordered = env == EnvKind::OrderedNav;
  const bool order_space = space == ContextSpace::PoiOrder;
  if (ordered != order_space) {
    throw std::invalid_argument(std::string("unsupported pairing: ") + env_code(env) + " with " +
                                space_code(space));
  }
  Cmdp family;
  family.env = env;
  family.space = space;
  family.base_map = GridMap(options.width, options.height);
  if (options.entity_count > 0) {
    family.entity_count = options.entity_count;
  } else {
    switch (env) {
      case EnvKind::GridNav: family.entity_count = 1; break;
      case EnvKind::MultiPoint: family.entity_count = 2; break;
      case EnvKind::PickupDropoff: family.entity_count = 2; break;
      case EnvKind::OrderedNav: family.entity_count = 5; break;
    }
  }
  if (env == EnvKind::GridNav && family.entity_count != 1) {
    throw std::invalid_argument("GridNav uses exactly one destination");
  }
  options.entity_count = family.entity_count;
  if (options.episode_cap < 1) throw std::invalid_argument("episode cap must be positive");
  if (options.cm_wall_min < 0 || options.cm_wall_max < options.cm_wall_min) {
    throw std::invalid_argument("wall-count range is empty");
  }
  if (options.cm_wall_max > family.base_map.interior_edge_count()) {
    throw std::invalid_argument("wall-count range exceeds the number of interior edges");
  }
  if (options.sector_rows < 1 || options.sector_cols < 1 ||
      options.width % options.sector_cols != 0 || options.height % options.sector_rows != 0) {
    throw std::invalid_argument("sector size must evenly tile the grid");
  }
  family.options = options;
  if (family.slot_count() > family.base_map.cell_count()) {
    throw std::invalid_argument("more entities than grid cells");
  }
  return family;
}

std::vector<Coord> default_entity_cells(const GridMap& map, int slots) {
  if (slots > map.cell_count()) {
    throw std::invalid_argument("default_entity_cells: more slots than cells");
  }
  std::vector<Coord> cells;
  const int w = map.width();
  const int h = map.height();
  const Coord corners[4] = {{0, 0}, {0, w - 1}, {h - 1, 0}, {h - 1, w - 1}};
  auto taken = [&](Coord c) {
    return std::find(cells.begin(), cells.end(), c) != cells.end();
  };
  for (const Coord& corner : corners) {
    if (static_cast<int>(cells.size()) == slots) return cells;
    if (!taken(corner)) cells.push_back(corner);
  }
  for (int i = 0; i < map.cell_count() && static_cast<int>(cells.size()) < slots; ++i) {
    const Coord c = map.cell_at(i);
    if (!taken(c)) cells.push_back(c);
  }
  return cells;
}

TaskLayout resolve_layout(const Cmdp& family, const Context& context) {
  if (context.space != family.space) {
    throw std::invalid_argument("context space does not match the task family");
  }
  TaskLayout layout;
  layout.map = family.base_map;
  const int slots = family.slot_count();

  switch (family.space) {
    case ContextSpace::EntityLocation: {
      if (static_cast<int>(context.entities.size()) != slots) {
        throw std::invalid_argument("context declares the wrong number of entity cells");
      }
      for (std::size_t i = 0; i < context.entities.size(); ++i) {
        if (!layout.map.in_bounds(context.entities[i])) {
          throw std::invalid_argument("context entity cell out of bounds");
        }
        for (std::size_t j = i + 1; j < context.entities.size(); ++j) {
          if (context.entities[i] == context.entities[j]) {
            throw std::invalid_argument("context places two entities on one cell");
          }
        }
      }
      layout.entity_cells = context.entities;
      break;
    }
    case ContextSpace::ChangingMap: {
      layout.map = GridMap::with_walls(family.base_map.width(), family.base_map.height(),
                                       context.walls);
      if (!layout.map.connected()) {
        throw std::invalid_argument("context walls disconnect the grid");
      }
      layout.entity_cells = default_entity_cells(layout.map, slots);
      break;
    }
    case ContextSpace::PoiOrder: {
      if (static_cast<int>(context.order.size()) != family.entity_count) {
        throw std::invalid_argument("context order length does not match the entity count");
      }
      std::vector<bool> seen(static_cast<std::size_t>(family.entity_count), false);
      for (int e : context.order) {
        if (e < 0 || e >= family.entity_count || seen[static_cast<std::size_t>(e)]) {
          throw std::invalid_argument("context order is not a permutation of the entities");
        }
        seen[static_cast<std::size_t>(e)] = true;
      }
      layout.entity_cells = default_entity_cells(layout.map, slots);
      layout.visit_order = context.order;
      break;
    }
  }
  return layout;
}

TaskMdp::TaskMdp(const Cmdp& family, const Context& context, std::uint64_t task_seed)
    : env_(family.env),
      map_(family.base_map),
      entity_count_(family.entity_count),
      episode_cap_(family.options.episode_cap),
      context_(context),
      reset_rng_(task_seed) {
  TaskLayout layout = resolve_layout(family, context);
  map_ = std::move(layout.map);
  entity_cells_ = std::move(layout.entity_cells);
  visit_order_ = std::move(layout.visit_order);
}

TaskMdp instantiate(const Cmdp& family, const Context& context, std::uint64_t task_seed) {
  return TaskMdp(family, context, task_seed);
}

int TaskMdp::action_count() const {
  return env_ == EnvKind::PickupDropoff ? 6 : 5;
}

EnvState TaskMdp::reset() {
  std::vector<int> free_cells;
  for (int i = 0; i < map_.cell_count(); ++i) {
    const Coord c = map_.cell_at(i);
    if (std::find(entity_cells_.begin(), entity_cells_.end(), c) == entity_cells_.end()) {
      free_cells.push_back(i);
    }
  }
  if (free_cells.empty()) throw std::runtime_error("reset: no free cell for the agent");
  EnvState state;
  state.agent = map_.cell_at(
      free_cells[static_cast<std::size_t>(reset_rng_.uniform_index(free_cells.size()))]);
  switch (env_) {
    case EnvKind::GridNav: break;
    case EnvKind::MultiPoint:
    case EnvKind::OrderedNav:
      state.status.assign(static_cast<std::size_t>(entity_count_), 0);
      break;
    case EnvKind::PickupDropoff:
      state.status.assign(static_cast<std::size_t>(entity_count_),
                          static_cast<std::uint8_t>(PassengerStatus::Waiting));
      break;
  }
  state.t = 0;
  return state;
}

bool TaskMdp::objective_complete(const EnvState& state) const {
  switch (env_) {
    case EnvKind::GridNav:
      return false;  // completion happens on the declaring action, not in the state
    case EnvKind::MultiPoint:
    case EnvKind::OrderedNav:
      return std::all_of(state.status.begin(), state.status.end(),
                         [](std::uint8_t v) { return v != 0; });
    case EnvKind::PickupDropoff:
      return std::all_of(state.status.begin(), state.status.end(), [](std::uint8_t v) {
        return v == static_cast<std::uint8_t>(PassengerStatus::Delivered);
      });
  }
  return false;
}

TaskMdp::Outcome TaskMdp::apply(const EnvState& state, int action) const {
  if (action < 0 || action >= action_count()) {
    throw std::invalid_argument("apply: action out of range");
  }
  Outcome out;
  out.next = state;

  if (action <= kActionWest) {
    static const Coord deltas[4] = {{-1, 0}, {1, 0}, {0, 1}, {0, -1}};
    const Coord target{state.agent.row + deltas[action].row,
                       state.agent.col + deltas[action].col};
    if (map_.in_bounds(target) && !map_.blocked(state.agent, target)) {
      out.next.agent = target;
    }
    return out;
  }

  switch (env_) {
    case EnvKind::GridNav: {
      if (action == kActionInteract && state.agent == entity_cells_[0]) {
        out.reward = 1.0;
        out.done = true;
      }
      break;
    }
    case EnvKind::MultiPoint: {
      if (action == kActionInteract) {
        for (int e = 0; e < entity_count_; ++e) {
          if (state.agent == entity_cells_[static_cast<std::size_t>(e)] &&
              state.status[static_cast<std::size_t>(e)] == 0) {
            out.next.status[static_cast<std::size_t>(e)] = 1;
            if (objective_complete(out.next)) {
              out.reward = 1.0;
              out.done = true;
            }
            break;
          }
        }
      }
      break;
    }
    case EnvKind::OrderedNav: {
      if (action == kActionInteract) {
        // Only the first unvisited entity in the visiting order can be checked off.
        for (int k = 0; k < entity_count_; ++k) {
          const int e = visit_order_[static_cast<std::size_t>(k)];
          if (state.status[static_cast<std::size_t>(e)] != 0) continue;
          if (state.agent == entity_cells_[static_cast<std::size_t>(e)]) {
            out.next.status[static_cast<std::size_t>(e)] = 1;
            if (objective_complete(out.next)) {
              out.reward = 1.0;
              out.done = true;
            }
          }
          break;
        }
      }
      break;
    }
    case EnvKind::PickupDropoff: {
      if (action == kActionInteract) {
        for (int p = 0; p < entity_count_; ++p) {
          if (state.status[static_cast<std::size_t>(p)] ==
                  static_cast<std::uint8_t>(PassengerStatus::Waiting) &&
              state.agent == entity_cells_[static_cast<std::size_t>(2 * p)]) {
            out.next.status[static_cast<std::size_t>(p)] =
                static_cast<std::uint8_t>(PassengerStatus::Carried);
            break;
          }
        }
      } else if (action == kActionDropoff) {
        for (int p = 0; p < entity_count_; ++p) {
          if (state.status[static_cast<std::size_t>(p)] ==
                  static_cast<std::uint8_t>(PassengerStatus::Carried) &&
              state.agent == entity_cells_[static_cast<std::size_t>(2 * p + 1)]) {
            out.next.status[static_cast<std::size_t>(p)] =
                static_cast<std::uint8_t>(PassengerStatus::Delivered);
            if (objective_complete(out.next)) {
              out.reward = 1.0;
              out.done = true;
            }
            break;
          }
        }
      }
      break;
    }
  }
  return out;
}

StepResult env_step(const TaskMdp& task, const EnvState& state, int action) {
  if (state.t >= task.episode_cap()) {
    throw std::invalid_argument("env_step: episode already reached the step cap");
  }
  if (task.objective_complete(state)) {
    throw std::invalid_argument("env_step: episode already completed its objective");
  }
  TaskMdp::Outcome out = task.apply(state, action);
  StepResult result;
  result.next = std::move(out.next);
  result.next.t = state.t + 1;
  result.reward = out.reward;
  result.done = out.done;
  // A genuine completion on the final permitted step still counts as done,
  // not as a truncation.
  result.truncated = !out.done && result.next.t >= task.episode_cap();
  return result;
}

std::string action_name(EnvKind env, int action) {
  switch (action) {
    case kActionNorth: return "north";
    case kActionSouth: return "south";
    case kActionEast: return "east";
    case kActionWest: return "west";
    case kActionInteract:
      if (env == EnvKind::GridNav) return "done";
      if (env == EnvKind::PickupDropoff) return "pickup";
      return "arrived";
    case kActionDropoff:
      if (env == EnvKind::PickupDropoff) return "dropoff";
      break;
    default: break;
  }
  return "action" + std::to_string(action);
}

double context_space_size(const Cmdp& family) {
  constexpr double kCap = 1e18;
  switch (family.space) {
    case ContextSpace::EntityLocation: {
      double total = 1.0;
      for (int i = 0; i < family.slot_count(); ++i) {
        total *= static_cast<double>(family.base_map.cell_count() - i);
        if (total > kCap) return kCap;
      }
      return total;
    }
    case ContextSpace::ChangingMap: {
      const int edges = family.base_map.interior_edge_count();
      double total = 0.0;
      for (int c = family.options.cm_wall_min; c <= family.options.cm_wall_max; ++c) {
        double ways = 1.0;
        for (int i = 0; i < c; ++i) {
          ways *= static_cast<double>(edges - i) / static_cast<double>(i + 1);
        }
        total += ways;
        if (total > kCap) return kCap;
      }
      return std::floor(total);
    }
    case ContextSpace::PoiOrder: {
      double total = 1.0;
      for (int i = 2; i <= family.entity_count; ++i) {
        total *= static_cast<double>(i);
        if (total > kCap) return kCap;
      }
      return total;
    }
  }
  return 0.0;
}

Context sample_context(const Cmdp& family, RandomStream& rng) {
  Context context;
  context.space = family.space;
  switch (family.space) {
    case ContextSpace::EntityLocation: {
      // Distinct cells via a partial Fisher-Yates pass over all cell indices.
      std::vector<int> cells(static_cast<std::size_t>(family.base_map.cell_count()));
      std::iota(cells.begin(), cells.end(), 0);
      const int slots = family.slot_count();
      for (int i = 0; i < slots; ++i) {
        const std::size_t j = static_cast<std::size_t>(i) +
            static_cast<std::size_t>(rng.uniform_index(cells.size() - static_cast<std::size_t>(i)));
        std::swap(cells[static_cast<std::size_t>(i)], cells[j]);
        context.entities.push_back(family.base_map.cell_at(cells[static_cast<std::size_t>(i)]));
      }
      break;
    }
    case ContextSpace::ChangingMap: {
      const int edges = family.base_map.interior_edge_count();
      const int span = family.options.cm_wall_max - family.options.cm_wall_min + 1;
      constexpr int kMaxAttempts = 100000;
      for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        const int count = family.options.cm_wall_min +
            static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(span)));
        std::vector<int> ids(static_cast<std::size_t>(edges));
        std::iota(ids.begin(), ids.end(), 0);
        std::vector<std::uint8_t> bits(static_cast<std::size_t>(edges), 0);
        for (int i = 0; i < count; ++i) {
          const std::size_t j = static_cast<std::size_t>(i) +
              static_cast<std::size_t>(rng.uniform_index(ids.size() - static_cast<std::size_t>(i)));
          std::swap(ids[static_cast<std::size_t>(i)], ids[j]);
          bits[static_cast<std::size_t>(ids[static_cast<std::size_t>(i)])] = 1;
        }
        GridMap candidate = GridMap::with_walls(family.base_map.width(),
                                                family.base_map.height(), bits);
        if (candidate.connected()) {
          context.walls = std::move(bits);
          return context;
        }
      }
      throw std::runtime_error("sample_context: could not draw a connected map");
    }
    case ContextSpace::PoiOrder: {
      context.order.resize(static_cast<std::size_t>(family.entity_count));
      std::iota(context.order.begin(), context.order.end(), 0);
      rng.shuffle(context.order);
      break;
    }
  }
  return context;
}

ContextSets sample_contexts(const Cmdp& family, int n_source, int n_target, RandomStream& rng) {
  if (n_source < 1 || n_target < 1) {
    throw std::invalid_argument("sample_contexts: set sizes must be positive");
  }
  const int need = n_source + n_target;
  if (static_cast<double>(need) > context_space_size(family)) {
    throw std::invalid_argument(
        "sample_contexts: the context space holds fewer than " + std::to_string(need) +
        " distinct contexts");
  }
  std::vector<Context> drawn;
  std::vector<std::string> keys;
  constexpr int kStallLimit = 200000;
  int stalls = 0;
  while (static_cast<int>(drawn.size()) < need) {
    Context candidate = sample_context(family, rng);
    std::string key = context_key(candidate);
    if (std::find(keys.begin(), keys.end(), key) != keys.end()) {
      if (++stalls > kStallLimit) {
        throw std::runtime_error("sample_contexts: rejection sampling stalled");
      }
      continue;
    }
    keys.push_back(std::move(key));
    drawn.push_back(std::move(candidate));
  }
  ContextSets sets;
  sets.source.assign(drawn.begin(), drawn.begin() + n_source);
  sets.target.assign(drawn.begin() + n_source, drawn.end());
  return sets;
}

int status_code_count(EnvKind env, int entity_count) {
  switch (env) {
    case EnvKind::GridNav: return 1;
    case EnvKind::MultiPoint:
    case EnvKind::OrderedNav: return 1 << entity_count;
    case EnvKind::PickupDropoff: {
      int total = 1;
      for (int i = 0; i < entity_count; ++i) total *= 3;
      return total;
    }
  }
  return 1;
}

int status_code(EnvKind env, const EnvState& state) {
  int code = 0;
  switch (env) {
    case EnvKind::GridNav: break;
    case EnvKind::MultiPoint:
    case EnvKind::OrderedNav:
      for (std::size_t e = 0; e < state.status.size(); ++e) {
        if (state.status[e] != 0) code |= 1 << e;
      }
      break;
    case EnvKind::PickupDropoff: {
      int scale = 1;
      for (std::size_t p = 0; p < state.status.size(); ++p) {
        code += static_cast<int>(state.status[p]) * scale;
        scale *= 3;
      }
      break;
    }
  }
  return code;
}

std::vector<std::uint8_t> status_from_code(EnvKind env, int entity_count, int code) {
  std::vector<std::uint8_t> status;
  switch (env) {
    case EnvKind::GridNav: break;
    case EnvKind::MultiPoint:
    case EnvKind::OrderedNav:
      status.resize(static_cast<std::size_t>(entity_count));
      for (int e = 0; e < entity_count; ++e) {
        status[static_cast<std::size_t>(e)] = static_cast<std::uint8_t>((code >> e) & 1);
      }
      break;
    case EnvKind::PickupDropoff:
      status.resize(static_cast<std::size_t>(entity_count));
      for (int p = 0; p < entity_count; ++p) {
        status[static_cast<std::size_t>(p)] = static_cast<std::uint8_t>(code % 3);
        code /= 3;
      }
      break;
  }
  return status;
}

int state_feature_size(const Cmdp& family) {
  int size = family.base_map.cell_count();
  switch (family.env) {
    case EnvKind::GridNav: break;
    case EnvKind::MultiPoint:
    case EnvKind::OrderedNav: size += family.entity_count; break;
    case EnvKind::PickupDropoff: size += 2 * family.entity_count; break;
  }
  return size;
}

std::vector<double> state_features(const Cmdp& family, const TaskMdp& task, const EnvState& state) {
  std::vector<double> features(static_cast<std::size_t>(state_feature_size(family)), 0.0);
  features[static_cast<std::size_t>(task.map().cell_index(state.agent))] = 1.0;
  const int base = family.base_map.cell_count();
  switch (family.env) {
    case EnvKind::GridNav: break;
    case EnvKind::MultiPoint:
    case EnvKind::OrderedNav:
      for (int e = 0; e < family.entity_count; ++e) {
        features[static_cast<std::size_t>(base + e)] =
            state.status[static_cast<std::size_t>(e)] != 0 ? 1.0 : 0.0;
      }
      break;
    case EnvKind::PickupDropoff:
      for (int p = 0; p < family.entity_count; ++p) {
        const auto s = static_cast<PassengerStatus>(state.status[static_cast<std::size_t>(p)]);
        features[static_cast<std::size_t>(base + 2 * p)] = s == PassengerStatus::Carried ? 1.0 : 0.0;
        features[static_cast<std::size_t>(base + 2 * p + 1)] =
            s == PassengerStatus::Delivered ? 1.0 : 0.0;
      }
      break;
  }
  return features;
}

int raw_context_feature_size(const Cmdp& family) {
  switch (family.space) {
    case ContextSpace::EntityLocation: return 2 * family.slot_count();
    case ContextSpace::ChangingMap: return family.base_map.interior_edge_count();
    case ContextSpace::PoiOrder: return family.entity_count;
  }
  return 0;
}

std::vector<double> raw_context_features(const Cmdp& family, const Context& context) {
  std::vector<double> features;
  features.reserve(static_cast<std::size_t>(raw_context_feature_size(family)));
  switch (family.space) {
    case ContextSpace::EntityLocation: {
      const double row_span = std::max(1, family.base_map.height() - 1);
      const double col_span = std::max(1, family.base_map.width() - 1);
      for (const Coord& c : context.entities) {
        features.push_back(static_cast<double>(c.row) / row_span);
        features.push_back(static_cast<double>(c.col) / col_span);
      }
      break;
    }
    case ContextSpace::ChangingMap:
      for (std::uint8_t bit : context.walls) features.push_back(bit ? 1.0 : 0.0);
      break;
    case ContextSpace::PoiOrder: {
      // Feature e is entity e's normalized position in the visiting order.
      std::vector<int> rank(context.order.size(), 0);
      for (std::size_t k = 0; k < context.order.size(); ++k) {
        rank[static_cast<std::size_t>(context.order[k])] = static_cast<int>(k);
      }
      const double span = std::max<std::size_t>(1, context.order.size() - 1);
      for (std::size_t e = 0; e < rank.size(); ++e) {
        features.push_back(static_cast<double>(rank[e]) / span);
      }
      break;
    }
  }
  if (static_cast<int>(features.size()) != raw_context_feature_size(family)) {
    throw std::invalid_argument("context payload does not match the task family");
  }
  return features;
}

}  // namespace cprep
