#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cprep/rng.hpp"

namespace cprep {

struct Coord {
  int row = 0;
  int col = 0;
  friend bool operator==(const Coord&, const Coord&) = default;
};

/// Rectangular grid with optional walls on interior edges.  Interior edges
/// are indexed east-first: edge e < height*(width-1) separates (r, c) from
/// (r, c+1) in row-major order; the remaining (height-1)*width edges
/// separate (r, c) from (r+1, c), also row-major.
class GridMap {
 public:
  GridMap(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  int cell_count() const { return width_ * height_; }
  int interior_edge_count() const { return height_ * (width_ - 1) + (height_ - 1) * width_; }

  bool in_bounds(Coord c) const {
    return c.row >= 0 && c.row < height_ && c.col >= 0 && c.col < width_;
  }
  int cell_index(Coord c) const;
  Coord cell_at(int index) const;

  void set_wall(int edge, bool present);
  bool wall(int edge) const { return walls_.at(static_cast<std::size_t>(edge)); }
  /// Whether movement between two orthogonally adjacent cells is blocked.
  bool blocked(Coord from, Coord to) const;
  int wall_count() const;

  /// True when every cell can reach every other cell.
  bool connected() const;

  std::vector<std::uint8_t> wall_bits() const { return {walls_.begin(), walls_.end()}; }
  static GridMap with_walls(int width, int height, const std::vector<std::uint8_t>& bits);

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> walls_;  ///< one flag per interior edge
};

enum class EnvKind { GridNav, MultiPoint, PickupDropoff, OrderedNav };
enum class ContextSpace { EntityLocation, ChangingMap, PoiOrder };

const char* env_code(EnvKind env);          // "GN", "MP", "PD", "ON"
const char* space_code(ContextSpace space); // "EL", "CM", "PO"
EnvKind parse_env_code(const std::string& code);
ContextSpace parse_space_code(const std::string& code);

/// One draw from a context space.  Exactly the payload matching `space` is
/// populated: entity cells for EntityLocation, wall flags for ChangingMap,
/// a visiting order (position k holds an entity index) for PoiOrder.
struct Context {
  ContextSpace space = ContextSpace::EntityLocation;
  std::vector<Coord> entities;
  std::vector<std::uint8_t> walls;
  std::vector<int> order;

  friend bool operator==(const Context&, const Context&) = default;
};

/// Compact canonical string; equal contexts produce equal keys.
std::string context_key(const Context& context);
std::string describe_context(const Context& context);
Context parse_context(const std::string& text);

struct CmdpOptions {
  int width = 6;
  int height = 6;
  int entity_count = -1;  ///< -1 selects the family default
  int episode_cap = 200;
  int cm_wall_min = 2;    ///< ChangingMap draws wall counts uniformly in
  int cm_wall_max = 10;   ///< [cm_wall_min, cm_wall_max]
  int sector_rows = 2;    ///< abstraction block size used by machine generation
  int sector_cols = 2;
};

/// A task family: environment kind plus context space plus the shared layout.
/// Individual tasks are produced by instantiate().
struct Cmdp {
  EnvKind env = EnvKind::GridNav;
  ContextSpace space = ContextSpace::EntityLocation;
  CmdpOptions options;
  GridMap base_map{6, 6};
  int entity_count = 1;  ///< destinations (GridNav/MultiPoint/OrderedNav) or passengers (PickupDropoff)

  int slot_count() const;  ///< placement slots; PickupDropoff uses 2 per passenger
};

/// Validates the pairing and fills family defaults (entity counts: GridNav 1,
/// MultiPoint and PickupDropoff 2, OrderedNav 5).  Supported pairings:
/// GridNav/MultiPoint/PickupDropoff with EntityLocation or ChangingMap, and
/// OrderedNav with PoiOrder.  Throws std::invalid_argument otherwise.
Cmdp make_cmdp(EnvKind env, ContextSpace space, CmdpOptions options = {});

/// Fixed placement used whenever entities are not part of the context: the
/// four corners in the order (0,0), (0,w-1), (h-1,0), (h-1,w-1), then the
/// remaining cells row-major.
std::vector<Coord> default_entity_cells(const GridMap& map, int slots);

enum class PassengerStatus : std::uint8_t { Waiting = 0, Carried = 1, Delivered = 2 };

/// Environment state.  `status` holds one flag per destination (visited) for
/// MultiPoint/OrderedNav and one PassengerStatus per passenger for
/// PickupDropoff; GridNav needs no flags.  `t` counts steps this episode.
struct EnvState {
  Coord agent;
  std::vector<std::uint8_t> status;
  int t = 0;

  friend bool operator==(const EnvState&, const EnvState&) = default;
};

/// One task: the family bound to a concrete context.  Owns the stream that
/// draws initial agent cells, so resets are reproducible per task.
class TaskMdp {
 public:
  TaskMdp(const Cmdp& family, const Context& context, std::uint64_t task_seed);

  EnvKind env() const { return env_; }
  const GridMap& map() const { return map_; }
  int action_count() const;
  int entity_count() const { return entity_count_; }
  Coord entity_cell(int slot) const { return entity_cells_.at(static_cast<std::size_t>(slot)); }
  const std::vector<Coord>& entity_cells() const { return entity_cells_; }
  const std::vector<int>& visit_order() const { return visit_order_; }
  int episode_cap() const { return episode_cap_; }
  const Context& context() const { return context_; }

  /// Draws a fresh initial state: uniform over cells that hold no entity,
  /// all flags cleared, t = 0.
  EnvState reset();

  /// Pure single-step dynamics without the episode cap (used by exact
  /// planning): bumping a wall or the boundary leaves the agent in place;
  /// reward is 1 exactly when this step completes the full objective.
  struct Outcome {
    EnvState next;
    double reward = 0.0;
    bool done = false;
  };
  Outcome apply(const EnvState& state, int action) const;

  bool objective_complete(const EnvState& state) const;

 private:
  EnvKind env_;
  GridMap map_;
  int entity_count_;
  std::vector<Coord> entity_cells_;
  std::vector<int> visit_order_;
  int episode_cap_;
  Context context_;
  RandomStream reset_rng_;
};

TaskMdp instantiate(const Cmdp& family, const Context& context, std::uint64_t task_seed);

/// apply() plus the episode cap: an episode also ends, without reward and
/// flagged truncated, once t reaches the cap.  Throws std::invalid_argument
/// for out-of-range actions or states already past their episode.
struct StepResult {
  EnvState next;
  double reward = 0.0;
  bool done = false;       ///< objective completed
  bool truncated = false;  ///< cap reached without completion
};
StepResult env_step(const TaskMdp& task, const EnvState& state, int action);

/// Action sets: 0..3 move north/south/east/west.  GridNav adds 4 = declare
/// done; MultiPoint/OrderedNav add 4 = declare arrived; PickupDropoff adds
/// 4 = pick up and 5 = drop off.
constexpr int kActionNorth = 0;
constexpr int kActionSouth = 1;
constexpr int kActionEast = 2;
constexpr int kActionWest = 3;
constexpr int kActionInteract = 4;   ///< done / arrived / pick up
constexpr int kActionDropoff = 5;    ///< PickupDropoff only

std::string action_name(EnvKind env, int action);

/// Draws disjoint source/target context sets without repeats.  Throws
/// std::invalid_argument when the space cannot supply enough distinct
/// contexts and std::runtime_error when rejection sampling stalls.
struct ContextSets {
  std::vector<Context> source;
  std::vector<Context> target;
};
ContextSets sample_contexts(const Cmdp& family, int n_source, int n_target, RandomStream& rng);
Context sample_context(const Cmdp& family, RandomStream& rng);

/// Number of distinct contexts the space admits, saturating at a large cap.
double context_space_size(const Cmdp& family);

/// Task-state features: one-hot agent cell followed by the status flags
/// (PickupDropoff expands each passenger to [carried, delivered]).
std::vector<double> state_features(const Cmdp& family, const TaskMdp& task, const EnvState& state);
int state_feature_size(const Cmdp& family);

/// Direct context features: EntityLocation yields normalized coordinates per
/// slot, ChangingMap the wall flags, PoiOrder each entity's normalized rank.
std::vector<double> raw_context_features(const Cmdp& family, const Context& context);
int raw_context_feature_size(const Cmdp& family);

/// Resolved layout shared by task instantiation and machine generation.
struct TaskLayout {
  GridMap map{6, 6};
  std::vector<Coord> entity_cells;
  std::vector<int> visit_order;
};
TaskLayout resolve_layout(const Cmdp& family, const Context& context);

/// Dense enumeration of the status vectors a family admits (GridNav: the
/// single empty status).  Codes pack visited flags as bits and passenger
/// statuses base-3, least significant entity first.
int status_code_count(EnvKind env, int entity_count);
int status_code(EnvKind env, const EnvState& state);
std::vector<std::uint8_t> status_from_code(EnvKind env, int entity_count, int code);

}  // namespace cprep
