#pragma once

#include <functional>
#include <vector>

#include "cprep/gridworld.hpp"
#include "cprep/reward_machine.hpp"

namespace cprep {

/// Partition of the grid into equal rectangular sectors, with the sector
/// adjacency induced by unblocked edges between cells of different sectors.
struct SectorDecomposition {
  int block_rows = 0;   ///< cell rows per sector
  int block_cols = 0;   ///< cell columns per sector
  int rows = 0;         ///< sector-grid height
  int cols = 0;         ///< sector-grid width
  std::vector<int> sector_of;               ///< indexed by cell index
  std::vector<std::vector<int>> adjacency;  ///< per sector, ascending, no duplicates

  int sector_count() const { return rows * cols; }
  int sector_of_cell(const GridMap& map, Coord c) const {
    return sector_of.at(static_cast<std::size_t>(map.cell_index(c)));
  }
};

/// Throws std::invalid_argument when the block size does not tile the grid.
SectorDecomposition make_sectors(const GridMap& map, int block_rows, int block_cols);

enum class RmResolution {
  Full,     ///< machine reward reproduces the task reward on every trajectory
  Partial,  ///< machine tracks an abstraction (here: sectors, not cells)
};

using EnvLabeler = LabelingFunction<EnvState, int>;

/// A machine generated for one context, together with the labeling function
/// that feeds it and the mapping from a freshly reset environment state to
/// the matching machine state.
struct GeneratedRm {
  RewardMachine rm;
  EnvLabeler labeler;
  RmResolution resolution = RmResolution::Partial;
  std::function<int(const EnvState&)> initial_state;
};

/// Sector-abstraction machine for GridNav / MultiPoint / PickupDropoff.
/// States pair a sector with the entity status (GridNav has none); one
/// terminal absorbs completion.  Per state, event transitions (declared in
/// entity order) precede sector-move transitions (ascending neighbor), so
/// first-match semantics prioritize events.  The final completing event is
/// the only transition with reward 1.
GeneratedRm gen_sector_rm(const Cmdp& family, const Context& context);

/// Visit-order machine for OrderedNav: a chain u0 ... un over symbols P1..Pn
/// (one per entity).  Step k takes the positive edge on the k-th entity in
/// the context order and self-loops on its negation; only the final edge
/// rewards 1.
GeneratedRm gen_order_rm(const Cmdp& family, const Context& context);

/// Dispatches on the environment kind.
GeneratedRm generate(const Cmdp& family, const Context& context);

}  // namespace cprep
