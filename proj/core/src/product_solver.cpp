#include "cprep/product_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

#include "cprep/errors.hpp"

namespace cprep {

namespace {

struct ProductArc {
  long next = 0;
  double reward = 0.0;
  bool cut = false;  ///< completion: no continuation value
};

/// Precomputed model: one arc per (product state, action); absorbing states
/// carry no arcs.
struct ProductModel {
  int cells = 0;
  int codes = 0;
  int machine = 0;
  int actions = 0;
  std::vector<ProductArc> arcs;          ///< (cell*codes+code)*machine*actions layout
  std::vector<std::uint8_t> absorbing;   ///< per product state

  long index(int cell, int code, int u) const {
    return (static_cast<long>(cell) * codes + code) * machine + u;
  }
};

ProductModel build_model(const Cmdp& family, const TaskMdp& task, const GeneratedRm& gen,
                         const RmValueTable* table, ProductReward mode,
                         const ProductOptions& options) {
  if (mode == ProductReward::RmShaped && table == nullptr) {
    throw std::invalid_argument("solve_product: shaping requires a machine value table");
  }
  ProductModel model;
  model.cells = task.map().cell_count();
  model.codes = status_code_count(family.env, family.entity_count);
  model.machine = gen.rm.state_count();
  model.actions = task.action_count();
  const long total = static_cast<long>(model.cells) * model.codes * model.machine;
  if (total > options.max_product_states) {
    throw std::invalid_argument("solve_product: product has " + std::to_string(total) +
                                " states, exceeding the configured limit");
  }

  model.absorbing.assign(static_cast<std::size_t>(total), 0);
  model.arcs.assign(static_cast<std::size_t>(total) * static_cast<std::size_t>(model.actions),
                    {});

  for (int cell = 0; cell < model.cells; ++cell) {
    for (int code = 0; code < model.codes; ++code) {
      EnvState state;
      state.agent = task.map().cell_at(cell);
      state.status = status_from_code(family.env, family.entity_count, code);
      const bool env_done = task.objective_complete(state);
      for (int u = 0; u < model.machine; ++u) {
        const long at = model.index(cell, code, u);
        if (env_done || gen.rm.is_terminal(u)) {
          model.absorbing[static_cast<std::size_t>(at)] = 1;
          continue;
        }
        for (int a = 0; a < model.actions; ++a) {
          const TaskMdp::Outcome out = task.apply(state, a);
          const Label label = gen.labeler(state, a, out.next);
          const RmStepResult ms = rm_step(gen.rm, u, label);
          ProductArc arc;
          arc.next = model.index(task.map().cell_index(out.next.agent),
                                 status_code(family.env, out.next), ms.next);
          arc.cut = out.done || gen.rm.is_terminal(ms.next);
          switch (mode) {
            case ProductReward::Environment: arc.reward = out.reward; break;
            case ProductReward::RmRaw: arc.reward = ms.reward; break;
            case ProductReward::RmShaped:
              arc.reward = ms.reward +
                           table->gamma * table->values[static_cast<std::size_t>(ms.next)] -
                           table->values[static_cast<std::size_t>(u)];
              break;
          }
          model.arcs[static_cast<std::size_t>(at) * static_cast<std::size_t>(model.actions) +
                     static_cast<std::size_t>(a)] = arc;
        }
      }
    }
  }
  return model;
}

}  // namespace

ProductSolution solve_product(const Cmdp& family, const TaskMdp& task, const GeneratedRm& gen,
                              const RmValueTable* table, double gamma, ProductReward mode,
                              ProductOptions options) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("solve_product: gamma must lie in [0, 1)");
  }
  const ProductModel model = build_model(family, task, gen, table, mode, options);
  const long total = static_cast<long>(model.cells) * model.codes * model.machine;

  ProductSolution solution;
  solution.cells_ = model.cells;
  solution.codes_ = model.codes;
  solution.machine_ = model.machine;
  solution.gamma_ = gamma;
  solution.values_.assign(static_cast<std::size_t>(total), 0.0);

  std::vector<double> next(static_cast<std::size_t>(total), 0.0);
  bool converged = false;
  for (long iter = 1; iter <= options.max_iterations; ++iter) {
    double residual = 0.0;
    for (long s = 0; s < total; ++s) {
      if (model.absorbing[static_cast<std::size_t>(s)]) {
        next[static_cast<std::size_t>(s)] = 0.0;
        continue;
      }
      double best = -std::numeric_limits<double>::infinity();
      const std::size_t base =
          static_cast<std::size_t>(s) * static_cast<std::size_t>(model.actions);
      for (int a = 0; a < model.actions; ++a) {
        const ProductArc& arc = model.arcs[base + static_cast<std::size_t>(a)];
        const double continuation =
            arc.cut ? 0.0 : gamma * solution.values_[static_cast<std::size_t>(arc.next)];
        best = std::max(best, arc.reward + continuation);
      }
      residual = std::max(residual,
                          std::abs(best - solution.values_[static_cast<std::size_t>(s)]));
      next[static_cast<std::size_t>(s)] = best;
    }
    solution.values_.swap(next);
    solution.iterations_ = static_cast<int>(iter);
    solution.residual_ = residual;
    if (residual <= options.tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw ConvergenceError("solve_product: no fixpoint within the sweep budget",
                           solution.residual_);
  }

  solution.greedy_.assign(static_cast<std::size_t>(total), {});
  for (long s = 0; s < total; ++s) {
    if (model.absorbing[static_cast<std::size_t>(s)]) continue;
    const std::size_t base = static_cast<std::size_t>(s) * static_cast<std::size_t>(model.actions);
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < model.actions; ++a) {
      const ProductArc& arc = model.arcs[base + static_cast<std::size_t>(a)];
      const double continuation =
          arc.cut ? 0.0 : gamma * solution.values_[static_cast<std::size_t>(arc.next)];
      best = std::max(best, arc.reward + continuation);
    }
    for (int a = 0; a < model.actions; ++a) {
      const ProductArc& arc = model.arcs[base + static_cast<std::size_t>(a)];
      const double continuation =
          arc.cut ? 0.0 : gamma * solution.values_[static_cast<std::size_t>(arc.next)];
      if (arc.reward + continuation >= best - options.tie_tolerance) {
        solution.greedy_[static_cast<std::size_t>(s)].push_back(a);
      }
    }
  }
  return solution;
}

std::vector<long> reachable_product_states(const Cmdp& family, const TaskMdp& task,
                                           const GeneratedRm& gen) {
  const int cells = task.map().cell_count();
  const int codes = status_code_count(family.env, family.entity_count);
  const int machine = gen.rm.state_count();
  const int actions = task.action_count();
  const long total = static_cast<long>(cells) * codes * machine;
  auto index = [&](int cell, int code, int u) {
    return (static_cast<long>(cell) * codes + code) * machine + u;
  };

  std::vector<std::uint8_t> seen(static_cast<std::size_t>(total), 0);
  std::queue<long> frontier;
  // Every legal reset: any cell without an entity, fresh status, matching
  // machine state.
  for (int cell = 0; cell < cells; ++cell) {
    const Coord c = task.map().cell_at(cell);
    if (std::find(task.entity_cells().begin(), task.entity_cells().end(), c) !=
        task.entity_cells().end()) {
      continue;
    }
    EnvState state;
    state.agent = c;
    state.status = status_from_code(family.env, family.entity_count, 0);
    const long at = index(cell, 0, gen.initial_state(state));
    if (!seen[static_cast<std::size_t>(at)]) {
      seen[static_cast<std::size_t>(at)] = 1;
      frontier.push(at);
    }
  }

  while (!frontier.empty()) {
    const long at = frontier.front();
    frontier.pop();
    const int u = static_cast<int>(at % machine);
    const int code = static_cast<int>((at / machine) % codes);
    const int cell = static_cast<int>(at / (static_cast<long>(machine) * codes));

    EnvState state;
    state.agent = task.map().cell_at(cell);
    state.status = status_from_code(family.env, family.entity_count, code);
    if (task.objective_complete(state) || gen.rm.is_terminal(u)) continue;

    for (int a = 0; a < actions; ++a) {
      const TaskMdp::Outcome out = task.apply(state, a);
      if (out.done) continue;  // the episode ends; no successor state to expand
      const Label label = gen.labeler(state, a, out.next);
      const RmStepResult ms = rm_step(gen.rm, u, label);
      const long next = index(task.map().cell_index(out.next.agent),
                              status_code(family.env, out.next), ms.next);
      if (!seen[static_cast<std::size_t>(next)]) {
        seen[static_cast<std::size_t>(next)] = 1;
        frontier.push(next);
      }
    }
  }

  std::vector<long> reachable;
  for (long s = 0; s < total; ++s) {
    if (seen[static_cast<std::size_t>(s)]) reachable.push_back(s);
  }
  return reachable;
}

}  // namespace cprep
