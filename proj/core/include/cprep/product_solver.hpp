#pragma once

#include <vector>

#include "cprep/gridworld.hpp"
#include "cprep/rm_generation.hpp"
#include "cprep/rm_planning.hpp"

namespace cprep {

/// Which reward the exact solver optimizes on the task x machine product.
enum class ProductReward {
  Environment,  ///< the task reward, machine component inert
  RmRaw,        ///< the machine transition reward
  RmShaped,     ///< machine reward plus the potential-based shaping term
};

struct ProductOptions {
  double tolerance = 1e-12;
  long max_iterations = 1'000'000;
  double tie_tolerance = 1e-9;
  long max_product_states = 2'000'000;
};

/// Exact solution of the joint (agent cell, status, machine state) system:
/// optimal discounted values and, per product state, the set of actions
/// within tie_tolerance of optimal.  Completed objectives and terminal
/// machine states absorb with value zero; transitions that complete the task
/// or the machine carry no continuation value.
class ProductSolution {
 public:
  int cell_count() const { return cells_; }
  int status_codes() const { return codes_; }
  int machine_states() const { return machine_; }
  long product_states() const { return static_cast<long>(values_.size()); }
  double gamma() const { return gamma_; }
  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

  long index(int cell, int code, int u) const {
    return (static_cast<long>(cell) * codes_ + code) * machine_ + u;
  }
  double value(long product_index) const {
    return values_.at(static_cast<std::size_t>(product_index));
  }
  const std::vector<int>& greedy(long product_index) const {
    return greedy_.at(static_cast<std::size_t>(product_index));
  }

  friend ProductSolution solve_product(const Cmdp&, const TaskMdp&, const GeneratedRm&,
                                       const RmValueTable*, double, ProductReward,
                                       ProductOptions);

 private:
  int cells_ = 0;
  int codes_ = 0;
  int machine_ = 0;
  double gamma_ = 0.0;
  int iterations_ = 0;
  double residual_ = 0.0;
  std::vector<double> values_;
  std::vector<std::vector<int>> greedy_;
};

/// Throws std::invalid_argument when the product exceeds max_product_states
/// or when RmShaped is requested without a value table, and ConvergenceError
/// when the sweep budget runs out.
ProductSolution solve_product(const Cmdp& family, const TaskMdp& task, const GeneratedRm& gen,
                              const RmValueTable* table, double gamma, ProductReward mode,
                              ProductOptions options = {});

/// Product states reachable from every possible reset (any agent cell that
/// holds no entity, fresh status, the matching machine state) under all
/// actions.  These are exactly the states where the machine tracks the task
/// faithfully.
std::vector<long> reachable_product_states(const Cmdp& family, const TaskMdp& task,
                                           const GeneratedRm& gen);

}  // namespace cprep
