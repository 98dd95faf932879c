#pragma once

#include <filesystem>
#include <vector>

#include "cprep/rng.hpp"

namespace cprep {

/// One evaluation point along a training run.
struct HistoryPoint {
  int progress_percent = 0;  ///< 0..100
  long env_steps = 0;
  double mean_return = 0.0;
};

/// Evaluation curve: one pre-training point (progress 0) plus one point per
/// percent of the training budget, 101 points in total.
struct TrainingHistory {
  std::vector<HistoryPoint> points;

  int size() const { return static_cast<int>(points.size()); }
  double return_at(int index) const {
    return points.at(static_cast<std::size_t>(index)).mean_return;
  }
};

/// The progress percent at which the curve first reaches `threshold`, or 100
/// when it never does.
double time_to_threshold(const TrainingHistory& history, double threshold);

/// Evenly spaced thresholds 0, 0.02, ..., 1.0 (51 by default).
std::vector<double> threshold_grid(int count = 51);

/// Mean of time_to_threshold over the grid.
double ttt_auc(const TrainingHistory& history, const std::vector<double>& grid);
double ttt_auc(const TrainingHistory& history);

/// Jumpstart: the pre-training (progress 0) mean return.
double jumpstart(const TrainingHistory& history);

/// Mean of the curve's returns (area under the curve, normalized).
double curve_auc(const TrainingHistory& history);

/// Area ratio of a transfer curve over a from-scratch curve on the same
/// tasks.  A zero denominator is reported through the flag, not a value.
struct TransferRatio {
  double value = 0.0;
  bool infinite = false;
};
TransferRatio transfer_ratio(const TrainingHistory& transfer, const TrainingHistory& scratch);
TransferRatio transfer_ratio(double transfer_auc, double scratch_auc);

/// Interquartile mean: drops floor(n/4) smallest and largest values, then
/// averages the rest.  Throws std::invalid_argument on empty input.
double interquartile_mean(std::vector<double> values);

/// Sample standard deviation (n-1 denominator); 0 for fewer than two values.
double sample_std(const std::vector<double>& values);

struct ConfidenceInterval {
  double low = 0.0;
  double high = 0.0;
};

/// Percentile bootstrap interval for the interquartile mean of pooled
/// strata.  Each resample redraws every stratum with replacement at its own
/// size, pools the redrawn values, and records their interquartile mean; the
/// interval takes the (1-level)/2 and (1+level)/2 percentiles (linear
/// interpolation) over `resamples` replicates.
ConfidenceInterval stratified_bootstrap_ci(const std::vector<std::vector<double>>& strata,
                                           RandomStream& rng, int resamples = 2000,
                                           double level = 0.95);

/// Linear-interpolation percentile of a sample, q in [0, 1].
double percentile(std::vector<double> values, double q);

/// History CSV: header "progress_percent,env_steps,mean_return", one row per
/// point, full-precision returns.
void write_history_csv(const std::filesystem::path& path, const TrainingHistory& history);
TrainingHistory read_history_csv(const std::filesystem::path& path);

}  // namespace cprep
