#include "cprep/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "cprep/numeric_text.hpp"

namespace cprep {

double time_to_threshold(const TrainingHistory& history, double threshold) {
  if (history.points.empty()) {
    throw std::invalid_argument("time_to_threshold: empty history");
  }
  for (const HistoryPoint& point : history.points) {
    if (point.mean_return >= threshold) {
      return static_cast<double>(point.progress_percent);
    }
  }
  return 100.0;
}

std::vector<double> threshold_grid(int count) {
  if (count < 2) throw std::invalid_argument("threshold_grid: need at least two thresholds");
  std::vector<double> grid(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    grid[static_cast<std::size_t>(i)] = static_cast<double>(i) / static_cast<double>(count - 1);
  }
  return grid;
}

double ttt_auc(const TrainingHistory& history, const std::vector<double>& grid) {
  if (grid.empty()) throw std::invalid_argument("ttt_auc: empty threshold grid");
  double total = 0.0;
  for (double threshold : grid) total += time_to_threshold(history, threshold);
  return total / static_cast<double>(grid.size());
}

double ttt_auc(const TrainingHistory& history) { return ttt_auc(history, threshold_grid()); }

double jumpstart(const TrainingHistory& history) {
  if (history.points.empty()) throw std::invalid_argument("jumpstart: empty history");
  if (history.points.front().progress_percent != 0) {
    throw std::invalid_argument("jumpstart: history is missing its pre-training point");
  }
  return history.points.front().mean_return;
}

double curve_auc(const TrainingHistory& history) {
  if (history.points.empty()) throw std::invalid_argument("curve_auc: empty history");
  double total = 0.0;
  for (const HistoryPoint& point : history.points) total += point.mean_return;
  return total / static_cast<double>(history.points.size());
}

TransferRatio transfer_ratio(double transfer_auc, double scratch_auc) {
  TransferRatio ratio;
  if (scratch_auc == 0.0) {
    ratio.infinite = true;
    ratio.value = std::numeric_limits<double>::infinity();
    return ratio;
  }
  ratio.value = transfer_auc / scratch_auc;
  return ratio;
}

TransferRatio transfer_ratio(const TrainingHistory& transfer, const TrainingHistory& scratch) {
  return transfer_ratio(curve_auc(transfer), curve_auc(scratch));
}

double interquartile_mean(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("interquartile_mean: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t drop = values.size() / 4;
  double total = 0.0;
  std::size_t kept = 0;
  for (std::size_t i = drop; i < values.size() - drop; ++i) {
    total += values[i];
    ++kept;
  }
  return total / static_cast<double>(kept);
}

double sample_std(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double accum = 0.0;
  for (double v : values) accum += (v - mean) * (v - mean);
  return std::sqrt(accum / static_cast<double>(values.size() - 1));
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile: empty input");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("percentile: q outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double rank = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(rank);
  const double frac = rank - static_cast<double>(lo);
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

ConfidenceInterval stratified_bootstrap_ci(const std::vector<std::vector<double>>& strata,
                                           RandomStream& rng, int resamples, double level) {
  if (resamples < 1) throw std::invalid_argument("stratified_bootstrap_ci: no resamples");
  if (!(level > 0.0 && level < 1.0)) {
    throw std::invalid_argument("stratified_bootstrap_ci: level outside (0, 1)");
  }
  std::size_t total = 0;
  for (const auto& stratum : strata) total += stratum.size();
  if (total == 0) throw std::invalid_argument("stratified_bootstrap_ci: empty strata");

  std::vector<double> stats;
  stats.reserve(static_cast<std::size_t>(resamples));
  std::vector<double> pooled;
  pooled.reserve(total);
  for (int r = 0; r < resamples; ++r) {
    pooled.clear();
    for (const auto& stratum : strata) {
      for (std::size_t i = 0; i < stratum.size(); ++i) {
        pooled.push_back(stratum[static_cast<std::size_t>(rng.uniform_index(stratum.size()))]);
      }
    }
    stats.push_back(interquartile_mean(pooled));
  }
  const double alpha = (1.0 - level) / 2.0;
  ConfidenceInterval ci;
  ci.low = percentile(stats, alpha);
  ci.high = percentile(stats, 1.0 - alpha);
  return ci;
}

void write_history_csv(const std::filesystem::path& path, const TrainingHistory& history) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write history file: " + path.string());
  out << "progress_percent,env_steps,mean_return\n";
  for (const HistoryPoint& point : history.points) {
    out << point.progress_percent << ',' << point.env_steps << ','
        << format_double(point.mean_return) << '\n';
  }
  if (!out) throw std::runtime_error("failed while writing history file: " + path.string());
}

TrainingHistory read_history_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open history file: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "progress_percent,env_steps,mean_return") {
    throw std::runtime_error("unexpected history header in " + path.string());
  }
  TrainingHistory history;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    HistoryPoint point;
    if (!std::getline(row, field, ',')) break;
    point.progress_percent = std::stoi(field);
    if (!std::getline(row, field, ',')) {
      throw std::runtime_error("truncated history row in " + path.string());
    }
    point.env_steps = std::stol(field);
    if (!std::getline(row, field, ',')) {
      throw std::runtime_error("truncated history row in " + path.string());
    }
    point.mean_return = parse_double(field);
    history.points.push_back(point);
  }
  return history;
}

}  // namespace cprep
