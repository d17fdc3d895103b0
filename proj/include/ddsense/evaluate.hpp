#pragma once

// Quantitative evaluation protocol: per-snapshot groundtruth filter,
// detection probability, per-dimension RMSE and the max-hold background map.

#include <cmath>
#include <optional>
#include <vector>

#include "ddsense/grid.hpp"

namespace ddsense {

struct EvalConfig {
  double eps_tau = 0.0;    // s; default 3 delay resolution cells
  double eps_alpha = 0.0;  // Hz; default 3 Doppler resolution cells

  static EvalConfig defaults_for(const SamplingGrid& grid) {
    EvalConfig c;
    c.eps_tau = 3.0 / grid.bandwidth();
    c.eps_alpha = 3.0 / grid.cpi();
    return c;
  }

  void validate() const {
    if (!(eps_tau > 0.0) || !(eps_alpha > 0.0))
      throw ConfigError("EvalConfig: epsilons must be positive");
  }
};

// Among estimates strictly inside both epsilon gates, the one closest to the
// groundtruth under the epsilon-normalized Euclidean norm; empty when none
// qualifies. Ties resolve to the lowest input index.
inline std::optional<std::pair<double, double>> groundtruth_filter(
    const std::vector<std::pair<double, double>>& estimates, std::pair<double, double> gt,
    const EvalConfig& cfg) {
  cfg.validate();
  std::optional<std::pair<double, double>> best;
  double best_d = 0.0;
  for (const auto& est : estimates) {
    const double dt = est.first - gt.first;
    const double da = est.second - gt.second;
    if (!(std::abs(dt) < cfg.eps_tau) || !(std::abs(da) < cfg.eps_alpha)) continue;
    const double d = std::hypot(dt / cfg.eps_tau, da / cfg.eps_alpha);
    if (!best || d < best_d) {
      best = est;
      best_d = d;
    }
  }
  return best;
}

// P_D = 1 - N_empty / N_meas over the per-snapshot assignments.
inline double detection_probability(
    const std::vector<std::optional<std::pair<double, double>>>& assignments) {
  if (assignments.empty()) throw DataError("detection_probability: no snapshots");
  std::size_t empty = 0;
  for (const auto& a : assignments)
    if (!a) ++empty;
  return 1.0 - static_cast<double>(empty) / static_cast<double>(assignments.size());
}

// Per-dimension RMSE over assigned (estimate, groundtruth) pairs.
inline std::pair<double, double> rmse(
    const std::vector<std::pair<std::pair<double, double>, std::pair<double, double>>>& assigned) {
  if (assigned.empty()) throw DataError("rmse: no assigned pairs");
  double st = 0.0, sa = 0.0;
  for (const auto& [est, gt] : assigned) {
    st += (est.first - gt.first) * (est.first - gt.first);
    sa += (est.second - gt.second) * (est.second - gt.second);
  }
  const double n = static_cast<double>(assigned.size());
  return {std::sqrt(st / n), std::sqrt(sa / n)};
}

// Elementwise maximum of magnitude maps across snapshots.
inline RMatrix max_hold(const std::vector<RMatrix>& maps) {
  if (maps.empty()) throw DataError("max_hold: no maps");
  RMatrix out = maps.front();
  for (std::size_t i = 1; i < maps.size(); ++i) {
    if (maps[i].rows() != out.rows() || maps[i].cols() != out.cols())
      throw DataError("max_hold: shape mismatch at snapshot " + std::to_string(i));
    out = out.cwiseMax(maps[i]);
  }
  return out;
}

struct EvalReport {
  int n_meas = 0;
  int n_empty = 0;
  double p_d = 0.0;
  double rmse_tau = 0.0;    // s
  double rmse_alpha = 0.0;  // Hz
  // per-snapshot assigned estimate (empty when the filter rejected them all)
  std::vector<std::optional<std::pair<double, double>>> assignments;
};

// Full protocol against one groundtruth track: filter per snapshot, then
// aggregate P_D and RMSE over the assigned subset.
inline EvalReport evaluate_track(
    const std::vector<std::vector<std::pair<double, double>>>& per_snapshot_estimates,
    const std::vector<std::pair<double, double>>& groundtruth, const EvalConfig& cfg) {
  if (per_snapshot_estimates.size() != groundtruth.size())
    throw DataError("evaluate_track: estimate/groundtruth snapshot counts differ");
  EvalReport r;
  r.n_meas = static_cast<int>(groundtruth.size());
  std::vector<std::pair<std::pair<double, double>, std::pair<double, double>>> assigned;
  for (std::size_t i = 0; i < groundtruth.size(); ++i) {
    auto pick = groundtruth_filter(per_snapshot_estimates[i], groundtruth[i], cfg);
    r.assignments.push_back(pick);
    if (pick)
      assigned.emplace_back(*pick, groundtruth[i]);
    else
      ++r.n_empty;
  }
  r.p_d = detection_probability(r.assignments);
  if (!assigned.empty()) std::tie(r.rmse_tau, r.rmse_alpha) = rmse(assigned);
  return r;
}

}  // namespace ddsense
