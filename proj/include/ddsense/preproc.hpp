#pragma once

// Deterministic preprocessing chain: zero-Doppler clutter projection, DPSS
// multi-windowing, cropped delay-Doppler transform and real-valued channel
// stacking into the network input tensor.

#include <cmath>
#include <vector>

#include "ddsense/dpss.hpp"
#include "ddsense/signal.hpp"

namespace ddsense {

struct PreprocConfig {
  double nw = 2.0;          // standardized half-bandwidth
  int n_windows = 3;        // N_w
  double tau_max = 0.02;    // crop, fraction of the unambiguous delay range
  double alpha_max = 0.05;  // crop, fraction of the unambiguous Doppler range
  int n_tau = 512;
  int n_alpha = 512;
  bool clutter_filter = true;
  bool rect_window = false;  // replace the DPSS bank by one rectangular window
  double epsilon_log = 1e-12;

  void validate() const {
    if (n_windows < 1) throw ConfigError("PreprocConfig: n_windows >= 1");
    if (!(tau_max > 0.0) || tau_max > 1.0) throw ConfigError("PreprocConfig: tau_max in (0,1]");
    if (!(alpha_max > 0.0) || alpha_max > 0.5)
      throw ConfigError("PreprocConfig: alpha_max in (0,0.5]");
    if (n_tau < 8 || n_alpha < 8) throw ConfigError("PreprocConfig: crop sizes must be >= 8");
    if (!(epsilon_log > 0.0)) throw ConfigError("PreprocConfig: epsilon_log must be > 0");
  }

  int windows() const { return rect_window ? 1 : n_windows; }
};

// Real feature tensor 2N_w x N_tau x N_alpha with physical axis vectors.
// Channels [0, N_w) are log10 magnitudes, [N_w, 2N_w) phases in (-pi, pi].
struct FeatureTensor {
  std::vector<RMatrix> channels;  // each n_tau x n_alpha
  RVector tau_axis;               // s, length n_tau
  RVector alpha_axis;             // Hz, length n_alpha
  PreprocConfig config;
  SamplingGrid grid;

  int n_channels() const { return static_cast<int>(channels.size()); }
};

// Removes the zero-Doppler subspace: per frequency row, subtract the mean
// across slow time (projection orthogonal to the all-ones time vector).
inline CMatrix clutter_filter(const CMatrix& y) {
  if (y.cols() < 2) throw DataError("clutter_filter: need N_t >= 2");
  CMatrix out = y;
  out.colwise() -= y.rowwise().mean();
  return out;
}

// Delay axis of the cropped transform: n_tau bins covering [0, tau_max/df),
// i.e. the first bins of a DFT zero-padded to ceil(n_tau / tau_max).
inline RVector tau_axis_for(const SamplingGrid& grid, const PreprocConfig& cfg) {
  const double bin = cfg.tau_max / (cfg.n_tau * grid.delta_f);
  RVector ax(cfg.n_tau);
  for (int m = 0; m < cfg.n_tau; ++m) ax(m) = m * bin;
  return ax;
}

// Doppler axis: n_alpha bins covering [-alpha_max/dt, +alpha_max/dt) with a
// bin center exactly at zero Doppler.
inline RVector alpha_axis_for(const SamplingGrid& grid, const PreprocConfig& cfg) {
  const double bin = 2.0 * cfg.alpha_max / (cfg.n_alpha * grid.delta_t);
  RVector ax(cfg.n_alpha);
  for (int n = 0; n < cfg.n_alpha; ++n) ax(n) = (n - cfg.n_alpha / 2) * bin;
  return ax;
}

namespace detail {

// Correlation transform onto arbitrary (tau, alpha) sample points, evaluated
// as two dense products: M = D Y T with D[m,k] = conj(delay atom) and
// T[l,n] = conj(Doppler atom). Identical to zero-padding + DFT + crop when the
// sample points sit on the padded DFT lattice, without forming the padded
// arrays. Normalized by the rectangular-window coherent gain N_f*N_t.
inline CMatrix correlation_map(const CMatrix& y, const SamplingGrid& grid,
                               const RVector& taus, const RVector& alphas) {
  const Eigen::Index nt = taus.size(), na = alphas.size();
  CMatrix d(nt, grid.n_freq);
  for (Eigen::Index m = 0; m < nt; ++m)
    d.row(m) = delay_steering(grid, taus(m)).conjugate().transpose();
  CMatrix t(grid.n_time, na);
  for (Eigen::Index n = 0; n < na; ++n) t.col(n) = doppler_steering(grid, alphas(n)).conjugate();
  return (d * y * t) / static_cast<double>(grid.n_freq * grid.n_time);
}

}  // namespace detail

// Complex delay-Doppler maps of y, one per window of the bank (windows applied
// along frequency, rectangular along slow time).
inline std::vector<CMatrix> delay_doppler_maps(const CMatrix& y, const SamplingGrid& grid,
                                               const PreprocConfig& cfg) {
  cfg.validate();
  if (y.rows() != grid.n_freq || y.cols() != grid.n_time)
    throw DataError("delay_doppler_maps: snapshot shape does not match grid");

  const RVector taus = tau_axis_for(grid, cfg);
  const RVector alphas = alpha_axis_for(grid, cfg);

  std::vector<RVector> bank;
  if (cfg.rect_window) {
    bank.push_back(RVector::Ones(grid.n_freq));
  } else {
    bank = dpss_windows(grid.n_freq, cfg.nw, cfg.n_windows);
  }

  std::vector<CMatrix> maps;
  maps.reserve(bank.size());
  for (const RVector& w : bank) {
    const CMatrix yw = w.cast<Complex>().asDiagonal() * y;
    maps.push_back(detail::correlation_map(yw, grid, taus, alphas));
  }
  return maps;
}

// Full feature tensor: per window a log10-magnitude channel followed by the
// matching phase channels, shape (2 * windows) x n_tau x n_alpha.
inline FeatureTensor delay_doppler_map(const CMatrix& y_in, const SamplingGrid& grid,
                                       const PreprocConfig& cfg) {
  const CMatrix y = cfg.clutter_filter ? clutter_filter(y_in) : y_in;
  const std::vector<CMatrix> maps = delay_doppler_maps(y, grid, cfg);

  FeatureTensor ft;
  ft.config = cfg;
  ft.grid = grid;
  ft.tau_axis = tau_axis_for(grid, cfg);
  ft.alpha_axis = alpha_axis_for(grid, cfg);
  ft.channels.reserve(2 * maps.size());
  for (const CMatrix& m : maps)
    ft.channels.push_back(
        m.cwiseAbs().cwiseMax(cfg.epsilon_log).array().log10().matrix());
  for (const CMatrix& m : maps) {
    RMatrix ph(m.rows(), m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) ph(i, j) = std::arg(m(i, j));
    ft.channels.push_back(std::move(ph));
  }
  return ft;
}

}  // namespace ddsense
