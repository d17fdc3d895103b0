#pragma once

// Sampling geometry and path parameterization of the delay-Doppler channel.

#include <cmath>
#include <optional>
#include <vector>

#include "ddsense/common.hpp"

namespace ddsense {

// Frequency/time sampling geometry of one snapshot.
//
// f_k = f_start + k*delta_f (k in [0, n_freq)),
// t_l = t_start + l*delta_t (l in [0, n_time)).
struct SamplingGrid {
  int n_freq = 0;
  int n_time = 0;
  double delta_f = 0.0;   // Hz
  double delta_t = 0.0;   // s
  double f_start = 0.0;   // Hz, conventionally -B/2
  double t_start = 0.0;   // s
  double carrier_hz = 0;  // metadata for geometry conversions

  static SamplingGrid make(int nf, int nt, double df, double dt,
                           std::optional<double> f0 = std::nullopt,
                           double t0 = 0.0, double fc = 0.0) {
    if (nf <= 0 || nt <= 0 || !(df > 0.0) || !(dt > 0.0))
      throw ConfigError("SamplingGrid: n_freq, n_time, delta_f, delta_t must be positive");
    SamplingGrid g;
    g.n_freq = nf;
    g.n_time = nt;
    g.delta_f = df;
    g.delta_t = dt;
    g.f_start = f0.value_or(-0.5 * nf * df);
    g.t_start = t0;
    g.carrier_hz = fc;
    return g;
  }

  double bandwidth() const { return n_freq * delta_f; }
  double cpi() const { return n_time * delta_t; }
  double freq_point(int k) const { return f_start + k * delta_f; }
  double time_point(int l) const { return t_start + l * delta_t; }

  // Unambiguous ranges of the sampled transfer function.
  double delay_range() const { return 1.0 / delta_f; }
  double doppler_range() const { return 1.0 / delta_t; }

  // Nominal resolution cells ("native bins").
  double delay_resolution() const { return 1.0 / bandwidth(); }
  double doppler_resolution() const { return 1.0 / cpi(); }

  RVector freq_axis() const {
    return RVector::LinSpaced(n_freq, f_start, f_start + (n_freq - 1) * delta_f);
  }
  RVector time_axis() const {
    return RVector::LinSpaced(n_time, t_start, t_start + (n_time - 1) * delta_t);
  }
};

// One propagation path theta_p = {gamma, (tau, alpha)}.
struct PathParams {
  Complex gamma{0.0, 0.0};  // complex weight
  double tau = 0.0;         // delay, s
  double alpha = 0.0;       // Doppler shift, Hz

  std::pair<double, double> eta() const { return {tau, alpha}; }
  bool is_static_clutter() const { return alpha == 0.0; }
  bool is_target() const { return alpha != 0.0; }

  bool finite() const {
    return std::isfinite(gamma.real()) && std::isfinite(gamma.imag()) &&
           std::isfinite(tau) && std::isfinite(alpha);
  }
};

// Unordered collection of paths; ordering carries no meaning.
struct PathSet {
  std::vector<PathParams> paths;

  int size() const { return static_cast<int>(paths.size()); }
  bool empty() const { return paths.empty(); }
  void add(Complex gamma, double tau, double alpha) { paths.push_back({gamma, tau, alpha}); }
};

// One observation Y = H + N with optional groundtruth label and noise metadata.
struct Snapshot {
  SamplingGrid grid;
  CMatrix y;  // n_freq x n_time
  std::optional<PathSet> label;
  std::optional<double> noise_var;
  std::optional<double> snr_db;
  std::optional<std::uint64_t> seed;
};

}  // namespace ddsense
