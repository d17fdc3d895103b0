#pragma once

// Randomized synthetic dataset generation: path-set sampling and labeled
// snapshot streams with per-index deterministic RNG substreams.

#include <cmath>
#include <vector>

#include "ddsense/signal.hpp"

namespace ddsense {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return x >= lo && x <= hi; }
};

// Sampling distributions of one synthetic scenario. Delay and Doppler ranges
// are normalized: tau in units of 1/delta_f, alpha in units of 1/delta_t.
struct ScenarioSpec {
  SamplingGrid grid;
  int n_paths_min = 1;
  int n_paths_max = 10;
  Interval tau_range{0.0, 0.02};        // fraction of the unambiguous delay range
  Interval alpha_range{-0.05, 0.05};    // fraction of the unambiguous Doppler range
  double alpha_min_abs = 0.0;           // normalized exclusion zone around zero Doppler
  Interval magnitude_range{0.001, 1.0};
  Interval phase_range{0.0, 2.0 * kPi};
  Interval snr_range_db{0.0, 50.0};

  void validate() const {
    if (n_paths_min < 0 || n_paths_max < n_paths_min)
      throw ConfigError("ScenarioSpec: invalid path count range");
    if (tau_range.lo < 0.0 || tau_range.hi > 1.0 || tau_range.hi < tau_range.lo)
      throw ConfigError("ScenarioSpec: tau_range must lie in [0,1]");
    if (alpha_range.lo < -0.5 || alpha_range.hi > 0.5 || alpha_range.hi < alpha_range.lo)
      throw ConfigError("ScenarioSpec: alpha_range must lie in [-0.5,0.5]");
    if (alpha_min_abs < 0.0) throw ConfigError("ScenarioSpec: alpha_min_abs must be >= 0");
    if (magnitude_range.hi < magnitude_range.lo || magnitude_range.lo < 0.0)
      throw ConfigError("ScenarioSpec: invalid magnitude range");
    if (snr_range_db.hi < snr_range_db.lo) throw ConfigError("ScenarioSpec: invalid SNR range");
  }
};

// Draws one random path set. No minimum separation between paths is enforced.
inline PathSet sample_path_set(const ScenarioSpec& spec, Rng& rng) {
  spec.validate();
  const int p = uniform_int(rng, spec.n_paths_min, spec.n_paths_max);
  PathSet set;
  set.paths.reserve(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) {
    const double tau = uniform(rng, spec.tau_range.lo, spec.tau_range.hi) / spec.grid.delta_f;
    double alpha_n = uniform(rng, spec.alpha_range.lo, spec.alpha_range.hi);
    if (spec.alpha_min_abs > 0.0) {
      // fold the exclusion zone outwards, preserving uniformity on the kept set
      const double span = spec.alpha_range.hi - spec.alpha_min_abs;
      if (span <= 0.0) throw ConfigError("ScenarioSpec: alpha_min_abs leaves empty support");
      const double u = uniform(rng, -1.0, 1.0);
      alpha_n = std::copysign(spec.alpha_min_abs + std::abs(u) * span, u);
    }
    const double alpha = alpha_n / spec.grid.delta_t;
    const double mag = uniform(rng, spec.magnitude_range.lo, spec.magnitude_range.hi);
    const double ph = uniform(rng, spec.phase_range.lo, spec.phase_range.hi);
    set.add(Complex(mag * std::cos(ph), mag * std::sin(ph)), tau, alpha);
  }
  return set;
}

// Snapshot i is generated from substream derive_seed(master_seed, i); the
// result is independent of generation order.
inline Snapshot generate_snapshot(const ScenarioSpec& spec, std::uint64_t master_seed,
                                  std::uint64_t index) {
  Rng rng = make_stream(master_seed, index);
  PathSet label = sample_path_set(spec, rng);
  const double snr_db = uniform(rng, spec.snr_range_db.lo, spec.snr_range_db.hi);
  const CMatrix h = synthesize_channel(spec.grid, label);
  auto [y, sigma2] = add_noise(h, snr_db, rng);
  Snapshot s;
  s.grid = spec.grid;
  s.y = std::move(y);
  s.label = std::move(label);
  s.noise_var = sigma2;
  s.snr_db = snr_db;
  s.seed = derive_seed(master_seed, index);
  return s;
}

inline std::vector<Snapshot> generate_dataset(const ScenarioSpec& spec, int count,
                                              std::uint64_t master_seed) {
  if (count < 1) throw ConfigError("generate_dataset: count must be >= 1");
  std::vector<Snapshot> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    out.push_back(generate_snapshot(spec, master_seed, static_cast<std::uint64_t>(i)));
  return out;
}

}  // namespace ddsense
