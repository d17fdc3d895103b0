#pragma once

// Bistatic Tx/Rx/target geometry: delay and Doppler groundtruth from
// positions, velocities and trajectories.

#include <algorithm>
#include <cmath>
#include <vector>

#include "ddsense/common.hpp"
#include "ddsense/grid.hpp"

namespace ddsense {

// tau = (R_Tx + R_Rx) / c0
inline double bistatic_delay(const Vec3& tx, const Vec3& rx, const Vec3& target) {
  return ((target - tx).norm() + (target - rx).norm()) / kSpeedOfLight;
}

// alpha = (2 v f_c / c) cos(psi) cos(beta/2), with beta the bistatic angle at
// the target and psi the angle between the velocity and the bisector of beta.
// Sign convention: positive for closing geometry (decreasing R_Tx + R_Rx).
inline double bistatic_doppler(const Vec3& tx, const Vec3& rx, const Vec3& target,
                               const Vec3& velocity, double carrier_hz) {
  const Vec3 to_tx = tx - target;
  const Vec3 to_rx = rx - target;
  const double r_tx = to_tx.norm();
  const double r_rx = to_rx.norm();
  if (r_tx <= 0.0 || r_rx <= 0.0)
    throw DataError("bistatic_doppler: target coincides with Tx or Rx");
  const Vec3 u_tx = to_tx / r_tx;
  const Vec3 u_rx = to_rx / r_rx;

  const double v = velocity.norm();
  if (v == 0.0) return 0.0;

  double cos_beta = std::clamp(u_tx.dot(u_rx), -1.0, 1.0);
  const double cos_half_beta = std::sqrt(std::max(0.0, 0.5 * (1.0 + cos_beta)));

  // Bisector of the angle between the two look directions. For beta = pi the
  // bisector is undefined but cos(beta/2) = 0 kills the whole term.
  Vec3 bisector = u_tx + u_rx;
  const double bn = bisector.norm();
  double cos_psi = 0.0;
  if (bn > 0.0) cos_psi = std::clamp(velocity.dot(bisector) / (v * bn), -1.0, 1.0);

  return 2.0 * v * carrier_hz / kSpeedOfLight * cos_psi * cos_half_beta;
}

struct TrajectorySample {
  double t = 0.0;  // s
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
};

// Time-stamped target track plus the static Tx/Rx node positions.
struct Trajectory {
  Vec3 tx = Vec3::Zero();
  Vec3 rx = Vec3::Zero();
  std::vector<TrajectorySample> samples;

  void validate() const {
    if (samples.empty()) throw DataError("Trajectory: no samples");
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& s = samples[i];
      if (!s.position.allFinite() || !s.velocity.allFinite() || !std::isfinite(s.t))
        throw DataError("Trajectory: non-finite sample");
      if (i > 0 && !(samples[i].t > samples[i - 1].t))
        throw DataError("Trajectory: timestamps must be strictly increasing");
    }
  }

  // Piecewise-linear interpolation of position and velocity.
  TrajectorySample at(double t) const {
    if (t < samples.front().t || t > samples.back().t)
      throw DataError("Trajectory: query time outside trajectory span");
    auto it = std::lower_bound(samples.begin(), samples.end(), t,
                               [](const TrajectorySample& s, double tv) { return s.t < tv; });
    if (it == samples.begin()) return samples.front();
    const TrajectorySample& b = *it;
    const TrajectorySample& a = *(it - 1);
    if (b.t == t) return b;
    const double w = (t - a.t) / (b.t - a.t);
    TrajectorySample out;
    out.t = t;
    out.position = (1.0 - w) * a.position + w * b.position;
    out.velocity = (1.0 - w) * a.velocity + w * b.velocity;
    return out;
  }
};

// Per-snapshot (tau, alpha) groundtruth along a trajectory.
inline std::vector<std::pair<double, double>> trajectory_groundtruth(
    const Trajectory& traj, const SamplingGrid& grid, const std::vector<double>& snapshot_times) {
  traj.validate();
  std::vector<std::pair<double, double>> out;
  out.reserve(snapshot_times.size());
  for (double t : snapshot_times) {
    const TrajectorySample s = traj.at(t);
    out.emplace_back(bistatic_delay(traj.tx, traj.rx, s.position),
                     bistatic_doppler(traj.tx, traj.rx, s.position, s.velocity, grid.carrier_hz));
  }
  return out;
}

}  // namespace ddsense
