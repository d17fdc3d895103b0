#pragma once

// Forward channel synthesis, noise injection and least-squares amplitude
// recovery on the sampled transfer function.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>
#include <vector>

#include "ddsense/grid.hpp"

namespace ddsense {

// Unit-weight atom of one path, vector over frequency: exp(-2j pi f_k tau).
inline CVector delay_steering(const SamplingGrid& grid, double tau) {
  CVector v(grid.n_freq);
  for (int k = 0; k < grid.n_freq; ++k) {
    const double ph = -2.0 * kPi * grid.freq_point(k) * tau;
    v(k) = Complex(std::cos(ph), std::sin(ph));
  }
  return v;
}

// Vector over time: exp(+2j pi t_l alpha).
inline CVector doppler_steering(const SamplingGrid& grid, double alpha) {
  CVector v(grid.n_time);
  for (int l = 0; l < grid.n_time; ++l) {
    const double ph = 2.0 * kPi * grid.time_point(l) * alpha;
    v(l) = Complex(std::cos(ph), std::sin(ph));
  }
  return v;
}

// Noiseless channel H[k,l] = sum_p gamma_p exp(-2j pi f_k tau_p) exp(2j pi t_l alpha_p).
inline CMatrix synthesize_channel(const SamplingGrid& grid, const PathSet& paths) {
  for (const auto& p : paths.paths)
    if (!p.finite()) throw DataError("synthesize_channel: non-finite path parameter");
  CMatrix h = CMatrix::Zero(grid.n_freq, grid.n_time);
  for (const auto& p : paths.paths)
    h.noalias() += p.gamma * delay_steering(grid, p.tau) * doppler_steering(grid, p.alpha).transpose();
  return h;
}

// Adds circular complex Gaussian noise at the requested SNR. Signal power is
// the per-element mean |h|^2, so sigma2 is grid-size invariant. Returns the
// noisy matrix and the drawn per-element variance.
inline std::pair<CMatrix, double> add_noise(const CMatrix& h, double snr_db, Rng& rng) {
  if (h.size() == 0) throw DataError("add_noise: empty matrix");
  if (std::isinf(snr_db) && snr_db > 0) return {h, 0.0};
  const double mean_power = h.squaredNorm() / static_cast<double>(h.size());
  if (!(mean_power > 0.0))
    throw DataError("add_noise: all-zero signal with finite SNR is degenerate");
  const double sigma2 = mean_power / std::pow(10.0, snr_db / 10.0);
  CMatrix y = h;
  for (Eigen::Index j = 0; j < y.cols(); ++j)
    for (Eigen::Index i = 0; i < y.rows(); ++i) y(i, j) += complex_gaussian(rng, sigma2);
  return {y, sigma2};
}

namespace detail {

// Vectorized atom a(eta) with unit weight.
inline CVector atom(const SamplingGrid& grid, double tau, double alpha) {
  const CMatrix m = delay_steering(grid, tau) * doppler_steering(grid, alpha).transpose();
  return Eigen::Map<const CVector>(m.data(), m.size());
}

}  // namespace detail

// Least-squares weights gamma minimizing ||y - sum_p gamma_p a(eta_p)||_F^2,
// via the normal equations with an LDLT solve. Near-singular Gram matrices
// (duplicate or almost-duplicate etas) are rejected with the offending pair
// named in the message.
inline std::vector<Complex> ls_amplitudes(const CMatrix& y, const SamplingGrid& grid,
                                          const std::vector<std::pair<double, double>>& etas) {
  const Eigen::Index n = y.size();
  const int k = static_cast<int>(etas.size());
  if (k < 1 || static_cast<Eigen::Index>(k) > n)
    throw DataError("ls_amplitudes: need 1 <= |etas| <= N_f*N_t");

  CMatrix a(n, k);
  for (int j = 0; j < k; ++j) a.col(j) = detail::atom(grid, etas[j].first, etas[j].second);

  const CMatrix gram = a.adjoint() * a;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(gram);
  if (es.info() != Eigen::Success) throw NumericError("ls_amplitudes: Gram eigensolver failed");
  const double lmin = es.eigenvalues().minCoeff();
  const double lmax = es.eigenvalues().maxCoeff();
  const double cond_limit = 1.0 / std::sqrt(std::numeric_limits<double>::epsilon());
  if (!(lmin > 0.0) || lmax / lmin > cond_limit) {
    // name the most coherent pair
    int bi = 0, bj = 1;
    double best = -1.0;
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j) {
        const double c = std::abs(gram(i, j)) /
                         std::sqrt(gram(i, i).real() * gram(j, j).real());
        if (c > best) { best = c; bi = i; bj = j; }
      }
    std::ostringstream msg;
    msg << "ls_amplitudes: rank-deficient Gram matrix; etas " << bi << " and " << bj
        << " nearly coincide (tau=" << etas[bi].first << "," << etas[bj].first
        << " alpha=" << etas[bi].second << "," << etas[bj].second << ")";
    throw NumericError(msg.str());
  }

  const CVector yv = Eigen::Map<const CVector>(y.data(), n);
  const CVector rhs = a.adjoint() * yv;
  const CVector g = gram.ldlt().solve(rhs);
  return {g.data(), g.data() + k};
}

}  // namespace ddsense
