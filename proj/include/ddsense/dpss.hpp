#pragma once

// Discrete prolate spheroidal sequences for multitaper windowing.

#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "ddsense/common.hpp"

namespace ddsense {

// The k most concentrated DPSS windows of length n for half-bandwidth product
// nw, as eigenvectors of the classic symmetric tridiagonal commuting matrix:
//   diag_i    = ((n-1-2i)/2)^2 * cos(2 pi W),  W = nw/n
//   offdiag_i = i (n-i) / 2
// Windows are unit-energy, ordered by decreasing concentration. Sign fix:
// element sum >= 0; odd-symmetric windows get a positive first nonzero element.
inline std::vector<RVector> dpss_windows(int n, double nw, int k) {
  if (k < 1 || k > n) throw ConfigError("dpss_windows: need 1 <= k <= n");
  if (!(nw > 0.0) || !(nw < 0.5 * n)) throw ConfigError("dpss_windows: need 0 < nw < n/2");

  const double w = nw / n;
  const double c = std::cos(2.0 * kPi * w);
  RVector diag(n), offdiag(n - 1);
  for (int i = 0; i < n; ++i) {
    const double d = 0.5 * (n - 1.0 - 2.0 * i);
    diag(i) = d * d * c;
  }
  for (int i = 1; i < n; ++i) offdiag(i - 1) = 0.5 * i * (n - i);

  RMatrix t = RMatrix::Zero(n, n);
  t.diagonal() = diag;
  t.diagonal(1) = offdiag;
  t.diagonal(-1) = offdiag;

  Eigen::SelfAdjointEigenSolver<RMatrix> es(t);
  if (es.info() != Eigen::Success) throw NumericError("dpss_windows: eigensolver failed");

  // Eigen returns ascending eigenvalues; concentration order is descending.
  std::vector<RVector> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    RVector v = es.eigenvectors().col(n - 1 - j);
    v.normalize();
    const double s = v.sum();
    if (s < 0.0) v = -v;
    if (std::abs(s) < 1e-9 * std::sqrt(static_cast<double>(n))) {
      for (int i = 0; i < n; ++i) {
        if (std::abs(v(i)) > 1e-12) {
          if (v(i) < 0.0) v = -v;
          break;
        }
      }
    }
    out.push_back(std::move(v));
  }
  return out;
}

// Spectral concentration lambda = w^T S w with the sinc kernel
// S[m,l] = sin(2 pi W (m-l)) / (pi (m-l)), diagonal 2W. Used as an
// independent check of window quality.
inline double dpss_concentration(const RVector& window, double nw) {
  const int n = static_cast<int>(window.size());
  const double w = nw / n;
  double acc = 0.0;
  for (int m = 0; m < n; ++m) {
    for (int l = 0; l < n; ++l) {
      const double kernel =
          (m == l) ? 2.0 * w : std::sin(2.0 * kPi * w * (m - l)) / (kPi * (m - l));
      acc += window(m) * kernel * window(l);
    }
  }
  return acc;
}

}  // namespace ddsense
