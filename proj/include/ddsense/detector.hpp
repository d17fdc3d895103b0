#pragma once

// Classical reference backend: CLEAN-style iterative peak extraction on an
// oversampled delay-Doppler map with sub-bin refinement and joint
// least-squares amplitude re-fitting.

#include <algorithm>
#include <cmath>
#include <vector>

#include "ddsense/preproc.hpp"

namespace ddsense {

struct Detection {
  double tau_hat = 0.0;    // s
  double alpha_hat = 0.0;  // Hz
  Complex gamma_hat{0.0, 0.0};
  double score = 0.0;  // peak power over estimated noise floor
};

enum class Refine { None, Parabolic, Newton };

struct DetectorConfig {
  int max_paths = 30;
  double tau_max = 0.02;    // gate, fraction of the unambiguous delay range
  double alpha_max = 0.05;  // gate, fraction of the unambiguous Doppler range
  double p_fa = 1e-3;       // per-map false alarm target for the default threshold
  double threshold_factor = 0.0;  // > 1 overrides the p_fa-derived threshold
  Refine refine = Refine::Newton;
  int oversample = 4;             // map oversampling per axis relative to native bins
  double stop_on_residual = 0.0;  // stop when residual power / input power drops below

  void validate() const {
    if (max_paths < 1) throw ConfigError("DetectorConfig: max_paths >= 1");
    if (!(tau_max > 0.0) || !(alpha_max > 0.0)) throw ConfigError("DetectorConfig: empty gate");
    if (oversample < 1) throw ConfigError("DetectorConfig: oversample >= 1");
    if (threshold_factor != 0.0 && !(threshold_factor > 1.0))
      throw ConfigError("DetectorConfig: threshold_factor must exceed 1");
  }

  // Rayleigh-tail threshold from a union bound over the oversampled gate
  // lattice: cells * exp(-T) <= p_fa. Correlation between oversampled cells
  // only makes the bound conservative; calibration is checked by the
  // noise-only Monte Carlo fixtures.
  double effective_threshold(const SamplingGrid& grid) const {
    if (threshold_factor > 1.0) return threshold_factor;
    const double cells = std::max(1.0, tau_max * grid.n_freq * oversample * 2.0 * alpha_max *
                                           grid.n_time * oversample);
    return std::log(cells / p_fa);
  }
};

// Per-axis parabolic vertex offset from three log-magnitude samples around a
// peak; exact for parabolas, clamped to half a bin.
inline std::pair<double, double> parabolic_refine(const RMatrix& map, int i, int j) {
  auto vertex = [](double m_minus, double m0, double m_plus) {
    const double denom = m_minus - 2.0 * m0 + m_plus;
    if (denom == 0.0) return 0.0;
    return std::clamp(0.5 * (m_minus - m_plus) / denom, -0.5, 0.5);
  };
  double di = 0.0, dj = 0.0;
  if (i > 0 && i + 1 < map.rows()) di = vertex(map(i - 1, j), map(i, j), map(i + 1, j));
  if (j > 0 && j + 1 < map.cols()) dj = vertex(map(i, j - 1), map(i, j), map(i, j + 1));
  return {di, dj};
}

namespace detail {

// Single-atom correlation magnitude J(tau, alpha) = |c|^2 / (N_f N_t) with
// c = sum_{k,l} y[k,l] e^{+2j pi f_k tau} e^{-2j pi t_l alpha}, plus analytic
// first and second derivatives in native-bin units.
struct CorrObjective {
  const CMatrix& y;
  const SamplingGrid& grid;

  struct Eval {
    double j = 0.0;
    Eigen::Vector2d grad = Eigen::Vector2d::Zero();  // d/d(tau_bins), d/d(alpha_bins)
    Eigen::Matrix2d hess = Eigen::Matrix2d::Zero();
  };

  Eval operator()(double tau, double alpha, bool second_order) const {
    const Complex j2pi(0.0, 2.0 * kPi);
    CVector u(grid.n_freq), du(grid.n_freq), ddu(grid.n_freq);
    for (int k = 0; k < grid.n_freq; ++k) {
      const double f = grid.freq_point(k);
      const double ph = 2.0 * kPi * f * tau;
      u(k) = Complex(std::cos(ph), std::sin(ph));
      du(k) = j2pi * f * u(k);
      ddu(k) = j2pi * f * du(k);
    }
    CVector v(grid.n_time), dv(grid.n_time), ddv(grid.n_time);
    for (int l = 0; l < grid.n_time; ++l) {
      const double t = grid.time_point(l);
      const double ph = -2.0 * kPi * t * alpha;
      v(l) = Complex(std::cos(ph), std::sin(ph));
      dv(l) = -j2pi * t * v(l);
      ddv(l) = -j2pi * t * dv(l);
    }

    const CVector yv = y * v;
    const CVector ydv = y * dv;
    const Complex c = u.transpose() * yv;
    const Complex ct = du.transpose() * yv;
    const Complex ca = u.transpose() * ydv;

    // chain rule to native-bin units
    const double st = 1.0 / (grid.n_freq * grid.delta_f);   // s per delay bin
    const double sa = 1.0 / (grid.n_time * grid.delta_t);   // Hz per Doppler bin

    Eval e;
    const double norm = 1.0 / static_cast<double>(grid.n_freq * grid.n_time);
    e.j = std::norm(c) * norm;
    e.grad(0) = 2.0 * std::real(std::conj(c) * ct) * norm * st;
    e.grad(1) = 2.0 * std::real(std::conj(c) * ca) * norm * sa;
    if (second_order) {
      const Complex ctt = ddu.transpose() * yv;
      const Complex caa = u.transpose() * (y * ddv);
      const Complex cta = du.transpose() * ydv;
      e.hess(0, 0) = 2.0 * (std::real(std::conj(c) * ctt) + std::norm(ct)) * norm * st * st;
      e.hess(1, 1) = 2.0 * (std::real(std::conj(c) * caa) + std::norm(ca)) * norm * sa * sa;
      e.hess(0, 1) = e.hess(1, 0) =
          2.0 * (std::real(std::conj(c) * cta) + std::real(std::conj(ct) * ca)) * norm * st * sa;
    }
    return e;
  }
};

}  // namespace detail

// Maximizes the single-atom correlation of the residual over (tau, alpha) by
// damped Newton ascent with projection into the gate. Falls back to a
// gradient step whenever the Hessian is not negative definite.
inline std::pair<double, double> newton_refine(const CMatrix& y, const SamplingGrid& grid,
                                               std::pair<double, double> eta0,
                                               double tau_lo, double tau_hi, double alpha_lo,
                                               double alpha_hi, int max_iter = 20) {
  detail::CorrObjective obj{y, grid};
  const double st = 1.0 / (grid.n_freq * grid.delta_f);
  const double sa = 1.0 / (grid.n_time * grid.delta_t);
  double tau = eta0.first, alpha = eta0.second;

  for (int it = 0; it < max_iter; ++it) {
    const auto e = obj(tau, alpha, true);
    Eigen::Vector2d step;
    const double det = e.hess.determinant();
    const bool concave = e.hess(0, 0) < 0.0 && det > 0.0;
    if (concave) {
      step = -e.hess.ldlt().solve(e.grad);
    } else {
      step = e.grad * (0.1 / std::max(1e-30, e.grad.norm()));  // bin-scaled ascent
    }
    // damped backtracking on the objective
    double scale = 1.0;
    double jt = e.j;
    double ntau = tau, nalpha = alpha;
    for (int bt = 0; bt < 8; ++bt) {
      const double ctau = std::clamp(tau + scale * step(0) * st, tau_lo, tau_hi);
      const double calpha = std::clamp(alpha + scale * step(1) * sa, alpha_lo, alpha_hi);
      const auto trial = obj(ctau, calpha, false);
      if (trial.j >= jt) {
        ntau = ctau;
        nalpha = calpha;
        jt = trial.j;
        break;
      }
      scale *= 0.5;
    }
    const double moved = std::hypot((ntau - tau) / st, (nalpha - alpha) / sa);
    tau = ntau;
    alpha = nalpha;
    if (moved < 1e-4) break;
  }
  return {tau, alpha};
}

// CLEAN loop: map the residual, threshold against a median-based noise floor,
// refine the strongest peak, jointly re-fit all amplitudes on the original
// observation, subtract, repeat.
inline std::vector<Detection> detect(const Snapshot& snapshot, const DetectorConfig& cfg) {
  cfg.validate();
  const SamplingGrid& grid = snapshot.grid;
  if (snapshot.y.rows() != grid.n_freq || snapshot.y.cols() != grid.n_time)
    throw DataError("detect: snapshot shape does not match grid");

  // Oversampled gate lattice in physical units.
  const double tau_hi = cfg.tau_max / grid.delta_f;
  const double alpha_hi = cfg.alpha_max / grid.delta_t;
  const int n_tau = std::max(4, static_cast<int>(std::ceil(cfg.tau_max * grid.n_freq)) *
                                    cfg.oversample);
  const int n_alpha = std::max(4, static_cast<int>(std::ceil(2.0 * cfg.alpha_max * grid.n_time)) *
                                      cfg.oversample);
  RVector taus(n_tau), alphas(n_alpha);
  for (int m = 0; m < n_tau; ++m) taus(m) = tau_hi * m / n_tau;
  for (int n = 0; n < n_alpha; ++n) alphas(n) = -alpha_hi + 2.0 * alpha_hi * n / n_alpha;

  const double threshold = cfg.effective_threshold(grid);
  const double input_power = snapshot.y.squaredNorm();

  CMatrix residual = snapshot.y;
  std::vector<std::pair<double, double>> etas;
  std::vector<Complex> gammas;
  double prev_residual_power = input_power;

  while (static_cast<int>(etas.size()) < cfg.max_paths) {
    if (cfg.stop_on_residual > 0.0 &&
        residual.squaredNorm() < cfg.stop_on_residual * input_power)
      break;

    const CMatrix map = detail::correlation_map(residual, grid, taus, alphas);
    const RMatrix power = map.cwiseAbs2();

    // median of |map|^2 -> exponential rate, robust to a few strong peaks
    std::vector<double> cells(power.data(), power.data() + power.size());
    std::nth_element(cells.begin(), cells.begin() + cells.size() / 2, cells.end());
    const double floor = cells[cells.size() / 2] / std::log(2.0);

    Eigen::Index pi = 0, pj = 0;
    const double peak = power.maxCoeff(&pi, &pj);
    if (floor <= 0.0 || peak < threshold * floor) break;

    double tau = taus(static_cast<int>(pi));
    double alpha = alphas(static_cast<int>(pj));
    if (cfg.refine == Refine::Parabolic) {
      const RMatrix logmag = power.array().max(1e-300).log().matrix();
      auto [di, dj] = parabolic_refine(logmag, static_cast<int>(pi), static_cast<int>(pj));
      tau = std::clamp(tau + di * tau_hi / n_tau, 0.0, tau_hi);
      alpha = std::clamp(alpha + dj * 2.0 * alpha_hi / n_alpha, -alpha_hi, alpha_hi);
    } else if (cfg.refine == Refine::Newton) {
      std::tie(tau, alpha) =
          newton_refine(residual, grid, {tau, alpha}, 0.0, tau_hi, -alpha_hi, alpha_hi);
    }

    etas.emplace_back(tau, alpha);
    try {
      gammas = ls_amplitudes(snapshot.y, grid, etas);
    } catch (const NumericError&) {
      // two detections collapsed; drop the newcomer and stop
      etas.pop_back();
      break;
    }

    CMatrix model = CMatrix::Zero(grid.n_freq, grid.n_time);
    for (std::size_t p = 0; p < etas.size(); ++p)
      model.noalias() += gammas[p] * delay_steering(grid, etas[p].first) *
                         doppler_steering(grid, etas[p].second).transpose();
    CMatrix next_residual = snapshot.y - model;
    if (next_residual.squaredNorm() > prev_residual_power) {
      etas.pop_back();
      break;  // refit stopped improving; the new peak is not a real component
    }
    prev_residual_power = next_residual.squaredNorm();
    residual = std::move(next_residual);
  }

  if (etas.empty()) return {};
  gammas = ls_amplitudes(snapshot.y, grid, etas);

  // score against the final residual's floor
  const CMatrix map = detail::correlation_map(residual, grid, taus, alphas);
  RMatrix power = map.cwiseAbs2();
  std::vector<double> cells(power.data(), power.data() + power.size());
  std::nth_element(cells.begin(), cells.begin() + cells.size() / 2, cells.end());
  const double floor = std::max(cells[cells.size() / 2] / std::log(2.0), 1e-300);

  std::vector<Detection> out;
  out.reserve(etas.size());
  for (std::size_t p = 0; p < etas.size(); ++p) {
    Detection d;
    d.tau_hat = etas[p].first;
    d.alpha_hat = etas[p].second;
    d.gamma_hat = gammas[p];
    d.score = std::norm(gammas[p]) / floor;
    out.push_back(d);
  }
  std::sort(out.begin(), out.end(),
            [](const Detection& a, const Detection& b) {
              return std::abs(a.gamma_hat) > std::abs(b.gamma_hat);
            });
  return out;
}

}  // namespace ddsense
