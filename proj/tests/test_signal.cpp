#include <doctest.h>

#include "ddsense/signal.hpp"

using namespace ddsense;

namespace {

// Independent brute-force evaluation of the forward model, scalar by scalar.
CMatrix naive_channel(const SamplingGrid& g, const PathSet& paths) {
  CMatrix h = CMatrix::Zero(g.n_freq, g.n_time);
  for (int k = 0; k < g.n_freq; ++k) {
    for (int l = 0; l < g.n_time; ++l) {
      Complex acc(0.0, 0.0);
      for (const auto& p : paths.paths) {
        const double f = g.f_start + k * g.delta_f;
        const double t = g.t_start + l * g.delta_t;
        acc += p.gamma * std::exp(Complex(0.0, -2.0 * kPi * f * p.tau)) *
               std::exp(Complex(0.0, 2.0 * kPi * t * p.alpha));
      }
      h(k, l) = acc;
    }
  }
  return h;
}

PathSet random_paths(Rng& rng, int count, const SamplingGrid& g) {
  PathSet set;
  for (int i = 0; i < count; ++i) {
    const double mag = uniform(rng, 0.1, 1.0);
    const double ph = uniform(rng, 0.0, 2.0 * kPi);
    set.add(Complex(mag * std::cos(ph), mag * std::sin(ph)),
            uniform(rng, 0.0, 0.9 / g.delta_f), uniform(rng, -0.45, 0.45) / g.delta_t);
  }
  return set;
}

}  // namespace

TEST_CASE("synthesize_channel: single path with zero phases") {
  const auto g = SamplingGrid::make(4, 2, 1.0, 1.0, 0.0);
  PathSet p;
  p.add(Complex(1.0, 0.0), 0.0, 0.0);
  const CMatrix h = synthesize_channel(g, p);
  for (int k = 0; k < 4; ++k)
    for (int l = 0; l < 2; ++l) CHECK(std::abs(h(k, l) - Complex(1.0, 0.0)) < 1e-15);
}

TEST_CASE("synthesize_channel: quarter-cycle delay gives roots of unity") {
  const auto g = SamplingGrid::make(4, 2, 1.0, 1.0, 0.0);
  PathSet p;
  p.add(Complex(1.0, 0.0), 0.25, 0.0);
  const CMatrix h = synthesize_channel(g, p);
  const Complex expected[4] = {{1, 0}, {0, -1}, {-1, 0}, {0, 1}};
  for (int k = 0; k < 4; ++k)
    for (int l = 0; l < 2; ++l) CHECK(std::abs(h(k, l) - expected[k]) < 1e-12);
}

TEST_CASE("synthesize_channel matches the naive double-loop oracle") {
  Rng rng(42);
  const auto g = SamplingGrid::make(64, 16, 15e3, 1e-3);
  const PathSet paths = random_paths(rng, 5, g);
  const CMatrix h = synthesize_channel(g, paths);
  const CMatrix ref = naive_channel(g, paths);
  CHECK((h - ref).norm() / ref.norm() < 1e-12);
}

TEST_CASE("synthesize_channel: linearity and permutation invariance") {
  Rng rng(7);
  const auto g = SamplingGrid::make(32, 8, 10e3, 2e-3);
  const PathSet a = random_paths(rng, 3, g);
  const PathSet b = random_paths(rng, 4, g);
  PathSet joint = a;
  for (const auto& p : b.paths) joint.paths.push_back(p);
  const CMatrix sum = synthesize_channel(g, a) + synthesize_channel(g, b);
  CHECK((synthesize_channel(g, joint) - sum).norm() / sum.norm() < 1e-12);

  PathSet reversed = joint;
  std::reverse(reversed.paths.begin(), reversed.paths.end());
  CHECK((synthesize_channel(g, joint) - synthesize_channel(g, reversed)).norm() /
            sum.norm() <
        1e-12);
}

TEST_CASE("synthesize_channel: amplitude scaling is exact") {
  Rng rng(11);
  const auto g = SamplingGrid::make(16, 8, 1e3, 1e-3);
  PathSet paths = random_paths(rng, 4, g);
  const CMatrix h = synthesize_channel(g, paths);
  const Complex c(0.7, -1.3);
  for (auto& p : paths.paths) p.gamma *= c;
  CHECK((synthesize_channel(g, paths) - c * h).norm() <= 1e-12 * h.norm() * std::abs(c));
}

TEST_CASE("synthesize_channel rejects non-finite parameters") {
  const auto g = SamplingGrid::make(4, 4, 1.0, 1.0);
  PathSet p;
  p.add(Complex(1.0, 0.0), std::numeric_limits<double>::quiet_NaN(), 0.0);
  CHECK_THROWS_AS(synthesize_channel(g, p), DataError);
}

TEST_CASE("add_noise: infinite SNR returns the input exactly") {
  const auto g = SamplingGrid::make(8, 8, 1.0, 1.0);
  PathSet p;
  p.add(Complex(1.0, 1.0), 0.1, 0.2);
  const CMatrix h = synthesize_channel(g, p);
  Rng rng(1);
  auto [y, sigma2] = add_noise(h, std::numeric_limits<double>::infinity(), rng);
  CHECK(sigma2 == 0.0);
  CHECK((y - h).norm() == 0.0);
}

TEST_CASE("add_noise: sigma2 formula and empirical variance") {
  const CMatrix h = CMatrix::Ones(256, 256);
  Rng rng(123);
  auto [y, sigma2] = add_noise(h, 0.0, rng);
  CHECK(sigma2 == doctest::Approx(1.0));
  const double empirical = (y - h).squaredNorm() / h.size();
  CHECK(empirical > 0.95);
  CHECK(empirical < 1.05);

  // 20 dB over mean power 4
  const CMatrix h2 = 2.0 * CMatrix::Ones(16, 16);
  auto [y2, s2] = add_noise(h2, 20.0, rng);
  CHECK(s2 == doctest::Approx(0.04));
}

TEST_CASE("add_noise: achieved SNR within 0.5 dB for large matrices") {
  Rng rng(5);
  const auto g = SamplingGrid::make(128, 128, 1e3, 1e-3);
  const PathSet paths = [&] {
    Rng r2(77);
    return random_paths(r2, 6, g);
  }();
  const CMatrix h = synthesize_channel(g, paths);
  for (double snr : {0.0, 10.0, 30.0}) {
    auto [y, s] = add_noise(h, snr, rng);
    const double achieved =
        10.0 * std::log10(h.squaredNorm() / (y - h).squaredNorm());
    CHECK(std::abs(achieved - snr) < 0.5);
  }
}

TEST_CASE("add_noise rejects an all-zero signal at finite SNR") {
  const CMatrix z = CMatrix::Zero(4, 4);
  Rng rng(0);
  CHECK_THROWS_AS(add_noise(z, 10.0, rng), DataError);
}

TEST_CASE("ls_amplitudes: exact recovery on a noiseless single path") {
  const auto g = SamplingGrid::make(32, 16, 15e3, 1e-3);
  PathSet p;
  p.add(Complex(2.0, -1.0), 3.7e-6, 120.0);
  const CMatrix y = synthesize_channel(g, p);
  const auto gammas = ls_amplitudes(y, g, {{3.7e-6, 120.0}});
  CHECK(std::abs(gammas[0] - Complex(2.0, -1.0)) < 1e-10);
}

TEST_CASE("ls_amplitudes single atom matches the closed-form projector") {
  Rng rng(9);
  const auto g = SamplingGrid::make(24, 12, 1e4, 5e-4);
  CMatrix y(g.n_freq, g.n_time);
  for (int k = 0; k < g.n_freq; ++k)
    for (int l = 0; l < g.n_time; ++l) y(k, l) = complex_gaussian(rng, 2.0);
  const double tau = 1.1e-5, alpha = 230.0;
  const CMatrix atom =
      delay_steering(g, tau) * doppler_steering(g, alpha).transpose();
  const Complex closed =
      (atom.conjugate().cwiseProduct(y)).sum() / static_cast<double>(g.n_freq * g.n_time);
  const auto gammas = ls_amplitudes(y, g, {{tau, alpha}});
  CHECK(std::abs(gammas[0] - closed) < 1e-10);
}

TEST_CASE("ls_amplitudes: noiseless multi-path recovery to 1e-8") {
  Rng rng(13);
  const auto g = SamplingGrid::make(48, 24, 2e4, 4e-4);
  for (int trial = 0; trial < 20; ++trial) {
    PathSet paths;
    std::vector<std::pair<double, double>> etas;
    const int n = uniform_int(rng, 2, 5);
    for (int i = 0; i < n; ++i) {
      // well separated: distinct delay cells
      const double tau = (i * 8 + uniform(rng, 1.0, 3.0)) / g.bandwidth();
      const double alpha = uniform(rng, -0.4, 0.4) / g.delta_t / g.n_time * g.n_time;
      const double mag = uniform(rng, 0.2, 1.0);
      const double ph = uniform(rng, 0.0, 2.0 * kPi);
      paths.add(Complex(mag * std::cos(ph), mag * std::sin(ph)), tau, alpha);
      etas.emplace_back(tau, alpha);
    }
    const CMatrix y = synthesize_channel(g, paths);
    const auto gammas = ls_amplitudes(y, g, etas);
    for (int i = 0; i < n; ++i)
      CHECK(std::abs(gammas[static_cast<std::size_t>(i)] - paths.paths[static_cast<std::size_t>(i)].gamma) /
                std::abs(paths.paths[static_cast<std::size_t>(i)].gamma) <
            1e-8);
  }
}

TEST_CASE("ls_amplitudes rejects duplicated etas naming the pair") {
  const auto g = SamplingGrid::make(16, 8, 1e3, 1e-3);
  CMatrix y = CMatrix::Ones(16, 8);
  try {
    ls_amplitudes(y, g, {{1e-5, 10.0}, {1e-5, 10.0}});
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("0") != std::string::npos);
    CHECK(msg.find("1") != std::string::npos);
  }
}
