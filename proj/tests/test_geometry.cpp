#include <doctest.h>

#include "ddsense/geometry.hpp"

using namespace ddsense;

namespace {

// Range-rate oracle: alpha ~ -(f_c/c) d(R_Tx+R_Rx)/dt by central differences
// of the bistatic delay over +-1 ms.
double doppler_fd(const Vec3& tx, const Vec3& rx, const Vec3& target, const Vec3& vel,
                  double fc) {
  const double dt = 1e-3;
  const double rp = bistatic_delay(tx, rx, target + dt * vel) * kSpeedOfLight;
  const double rm = bistatic_delay(tx, rx, target - dt * vel) * kSpeedOfLight;
  return -(fc / kSpeedOfLight) * (rp - rm) / (2.0 * dt);
}

Vec3 random_point(Rng& rng, double scale) {
  return {uniform(rng, -scale, scale), uniform(rng, -scale, scale), uniform(rng, -scale, scale)};
}

}  // namespace

TEST_CASE("bistatic_delay: collocated Tx/Rx is monostatic 2R/c") {
  const Vec3 origin = Vec3::Zero();
  const Vec3 target(150.0, 0.0, 0.0);
  CHECK(bistatic_delay(origin, origin, target) == doctest::Approx(300.0 / kSpeedOfLight));
}

TEST_CASE("bistatic_delay: target on the baseline gives baseline/c everywhere") {
  const Vec3 tx(0, 0, 0), rx(100, 0, 0);
  for (double x : {10.0, 33.0, 77.0, 99.0}) {
    CHECK(bistatic_delay(tx, rx, {x, 0, 0}) ==
          doctest::Approx(100.0 / kSpeedOfLight).epsilon(1e-12));
  }
}

TEST_CASE("bistatic_delay equals the sum-of-distances recomputation") {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const Vec3 tx = random_point(rng, 50.0), rx = random_point(rng, 50.0),
               tgt = random_point(rng, 200.0);
    const double expect = ((tgt - tx).norm() + (tgt - rx).norm()) / kSpeedOfLight;
    CHECK(bistatic_delay(tx, rx, tgt) == doctest::Approx(expect).epsilon(1e-14));
  }
}

TEST_CASE("bistatic_delay never undercuts the baseline delay") {
  Rng rng(17);
  const Vec3 tx = random_point(rng, 100.0), rx = random_point(rng, 100.0);
  const double baseline = (rx - tx).norm() / kSpeedOfLight;
  for (int i = 0; i < 200; ++i)
    CHECK(bistatic_delay(tx, rx, random_point(rng, 500.0)) >= baseline - 1e-18);
}

TEST_CASE("bistatic_doppler: monostatic radial closing at 10 m/s") {
  const Vec3 radar(0, 0, 0);
  const Vec3 target(100, 0, 0);
  const Vec3 closing(-10, 0, 0);  // toward the radar
  const double fc = 3.75e9;
  const double expect = 2.0 * 10.0 * fc / kSpeedOfLight;  // ~250.17 Hz
  CHECK(bistatic_doppler(radar, radar, target, closing, fc) == doctest::Approx(expect));
  CHECK(expect == doctest::Approx(250.17).epsilon(1e-4));
  // receding flips the sign
  CHECK(bistatic_doppler(radar, radar, target, -closing, fc) == doctest::Approx(-expect));
}

TEST_CASE("bistatic_doppler: velocity perpendicular to the bisector gives zero") {
  const Vec3 tx(0, 0, 0), rx(100, 0, 0), target(50, 80, 0);
  // bisector is along -y by symmetry; move along x
  CHECK(bistatic_doppler(tx, rx, target, {7.0, 0.0, 0.0}, 3.75e9) ==
        doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("bistatic_doppler matches the range-rate finite-difference oracle") {
  Rng rng(23);
  const double fc = 3.75e9;
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 tx = random_point(rng, 60.0), rx = random_point(rng, 60.0);
    const Vec3 tgt = random_point(rng, 300.0);
    if ((tgt - tx).norm() < 5.0 || (tgt - rx).norm() < 5.0) continue;
    const Vec3 vel = random_point(rng, 15.0);
    const double a = bistatic_doppler(tx, rx, tgt, vel, fc);
    const double ref = doppler_fd(tx, rx, tgt, vel, fc);
    const double scale = std::max(std::abs(ref), 1e-3 * fc * vel.norm() / kSpeedOfLight);
    CHECK(std::abs(a - ref) / scale < 1e-4);
    ++checked;
  }
  CHECK(checked > 900);
}

TEST_CASE("bistatic_doppler rejects a target on a node") {
  const Vec3 p(1, 2, 3);
  CHECK_THROWS_AS(bistatic_doppler(p, {0, 0, 0}, p, {1, 0, 0}, 1e9), DataError);
}

TEST_CASE("trajectory interpolation and groundtruth") {
  const auto grid = SamplingGrid::make(64, 16, 1e6, 1e-3, std::nullopt, 0.0, 3.75e9);
  Trajectory traj;
  traj.tx = {0, 0, 0};
  traj.rx = {50, 0, 0};

  SUBCASE("static target: constant delay, zero Doppler") {
    for (double t : {0.0, 1.0, 2.0}) traj.samples.push_back({t, {20, 30, 5}, Vec3::Zero()});
    const auto gt = trajectory_groundtruth(traj, grid, {0.25, 0.5, 1.75});
    for (const auto& [tau, alpha] : gt) {
      CHECK(tau == doctest::Approx(gt[0].first));
      CHECK(alpha == 0.0);
    }
  }

  SUBCASE("constant-velocity pass: delay convex with minimum near closest approach") {
    const Vec3 v(10, 0, 0);
    for (int i = 0; i <= 20; ++i)
      traj.samples.push_back({0.5 * i, Vec3(-50 + 5.0 * i, 40, 0), v});
    std::vector<double> times;
    for (int i = 0; i <= 40; ++i) times.push_back(0.25 * i);
    const auto gt = trajectory_groundtruth(traj, grid, times);
    // convexity: second differences non-negative
    for (std::size_t i = 1; i + 1 < gt.size(); ++i)
      CHECK(gt[i + 1].first - 2.0 * gt[i].first + gt[i - 1].first > -1e-15);
    // minimum delay where x is nearest the Tx-Rx midpoint region
    std::size_t argmin = 0;
    for (std::size_t i = 0; i < gt.size(); ++i)
      if (gt[i].first < gt[argmin].first) argmin = i;
    const double x_at_min = -50 + 10.0 * times[argmin];
    CHECK(x_at_min > 0.0);
    CHECK(x_at_min < 50.0);
  }

  SUBCASE("query at an exact sample time returns the sample") {
    traj.samples.push_back({0.0, {1, 2, 3}, {4, 5, 6}});
    traj.samples.push_back({1.0, {7, 8, 9}, {1, 1, 1}});
    traj.samples.push_back({2.0, {0, 0, 0}, {2, 2, 2}});
    const auto s = traj.at(1.0);
    CHECK(s.position == Vec3(7, 8, 9));
    CHECK(s.velocity == Vec3(1, 1, 1));
  }

  SUBCASE("query outside the span is rejected") {
    traj.samples.push_back({0.0, {1, 2, 3}, {0, 0, 0}});
    traj.samples.push_back({1.0, {1, 2, 3}, {0, 0, 0}});
    CHECK_THROWS_AS(traj.at(1.5), DataError);
    CHECK_THROWS_AS(trajectory_groundtruth(traj, grid, {-0.1}), DataError);
  }
}
