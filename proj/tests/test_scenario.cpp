#include <doctest.h>

#include <set>

#include "ddsense/scenario.hpp"

using namespace ddsense;

namespace {

ScenarioSpec toy_spec() {
  ScenarioSpec s;
  s.grid = SamplingGrid::make(32, 8, 250e3, 1e-3, std::nullopt, 0.0, 3.75e9);
  s.n_paths_min = 1;
  s.n_paths_max = 10;
  s.tau_range = {0.0, 0.02};
  s.alpha_range = {-0.05, 0.05};
  s.snr_range_db = {0.0, 50.0};
  return s;
}

}  // namespace

TEST_CASE("sample_path_set: path-count histogram is uniform over [1,10]") {
  ScenarioSpec spec = toy_spec();
  Rng rng(101);
  const int draws = 100000;
  std::array<int, 11> hist{};
  for (int i = 0; i < draws; ++i) {
    const PathSet set = sample_path_set(spec, rng);
    REQUIRE(set.size() >= 1);
    REQUIRE(set.size() <= 10);
    ++hist[static_cast<std::size_t>(set.size())];
  }
  // 3-sigma multinomial bound around draws/10
  const double expect = draws / 10.0;
  const double sigma = std::sqrt(draws * 0.1 * 0.9);
  for (int c = 1; c <= 10; ++c)
    CHECK(std::abs(hist[static_cast<std::size_t>(c)] - expect) < 3.0 * sigma);
}

TEST_CASE("sample_path_set: point interval pins tau exactly") {
  ScenarioSpec spec = toy_spec();
  spec.tau_range = {0.3, 0.3};
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const PathSet set = sample_path_set(spec, rng);
    for (const auto& p : set.paths) CHECK(p.tau == 0.3 / spec.grid.delta_f);
  }
}

TEST_CASE("sample_path_set: magnitude mean matches U(0.001,1)") {
  ScenarioSpec spec = toy_spec();
  Rng rng(31);
  double acc = 0.0;
  long n = 0;
  while (n < 100000) {
    const PathSet set = sample_path_set(spec, rng);
    for (const auto& p : set.paths) {
      acc += std::abs(p.gamma);
      ++n;
    }
  }
  CHECK(std::abs(acc / n - 0.5005) < 0.01);
}

TEST_CASE("sample_path_set: parameters stay inside their intervals") {
  ScenarioSpec spec = toy_spec();
  spec.alpha_min_abs = 0.01;
  Rng rng(77);
  long n = 0;
  while (n < 100000) {
    const PathSet set = sample_path_set(spec, rng);
    for (const auto& p : set.paths) {
      CHECK(p.tau >= spec.tau_range.lo / spec.grid.delta_f);
      CHECK(p.tau <= spec.tau_range.hi / spec.grid.delta_f);
      const double an = p.alpha * spec.grid.delta_t;
      CHECK(std::abs(an) <= spec.alpha_range.hi + 1e-15);
      CHECK(std::abs(an) >= spec.alpha_min_abs);
      const double mag = std::abs(p.gamma);
      CHECK(mag >= spec.magnitude_range.lo - 1e-12);
      CHECK(mag <= spec.magnitude_range.hi + 1e-12);
      ++n;
    }
  }
}

TEST_CASE("generate_dataset is deterministic in (spec, count, seed)") {
  const ScenarioSpec spec = toy_spec();
  const auto a = generate_dataset(spec, 10, 42);
  const auto b = generate_dataset(spec, 10, 42);
  for (int i = 0; i < 10; ++i) {
    CHECK(a[static_cast<std::size_t>(i)].y == b[static_cast<std::size_t>(i)].y);
    CHECK(a[static_cast<std::size_t>(i)].snr_db == b[static_cast<std::size_t>(i)].snr_db);
  }
  // per-index streams: regenerating a single index matches the batch
  const Snapshot s7 = generate_snapshot(spec, 42, 7);
  CHECK(s7.y == a[7].y);
}

TEST_CASE("generate_dataset: no duplicate label sets across 10^4 snapshots") {
  const ScenarioSpec spec = toy_spec();
  std::set<std::string> seen;
  for (int i = 0; i < 10000; ++i) {
    const Snapshot s = generate_snapshot(spec, 1234, static_cast<std::uint64_t>(i));
    std::string key;
    for (const auto& p : s.label->paths)
      key += std::to_string(p.tau) + "|" + std::to_string(p.alpha) + ";";
    CHECK(seen.insert(key).second);
  }
}

TEST_CASE("generate_dataset validates count") {
  CHECK_THROWS_AS(generate_dataset(toy_spec(), 0, 1), ConfigError);
}

TEST_CASE("ScenarioSpec validation rejects out-of-range intervals") {
  ScenarioSpec s = toy_spec();
  s.tau_range = {0.0, 1.5};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = toy_spec();
  s.alpha_range = {-0.6, 0.6};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = toy_spec();
  s.n_paths_max = 0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
}
