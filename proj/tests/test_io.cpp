#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "ddsense/io.hpp"
#include "ddsense/scenario.hpp"

using namespace ddsense;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("ddsense_io_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Snapshot sample_snapshot(std::uint64_t seed) {
  ScenarioSpec spec;
  spec.grid = SamplingGrid::make(16, 8, 250e3, 1e-3, std::nullopt, 0.0, 3.75e9);
  spec.n_paths_min = 2;
  spec.n_paths_max = 3;
  spec.tau_range = {0.0, 0.2};
  spec.alpha_range = {-0.2, 0.2};
  spec.snr_range_db = {10.0, 30.0};
  return generate_snapshot(spec, seed, 0);
}

}  // namespace

TEST_CASE("DDS1 snapshot round-trip preserves grid and float32 payload") {
  TempDir tmp;
  const Snapshot s = sample_snapshot(7);
  const fs::path p = tmp.path / "snap.dds1";
  io::write_snapshot(p, s);
  const Snapshot r = io::read_snapshot(p);
  CHECK(r.grid.n_freq == s.grid.n_freq);
  CHECK(r.grid.n_time == s.grid.n_time);
  CHECK(r.grid.delta_f == s.grid.delta_f);
  CHECK(r.grid.delta_t == s.grid.delta_t);
  CHECK(r.grid.f_start == s.grid.f_start);
  CHECK(r.grid.carrier_hz == s.grid.carrier_hz);
  // payload is float32: exact against a float-cast reference
  for (int k = 0; k < s.grid.n_freq; ++k)
    for (int l = 0; l < s.grid.n_time; ++l) {
      CHECK(r.y(k, l).real() == static_cast<float>(s.y(k, l).real()));
      CHECK(r.y(k, l).imag() == static_cast<float>(s.y(k, l).imag()));
    }
}

TEST_CASE("label sidecar round-trip preserves paths and metadata") {
  TempDir tmp;
  const Snapshot s = sample_snapshot(11);
  const fs::path p = tmp.path / "snap.label";
  io::write_label(p, s);
  Snapshot r;
  io::read_label(p, r);
  REQUIRE(r.label.has_value());
  REQUIRE(r.label->size() == s.label->size());
  for (std::size_t i = 0; i < s.label->paths.size(); ++i) {
    CHECK(r.label->paths[i].gamma == s.label->paths[i].gamma);
    CHECK(r.label->paths[i].tau == s.label->paths[i].tau);
    CHECK(r.label->paths[i].alpha == s.label->paths[i].alpha);
  }
  CHECK(*r.snr_db == *s.snr_db);
  CHECK(*r.noise_var == *s.noise_var);
  CHECK(*r.seed == *s.seed);
}

TEST_CASE("FTN1 feature tensor round-trip") {
  TempDir tmp;
  const Snapshot s = sample_snapshot(3);
  PreprocConfig cfg;
  cfg.n_tau = 16;
  cfg.n_alpha = 8;
  cfg.tau_max = 0.25;
  cfg.alpha_max = 0.25;
  const FeatureTensor ft = delay_doppler_map(s.y, s.grid, cfg);
  const fs::path p = tmp.path / "feat.ftn1";
  io::write_feature_tensor(p, ft, 0xdeadbeefcafe1234ull);
  std::uint64_t hash = 0;
  const FeatureTensor r = io::read_feature_tensor(p, &hash);
  CHECK(hash == 0xdeadbeefcafe1234ull);
  REQUIRE(r.n_channels() == ft.n_channels());
  for (int c = 0; c < ft.n_channels(); ++c) {
    const auto& a = ft.channels[static_cast<std::size_t>(c)];
    const auto& b = r.channels[static_cast<std::size_t>(c)];
    REQUIRE(b.rows() == a.rows());
    REQUIRE(b.cols() == a.cols());
    for (Eigen::Index i = 0; i < a.size(); ++i)
      CHECK(b.data()[i] == static_cast<float>(a.data()[i]));
  }
  CHECK((r.tau_axis - ft.tau_axis).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((r.alpha_axis - ft.alpha_axis).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("NNP1 checkpoint round-trip preserves architecture and parameters") {
  TempDir tmp;
  const Network<float> net = Network<float>::he_init(Architecture::toy(6), 77);
  const fs::path p = tmp.path / "model.nnp1";
  io::write_checkpoint(p, net, 42u);
  std::uint64_t hash = 0;
  const Network<float> r = io::read_checkpoint<float>(p, &hash);
  CHECK(hash == 42u);
  REQUIRE(r.arch.layers.size() == net.arch.layers.size());
  for (std::size_t i = 0; i < net.arch.layers.size(); ++i) {
    CHECK(r.arch.layers[i].in_ch == net.arch.layers[i].in_ch);
    CHECK(r.arch.layers[i].out_ch == net.arch.layers[i].out_ch);
    CHECK(r.arch.layers[i].stride == net.arch.layers[i].stride);
    CHECK(r.arch.layers[i].relu == net.arch.layers[i].relu);
    CHECK(r.weights[i] == net.weights[i]);
    CHECK(r.biases[i] == net.biases[i]);
  }
  // cross-scalar load: float file into a double network, values match exactly
  const Network<double> rd = io::read_checkpoint<double>(p);
  CHECK(rd.weights[0](0, 0) == static_cast<double>(net.weights[0](0, 0)));
}

TEST_CASE("detections CSV round-trip") {
  TempDir tmp;
  std::vector<io::DetectionRow> rows = {
      {0, 1.25e-7, -31.5, 0.7, -0.2, 12.0},
      {0, 3.5e-7, 62.0, -0.1, 0.4, 5.5},
      {3, 9.875e-7, 0.0, 1.0, 0.0, 99.0},
  };
  const fs::path p = tmp.path / "dets.csv";
  io::write_detections_csv(p, rows);
  const auto r = io::read_detections_csv(p);
  REQUIRE(r.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(r[i].snapshot_index == rows[i].snapshot_index);
    CHECK(r[i].tau_s == rows[i].tau_s);
    CHECK(r[i].alpha_hz == rows[i].alpha_hz);
    CHECK(r[i].gamma_re == rows[i].gamma_re);
    CHECK(r[i].gamma_im == rows[i].gamma_im);
    CHECK(r[i].score == rows[i].score);
  }
  // empty list still round-trips through a header-only file
  io::write_detections_csv(p, {});
  CHECK(io::read_detections_csv(p).empty());
}

TEST_CASE("trajectory CSV parses header and rows") {
  TempDir tmp;
  const fs::path p = tmp.path / "traj.csv";
  {
    std::ofstream f(p);
    f << "t,x,y,z,vx,vy,vz\n";
    f << "0.0,1,2,3,0.5,0,0\n";
    f << "1.0,1.5,2,3,0.5,0,0\n";
    f << "2.0,2.0,2,3,0.5,0,0\n";
  }
  const Trajectory traj = io::read_trajectory_csv(p, Vec3(0, 0, 0), Vec3(10, 0, 0));
  REQUIRE(traj.samples.size() == 3);
  CHECK(traj.samples[1].t == 1.0);
  CHECK(traj.samples[1].position == Vec3(1.5, 2, 3));
  CHECK(traj.samples[2].velocity == Vec3(0.5, 0, 0));
  const auto mid = traj.at(0.5);
  CHECK(mid.position.x() == doctest::Approx(1.25));
}

TEST_CASE("training log and eval CSV writers emit the documented headers") {
  TempDir tmp;
  std::vector<EpochStats> hist = {{0, 0.7, std::numeric_limits<double>::quiet_NaN()},
                                  {1, 0.5, std::numeric_limits<double>::quiet_NaN()}};
  const fs::path lp = tmp.path / "log.csv";
  io::write_training_log_csv(lp, hist);
  std::ifstream lf(lp);
  std::string line;
  std::getline(lf, line);
  CHECK(line == "epoch,mean_loss,val_loss");

  EvalReport rep;
  rep.n_meas = 100;
  rep.n_empty = 46;
  rep.p_d = 0.54;
  rep.rmse_tau = 16.2e-9;
  rep.rmse_alpha = 10.4;
  const fs::path ep = tmp.path / "eval.csv";
  io::write_eval_csv(ep, {{"L1", rep}});
  std::ifstream ef(ep);
  std::getline(ef, line);
  CHECK(line == "link,P_D,rmse_tau_ns,rmse_alpha_hz,n_meas,n_empty");
  std::getline(ef, line);
  CHECK(line.rfind("L1,0.54,16.2,10.4,100,46", 0) == 0);

  const std::string txt = io::format_eval_report({{"L1", rep}});
  CHECK(txt.find("L1") != std::string::npos);
  CHECK(txt.find("0.54") != std::string::npos);
  CHECK(txt.find("16.2") != std::string::npos);
}

TEST_CASE("PGM export writes a valid 8-bit header and payload size") {
  TempDir tmp;
  RMatrix m(4, 6);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<double>(i);
  const fs::path p = tmp.path / "map.pgm";
  io::write_pgm(p, m);
  std::ifstream f(p, std::ios::binary);
  std::string magic, dims, maxval;
  std::getline(f, magic);
  std::getline(f, dims);
  std::getline(f, maxval);
  CHECK(magic == "P5");
  CHECK(dims == "6 4");
  CHECK(maxval == "255");
  std::vector<char> payload(24);
  f.read(payload.data(), 24);
  CHECK(f.gcount() == 24);
  CHECK(static_cast<unsigned char>(payload[0]) == 0);
  CHECK(static_cast<unsigned char>(payload[23]) == 255);
}

TEST_CASE("error paths: missing files, bad magic, truncation") {
  TempDir tmp;
  CHECK_THROWS_AS(io::read_snapshot(tmp.path / "nope.dds1"), DataError);
  CHECK_THROWS_AS(io::read_feature_tensor(tmp.path / "nope.ftn1"), DataError);
  CHECK_THROWS_AS(io::read_checkpoint<float>(tmp.path / "nope.nnp1"), DataError);

  const fs::path bad = tmp.path / "bad.bin";
  {
    std::ofstream f(bad, std::ios::binary);
    f << "XXXXgarbage";
  }
  CHECK_THROWS_AS(io::read_snapshot(bad), DataError);
  CHECK_THROWS_AS(io::read_checkpoint<float>(bad), DataError);

  // truncated DDS1: valid header, half the payload
  const Snapshot s = sample_snapshot(1);
  const fs::path full = tmp.path / "full.dds1";
  io::write_snapshot(full, s);
  const auto size = fs::file_size(full);
  const fs::path cut = tmp.path / "cut.dds1";
  {
    std::ifstream in(full, std::ios::binary);
    std::vector<char> buf(size / 2);
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    std::ofstream out(cut, std::ios::binary);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
  CHECK_THROWS_AS(io::read_snapshot(cut), DataError);

  // malformed CSV rows
  const fs::path csv = tmp.path / "bad.csv";
  {
    std::ofstream f(csv);
    f << "snapshot_index,tau_s,alpha_hz,gamma_re,gamma_im,score\n";
    f << "0,not_a_number,1,2,3,4\n";
  }
  CHECK_THROWS_AS(io::read_detections_csv(csv), DataError);
  {
    std::ofstream f(csv);
    f << "wrong,header\n";
  }
  CHECK_THROWS_AS(io::read_detections_csv(csv), DataError);
}
