#pragma once

// File formats: DDS1 snapshot binaries with text label sidecars, FTN1 feature
// tensors, NNP1 network checkpoints, detection CSVs, trajectory CSVs and PGM
// map exports.

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "ddsense/evaluate.hpp"
#include "ddsense/geometry.hpp"
#include "ddsense/nnet.hpp"
#include "ddsense/preproc.hpp"

namespace ddsense::io {

namespace detail {

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw DataError("unexpected end of file");
  return v;
}

inline void put_magic(std::ostream& os, const char m[5]) { os.write(m, 4); }

inline void expect_magic(std::istream& is, const char m[5]) {
  char buf[4];
  is.read(buf, 4);
  if (!is || std::memcmp(buf, m, 4) != 0)
    throw DataError(std::string("bad magic, expected ") + m);
}

inline std::ofstream open_out(const std::filesystem::path& p, bool binary) {
  std::ofstream f(p, binary ? std::ios::binary : std::ios::out);
  if (!f) throw DataError("cannot open for writing: " + p.string());
  return f;
}

inline std::ifstream open_in(const std::filesystem::path& p, bool binary) {
  std::ifstream f(p, binary ? std::ios::binary : std::ios::in);
  if (!f) throw DataError("cannot open for reading: " + p.string());
  return f;
}

}  // namespace detail

// ------------------------------ DDS1 -------------------------------------
// Little-endian header {magic "DDS1", u32 N_f, u32 N_t, f64 df, dt, f0, t0,
// fc}, then N_f*N_t interleaved complex64 in frequency-major (row-major)
// order.

inline void write_snapshot(const std::filesystem::path& path, const Snapshot& s) {
  auto f = detail::open_out(path, true);
  detail::put_magic(f, "DDS1");
  detail::put<std::uint32_t>(f, static_cast<std::uint32_t>(s.grid.n_freq));
  detail::put<std::uint32_t>(f, static_cast<std::uint32_t>(s.grid.n_time));
  detail::put<double>(f, s.grid.delta_f);
  detail::put<double>(f, s.grid.delta_t);
  detail::put<double>(f, s.grid.f_start);
  detail::put<double>(f, s.grid.t_start);
  detail::put<double>(f, s.grid.carrier_hz);
  for (int k = 0; k < s.grid.n_freq; ++k)
    for (int l = 0; l < s.grid.n_time; ++l) {
      detail::put<float>(f, static_cast<float>(s.y(k, l).real()));
      detail::put<float>(f, static_cast<float>(s.y(k, l).imag()));
    }
}

inline Snapshot read_snapshot(const std::filesystem::path& path) {
  auto f = detail::open_in(path, true);
  detail::expect_magic(f, "DDS1");
  const auto nf = detail::get<std::uint32_t>(f);
  const auto nt = detail::get<std::uint32_t>(f);
  const double df = detail::get<double>(f);
  const double dt = detail::get<double>(f);
  const double f0 = detail::get<double>(f);
  const double t0 = detail::get<double>(f);
  const double fc = detail::get<double>(f);
  Snapshot s;
  s.grid = SamplingGrid::make(static_cast<int>(nf), static_cast<int>(nt), df, dt, f0, t0, fc);
  s.y.resize(nf, nt);
  for (std::uint32_t k = 0; k < nf; ++k)
    for (std::uint32_t l = 0; l < nt; ++l) {
      const float re = detail::get<float>(f);
      const float im = detail::get<float>(f);
      s.y(k, l) = Complex(re, im);
    }
  return s;
}

// Label sidecar: text record with snr/seed metadata and one
// "gamma_re gamma_im tau alpha" line per path.
inline void write_label(const std::filesystem::path& path, const Snapshot& s) {
  auto f = detail::open_out(path, false);
  f << std::setprecision(17);
  f << "snr_db " << (s.snr_db ? *s.snr_db : std::numeric_limits<double>::quiet_NaN()) << "\n";
  f << "noise_var " << (s.noise_var ? *s.noise_var : 0.0) << "\n";
  f << "seed " << (s.seed ? *s.seed : 0) << "\n";
  const int p = s.label ? s.label->size() : 0;
  f << "paths " << p << "\n";
  if (s.label)
    for (const auto& path_params : s.label->paths)
      f << path_params.gamma.real() << " " << path_params.gamma.imag() << " " << path_params.tau
        << " " << path_params.alpha << "\n";
}

inline void read_label(const std::filesystem::path& path, Snapshot& s) {
  auto f = detail::open_in(path, false);
  std::string key;
  double snr = 0.0, nv = 0.0;
  std::uint64_t seed = 0;
  int p = 0;
  f >> key >> snr;
  if (key != "snr_db") throw DataError("label sidecar: expected snr_db");
  f >> key >> nv;
  f >> key >> seed;
  f >> key >> p;
  if (key != "paths" || p < 0) throw DataError("label sidecar: expected path count");
  PathSet set;
  for (int i = 0; i < p; ++i) {
    double re, im, tau, alpha;
    if (!(f >> re >> im >> tau >> alpha)) throw DataError("label sidecar: truncated path list");
    set.add(Complex(re, im), tau, alpha);
  }
  s.label = std::move(set);
  if (std::isfinite(snr)) s.snr_db = snr;
  s.noise_var = nv;
  s.seed = seed;
}

// ------------------------------ FTN1 -------------------------------------
// Header {magic "FTN1", u32 channels, u32 n_tau, u32 n_alpha, f64 tau0,
// tau_step, alpha0, alpha_step, u64 config_hash}, then row-major float32
// payload channel by channel.

inline void write_feature_tensor(const std::filesystem::path& path, const FeatureTensor& ft,
                                 std::uint64_t config_hash) {
  auto f = detail::open_out(path, true);
  detail::put_magic(f, "FTN1");
  detail::put<std::uint32_t>(f, static_cast<std::uint32_t>(ft.n_channels()));
  detail::put<std::uint32_t>(f, static_cast<std::uint32_t>(ft.tau_axis.size()));
  detail::put<std::uint32_t>(f, static_cast<std::uint32_t>(ft.alpha_axis.size()));
  detail::put<double>(f, ft.tau_axis(0));
  detail::put<double>(f, ft.tau_axis.size() > 1 ? ft.tau_axis(1) - ft.tau_axis(0) : 0.0);
  detail::put<double>(f, ft.alpha_axis(0));
  detail::put<double>(f, ft.alpha_axis.size() > 1 ? ft.alpha_axis(1) - ft.alpha_axis(0) : 0.0);
  detail::put<std::uint64_t>(f, config_hash);
  for (const RMatrix& ch : ft.channels)
    for (Eigen::Index i = 0; i < ch.rows(); ++i)
      for (Eigen::Index j = 0; j < ch.cols(); ++j)
        detail::put<float>(f, static_cast<float>(ch(i, j)));
}

inline FeatureTensor read_feature_tensor(const std::filesystem::path& path,
                                         std::uint64_t* config_hash = nullptr) {
  auto f = detail::open_in(path, true);
  detail::expect_magic(f, "FTN1");
  const auto nc = detail::get<std::uint32_t>(f);
  const auto nt = detail::get<std::uint32_t>(f);
  const auto na = detail::get<std::uint32_t>(f);
  const double tau0 = detail::get<double>(f);
  const double tau_step = detail::get<double>(f);
  const double alpha0 = detail::get<double>(f);
  const double alpha_step = detail::get<double>(f);
  const auto hash = detail::get<std::uint64_t>(f);
  if (config_hash) *config_hash = hash;
  FeatureTensor ft;
  ft.tau_axis.resize(nt);
  for (std::uint32_t i = 0; i < nt; ++i) ft.tau_axis(i) = tau0 + i * tau_step;
  ft.alpha_axis.resize(na);
  for (std::uint32_t i = 0; i < na; ++i) ft.alpha_axis(i) = alpha0 + i * alpha_step;
  for (std::uint32_t c = 0; c < nc; ++c) {
    RMatrix ch(nt, na);
    for (std::uint32_t i = 0; i < nt; ++i)
      for (std::uint32_t j = 0; j < na; ++j) ch(i, j) = detail::get<float>(f);
    ft.channels.push_back(std::move(ch));
  }
  return ft;
}

// A single real matrix exported as a one-channel FTN1 (max-hold maps).
inline void write_map(const std::filesystem::path& path, const RMatrix& map,
                      const RVector& tau_axis, const RVector& alpha_axis,
                      std::uint64_t config_hash) {
  FeatureTensor ft;
  ft.channels.push_back(map);
  ft.tau_axis = tau_axis;
  ft.alpha_axis = alpha_axis;
  write_feature_tensor(path, ft, config_hash);
}

// ------------------------------ NNP1 -------------------------------------
// Checkpoint: {magic "NNP1", u64 config_hash, u32 n_layers, per layer
// {u32 in,out,kernel,stride,relu} }, then per layer float32 weights
// (column-major) and biases.

template <typename Scalar>
void write_checkpoint(const std::filesystem::path& path, const Network<Scalar>& net,
                      std::uint64_t config_hash) {
  auto f = detail::open_out(path, true);
  detail::put_magic(f, "NNP1");
  detail::put<std::uint64_t>(f, config_hash);
  detail::put<std::uint32_t>(f, static_cast<std::uint32_t>(net.arch.layers.size()));
  for (const auto& l : net.arch.layers) {
    detail::put<std::uint32_t>(f, static_cast<std::uint32_t>(l.in_ch));
    detail::put<std::uint32_t>(f, static_cast<std::uint32_t>(l.out_ch));
    detail::put<std::uint32_t>(f, static_cast<std::uint32_t>(l.kernel));
    detail::put<std::uint32_t>(f, static_cast<std::uint32_t>(l.stride));
    detail::put<std::uint32_t>(f, l.relu ? 1 : 0);
  }
  for (std::size_t i = 0; i < net.weights.size(); ++i) {
    for (Eigen::Index n = 0; n < net.weights[i].size(); ++n)
      detail::put<float>(f, static_cast<float>(net.weights[i](n)));
    for (Eigen::Index n = 0; n < net.biases[i].size(); ++n)
      detail::put<float>(f, static_cast<float>(net.biases[i](n)));
  }
}

template <typename Scalar>
Network<Scalar> read_checkpoint(const std::filesystem::path& path,
                                std::uint64_t* config_hash = nullptr) {
  auto f = detail::open_in(path, true);
  detail::expect_magic(f, "NNP1");
  const auto hash = detail::get<std::uint64_t>(f);
  if (config_hash) *config_hash = hash;
  const auto nl = detail::get<std::uint32_t>(f);
  Architecture arch;
  for (std::uint32_t i = 0; i < nl; ++i) {
    ConvSpec l;
    l.in_ch = static_cast<int>(detail::get<std::uint32_t>(f));
    l.out_ch = static_cast<int>(detail::get<std::uint32_t>(f));
    l.kernel = static_cast<int>(detail::get<std::uint32_t>(f));
    l.stride = static_cast<int>(detail::get<std::uint32_t>(f));
    l.relu = detail::get<std::uint32_t>(f) != 0;
    arch.layers.push_back(l);
  }
  arch.validate();
  Network<Scalar> net;
  net.arch = arch;
  for (const auto& l : arch.layers) {
    typename Network<Scalar>::Mat w(l.out_ch, l.in_ch * l.kernel * l.kernel);
    for (Eigen::Index n = 0; n < w.size(); ++n) w(n) = static_cast<Scalar>(detail::get<float>(f));
    typename Network<Scalar>::Vec b(l.out_ch);
    for (Eigen::Index n = 0; n < b.size(); ++n) b(n) = static_cast<Scalar>(detail::get<float>(f));
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
  }
  return net;
}

// ------------------------------ CSV --------------------------------------

struct DetectionRow {
  int snapshot_index = 0;
  double tau_s = 0.0;
  double alpha_hz = 0.0;
  double gamma_re = 0.0;
  double gamma_im = 0.0;
  double score = 0.0;
};

inline void write_detections_csv(const std::filesystem::path& path,
                                 const std::vector<DetectionRow>& rows) {
  auto f = detail::open_out(path, false);
  f << std::setprecision(17);
  f << "snapshot_index,tau_s,alpha_hz,gamma_re,gamma_im,score\n";
  for (const auto& r : rows)
    f << r.snapshot_index << "," << r.tau_s << "," << r.alpha_hz << "," << r.gamma_re << ","
      << r.gamma_im << "," << r.score << "\n";
}

inline std::vector<DetectionRow> read_detections_csv(const std::filesystem::path& path) {
  auto f = detail::open_in(path, false);
  std::string line;
  if (!std::getline(f, line) || line.rfind("snapshot_index,", 0) != 0)
    throw DataError("detections csv: bad header in " + path.string());
  std::vector<DetectionRow> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    DetectionRow r;
    if (!(ss >> r.snapshot_index >> r.tau_s >> r.alpha_hz >> r.gamma_re >> r.gamma_im >> r.score))
      throw DataError("detections csv: malformed row: " + line);
    rows.push_back(r);
  }
  return rows;
}

// Trajectory CSV with columns t,x,y,z,vx,vy,vz in SI units.
inline Trajectory read_trajectory_csv(const std::filesystem::path& path, const Vec3& tx,
                                      const Vec3& rx) {
  auto f = detail::open_in(path, false);
  Trajectory traj;
  traj.tx = tx;
  traj.rx = rx;
  std::string line;
  bool first = true;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (first && line.find("t,") == 0) {
      first = false;
      continue;  // header
    }
    first = false;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    TrajectorySample s;
    if (!(ss >> s.t >> s.position.x() >> s.position.y() >> s.position.z() >> s.velocity.x() >>
          s.velocity.y() >> s.velocity.z()))
      throw DataError("trajectory csv: malformed row: " + line);
    traj.samples.push_back(s);
  }
  traj.validate();
  return traj;
}

inline void write_training_log_csv(const std::filesystem::path& path,
                                   const std::vector<EpochStats>& history) {
  auto f = detail::open_out(path, false);
  f << "epoch,mean_loss,val_loss\n";
  f << std::setprecision(17);
  for (const auto& e : history) f << e.epoch << "," << e.train_loss << "," << e.val_loss << "\n";
}

// Table-style evaluation report, one row per link/scenario.
inline void write_eval_csv(const std::filesystem::path& path,
                           const std::vector<std::pair<std::string, EvalReport>>& rows) {
  auto f = detail::open_out(path, false);
  f << "link,P_D,rmse_tau_ns,rmse_alpha_hz,n_meas,n_empty\n";
  f << std::setprecision(10);
  for (const auto& [name, r] : rows)
    f << name << "," << r.p_d << "," << r.rmse_tau * 1e9 << "," << r.rmse_alpha << "," << r.n_meas
      << "," << r.n_empty << "\n";
}

inline std::string format_eval_report(const std::vector<std::pair<std::string, EvalReport>>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(10) << "Link" << std::setw(8) << "P_D" << std::setw(16)
     << "RMSE tau [ns]" << std::setw(18) << "RMSE alpha [Hz]" << std::setw(8) << "N_meas"
     << std::setw(8) << "N_empty" << "\n";
  for (const auto& [name, r] : rows) {
    os << std::left << std::setw(10) << name << std::setw(8) << std::setprecision(3) << r.p_d
       << std::setw(16) << std::setprecision(4) << r.rmse_tau * 1e9 << std::setw(18)
       << std::setprecision(4) << r.rmse_alpha << std::setw(8) << r.n_meas << std::setw(8)
       << r.n_empty << "\n";
  }
  return os.str();
}

// ------------------------------ PGM --------------------------------------
// 8-bit grayscale export of a map, linearly scaled between its min and max.

inline void write_pgm(const std::filesystem::path& path, const RMatrix& map) {
  auto f = detail::open_out(path, true);
  const double lo = map.minCoeff();
  const double hi = map.maxCoeff();
  const double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
  f << "P5\n" << map.cols() << " " << map.rows() << "\n255\n";
  for (Eigen::Index i = 0; i < map.rows(); ++i)
    for (Eigen::Index j = 0; j < map.cols(); ++j) {
      const auto v = static_cast<unsigned char>(std::lround((map(i, j) - lo) * scale));
      f.write(reinterpret_cast<const char*>(&v), 1);
    }
}

}  // namespace ddsense::io
