#pragma once

// Experiment orchestration: JSON-backed configuration with canonical hashing,
// dataset/train/detect/eval stages over on-disk artifacts, and the scripted
// three-link replica scenario.

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ddsense/io.hpp"
#include "ddsense/scenario.hpp"

namespace ddsense {

namespace fs = std::filesystem;
using nlohmann::json;

struct TrainRunConfig {
  TrainConfig opt;
  double blob_sigma = 1.5;
  double peak_threshold = 0.3;
  int dataset_size = 2000;
};

struct ReplicaConfig {
  int n_snapshots = 40;
  double snapshot_spacing = 0.1;  // s
  double snr_db = 25.0;
  int n_clutter = 6;
  std::uint64_t clutter_seed = 99;
};

struct ExperimentConfig {
  ScenarioSpec scenario;  // includes the grid
  PreprocConfig preproc;
  DetectorConfig detector;
  TrainRunConfig train;
  EvalConfig eval;
  ReplicaConfig replica;
  std::uint64_t master_seed = 1;
  fs::path out_dir = "out";

  // Desk-scale defaults: 128x32 grid, 64x64 crop over a quarter of both
  // unambiguous ranges, up to 3 paths away from the zero-Doppler notch.
  static ExperimentConfig toy() {
    ExperimentConfig c;
    c.scenario.grid = SamplingGrid::make(128, 32, 250e3, 1e-3, std::nullopt, 0.0, 3.75e9);
    c.scenario.n_paths_min = 1;
    c.scenario.n_paths_max = 3;
    c.scenario.tau_range = {0.01, 0.24};
    c.scenario.alpha_range = {-0.24, 0.24};
    c.scenario.alpha_min_abs = 0.06;
    c.scenario.snr_range_db = {20.0, 40.0};
    c.preproc.tau_max = 0.25;
    c.preproc.alpha_max = 0.25;
    c.preproc.n_tau = 64;
    c.preproc.n_alpha = 64;
    c.detector.tau_max = 0.25;
    c.detector.alpha_max = 0.25;
    c.detector.max_paths = 10;
    c.eval = EvalConfig::defaults_for(c.scenario.grid);
    c.train.opt.batch_size = 32;
    c.train.opt.epochs = 30;
    c.train.dataset_size = 2000;
    return c;
  }

  // Full-scale parameterization (1024x100 grid, 512x512 crop, 200k
  // snapshots); compute-heavy, provided as a documented preset.
  static ExperimentConfig paper() {
    ExperimentConfig c;
    c.scenario.grid = SamplingGrid::make(1024, 100, 78125.0, 320e-6, std::nullopt, 0.0, 3.75e9);
    c.scenario.n_paths_min = 1;
    c.scenario.n_paths_max = 10;
    c.scenario.tau_range = {0.0, 0.02};
    c.scenario.alpha_range = {-0.05, 0.05};
    c.scenario.snr_range_db = {0.0, 50.0};
    c.preproc = PreprocConfig{};
    c.detector = DetectorConfig{};
    c.eval = EvalConfig::defaults_for(c.scenario.grid);
    c.train.opt.batch_size = 512;
    c.train.opt.epochs = 100;
    c.train.dataset_size = 200000;
    return c;
  }
};

// ----------------------- JSON (de)serialization ---------------------------

inline json to_json(const ExperimentConfig& c) {
  json j;
  j["grid"] = {{"n_freq", c.scenario.grid.n_freq},   {"n_time", c.scenario.grid.n_time},
               {"delta_f", c.scenario.grid.delta_f}, {"delta_t", c.scenario.grid.delta_t},
               {"f_start", c.scenario.grid.f_start}, {"t_start", c.scenario.grid.t_start},
               {"carrier_hz", c.scenario.grid.carrier_hz}};
  j["scenario"] = {{"n_paths", {c.scenario.n_paths_min, c.scenario.n_paths_max}},
                   {"tau_range", {c.scenario.tau_range.lo, c.scenario.tau_range.hi}},
                   {"alpha_range", {c.scenario.alpha_range.lo, c.scenario.alpha_range.hi}},
                   {"alpha_min_abs", c.scenario.alpha_min_abs},
                   {"magnitude_range", {c.scenario.magnitude_range.lo, c.scenario.magnitude_range.hi}},
                   {"phase_range", {c.scenario.phase_range.lo, c.scenario.phase_range.hi}},
                   {"snr_range_db", {c.scenario.snr_range_db.lo, c.scenario.snr_range_db.hi}}};
  j["preproc"] = {{"nw", c.preproc.nw},
                  {"n_windows", c.preproc.n_windows},
                  {"tau_max", c.preproc.tau_max},
                  {"alpha_max", c.preproc.alpha_max},
                  {"n_tau", c.preproc.n_tau},
                  {"n_alpha", c.preproc.n_alpha},
                  {"clutter_filter", c.preproc.clutter_filter},
                  {"rect_window", c.preproc.rect_window},
                  {"epsilon_log", c.preproc.epsilon_log}};
  j["detector"] = {{"max_paths", c.detector.max_paths},
                   {"tau_max", c.detector.tau_max},
                   {"alpha_max", c.detector.alpha_max},
                   {"p_fa", c.detector.p_fa},
                   {"threshold_factor", c.detector.threshold_factor},
                   {"refine", c.detector.refine == Refine::None       ? "none"
                              : c.detector.refine == Refine::Parabolic ? "parabolic"
                                                                       : "newton"},
                   {"oversample", c.detector.oversample},
                   {"stop_on_residual", c.detector.stop_on_residual}};
  j["train"] = {{"learning_rate", c.train.opt.learning_rate},
                {"beta1", c.train.opt.beta1},
                {"beta2", c.train.opt.beta2},
                {"batch_size", c.train.opt.batch_size},
                {"epochs", c.train.opt.epochs},
                {"seed", c.train.opt.seed},
                {"val_fraction", c.train.opt.val_fraction},
                {"blob_sigma", c.train.blob_sigma},
                {"peak_threshold", c.train.peak_threshold},
                {"dataset_size", c.train.dataset_size}};
  j["eval"] = {{"eps_tau", c.eval.eps_tau}, {"eps_alpha", c.eval.eps_alpha}};
  j["replica"] = {{"n_snapshots", c.replica.n_snapshots},
                  {"snapshot_spacing", c.replica.snapshot_spacing},
                  {"snr_db", c.replica.snr_db},
                  {"n_clutter", c.replica.n_clutter},
                  {"clutter_seed", c.replica.clutter_seed}};
  j["seed"] = c.master_seed;
  return j;
}

inline void from_json(const json& j, ExperimentConfig& c) {
  try {
    if (j.contains("grid")) {
      const auto& g = j["grid"];
      c.scenario.grid = SamplingGrid::make(
          g.value("n_freq", c.scenario.grid.n_freq), g.value("n_time", c.scenario.grid.n_time),
          g.value("delta_f", c.scenario.grid.delta_f), g.value("delta_t", c.scenario.grid.delta_t),
          g.contains("f_start") ? std::optional<double>(g["f_start"].get<double>()) : std::nullopt,
          g.value("t_start", c.scenario.grid.t_start),
          g.value("carrier_hz", c.scenario.grid.carrier_hz));
    }
    auto interval = [](const json& v) { return Interval{v.at(0), v.at(1)}; };
    if (j.contains("scenario")) {
      const auto& s = j["scenario"];
      if (s.contains("n_paths")) {
        c.scenario.n_paths_min = s["n_paths"].at(0);
        c.scenario.n_paths_max = s["n_paths"].at(1);
      }
      if (s.contains("tau_range")) c.scenario.tau_range = interval(s["tau_range"]);
      if (s.contains("alpha_range")) c.scenario.alpha_range = interval(s["alpha_range"]);
      c.scenario.alpha_min_abs = s.value("alpha_min_abs", c.scenario.alpha_min_abs);
      if (s.contains("magnitude_range")) c.scenario.magnitude_range = interval(s["magnitude_range"]);
      if (s.contains("phase_range")) c.scenario.phase_range = interval(s["phase_range"]);
      if (s.contains("snr_range_db")) c.scenario.snr_range_db = interval(s["snr_range_db"]);
    }
    if (j.contains("preproc")) {
      const auto& p = j["preproc"];
      c.preproc.nw = p.value("nw", c.preproc.nw);
      c.preproc.n_windows = p.value("n_windows", c.preproc.n_windows);
      c.preproc.tau_max = p.value("tau_max", c.preproc.tau_max);
      c.preproc.alpha_max = p.value("alpha_max", c.preproc.alpha_max);
      c.preproc.n_tau = p.value("n_tau", c.preproc.n_tau);
      c.preproc.n_alpha = p.value("n_alpha", c.preproc.n_alpha);
      c.preproc.clutter_filter = p.value("clutter_filter", c.preproc.clutter_filter);
      c.preproc.rect_window = p.value("rect_window", c.preproc.rect_window);
      c.preproc.epsilon_log = p.value("epsilon_log", c.preproc.epsilon_log);
    }
    if (j.contains("detector")) {
      const auto& d = j["detector"];
      c.detector.max_paths = d.value("max_paths", c.detector.max_paths);
      c.detector.tau_max = d.value("tau_max", c.detector.tau_max);
      c.detector.alpha_max = d.value("alpha_max", c.detector.alpha_max);
      c.detector.p_fa = d.value("p_fa", c.detector.p_fa);
      c.detector.threshold_factor = d.value("threshold_factor", c.detector.threshold_factor);
      c.detector.oversample = d.value("oversample", c.detector.oversample);
      c.detector.stop_on_residual = d.value("stop_on_residual", c.detector.stop_on_residual);
      if (d.contains("refine")) {
        const std::string r = d["refine"];
        if (r == "none")
          c.detector.refine = Refine::None;
        else if (r == "parabolic")
          c.detector.refine = Refine::Parabolic;
        else if (r == "newton")
          c.detector.refine = Refine::Newton;
        else
          throw ConfigError("unknown refine mode: " + r);
      }
    }
    if (j.contains("train")) {
      const auto& t = j["train"];
      c.train.opt.learning_rate = t.value("learning_rate", c.train.opt.learning_rate);
      c.train.opt.beta1 = t.value("beta1", c.train.opt.beta1);
      c.train.opt.beta2 = t.value("beta2", c.train.opt.beta2);
      c.train.opt.batch_size = t.value("batch_size", c.train.opt.batch_size);
      c.train.opt.epochs = t.value("epochs", c.train.opt.epochs);
      c.train.opt.seed = t.value("seed", c.train.opt.seed);
      c.train.opt.val_fraction = t.value("val_fraction", c.train.opt.val_fraction);
      c.train.blob_sigma = t.value("blob_sigma", c.train.blob_sigma);
      c.train.peak_threshold = t.value("peak_threshold", c.train.peak_threshold);
      c.train.dataset_size = t.value("dataset_size", c.train.dataset_size);
    }
    if (j.contains("eval")) {
      c.eval.eps_tau = j["eval"].value("eps_tau", c.eval.eps_tau);
      c.eval.eps_alpha = j["eval"].value("eps_alpha", c.eval.eps_alpha);
    }
    if (j.contains("replica")) {
      const auto& r = j["replica"];
      c.replica.n_snapshots = r.value("n_snapshots", c.replica.n_snapshots);
      c.replica.snapshot_spacing = r.value("snapshot_spacing", c.replica.snapshot_spacing);
      c.replica.snr_db = r.value("snr_db", c.replica.snr_db);
      c.replica.n_clutter = r.value("n_clutter", c.replica.n_clutter);
      c.replica.clutter_seed = r.value("clutter_seed", c.replica.clutter_seed);
    }
    c.master_seed = j.value("seed", c.master_seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
}

// Canonical serialization (sorted keys, fixed float formatting) -> FNV hash
// that stamps every artifact.
inline std::uint64_t config_hash(const ExperimentConfig& c) { return fnv1a(to_json(c).dump()); }

inline ExperimentConfig load_config(const std::optional<fs::path>& file, const std::string& preset) {
  ExperimentConfig c = preset == "paper" ? ExperimentConfig::paper() : ExperimentConfig::toy();
  if (file) {
    auto f = io::detail::open_in(*file, false);
    json j;
    try {
      f >> j;
    } catch (const json::exception& e) {
      throw ConfigError("cannot parse config file " + file->string() + ": " + e.what());
    }
    from_json(j, c);
  }
  return c;
}

// ------------------------------ manifest ----------------------------------

struct RunManifest {
  std::uint64_t config_hash = 0;
  std::vector<std::string> artifacts;
  std::map<std::string, double> stage_seconds;

  void add(const fs::path& p) { artifacts.push_back(p.string()); }

  void write(const fs::path& path) const {
    json j;
    j["config_hash"] = hex64(config_hash);
    j["tool_version"] = "1.0.0";
    j["artifacts"] = artifacts;
    j["stage_seconds"] = stage_seconds;
    auto f = io::detail::open_out(path, false);
    f << j.dump(2) << "\n";
  }
};

class StageTimer {
 public:
  StageTimer(RunManifest& m, std::string name)
      : manifest_(m), name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    manifest_.stage_seconds[name_] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  RunManifest& manifest_;
  std::string name_;
  std::chrono::steady_clock::time_point start_;
};

// ------------------------------ stages ------------------------------------

inline fs::path snapshot_path(const fs::path& dir, int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "snapshot_%05d.dds", index);
  return dir / buf;
}

inline fs::path label_path(const fs::path& dir, int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "snapshot_%05d.label", index);
  return dir / buf;
}

inline int count_snapshots(const fs::path& dir) {
  int n = 0;
  while (fs::exists(snapshot_path(dir, n))) ++n;
  if (n == 0) throw DataError("no DDS1 snapshots found in " + dir.string());
  return n;
}

// Writes `count` labeled DDS1 snapshots into out_dir/dataset.
inline fs::path cmd_generate(const ExperimentConfig& cfg, int count, RunManifest& manifest) {
  if (count < 1) throw ConfigError("generate: count must be >= 1");
  StageTimer timer(manifest, "generate");
  const fs::path dir = cfg.out_dir / "dataset";
  fs::create_directories(dir);
  for (int i = 0; i < count; ++i) {
    const Snapshot s = generate_snapshot(cfg.scenario, cfg.master_seed, static_cast<std::uint64_t>(i));
    io::write_snapshot(snapshot_path(dir, i), s);
    io::write_label(label_path(dir, i), s);
    manifest.add(snapshot_path(dir, i));
    manifest.add(label_path(dir, i));
  }
  return dir;
}

// Groundtruth etas rendered into training labels: static clutter is excluded
// whenever the clutter filter is active, since the filter removes it from the
// network input.
inline std::vector<std::pair<double, double>> label_etas(const PathSet& label,
                                                         const PreprocConfig& preproc) {
  std::vector<std::pair<double, double>> etas;
  for (const auto& p : label.paths) {
    if (preproc.clutter_filter && p.is_static_clutter()) continue;
    etas.emplace_back(p.tau, p.alpha);
  }
  return etas;
}

using TrainNet = Network<float>;

inline std::vector<Sample<float>> build_training_samples(const ExperimentConfig& cfg,
                                                         const fs::path& dataset_dir, int count) {
  std::vector<Sample<float>> samples;
  samples.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Snapshot s = io::read_snapshot(snapshot_path(dataset_dir, i));
    io::read_label(label_path(dataset_dir, i), s);
    const FeatureTensor ft = delay_doppler_map(s.y, s.grid, cfg.preproc);
    const RMatrix target =
        render_label(label_etas(*s.label, cfg.preproc), ft.tau_axis, ft.alpha_axis, cfg.train.blob_sigma);
    Sample<float> sample;
    sample.h = cfg.preproc.n_tau;
    sample.w = cfg.preproc.n_alpha;
    sample.x = to_input<float>(ft);
    sample.t.resize(1, target.size());
    for (int r = 0; r < target.rows(); ++r)
      for (int cc = 0; cc < target.cols(); ++cc)
        sample.t(0, r * target.cols() + cc) = static_cast<float>(target(r, cc));
    samples.push_back(std::move(sample));
  }
  return samples;
}

// Trains the toy network on a dataset directory; cached by config hash.
inline fs::path cmd_train(const ExperimentConfig& cfg, const fs::path& dataset_dir,
                          RunManifest& manifest, bool force = false) {
  const fs::path ckpt = cfg.out_dir / "model.nnp1";
  const std::uint64_t hash = config_hash(cfg);
  if (!force && fs::exists(ckpt)) {
    std::uint64_t stored = 0;
    io::read_checkpoint<float>(ckpt, &stored);
    if (stored == hash) {
      manifest.add(ckpt);
      return ckpt;  // stage cache hit
    }
  }
  StageTimer timer(manifest, "train");
  const int count = std::min(cfg.train.dataset_size, count_snapshots(dataset_dir));
  const auto samples = build_training_samples(cfg, dataset_dir, count);

  TrainNet net = TrainNet::he_init(Architecture::toy(2 * cfg.preproc.windows()),
                                   derive_seed(cfg.master_seed, 0x11e7));
  const auto history = train(net, samples, cfg.train.opt);

  fs::create_directories(cfg.out_dir);
  io::write_checkpoint(ckpt, net, hash);
  io::write_training_log_csv(cfg.out_dir / "training_log.csv", history);
  manifest.add(ckpt);
  manifest.add(cfg.out_dir / "training_log.csv");
  return ckpt;
}

inline std::vector<io::DetectionRow> detect_classical(const ExperimentConfig& cfg,
                                                      const Snapshot& raw, int index) {
  Snapshot s = raw;
  if (cfg.preproc.clutter_filter) s.y = clutter_filter(s.y);
  std::vector<io::DetectionRow> rows;
  for (const Detection& d : detect(s, cfg.detector))
    rows.push_back({index, d.tau_hat, d.alpha_hat, d.gamma_hat.real(), d.gamma_hat.imag(), d.score});
  return rows;
}

inline std::vector<io::DetectionRow> detect_neural(const ExperimentConfig& cfg,
                                                   const TrainNet& net, const Snapshot& s,
                                                   int index) {
  const FeatureTensor ft = delay_doppler_map(s.y, s.grid, cfg.preproc);
  const RMatrix heatmap =
      forward(net, to_input<float>(ft), cfg.preproc.n_tau, cfg.preproc.n_alpha);
  const auto etas = extract_peaks(heatmap, cfg.train.peak_threshold, ft.tau_axis, ft.alpha_axis);

  std::vector<Complex> gammas(etas.size(), Complex(0, 0));
  if (!etas.empty()) {
    try {
      gammas = ls_amplitudes(s.y, s.grid, etas);
    } catch (const NumericError&) {
      // collapsed peaks: fall back to independent single-atom projections
      for (std::size_t p = 0; p < etas.size(); ++p)
        gammas[p] = ls_amplitudes(s.y, s.grid, {etas[p]})[0];
    }
  }
  const double tau_step = ft.tau_axis(1) - ft.tau_axis(0);
  const double alpha_step = ft.alpha_axis(1) - ft.alpha_axis(0);
  std::vector<io::DetectionRow> rows;
  for (std::size_t p = 0; p < etas.size(); ++p) {
    const int bi = std::clamp<int>(static_cast<int>(std::lround((etas[p].first - ft.tau_axis(0)) / tau_step)),
                                   0, cfg.preproc.n_tau - 1);
    const int bj = std::clamp<int>(
        static_cast<int>(std::lround((etas[p].second - ft.alpha_axis(0)) / alpha_step)), 0,
        cfg.preproc.n_alpha - 1);
    rows.push_back({index, etas[p].first, etas[p].second, gammas[p].real(), gammas[p].imag(),
                    heatmap(bi, bj)});
  }
  return rows;
}

// Runs one backend over a dataset directory and writes a detections CSV.
inline fs::path cmd_detect(const ExperimentConfig& cfg, const fs::path& dataset_dir,
                           const std::string& backend, RunManifest& manifest) {
  StageTimer timer(manifest, "detect." + backend);
  const int count = count_snapshots(dataset_dir);

  std::optional<TrainNet> net;
  if (backend == "neural") {
    const fs::path ckpt = cfg.out_dir / "model.nnp1";
    if (!fs::exists(ckpt))
      throw DataError("neural backend requires a checkpoint; run the train stage first (missing " +
                      ckpt.string() + ")");
    net = io::read_checkpoint<float>(ckpt);
  } else if (backend != "classical") {
    throw ConfigError("unknown backend: " + backend);
  }

  std::vector<io::DetectionRow> rows;
  for (int i = 0; i < count; ++i) {
    const Snapshot s = io::read_snapshot(snapshot_path(dataset_dir, i));
    const auto r = net ? detect_neural(cfg, *net, s, i) : detect_classical(cfg, s, i);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  const fs::path out = cfg.out_dir / ("detections_" + backend + ".csv");
  fs::create_directories(cfg.out_dir);
  io::write_detections_csv(out, rows);
  manifest.add(out);
  return out;
}

// Pools labeled targets over all snapshots: each (snapshot, target) pair is
// one measurement; estimates are assigned per-target by the groundtruth
// filter, with double assignments counted.
struct PooledEval {
  EvalReport report;
  int double_assignments = 0;
};

inline PooledEval evaluate_against_labels(const ExperimentConfig& cfg, const fs::path& dataset_dir,
                                          const std::vector<io::DetectionRow>& detections) {
  const int count = count_snapshots(dataset_dir);
  std::map<int, std::vector<std::pair<double, double>>> per_snapshot;
  for (const auto& r : detections) {
    if (r.snapshot_index < 0 || r.snapshot_index >= count)
      throw DataError("detections reference snapshot " + std::to_string(r.snapshot_index) +
                      " outside the dataset (0.." + std::to_string(count - 1) + ")");
    per_snapshot[r.snapshot_index].emplace_back(r.tau_s, r.alpha_hz);
  }

  PooledEval out;
  std::vector<std::pair<std::pair<double, double>, std::pair<double, double>>> assigned;
  for (int i = 0; i < count; ++i) {
    Snapshot s = io::read_snapshot(snapshot_path(dataset_dir, i));
    io::read_label(label_path(dataset_dir, i), s);
    const auto estimates = per_snapshot.count(i) ? per_snapshot[i]
                                                 : std::vector<std::pair<double, double>>{};
    std::vector<std::pair<double, double>> used;
    for (const auto& gt : label_etas(*s.label, cfg.preproc)) {
      auto pick = groundtruth_filter(estimates, gt, cfg.eval);
      out.report.assignments.push_back(pick);
      ++out.report.n_meas;
      if (pick) {
        for (const auto& u : used)
          if (u == *pick) ++out.double_assignments;
        used.push_back(*pick);
        assigned.emplace_back(*pick, gt);
      } else {
        ++out.report.n_empty;
      }
    }
  }
  if (out.report.n_meas == 0) throw DataError("evaluate: dataset has no labeled targets");
  out.report.p_d = detection_probability(out.report.assignments);
  if (!assigned.empty())
    std::tie(out.report.rmse_tau, out.report.rmse_alpha) = rmse(assigned);
  return out;
}

// Evaluates a detections CSV against the dataset labels and writes report
// files plus the max-hold background map.
inline EvalReport cmd_eval(const ExperimentConfig& cfg, const fs::path& detections_csv,
                           const fs::path& dataset_dir, RunManifest& manifest,
                           const std::string& tag = "eval") {
  StageTimer timer(manifest, tag);
  const auto detections = io::read_detections_csv(detections_csv);
  const PooledEval pooled = evaluate_against_labels(cfg, dataset_dir, detections);

  // max-hold over rectangular-window magnitude maps
  PreprocConfig map_cfg = cfg.preproc;
  map_cfg.rect_window = true;
  const int count = count_snapshots(dataset_dir);
  std::vector<RMatrix> mags;
  for (int i = 0; i < count; ++i) {
    const Snapshot s = io::read_snapshot(snapshot_path(dataset_dir, i));
    const CMatrix y = map_cfg.clutter_filter ? clutter_filter(s.y) : s.y;
    mags.push_back(delay_doppler_maps(y, s.grid, map_cfg)[0].cwiseAbs());
  }
  const RMatrix hold = max_hold(mags);
  const SamplingGrid& grid = io::read_snapshot(snapshot_path(dataset_dir, 0)).grid;

  fs::create_directories(cfg.out_dir);
  const std::vector<std::pair<std::string, EvalReport>> rows = {{tag, pooled.report}};
  io::write_eval_csv(cfg.out_dir / (tag + "_report.csv"), rows);
  {
    auto f = io::detail::open_out(cfg.out_dir / (tag + "_report.txt"), false);
    f << io::format_eval_report(rows);
    if (pooled.double_assignments > 0)
      f << "warning: " << pooled.double_assignments << " double-assigned estimates\n";
  }
  io::write_map(cfg.out_dir / (tag + "_maxhold.ftn1"), hold, tau_axis_for(grid, map_cfg),
                alpha_axis_for(grid, map_cfg), config_hash(cfg));
  io::write_pgm(cfg.out_dir / (tag + "_maxhold.pgm"),
                hold.cwiseMax(map_cfg.epsilon_log).array().log10().matrix());
  manifest.add(cfg.out_dir / (tag + "_report.csv"));
  manifest.add(cfg.out_dir / (tag + "_report.txt"));
  manifest.add(cfg.out_dir / (tag + "_maxhold.ftn1"));
  manifest.add(cfg.out_dir / (tag + "_maxhold.pgm"));
  return pooled.report;
}

}  // namespace ddsense
