// Command-line front end for the delay-Doppler sensing pipeline: dataset
// generation, training, detection, evaluation and the replica scenario.

#include <CLI11.hpp>

#include <iostream>

#include "ddsense/replica.hpp"

namespace {

using namespace ddsense;

struct CommonOpts {
  std::string preset = "toy";
  std::optional<fs::path> config_file;
  std::optional<std::uint64_t> seed;
  std::optional<fs::path> out;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--preset", o.preset, "Configuration preset")
      ->check(CLI::IsMember({"toy", "paper"}));
  cmd->add_option("--config", o.config_file, "JSON config overlay file");
  cmd->add_option("--seed", o.seed, "Master seed override");
  cmd->add_option("--out", o.out, "Output directory");
}

ExperimentConfig resolve(const CommonOpts& o) {
  ExperimentConfig cfg = load_config(o.config_file, o.preset);
  if (o.seed) cfg.master_seed = *o.seed;
  if (o.out) cfg.out_dir = *o.out;
  return cfg;
}

void finish(const ExperimentConfig& cfg, RunManifest& manifest) {
  manifest.config_hash = config_hash(cfg);
  fs::create_directories(cfg.out_dir);
  manifest.write(cfg.out_dir / "manifest.json");
}

int run(int argc, char** argv) {
  CLI::App app{"Delay-Doppler sensing pipeline"};
  app.require_subcommand(1);

  CommonOpts opts;
  int count = 100;
  std::string backend = "classical";
  fs::path dataset_dir, detections_csv, report_csv;
  bool force = false;

  auto* generate = app.add_subcommand("generate", "Generate a labeled synthetic dataset");
  add_common(generate, opts);
  generate->add_option("--count", count, "Number of snapshots");

  auto* train_cmd = app.add_subcommand("train", "Train the neural backend on a dataset");
  add_common(train_cmd, opts);
  train_cmd->add_option("--dataset", dataset_dir, "Dataset directory (default <out>/dataset)");
  train_cmd->add_flag("--force", force, "Retrain even when a cached checkpoint matches");

  auto* detect_cmd = app.add_subcommand("detect", "Run a detection backend over a dataset");
  add_common(detect_cmd, opts);
  detect_cmd->add_option("--dataset", dataset_dir, "Dataset directory (default <out>/dataset)");
  detect_cmd->add_option("--backend", backend, "Detection backend")
      ->check(CLI::IsMember({"classical", "neural"}));

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate detections against dataset labels");
  add_common(eval_cmd, opts);
  eval_cmd->add_option("--dataset", dataset_dir, "Dataset directory (default <out>/dataset)");
  eval_cmd->add_option("--detections", detections_csv, "Detections CSV file")->required();

  auto* replica_cmd = app.add_subcommand("replica", "Run the scripted three-link scenario");
  add_common(replica_cmd, opts);

  auto* report_cmd = app.add_subcommand("report", "Print an evaluation report CSV as a table");
  report_cmd->add_option("csv", report_csv, "Report CSV file")->required();

  CLI11_PARSE(app, argc, argv);

  if (report_cmd->parsed()) {
    auto f = io::detail::open_in(report_csv, false);
    std::string line;
    while (std::getline(f, line)) {
      std::replace(line.begin(), line.end(), ',', '\t');
      std::cout << line << "\n";
    }
    return 0;
  }

  ExperimentConfig cfg = resolve(opts);
  RunManifest manifest;
  if (dataset_dir.empty()) dataset_dir = cfg.out_dir / "dataset";

  if (generate->parsed()) {
    cmd_generate(cfg, count, manifest);
    std::cout << "wrote " << count << " snapshots to " << (cfg.out_dir / "dataset").string()
              << "\n";
  } else if (train_cmd->parsed()) {
    const fs::path ckpt = cmd_train(cfg, dataset_dir, manifest, force);
    std::cout << "checkpoint: " << ckpt.string() << "\n";
  } else if (detect_cmd->parsed()) {
    const fs::path out = cmd_detect(cfg, dataset_dir, backend, manifest);
    std::cout << "detections: " << out.string() << "\n";
  } else if (eval_cmd->parsed()) {
    const EvalReport r = cmd_eval(cfg, detections_csv, dataset_dir, manifest);
    std::cout << io::format_eval_report({{"eval", r}});
  } else if (replica_cmd->parsed()) {
    const ReplicaResult r = cmd_replica(cfg, manifest);
    std::cout << "replica run complete; reports in " << cfg.out_dir.string() << "\n";
    for (const auto& link : r.links)
      std::cout << link.name << " uav P_D=" << link.uav.p_d << " road2 P_D=" << link.road2.p_d
                << "\n";
    std::cout << "road2 without clutter filter P_D=" << r.road2_unfiltered.p_d << "\n";
  }

  finish(cfg, manifest);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ddsense::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ddsense::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const ddsense::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  }
}
