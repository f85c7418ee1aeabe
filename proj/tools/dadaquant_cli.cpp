#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "dadaquant/config.hpp"
#include "dadaquant/metrics.hpp"
#include "dadaquant/sim.hpp"
#include "dadaquant/synthetic.hpp"

namespace {

using namespace dadaquant;

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << text;
}

RunSpec load_spec(const std::string& config_path, const std::vector<std::string>& overrides) {
  ConfigFile cfg = ConfigFile::parse_file(config_path);
  for (const std::string& o : overrides) cfg.set_override(o);
  return RunSpec::from_config(cfg);
}

FederatedDataset load_or_fail(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    throw std::runtime_error("dataset file does not exist: " + path +
                             " (generate one with `dadaquant gen-data`)");
  }
  return load_dataset(path);
}

int cmd_gen_data(const SyntheticConfig& scfg, const std::string& out) {
  const FederatedDataset ds = generate_synthetic(scfg);
  save_dataset(ds, out);
  const std::string stats = dataset_stats(ds);
  write_text(out + ".stats.txt", stats);
  std::cout << "wrote " << out << "\n" << stats;
  return 0;
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides) {
  const RunSpec spec = load_spec(config_path, overrides);
  const FederatedDataset ds = load_or_fail(spec.dataset_path);
  spec.train.validate(ds.clients.size());

  const ExperimentReport report = run_experiment(spec, ds);
  for (const RunResult& r : report.runs) {
    const std::string path = spec.out_prefix + "_seed" + std::to_string(r.seed) + ".csv";
    write_round_logs(path, r.logs);
    std::cout << "wrote " << path << "\n";
  }
  const std::string label = std::string(to_string(spec.train.compressor)) + "/" +
                            to_string(spec.train.controller);
  const std::string summary = experiment_summary(report, label);
  write_text(spec.out_prefix + "_summary.txt", summary);
  std::cout << summary;
  return 0;
}

int cmd_gridsearch(const std::string& config_path, const std::vector<std::string>& overrides) {
  const RunSpec spec = load_spec(config_path, overrides);
  const FederatedDataset ds = load_or_fail(spec.dataset_path);

  RunSpec unc = spec;
  unc.train.compressor = Compressor::None;
  unc.train.controller = Controller::None;
  std::cout << "running uncompressed baseline (" << unc.seeds.size() << " seeds)...\n";
  const ExperimentReport base = run_experiment(unc, ds);
  std::cout << "uncompressed mean best accuracy: " << base.mean_best_accuracy << "\n";

  const GridsearchResult res = gridsearch_static_q(
      [&](std::uint32_t q) {
        RunSpec s = spec;
        s.train.compressor = Compressor::Qsgd;
        s.train.controller = Controller::Static;
        s.train.q = q;
        std::cout << "trying q = " << q << "...\n";
        const ExperimentReport rep = run_experiment(s, ds);
        std::cout << "  mean best accuracy: " << rep.mean_best_accuracy << "\n";
        return rep.mean_best_accuracy;
      },
      base.mean_best_accuracy);

  std::ostringstream os;
  os << "uncompressed mean best accuracy: " << base.mean_best_accuracy << "\n";
  for (const auto& [q, acc] : res.tried) os << "q " << q << ": mean best accuracy " << acc << "\n";
  if (!res.found) os << "no level matched the uncompressed accuracy; largest tried returned\n";
  os << "chosen q: " << res.q << "\n";
  write_text(spec.out_prefix + "_gridsearch.txt", os.str());
  std::cout << os.str();
  return res.found ? 0 : 2;
}

int cmd_report(const std::vector<std::string>& run_csvs,
               const std::vector<std::string>& baseline_csvs,
               const std::vector<std::string>& qsgd_csvs, const std::string& out_prefix) {
  auto load_runs = [](const std::vector<std::string>& paths) {
    std::vector<RunResult> runs;
    std::uint64_t i = 0;
    for (const std::string& p : paths) runs.push_back(summarize_run(i++, read_round_logs(p)));
    return runs;
  };
  auto mean_bytes = [](const std::vector<RunResult>& runs) {
    double total = 0.0;
    for (const RunResult& r : runs) total += static_cast<double>(r.total_bytes);
    return total / static_cast<double>(runs.size());
  };

  std::vector<RunResult> runs = load_runs(run_csvs);
  double base_bytes = -1.0, qsgd_bytes = -1.0;
  if (!baseline_csvs.empty()) base_bytes = mean_bytes(load_runs(baseline_csvs));
  if (!qsgd_csvs.empty()) qsgd_bytes = mean_bytes(load_runs(qsgd_csvs));

  const ExperimentReport report = aggregate_runs(std::move(runs), base_bytes, qsgd_bytes);
  const std::string summary = experiment_summary(report, "report");
  std::cout << summary;
  write_text(out_prefix + "_summary.txt", summary);

  const auto curve = pareto_curve(report.runs);
  std::ostringstream os;
  os << "cumulative_bytes,best_accuracy\n";
  for (const auto& [bytes, acc] : curve) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", bytes, acc);
    os << buf;
  }
  write_text(out_prefix + "_pareto.csv", os.str());
  std::cout << "wrote " << out_prefix << "_pareto.csv (" << curve.size() << " points)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DAdaQuant: doubly-adaptive quantization for federated uplink compression"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic federated dataset");
  SyntheticConfig scfg;
  std::string gen_out;
  gen->add_option("--out", gen_out, "output dataset file")->required();
  gen->add_option("--alpha", scfg.alpha, "model heterogeneity variance");
  gen->add_option("--beta", scfg.beta, "feature heterogeneity variance");
  gen->add_option("--clients", scfg.clients, "number of clients");
  gen->add_option("--seed", scfg.seed, "generator seed");
  gen->add_option("--count-log-mean", scfg.count_log_mean, "lognormal mu of sample counts");
  gen->add_option("--count-log-sigma", scfg.count_log_sigma, "lognormal sigma of sample counts");
  gen->add_option("--count-offset", scfg.count_offset, "minimum samples per client");
  gen->add_option("--train-fraction", scfg.train_fraction, "training split fraction");

  auto* train = app.add_subcommand("train", "run a training experiment from a config file");
  std::string train_cfg;
  std::vector<std::string> train_overrides;
  train->add_option("--config", train_cfg, "config file")->required();
  train->add_option("--set", train_overrides, "override, e.g. --set train.rounds=100");

  auto* grid = app.add_subcommand("gridsearch", "pick the lowest static level matching "
                                                "uncompressed accuracy");
  std::string grid_cfg;
  std::vector<std::string> grid_overrides;
  grid->add_option("--config", grid_cfg, "config file")->required();
  grid->add_option("--set", grid_overrides, "override, e.g. --set run.seeds=1,2,3");

  auto* report = app.add_subcommand("report", "summary, compression factors and trade-off "
                                              "curve from run CSVs");
  std::vector<std::string> run_csvs, baseline_csvs, qsgd_csvs;
  std::string report_out = "report";
  report->add_option("--csv", run_csvs, "per-seed run CSVs")->required();
  report->add_option("--baseline", baseline_csvs, "uncompressed per-seed CSVs");
  report->add_option("--qsgd", qsgd_csvs, "static QSGD per-seed CSVs");
  report->add_option("--out", report_out, "output prefix");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_data(scfg, gen_out);
    if (train->parsed()) return cmd_train(train_cfg, train_overrides);
    if (grid->parsed()) return cmd_gridsearch(grid_cfg, grid_overrides);
    if (report->parsed()) return cmd_report(run_csvs, baseline_csvs, qsgd_csvs, report_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
