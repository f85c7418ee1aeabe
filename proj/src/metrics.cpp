#include "dadaquant/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dadaquant {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T, typename Fmt>
std::string join(const std::vector<T>& v, Fmt fmt) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += fmt(v[i]);
  }
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

constexpr const char* kCsvHeader =
    "round,clients,levels,bytes,total_bytes,ghat,gsmooth,test_accuracy,test_loss";

}  // namespace

std::string round_log_csv(std::span<const RoundLog> logs) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const RoundLog& lg : logs) {
    out += std::to_string(lg.round);
    out += ',';
    out += join(lg.clients, [](std::uint32_t v) { return std::to_string(v); });
    out += ',';
    out += join(lg.levels, [](std::uint32_t v) { return std::to_string(v); });
    out += ',';
    out += join(lg.bytes, [](std::uint64_t v) { return std::to_string(v); });
    out += ',';
    out += std::to_string(lg.total_bytes);
    out += ',';
    out += fmt_double(lg.ghat);
    out += ',';
    out += fmt_double(lg.gsmooth);
    out += ',';
    if (lg.evaluated()) {
      out += fmt_double(lg.test_accuracy);
      out += ',';
      out += fmt_double(lg.test_loss);
    } else {
      out += ',';
    }
    out += '\n';
  }
  return out;
}

void write_round_logs(const std::string& path, std::span<const RoundLog> logs) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open CSV for writing: " + path);
  os << round_log_csv(logs);
  if (!os) throw std::runtime_error("failed writing CSV: " + path);
}

std::vector<RoundLog> read_round_logs(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open CSV: " + path);
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) {
    throw std::runtime_error("unrecognized CSV header in " + path);
  }
  std::vector<RoundLog> logs;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> cols = split(line, ',');
    if (cols.size() != 9) throw std::runtime_error("malformed CSV row in " + path);
    RoundLog lg;
    lg.round = static_cast<std::uint32_t>(std::stoul(cols[0]));
    if (!cols[1].empty()) {
      for (const auto& s : split(cols[1], ';')) {
        lg.clients.push_back(static_cast<std::uint32_t>(std::stoul(s)));
      }
    }
    if (!cols[2].empty()) {
      for (const auto& s : split(cols[2], ';')) {
        lg.levels.push_back(static_cast<std::uint32_t>(std::stoul(s)));
      }
    }
    if (!cols[3].empty()) {
      for (const auto& s : split(cols[3], ';')) lg.bytes.push_back(std::stoull(s));
    }
    lg.total_bytes = std::stoull(cols[4]);
    lg.ghat = std::stod(cols[5]);
    lg.gsmooth = std::stod(cols[6]);
    if (!cols[7].empty()) {
      lg.test_accuracy = std::stod(cols[7]);
      lg.test_loss = std::stod(cols[8]);
    }
    logs.push_back(std::move(lg));
  }
  return logs;
}

RunResult summarize_run(std::uint64_t seed, std::vector<RoundLog> logs) {
  RunResult r;
  r.seed = seed;
  r.total_bytes = 0;
  r.best_accuracy = 0.0;
  r.final_accuracy = 0.0;
  for (const RoundLog& lg : logs) {
    r.total_bytes += lg.total_bytes;
    if (lg.evaluated()) {
      r.best_accuracy = std::max(r.best_accuracy, lg.test_accuracy);
      r.final_accuracy = lg.test_accuracy;
    }
  }
  r.logs = std::move(logs);
  return r;
}

ExperimentReport aggregate_runs(std::vector<RunResult> runs, double uncompressed_mean_bytes,
                                double qsgd_mean_bytes) {
  if (runs.empty()) throw std::invalid_argument("aggregate_runs: no runs");
  ExperimentReport rep;
  double best_sum = 0.0, final_sum = 0.0, bytes_sum = 0.0;
  for (const RunResult& r : runs) {
    best_sum += r.best_accuracy;
    final_sum += r.final_accuracy;
    bytes_sum += static_cast<double>(r.total_bytes);
  }
  const double n = static_cast<double>(runs.size());
  rep.mean_best_accuracy = best_sum / n;
  rep.mean_final_accuracy = final_sum / n;
  rep.mean_total_bytes = bytes_sum / n;
  double ss = 0.0;
  for (const RunResult& r : runs) {
    const double d = r.best_accuracy - rep.mean_best_accuracy;
    ss += d * d;
  }
  rep.std_best_accuracy = runs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  if (uncompressed_mean_bytes > 0.0) {
    rep.factor_vs_uncompressed = uncompressed_mean_bytes / rep.mean_total_bytes;
  }
  if (qsgd_mean_bytes > 0.0) {
    rep.factor_vs_qsgd = qsgd_mean_bytes / rep.mean_total_bytes;
  }
  rep.runs = std::move(runs);
  return rep;
}

ExperimentReport run_experiment(const RunSpec& spec, const FederatedDataset& ds) {
  std::vector<RunResult> runs;
  runs.reserve(spec.seeds.size());
  for (std::uint64_t seed : spec.seeds) {
    TrainingConfig cfg = spec.train;
    cfg.seed = seed;
    runs.push_back(summarize_run(seed, run_training(cfg, ds)));
  }
  return aggregate_runs(std::move(runs));
}

std::string experiment_summary(const ExperimentReport& report, const std::string& label) {
  std::ostringstream os;
  os << "experiment: " << label << "\n";
  os << "seeds: " << report.runs.size() << "\n";
  for (const RunResult& r : report.runs) {
    os << "  seed " << r.seed << ": best acc " << fmt_double(r.best_accuracy) << ", final acc "
       << fmt_double(r.final_accuracy) << ", uplink bytes " << r.total_bytes << "\n";
  }
  os << "best accuracy: mean " << fmt_double(report.mean_best_accuracy) << " stddev "
     << fmt_double(report.std_best_accuracy) << "\n";
  os << "uplink bytes: mean " << fmt_double(report.mean_total_bytes) << "\n";
  if (report.factor_vs_uncompressed > 0.0) {
    os << "compression vs uncompressed: " << fmt_double(report.factor_vs_uncompressed) << "x\n";
  }
  if (report.factor_vs_qsgd > 0.0) {
    os << "compression vs static QSGD: " << fmt_double(report.factor_vs_qsgd) << "x\n";
  }
  return os.str();
}

std::vector<std::pair<double, double>> pareto_curve(std::span<const RunResult> runs) {
  if (runs.empty()) throw std::invalid_argument("pareto_curve: no runs");
  std::vector<std::vector<std::pair<double, double>>> per_run;
  per_run.reserve(runs.size());
  for (const RunResult& r : runs) {
    std::vector<std::pair<double, double>> pts;
    double cum = 0.0;
    double best = 0.0;
    for (const RoundLog& lg : r.logs) {
      cum += static_cast<double>(lg.total_bytes);
      if (lg.evaluated()) {
        best = std::max(best, lg.test_accuracy);
        pts.emplace_back(cum, best);
      }
    }
    if (pts.empty()) throw std::invalid_argument("pareto_curve: run has no evaluations");
    if (!per_run.empty() && pts.size() != per_run.front().size()) {
      throw std::invalid_argument("pareto_curve: runs have mismatched evaluation schedules");
    }
    per_run.push_back(std::move(pts));
  }
  std::vector<std::pair<double, double>> avg(per_run.front().size(), {0.0, 0.0});
  for (const auto& pts : per_run) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
      avg[i].first += pts[i].first;
      avg[i].second += pts[i].second;
    }
  }
  const double n = static_cast<double>(per_run.size());
  for (auto& p : avg) {
    p.first /= n;
    p.second /= n;
  }
  return avg;
}

double curve_accuracy_at(std::span<const std::pair<double, double>> curve, double budget) {
  double acc = 0.0;
  for (const auto& [bytes, a] : curve) {
    if (bytes <= budget) {
      acc = a;
    } else {
      break;
    }
  }
  return acc;
}

GridsearchResult gridsearch_static_q(const std::function<double(std::uint32_t)>& accuracy_of_q,
                                     double uncompressed_mean, std::uint32_t q_cap) {
  GridsearchResult res;
  for (std::uint64_t q = 1; q <= q_cap; q *= 2) {
    const double acc = accuracy_of_q(static_cast<std::uint32_t>(q));
    res.tried.emplace_back(static_cast<std::uint32_t>(q), acc);
    if (acc >= uncompressed_mean) {
      res.q = static_cast<std::uint32_t>(q);
      res.found = true;
      return res;
    }
  }
  res.q = res.tried.back().first;
  res.found = false;
  return res;
}

}  // namespace dadaquant
