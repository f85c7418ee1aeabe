#include "dadaquant/config.hpp"

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace dadaquant {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

const std::set<std::string> kKnownKeys = {
    "version",
    "data.path",
    "train.rounds",
    "train.cohort",
    "train.epochs",
    "train.batch",
    "train.lr",
    "train.mu",
    "train.heterogeneity",
    "train.eval_interval",
    "compress.compressor",
    "compress.controller",
    "compress.q",
    "compress.psi",
    "compress.phi",
    "compress.q_min",
    "compress.q_max",
    "run.seeds",
    "run.out_prefix",
};

}  // namespace

ConfigFile ConfigFile::parse_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file: " + path);
  return parse(is, path);
}

ConfigFile ConfigFile::parse(std::istream& is, const std::string& origin) {
  ConfigFile cfg;
  cfg.origin_ = origin;
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": unterminated section");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) {
        throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": empty section name");
      }
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": empty key");
    }
    cfg.values_[section.empty() ? key : section + "." + key] = value;
  }
  return cfg;
}

void ConfigFile::set_override(const std::string& spec) {
  const std::size_t eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw std::runtime_error("override must look like section.key=value, got: " + spec);
  }
  values_[trim(spec.substr(0, eq))] = trim(spec.substr(eq + 1));
}

bool ConfigFile::has(const std::string& key) const { return values_.count(key) != 0; }

void ConfigFile::bad_value(const std::string& key, const std::string& expected) const {
  throw std::runtime_error("config key '" + key + "' in " + origin_ + ": expected " + expected +
                           ", got '" + values_.at(key) + "'");
}

std::string ConfigFile::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

std::int64_t ConfigFile::get_int(const std::string& key, std::int64_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t used = 0;
    const std::int64_t v = std::stoll(it->second, &used);
    if (used != it->second.size()) bad_value(key, "an integer");
    return v;
  } catch (const std::logic_error&) {
    bad_value(key, "an integer");
  }
}

std::uint64_t ConfigFile::get_u64(const std::string& key, std::uint64_t fallback) const {
  const std::int64_t v = get_int(key, static_cast<std::int64_t>(fallback));
  if (v < 0) bad_value(key, "a nonnegative integer");
  return static_cast<std::uint64_t>(v);
}

double ConfigFile::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) bad_value(key, "a number");
    return v;
  } catch (const std::logic_error&) {
    bad_value(key, "a number");
  }
}

bool ConfigFile::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "on" || v == "1") return true;
  if (v == "false" || v == "off" || v == "0") return false;
  bad_value(key, "a boolean (true/false)");
}

Compressor parse_compressor(const std::string& name) {
  if (name == "none") return Compressor::None;
  if (name == "qsgd") return Compressor::Qsgd;
  if (name == "fedpaq") return Compressor::FedPaq;
  if (name == "fxpq-gzip") return Compressor::FxpqGzip;
  if (name == "fp8") return Compressor::Fp8;
  throw std::runtime_error("unknown compressor '" + name +
                           "' (expected none|qsgd|fedpaq|fxpq-gzip|fp8)");
}

Controller parse_controller(const std::string& name) {
  if (name == "none") return Controller::None;
  if (name == "static") return Controller::Static;
  if (name == "time") return Controller::Time;
  if (name == "client") return Controller::Client;
  if (name == "doubly") return Controller::Doubly;
  if (name == "adaquantfl") return Controller::AdaQuantFl;
  throw std::runtime_error("unknown controller '" + name +
                           "' (expected none|static|time|client|doubly|adaquantfl)");
}

RunSpec RunSpec::from_config(const ConfigFile& cfg) {
  for (const auto& [key, value] : cfg.values()) {
    if (kKnownKeys.count(key) == 0) {
      throw std::runtime_error("unknown config key '" + key + "'");
    }
  }
  if (cfg.get_int("version", 1) != 1) {
    throw std::runtime_error("config key 'version': only version 1 is supported");
  }

  RunSpec spec;
  spec.dataset_path = cfg.get_string("data.path", "");
  if (spec.dataset_path.empty()) {
    throw std::runtime_error("config key 'data.path' is required");
  }

  TrainingConfig& t = spec.train;
  t.rounds = static_cast<std::uint32_t>(cfg.get_u64("train.rounds", t.rounds));
  t.cohort = static_cast<std::uint32_t>(cfg.get_u64("train.cohort", t.cohort));
  t.epochs = static_cast<std::uint32_t>(cfg.get_u64("train.epochs", t.epochs));
  t.batch = static_cast<std::uint32_t>(cfg.get_u64("train.batch", t.batch));
  t.lr = cfg.get_double("train.lr", t.lr);
  t.mu = cfg.get_double("train.mu", t.mu);
  t.heterogeneity = cfg.get_bool("train.heterogeneity", t.heterogeneity);
  t.eval_interval = static_cast<std::uint32_t>(cfg.get_u64("train.eval_interval", t.eval_interval));
  t.compressor = parse_compressor(cfg.get_string("compress.compressor", "none"));
  t.controller = parse_controller(cfg.get_string("compress.controller", "none"));
  t.q = static_cast<std::uint32_t>(cfg.get_u64("compress.q", t.q));
  t.ctrl.psi = cfg.get_double("compress.psi", t.ctrl.psi);
  // the comparison window defaults to a tenth of the round budget
  t.ctrl.phi = static_cast<std::uint32_t>(
      cfg.get_u64("compress.phi", std::max<std::uint64_t>(1, t.rounds / 10)));
  t.ctrl.q_min = static_cast<std::uint32_t>(cfg.get_u64("compress.q_min", 1));
  t.ctrl.q_max = static_cast<std::uint32_t>(cfg.get_u64("compress.q_max", t.q));

  const std::string seeds = cfg.get_string("run.seeds", "1,2,3");
  spec.seeds.clear();
  std::stringstream ss(seeds);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    try {
      spec.seeds.push_back(std::stoull(tok));
    } catch (const std::logic_error&) {
      throw std::runtime_error("config key 'run.seeds': expected comma-separated integers");
    }
  }
  if (spec.seeds.empty()) {
    throw std::runtime_error("config key 'run.seeds': at least one seed is required");
  }
  spec.out_prefix = cfg.get_string("run.out_prefix", spec.out_prefix);
  return spec;
}

}  // namespace dadaquant
