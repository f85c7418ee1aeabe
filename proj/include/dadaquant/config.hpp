#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include "dadaquant/sim.hpp"

namespace dadaquant {

// INI-style key-value config: `[section]` headers, `key = value` lines,
// `#` comments. Keys are addressed as "section.key". CLI overrides of the
// same form are applied on top of the file.
class ConfigFile {
 public:
  static ConfigFile parse_file(const std::string& path);
  static ConfigFile parse(std::istream& is, const std::string& origin);

  /// Applies "section.key=value"; later overrides win.
  void set_override(const std::string& spec);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  std::string origin_;

  [[noreturn]] void bad_value(const std::string& key, const std::string& expected) const;
};

/// A full experiment: dataset, training configuration, seed list, outputs.
struct RunSpec {
  std::string dataset_path;
  TrainingConfig train;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::string out_prefix = "run";

  /// Builds a RunSpec from a parsed config, rejecting unknown keys and
  /// naming the offending key in every diagnostic.
  static RunSpec from_config(const ConfigFile& cfg);
};

Compressor parse_compressor(const std::string& name);
Controller parse_controller(const std::string& name);

}  // namespace dadaquant
