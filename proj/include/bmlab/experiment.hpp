#ifndef BMLAB_EXPERIMENT_HPP
#define BMLAB_EXPERIMENT_HPP

#include <map>
#include <string>
#include <vector>

#include "bmlab/types.hpp"

namespace bmlab {

/// One experiment run: a kind, a group, a level schedule and kind-specific
/// parameters. Parsed from `key = value` config files; CLI flags override.
struct ExperimentConfig {
  std::string experiment;
  std::string group = "r:2";
  std::vector<int> levels = {5, 6, 7};
  uint64_t samples = 200000;
  uint64_t seed = 0;
  bool seed_set = false;
  int threads = 1;
  bool strict = false;
  std::string out = "experiment";
  std::map<std::string, std::string> extra;

  static ExperimentConfig from_file(const std::string& path);
  void set(const std::string& key, const std::string& value);
  double num(const std::string& key, double fallback) const;
  long integer(const std::string& key, long fallback) const;
  std::string str(const std::string& key, const std::string& fallback) const;
  std::string canonical() const;  // stable text form, hashed into reports
};

struct RunResult {
  int exit_code = 1;
  std::string csv_path;
  std::string json_path;
  std::string csv_body;
};

/// Executes the experiment over the level schedule: one CSV row per level
/// (frozen column order) plus a JSON metadata file. Exit code 0 iff every
/// row passed its criterion.
RunResult run(const ExperimentConfig& config);

std::vector<std::string> list_experiments();
std::string describe(const std::string& kind);

uint64_t fnv1a64(const std::string& text);

}  // namespace bmlab

#endif
