#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fplab {

inline constexpr const char* kArtifactVersion = "fplab-0.1.0";
inline constexpr int kConfigSchemaVersion = 1;

// Flat key = value experiment description; one file per experiment. All
// defaults are materialized before hashing so persisted records are
// self-contained.
class ExperimentConfig {
 public:
  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::string& path);

  const std::string& command() const { return command_; }
  bool has(const std::string& key) const { return kv_.count(key) > 0; }
  const std::map<std::string, std::string>& entries() const { return kv_; }

  std::string get_string(const std::string& key, const std::optional<std::string>& def = {}) const;
  double get_double(const std::string& key, std::optional<double> def = {}) const;
  long get_long(const std::string& key, std::optional<long> def = {}) const;
  uint64_t get_seed(const std::string& key, std::optional<uint64_t> def = {}) const;
  std::vector<int> get_int_list(const std::string& key, const std::string& def = "") const;
  std::vector<double> get_double_list(const std::string& key, const std::string& def = "") const;

  void set(const std::string& key, const std::string& value) { kv_[key] = value; }
  void set_command(const std::string& c) { command_ = c; }

  // FNV-1a over sorted key=value pairs; independent of key order in the file.
  std::string hash() const;

 private:
  std::string command_;
  std::map<std::string, std::string> kv_;
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct RunOptions {
  std::string out_dir = "out";
  std::optional<uint64_t> seed_override;
  int jobs = 1;
};

// Executes the experiment named by config.command(); writes metrics.jsonl,
// CSV tables and SVG plots under out_dir. Returns the process exit code:
// 0 ok, 2 config error, 3 diagnostics failure (non-mixing chains).
int run_experiment(const ExperimentConfig& config, const RunOptions& options);

struct ReplayOptions {
  std::string results_path;
  std::optional<std::string> config_hash;  // restrict to one recorded run
  std::optional<uint64_t> seed_override;   // different seed: statistical check
  std::string out_dir = "replay_out";
  int jobs = 1;
};

// Re-runs recorded experiments from their embedded configs and verifies the
// metrics: exact equality with the recorded seed, 3-sigma agreement otherwise.
int replay_results(const ReplayOptions& options);

// Renders the convergence plot for a CSV table written by run_experiment;
// plots never need any state besides the persisted files.
void render_svg_from_csv(const std::string& csv_path, const std::string& svg_path);

}  // namespace fplab
