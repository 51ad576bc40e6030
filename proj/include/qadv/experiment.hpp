#pragma once

// Reproduction harness for the synthetic single-qubit experiment: per
// training size T, Monte Carlo generalization errors of a POVM, Rademacher
// uniform deviation bounds, and the closed-form bounds.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qadv/attack.hpp"
#include "qadv/bounds.hpp"
#include "qadv/embed.hpp"

namespace qadv::experiment {

enum class PovmSource { fixed_computational, trained, file };

std::string to_string(PovmSource s);

struct McConfig {
  std::size_t num_datasets = 200;           // generalization-error draws per T
  std::size_t rademacher_datasets = 200;    // dataset draws for the Rademacher estimate
  std::size_t rademacher_sigma = 512;       // sign vectors per dataset when T > 16
  int random_starts = 16;
  int screen_directions = 64;
  int polish = 3;
  std::optional<std::uint64_t> seed;
};

struct TrainSettings {
  std::size_t train_T = 200;  // size of the independent training set
  int max_outer_iters = 200;
  double step_size = 0.1;
  int num_restarts = 3;
};

struct OutputPaths {
  std::string csv;
  std::string svg;
  std::string json;
};

struct ExperimentConfig {
  embed::EmbeddingSpec embedding;
  embed::DataSpec data;
  PovmSource povm_source = PovmSource::fixed_computational;
  std::string povm_path;
  TrainSettings training;
  std::vector<long> T_grid{25, 50, 100, 200, 400, 800};
  attack::AttackSpec train_attack;
  attack::AttackSpec test_attack;
  double delta = 0.8;
  bounds::LogBase log_base = bounds::LogBase::natural;
  std::optional<double> Delta_override;
  McConfig mc;
  OutputPaths outputs;

  void validate() const;
};

// Parses TOML text. Unknown keys are rejected.
ExperimentConfig parse_config(std::string_view toml_text);
// Missing or unreadable files raise ValidationError.
ExperimentConfig load_config(const std::string& path);

nlohmann::json config_to_json(const ExperimentConfig& config);

struct ExperimentRow {
  long T = 0;
  double g_clean = 0.0;
  double g_clean_stderr = 0.0;
  double g_adv = 0.0;
  double g_adv_stderr = 0.0;
  double udb_clean = 0.0;
  double udb_adv = 0.0;
  double bound_banchi = 0.0;
  double bound_adv = 0.0;
  double bound_general = 0.0;
  double I2 = 0.0;
  double Delta = 0.0;
  bool valid_regime = false;
  // Not in the CSV; kept for the JSON report.
  double rademacher_clean = 0.0;
  double rademacher_clean_stderr = 0.0;
  double rademacher_adv = 0.0;
  double rademacher_adv_stderr = 0.0;
  double rademacher_gap = 0.0;  // paired adversarial - clean
  double rademacher_gap_stderr = 0.0;
  double mean_g_clean = 0.0;  // signed mean, ~0 for a fixed POVM
  double mean_g_adv = 0.0;
};

struct ExperimentResult {
  std::vector<ExperimentRow> rows;
  double I2 = 0.0;
  double Delta_computed = 0.0;
  double Delta_used = 0.0;
  double population_clean = 0.0;
  double population_adv = 0.0;
  nlohmann::json povm;
  std::uint64_t seed = 0;
};

// seed overrides config.mc.seed; one of them must be present.
ExperimentResult run_experiment(const ExperimentConfig& config, std::optional<std::uint64_t> seed = std::nullopt);

inline constexpr const char* csv_header =
    "T,g_clean,g_clean_stderr,g_adv,g_adv_stderr,udb_clean,udb_adv,bound_banchi,bound_adv,bound_general,I2,"
    "Delta,valid_regime";

std::string to_csv(const ExperimentResult& result);
nlohmann::json to_json(const ExperimentConfig& config, const ExperimentResult& result);

// Opens (and truncates) every configured output so path problems surface
// before any computation. Throws ValidationError naming the bad path.
void check_outputs_writable(const OutputPaths& outputs);

// Writes CSV, JSON and SVG (the SVG rendered from the CSV text).
void write_outputs(const ExperimentConfig& config, const ExperimentResult& result);

}  // namespace qadv::experiment
