#pragma once

// Run configuration: a sectioned key/value document ([grpo], [reward], [data],
// [run]) in a TOML subset or JSON. Unknown sections and keys are errors.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "coa/grpo.hpp"
#include "coa/policy.hpp"
#include "coa/reward.hpp"

namespace coa {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parses the TOML subset used by run configs: [section] headers, key = value
// with strings, booleans, integers, floats and single-line arrays, '#' comments.
// Returns {section: {key: value}}.
nlohmann::json parse_toml_subset(std::string_view text);

enum class RunMode { Rlvr, Sft };

std::string_view to_string(RunMode m) noexcept;

struct RewardSection {
  TaskMetric task_metric = TaskMetric::F1;
  GateMode format_mode = GateMode::Coa;
};

struct DataSection {
  std::string path;             // --data overrides
  std::string use_split = "train";  // train | test | all
  std::size_t n_train = 0;      // > 0: resample a train split of this size
  std::size_t n_test = 0;
  std::uint64_t split_seed = 0;
};

struct RunSection {
  std::uint64_t seed = 0;
  RunMode mode = RunMode::Rlvr;
  PolicyKind policy = PolicyKind::SubsetBernoulli;
  std::size_t seq_length = 4;
  double init_logit = 0.0;
  GateMode render_mode = GateMode::Coa;
  double sft_learning_rate = 1e-5;
  std::size_t sft_batch_size = 1;
};

struct RunConfig {
  GrpoConfig grpo;
  RewardSection reward;
  DataSection data;
  RunSection run;

  static RunConfig from_document(const nlohmann::json& doc);
  // .json files are read as JSON, anything else as the TOML subset.
  static RunConfig load(const std::filesystem::path& path);

  // Every field, including defaults; from_document(resolved()) reproduces *this.
  nlohmann::json resolved() const;
};

}  // namespace coa
