#pragma once

// Verifiable rewards over a closed entity vocabulary, plus the format gate:
// a response that does not conform to the configured structure scores 0,
// otherwise it scores the task metric of its answer section.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "coa/format.hpp"

namespace coa {

class Vocabulary {
 public:
  Vocabulary() = default;
  // Canonicalizes entries; throws std::invalid_argument on empty or duplicate entries.
  Vocabulary(std::string dataset_name, const std::vector<std::string>& entries);

  const std::string& dataset_name() const noexcept { return dataset_name_; }
  const std::vector<std::string>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  const std::string& operator[](std::size_t i) const { return entries_.at(i); }

  std::optional<std::size_t> index_of(std::string_view phrase) const;

  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;

 private:
  std::string dataset_name_;
  std::vector<std::string> entries_;
};

// Expected class count for the known benchmark datasets, nullopt otherwise.
std::optional<std::size_t> expected_vocabulary_size(std::string_view dataset);

/// A set of vocabulary indices, sorted and unique.
class EntitySet {
 public:
  EntitySet() = default;
  EntitySet(std::size_t universe, std::vector<std::size_t> members);

  static EntitySet from_phrases(const Vocabulary& vocab, const std::vector<std::string>& phrases);

  std::size_t universe() const noexcept { return universe_; }
  const std::vector<std::size_t>& members() const noexcept { return members_; }
  std::size_t size() const noexcept { return members_.size(); }
  bool empty() const noexcept { return members_.empty(); }
  bool contains(std::size_t index) const;

  std::vector<std::string> phrases(const Vocabulary& vocab) const;

  friend bool operator==(const EntitySet&, const EntitySet&) = default;

 private:
  std::size_t universe_ = 0;
  std::vector<std::size_t> members_;
};

std::size_t intersection_size(const EntitySet& a, const EntitySet& b);

enum class TaskMetric { F1, ExactMatch };
enum class GateMode { Coa, Cot, None };

std::string_view to_string(TaskMetric m) noexcept;
std::string_view to_string(GateMode m) noexcept;
TaskMetric parse_task_metric(std::string_view s);
GateMode parse_gate_mode(std::string_view s);

struct RewardSpec {
  TaskMetric task_metric = TaskMetric::F1;
  GateMode format_mode = GateMode::Coa;
  Vocabulary vocabulary;
};

// Case-insensitive, word-boundary, longest-match-wins scan.
EntitySet extract_entities(std::string_view answer_text, const Vocabulary& vocab);

// Throws std::invalid_argument when the two sets come from different universes.
double task_reward(const EntitySet& pred, const EntitySet& gt, TaskMetric metric);

struct ScoredResponse {
  double reward = 0.0;
  bool format_valid = false;
  EntitySet pred;
};

ScoredResponse score_response(std::string_view response_text, const EntitySet& gt,
                              const RewardSpec& spec);

double composite_reward(std::string_view response_text, const EntitySet& gt, const RewardSpec& spec);

}  // namespace coa
