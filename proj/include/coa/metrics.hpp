#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "coa/reward.hpp"

namespace coa {

struct EvalRecord {
  std::string id;
  EntitySet pred;
  EntitySet gt;
};

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Per-example precision/recall/F1. Both sets empty scores (1, 1, 1); an empty
/// prediction against a non-empty truth scores P = 0, and symmetrically for R.
Prf example_prf(const EntitySet& pred, const EntitySet& gt);

enum class Averaging { Example, Micro };
enum class ClassSet { Present, Full };

struct MetricsOptions {
  Averaging averaging = Averaging::Example;
  ClassSet classes = ClassSet::Present;
};

struct ClassStats {
  std::size_t class_index = 0;
  std::string name;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t support = 0;  // tp + fn
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool included = false;  // counted in f1_cls
};

struct MetricsReport {
  std::size_t n = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double f1_cls = 0.0;
  bool f1_cls_defined = false;  // false when no class is included
  std::size_t included_classes = 0;
  std::vector<ClassStats> per_class;
};

// Overall P/R/F1 follow `options.averaging`. F1_cls is the mean of per-class F1
// over classes seen in any gt or pred set (or all classes with ClassSet::Full);
// per-class zero denominators yield 0. Throws std::invalid_argument on an empty
// record list or sets from a different vocabulary.
MetricsReport aggregate_report(const std::vector<EvalRecord>& records, const Vocabulary& vocab,
                               const MetricsOptions& options = {});

}  // namespace coa
