#include "coa/reward.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "coa/text.hpp"

namespace coa {

Vocabulary::Vocabulary(std::string dataset_name, const std::vector<std::string>& entries)
    : dataset_name_(std::move(dataset_name)) {
  entries_.reserve(entries.size());
  for (const auto& e : entries) {
    std::string canon = canonicalize_phrase(e);
    if (canon.empty()) throw std::invalid_argument("vocabulary entries must be non-empty");
    if (std::find(entries_.begin(), entries_.end(), canon) != entries_.end()) {
      throw std::invalid_argument("duplicate vocabulary entry '" + canon + "'");
    }
    entries_.push_back(std::move(canon));
  }
}

std::optional<std::size_t> Vocabulary::index_of(std::string_view phrase) const {
  const std::string canon = canonicalize_phrase(phrase);
  const auto it = std::find(entries_.begin(), entries_.end(), canon);
  if (it == entries_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - entries_.begin());
}

std::optional<std::size_t> expected_vocabulary_size(std::string_view dataset) {
  if (dataset == "endovis2018") return 10;
  if (dataset == "cholect50") return 28;
  return std::nullopt;
}

EntitySet::EntitySet(std::size_t universe, std::vector<std::size_t> members)
    : universe_(universe), members_(std::move(members)) {
  std::sort(members_.begin(), members_.end());
  members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
  if (!members_.empty() && members_.back() >= universe_) {
    throw std::out_of_range("entity index " + std::to_string(members_.back()) +
                            " outside vocabulary of size " + std::to_string(universe_));
  }
}

EntitySet EntitySet::from_phrases(const Vocabulary& vocab, const std::vector<std::string>& phrases) {
  std::vector<std::size_t> idx;
  for (const auto& p : phrases) {
    auto i = vocab.index_of(p);
    if (!i) throw std::invalid_argument("'" + p + "' is not in the vocabulary");
    idx.push_back(*i);
  }
  return EntitySet(vocab.size(), std::move(idx));
}

bool EntitySet::contains(std::size_t index) const {
  return std::binary_search(members_.begin(), members_.end(), index);
}

std::vector<std::string> EntitySet::phrases(const Vocabulary& vocab) const {
  std::vector<std::string> out;
  out.reserve(members_.size());
  for (auto i : members_) out.push_back(vocab[i]);
  return out;
}

std::size_t intersection_size(const EntitySet& a, const EntitySet& b) {
  std::size_t n = 0;
  auto i = a.members().begin();
  auto j = b.members().begin();
  while (i != a.members().end() && j != b.members().end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

std::string_view to_string(TaskMetric m) noexcept { return m == TaskMetric::F1 ? "f1" : "exact_match"; }

std::string_view to_string(GateMode m) noexcept {
  switch (m) {
    case GateMode::Coa: return "coa";
    case GateMode::Cot: return "cot";
    case GateMode::None: return "none";
  }
  return "none";
}

TaskMetric parse_task_metric(std::string_view s) {
  if (s == "f1" || s == "F1") return TaskMetric::F1;
  if (s == "exact_match" || s == "ExactMatch") return TaskMetric::ExactMatch;
  throw std::invalid_argument("task metric must be 'f1' or 'exact_match', got '" + std::string(s) + "'");
}

GateMode parse_gate_mode(std::string_view s) {
  if (s == "coa") return GateMode::Coa;
  if (s == "cot") return GateMode::Cot;
  if (s == "none") return GateMode::None;
  throw std::invalid_argument("format mode must be 'coa', 'cot' or 'none', got '" + std::string(s) + "'");
}

EntitySet extract_entities(std::string_view answer_text, const Vocabulary& vocab) {
  auto hits = find_phrases(answer_text, vocab.entries());
  std::stable_sort(hits.begin(), hits.end(), [](const PhraseHit& a, const PhraseHit& b) {
    const auto la = a.span.end - a.span.begin;
    const auto lb = b.span.end - b.span.begin;
    if (la != lb) return la > lb;
    return a.span.begin < b.span.begin;
  });
  std::vector<Span> taken;
  std::vector<std::size_t> found;
  for (const auto& h : hits) {
    const bool overlaps = std::any_of(taken.begin(), taken.end(), [&](const Span& s) {
      return h.span.begin < s.end && s.begin < h.span.end;
    });
    if (overlaps) continue;
    taken.push_back(h.span);
    found.push_back(h.phrase_index);
  }
  return EntitySet(vocab.size(), std::move(found));
}

double task_reward(const EntitySet& pred, const EntitySet& gt, TaskMetric metric) {
  if (pred.universe() != gt.universe()) {
    throw std::invalid_argument("prediction and ground truth use different vocabularies");
  }
  if (metric == TaskMetric::ExactMatch) return pred == gt ? 1.0 : 0.0;
  if (pred.empty() && gt.empty()) return 1.0;
  const double hits = static_cast<double>(intersection_size(pred, gt));
  return 2.0 * hits / static_cast<double>(pred.size() + gt.size());
}

ScoredResponse score_response(std::string_view response_text, const EntitySet& gt,
                              const RewardSpec& spec) {
  ScoredResponse scored;
  std::string answer;
  if (spec.format_mode == GateMode::None) {
    answer = std::string(response_text);
  } else {
    ParseOptions opts;
    opts.mode = spec.format_mode == GateMode::Cot ? FormatMode::Cot : FormatMode::Coa;
    auto parsed = parse_coa(response_text, opts);
    if (!parsed) {
      scored.pred = EntitySet(spec.vocabulary.size(), {});
      return scored;
    }
    answer = std::move(parsed.response->answer);
  }
  scored.format_valid = true;
  scored.pred = extract_entities(answer, spec.vocabulary);
  scored.reward = task_reward(scored.pred, gt, spec.task_metric);
  return scored;
}

double composite_reward(std::string_view response_text, const EntitySet& gt, const RewardSpec& spec) {
  return score_response(response_text, gt, spec).reward;
}

}  // namespace coa
