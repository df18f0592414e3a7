#include "coa/data.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "coa/rng.hpp"
#include "coa/text.hpp"

namespace coa {

void validate(const QaRecord& record) {
  if (record.id.empty()) throw std::invalid_argument("record id must be non-empty");
  if (record.split != "train" && record.split != "test") {
    throw std::invalid_argument("record '" + record.id + "' has split '" + record.split +
                                "', expected train or test");
  }
  const Vocabulary vocab = record_vocabulary(record);
  if (auto expected = expected_vocabulary_size(record.dataset); expected && vocab.size() != *expected) {
    throw std::invalid_argument("record '" + record.id + "': dataset " + record.dataset + " needs " +
                                std::to_string(*expected) + " classes, got " + std::to_string(vocab.size()));
  }
  record_answer(record, vocab);
}

Vocabulary record_vocabulary(const QaRecord& record) {
  try {
    return Vocabulary(record.dataset, record.vocabulary);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument("record '" + record.id + "': " + e.what());
  }
}

EntitySet record_answer(const QaRecord& record, const Vocabulary& vocab) {
  try {
    return EntitySet::from_phrases(vocab, record.answer_set);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument("record '" + record.id + "': answer " + e.what());
  }
}

std::string render_question(std::string_view question_template, const Vocabulary& vocab) {
  std::string candidates;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    if (i) candidates += '\n';
    candidates += std::to_string(i + 1) + ". " + vocab[i];
  }
  std::string out;
  std::size_t pos = 0;
  while (pos < question_template.size()) {
    const std::size_t open = question_template.find('{', pos);
    if (open == std::string_view::npos) break;
    out.append(question_template.substr(pos, open - pos));
    const std::size_t close = question_template.find('}', open);
    const auto key = close == std::string_view::npos ? std::string_view{}
                                                     : question_template.substr(open + 1, close - open - 1);
    if (key == "candidates") {
      out += candidates;
    } else if (key == "dataset") {
      out += vocab.dataset_name();
    } else {
      out += '{';
      pos = open + 1;
      continue;
    }
    pos = close + 1;
  }
  if (pos < question_template.size()) out.append(question_template.substr(pos));
  return out;
}

ConversionResult convert_annotations(const std::vector<AnnotationFrame>& raw, const Vocabulary& vocab,
                                     std::string_view question_template) {
  if (vocab.size() == 0) throw std::invalid_argument("vocabulary is empty");
  if (auto expected = expected_vocabulary_size(vocab.dataset_name());
      expected && vocab.size() != *expected) {
    throw std::invalid_argument("dataset " + vocab.dataset_name() + " needs " + std::to_string(*expected) +
                                " classes, vocabulary has " + std::to_string(vocab.size()));
  }
  const std::string question = render_question(question_template, vocab);

  std::vector<const AnnotationFrame*> order;
  order.reserve(raw.size());
  for (const auto& f : raw) order.push_back(&f);
  std::stable_sort(order.begin(), order.end(),
                   [](const AnnotationFrame* a, const AnnotationFrame* b) { return a->frame_id < b->frame_id; });

  ConversionResult result;
  std::set<std::string> seen;
  for (const AnnotationFrame* f : order) {
    if (f->frame_id.empty() || !seen.insert(f->frame_id).second) {
      result.errors.push_back({f->frame_id, {}, f->frame_id.empty() ? "empty frame id" : "duplicate frame id"});
      continue;
    }
    if (f->split && *f->split != "train" && *f->split != "test") {
      result.errors.push_back({f->frame_id, {}, "unknown split '" + *f->split + "'"});
      continue;
    }
    std::vector<bool> present(vocab.size(), false);
    std::vector<std::string> unmapped;
    for (const auto& label : f->labels) {
      if (auto idx = vocab.index_of(label)) {
        present[*idx] = true;
      } else {
        unmapped.push_back(label);
      }
    }
    if (!unmapped.empty()) {
      result.errors.push_back({f->frame_id, unmapped, "labels not in vocabulary"});
      continue;
    }
    QaRecord rec;
    rec.id = f->frame_id;
    rec.image = f->image;
    rec.dataset = vocab.dataset_name();
    rec.question = question;
    rec.vocabulary = vocab.entries();
    for (std::size_t k = 0; k < vocab.size(); ++k) {
      if (present[k]) rec.answer_set.push_back(vocab[k]);
    }
    rec.split = f->split.value_or("train");
    result.records.push_back(std::move(rec));
  }
  return result;
}

SplitResult sample_split(const std::vector<QaRecord>& records, const SplitSpec& spec) {
  if (spec.n_train + spec.n_test > records.size()) {
    throw std::invalid_argument("split needs " + std::to_string(spec.n_train) + " train + " +
                                std::to_string(spec.n_test) + " test records, only " +
                                std::to_string(records.size()) + " available");
  }
  std::vector<std::size_t> idx(records.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng = Rng::substream(spec.seed, 0, hash_string("split"));
  // Partial Fisher-Yates: the first n_train + n_test slots are a uniform sample.
  const std::size_t take = spec.n_train + spec.n_test;
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  std::vector<std::size_t> train(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(spec.n_train));
  std::vector<std::size_t> test(idx.begin() + static_cast<std::ptrdiff_t>(spec.n_train),
                                idx.begin() + static_cast<std::ptrdiff_t>(take));
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());

  SplitResult out;
  for (auto i : train) {
    out.train.push_back(records[i]);
    out.train.back().split = "train";
  }
  for (auto i : test) {
    out.test.push_back(records[i]);
    out.test.back().split = "test";
  }
  return out;
}

std::vector<std::size_t> apportion(std::size_t n, const std::vector<double>& ratios) {
  if (ratios.empty()) throw std::invalid_argument("ratios must be non-empty");
  double total = 0.0;
  for (double r : ratios) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw std::invalid_argument("ratios must be non-negative");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("ratios must sum to 1");

  std::vector<std::size_t> counts(ratios.size());
  // Remainders are compared on a 1e-9 grid so float noise cannot break exact ties.
  std::vector<long long> remainder(ratios.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    const double quota = static_cast<double>(n) * ratios[i];
    // Guard against quotas like 3749.9999999 from binary ratios.
    double floor_q = std::floor(quota + 1e-9);
    counts[i] = static_cast<std::size_t>(floor_q);
    remainder[i] = std::llround(std::max(0.0, quota - floor_q) * 1e9);
    assigned += counts[i];
  }
  std::vector<std::size_t> order(ratios.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[order[k % order.size()]];
  while (assigned > n) {  // only reachable through rounding of ratios summing slightly above 1
    auto it = std::max_element(counts.begin(), counts.end());
    --*it;
    --assigned;
  }
  return counts;
}

std::string_view to_string(QuestionType t) noexcept {
  switch (t) {
    case QuestionType::Description: return "description";
    case QuestionType::Recognition: return "recognition";
    case QuestionType::Reasoning: return "reasoning";
  }
  return "description";
}

QuestionType parse_question_type(std::string_view s) {
  if (s == "description") return QuestionType::Description;
  if (s == "recognition") return QuestionType::Recognition;
  if (s == "reasoning") return QuestionType::Reasoning;
  throw std::invalid_argument("unknown question type '" + std::string(s) + "'");
}

const std::vector<std::string>& TemplatePools::pool(QuestionType t) const {
  switch (t) {
    case QuestionType::Description: return description;
    case QuestionType::Recognition: return recognition;
    case QuestionType::Reasoning: return reasoning;
  }
  return description;
}

TemplatePools default_cold_start_templates() {
  TemplatePools p;
  p.description = {
      "This frame comes from a video titled \"{title}\". Describe the scene.",
      "Video title: {title}. What is happening in this image?",
  };
  p.recognition = {
      "This frame comes from a video titled \"{title}\". Which instruments and anatomical structures are visible?",
      "Video title: {title}. List the objects you can identify in the image.",
  };
  p.reasoning = {
      "This frame comes from a video titled \"{title}\". Is anything unusual or risky happening?",
      "Video title: {title}. What is the likely intent of the current step?",
  };
  return p;
}

static std::string substitute_title(const std::string& tmpl, const std::string& title) {
  std::string out = tmpl;
  const std::string key = "{title}";
  for (std::size_t pos = out.find(key); pos != std::string::npos; pos = out.find(key, pos + title.size())) {
    out.replace(pos, key.size(), title);
  }
  return out;
}

std::vector<ColdStartRecord> build_cold_start_manifest(const std::vector<ColdStartImage>& images,
                                                       const std::array<double, 3>& ratios,
                                                       std::uint64_t seed, const TemplatePools& templates) {
  if (images.empty()) throw std::invalid_argument("image list is empty");
  const auto counts = apportion(images.size(), {ratios.begin(), ratios.end()});
  constexpr std::array<QuestionType, 3> kTypes = {QuestionType::Description, QuestionType::Recognition,
                                                  QuestionType::Reasoning};
  for (std::size_t t = 0; t < kTypes.size(); ++t) {
    if (counts[t] > 0 && templates.pool(kTypes[t]).empty()) {
      throw std::invalid_argument("template pool for " + std::string(to_string(kTypes[t])) + " is empty");
    }
  }
  std::vector<QuestionType> types;
  types.reserve(images.size());
  for (std::size_t t = 0; t < kTypes.size(); ++t) types.insert(types.end(), counts[t], kTypes[t]);
  Rng assign_rng = Rng::substream(seed, 0, hash_string("question-types"));
  assign_rng.shuffle(types);

  Rng template_rng = Rng::substream(seed, 1, hash_string("templates"));
  const int width = std::max<int>(6, static_cast<int>(std::to_string(images.size()).size()));
  std::vector<ColdStartRecord> out;
  out.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    ColdStartRecord rec;
    std::string num = std::to_string(i);
    rec.id = "cs-" + std::string(static_cast<std::size_t>(width) - std::min<std::size_t>(num.size(), width), '0') + num;
    rec.image = images[i].image;
    rec.title = images[i].title;
    rec.question_type = types[i];
    const auto& pool = templates.pool(types[i]);
    rec.question = substitute_title(pool[static_cast<std::size_t>(template_rng.below(pool.size()))], rec.title);
    out.push_back(std::move(rec));
  }
  return out;
}

ImportResult import_cold_start_responses(const std::vector<ColdStartRecord>& manifest,
                                         const std::vector<std::pair<std::string, std::string>>& responses) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    if (!index.emplace(manifest[i].id, i).second) {
      throw std::invalid_argument("duplicate manifest id '" + manifest[i].id + "'");
    }
  }
  std::set<std::string> seen;
  for (const auto& [id, text] : responses) {
    if (!seen.insert(id).second) throw std::invalid_argument("duplicate response id '" + id + "'");
  }

  ImportResult out;
  out.records = manifest;
  for (const auto& [id, text] : responses) {
    const auto it = index.find(id);
    if (it == index.end()) {
      out.orphans.push_back(id);
      continue;
    }
    auto parsed = parse_coa(text);
    if (!parsed) {
      out.rejects.push_back({id, std::move(parsed.report)});
      continue;
    }
    out.records[it->second].response = text;
    ++out.accepted;
  }
  return out;
}

}  // namespace coa
