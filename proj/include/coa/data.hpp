#pragma once

// Recognition annotations -> QA records, seeded splits, and cold-start
// manifests with exact question-type apportionment.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "coa/format.hpp"
#include "coa/reward.hpp"

namespace coa {

struct QaRecord {
  std::string id;
  std::string image;
  std::string dataset;
  std::string question;
  std::vector<std::string> vocabulary;
  std::vector<std::string> answer_set;
  std::string split = "train";  // "train" | "test"
  nlohmann::json extra = nlohmann::json::object();  // unknown fields, preserved on round trip

  friend bool operator==(const QaRecord&, const QaRecord&) = default;
};

// Throws std::invalid_argument if answer_set is not a subset of vocabulary,
// the vocabulary size disagrees with a known dataset, or split is unknown.
void validate(const QaRecord& record);

Vocabulary record_vocabulary(const QaRecord& record);
EntitySet record_answer(const QaRecord& record, const Vocabulary& vocab);

struct AnnotationFrame {
  std::string frame_id;
  std::string image;
  std::vector<std::string> labels;
  std::optional<std::string> split;  // native split, when the dataset ships one
};

struct ConversionError {
  std::string frame_id;
  std::vector<std::string> unmapped_labels;
  std::string message;
};

struct ConversionResult {
  std::vector<QaRecord> records;
  std::vector<ConversionError> errors;
};

inline constexpr std::string_view kDefaultQuestionTemplate =
    "Which of the following candidates appear in the image?\n"
    "{candidates}\n"
    "Answer with the names of all candidates that are present.";

// Replaces {candidates} with a numbered list of the vocabulary and {dataset}
// with the dataset name.
std::string render_question(std::string_view question_template, const Vocabulary& vocab);

// One record or one error per frame, records ordered by frame id.
ConversionResult convert_annotations(const std::vector<AnnotationFrame>& raw, const Vocabulary& vocab,
                                     std::string_view question_template);

struct SplitSpec {
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::uint64_t seed = 0;
};

struct SplitResult {
  std::vector<QaRecord> train;
  std::vector<QaRecord> test;
};

// Uniform sampling without replacement; records keep their input order inside
// each split and get their `split` field rewritten.
SplitResult sample_split(const std::vector<QaRecord>& records, const SplitSpec& spec);

// Largest-remainder apportionment of n items; ties go to the lower index.
std::vector<std::size_t> apportion(std::size_t n, const std::vector<double>& ratios);

enum class QuestionType { Description, Recognition, Reasoning };

std::string_view to_string(QuestionType t) noexcept;
QuestionType parse_question_type(std::string_view s);

struct ColdStartImage {
  std::string image;
  std::string title;
};

struct ColdStartRecord {
  std::string id;
  std::string image;
  std::string title;
  QuestionType question_type = QuestionType::Description;
  std::string question;
  std::optional<std::string> response;
  nlohmann::json extra = nlohmann::json::object();

  friend bool operator==(const ColdStartRecord&, const ColdStartRecord&) = default;
};

struct TemplatePools {
  std::vector<std::string> description;
  std::vector<std::string> recognition;
  std::vector<std::string> reasoning;

  const std::vector<std::string>& pool(QuestionType t) const;
};

// Placeholder pools; the question wording used for the original data is not
// available. Templates may reference {title}.
TemplatePools default_cold_start_templates();

inline constexpr std::array<double, 3> kColdStartRatios = {0.375, 0.375, 0.25};

std::vector<ColdStartRecord> build_cold_start_manifest(const std::vector<ColdStartImage>& images,
                                                       const std::array<double, 3>& ratios,
                                                       std::uint64_t seed, const TemplatePools& templates);

struct RejectedResponse {
  std::string id;
  FormatReport report;
};

struct ImportResult {
  std::vector<ColdStartRecord> records;  // the manifest, with accepted responses attached
  std::size_t accepted = 0;
  std::vector<RejectedResponse> rejects;
  std::vector<std::string> orphans;  // response ids absent from the manifest
};

// Only the CoA structure is enforced. Throws std::invalid_argument on duplicate
// ids in either input.
ImportResult import_cold_start_responses(const std::vector<ColdStartRecord>& manifest,
                                         const std::vector<std::pair<std::string, std::string>>& responses);

}  // namespace coa
