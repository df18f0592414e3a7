#pragma once

// JSON / JSON Lines encodings of the record and report types.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "coa/data.hpp"
#include "coa/format.hpp"
#include "coa/grpo.hpp"
#include "coa/metrics.hpp"
#include "coa/policy.hpp"
#include "coa/train.hpp"

namespace coa {

using nlohmann::json;

/// Bad input file contents; carries the file and 1-based line when known.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json to_json(const QaRecord& r);
QaRecord qa_record_from_json(const json& j);

json to_json(const ColdStartRecord& r);
ColdStartRecord cold_start_record_from_json(const json& j);

json to_json(const Vocabulary& v);
Vocabulary vocabulary_from_json(const json& j);

json to_json(const FormatReport& r);
json to_json(const MetricsReport& r);
json to_json(const StepRecord& r);
StepRecord step_record_from_json(const json& j);

json to_json(const PolicyParams& p);
PolicyParams policy_params_from_json(const json& j);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

// Blank lines are skipped; every other line must be a JSON object.
std::vector<json> parse_jsonl(const std::string& text, const std::string& source);
std::vector<json> read_jsonl(const std::filesystem::path& path);
std::string dump_jsonl(const std::vector<json>& rows);

std::vector<QaRecord> read_qa_records(const std::filesystem::path& path);
void write_qa_records(const std::filesystem::path& path, const std::vector<QaRecord>& records);
std::vector<ColdStartRecord> read_cold_start_records(const std::filesystem::path& path);
void write_cold_start_records(const std::filesystem::path& path, const std::vector<ColdStartRecord>& records);

}  // namespace coa
