#include "coa/io.hpp"

#include <fstream>
#include <sstream>

namespace coa {

namespace {

template <typename T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw InputError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InputError(std::string("field '") + key + "' has the wrong type");
  }
}

json leftover(const json& j, std::initializer_list<const char*> known) {
  json extra = json::object();
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool is_known = false;
    for (const char* k : known) is_known = is_known || it.key() == k;
    if (!is_known) extra[it.key()] = it.value();
  }
  return extra;
}

void require_object(const json& j, const char* what) {
  if (!j.is_object()) throw InputError(std::string(what) + " must be a JSON object");
}

}  // namespace

json to_json(const QaRecord& r) {
  json j = r.extra.is_object() ? r.extra : json::object();
  j["id"] = r.id;
  j["image"] = r.image;
  j["dataset"] = r.dataset;
  j["question"] = r.question;
  j["vocabulary"] = r.vocabulary;
  j["answer_set"] = r.answer_set;
  j["split"] = r.split;
  return j;
}

QaRecord qa_record_from_json(const json& j) {
  require_object(j, "QA record");
  QaRecord r;
  r.id = field<std::string>(j, "id");
  r.image = j.contains("image") ? field<std::string>(j, "image") : "";
  r.dataset = j.contains("dataset") ? field<std::string>(j, "dataset") : "generic";
  r.question = j.contains("question") ? field<std::string>(j, "question") : "";
  r.vocabulary = field<std::vector<std::string>>(j, "vocabulary");
  r.answer_set = field<std::vector<std::string>>(j, "answer_set");
  r.split = j.contains("split") ? field<std::string>(j, "split") : "train";
  r.extra = leftover(j, {"id", "image", "dataset", "question", "vocabulary", "answer_set", "split"});
  return r;
}

json to_json(const ColdStartRecord& r) {
  json j = r.extra.is_object() ? r.extra : json::object();
  j["id"] = r.id;
  j["image"] = r.image;
  j["title"] = r.title;
  j["question_type"] = std::string(to_string(r.question_type));
  j["question"] = r.question;
  if (r.response) j["response"] = *r.response;
  return j;
}

ColdStartRecord cold_start_record_from_json(const json& j) {
  require_object(j, "cold-start record");
  ColdStartRecord r;
  r.id = field<std::string>(j, "id");
  r.image = field<std::string>(j, "image");
  r.title = j.contains("title") ? field<std::string>(j, "title") : "";
  try {
    r.question_type = parse_question_type(field<std::string>(j, "question_type"));
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  r.question = field<std::string>(j, "question");
  if (j.contains("response") && !j.at("response").is_null()) r.response = field<std::string>(j, "response");
  r.extra = leftover(j, {"id", "image", "title", "question_type", "question", "response"});
  return r;
}

json to_json(const Vocabulary& v) { return {{"dataset_name", v.dataset_name()}, {"entries", v.entries()}}; }

Vocabulary vocabulary_from_json(const json& j) {
  require_object(j, "vocabulary");
  try {
    return Vocabulary(j.contains("dataset_name") ? field<std::string>(j, "dataset_name") : "generic",
                      field<std::vector<std::string>>(j, "entries"));
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
}

json to_json(const FormatReport& r) {
  json violations = json::array();
  for (const auto& v : r.violations) {
    violations.push_back({{"code", std::string(to_string(v.code))},
                          {"span", {v.span.begin, v.span.end}},
                          {"message", v.message}});
  }
  return {{"valid", r.valid()}, {"violations", violations}};
}

json to_json(const MetricsReport& r) {
  json per_class = json::array();
  for (const auto& c : r.per_class) {
    per_class.push_back({{"class_index", c.class_index},
                         {"name", c.name},
                         {"P_c", c.precision},
                         {"R_c", c.recall},
                         {"F1_c", c.f1},
                         {"support", c.support},
                         {"tp", c.tp},
                         {"fp", c.fp},
                         {"fn", c.fn},
                         {"included", c.included}});
  }
  return {{"n", r.n},
          {"precision", r.precision},
          {"recall", r.recall},
          {"f1", r.f1},
          {"f1_cls", r.f1_cls},
          {"f1_cls_defined", r.f1_cls_defined},
          {"included_classes", r.included_classes},
          {"per_class", per_class}};
}

json to_json(const StepRecord& r) {
  return {{"step", r.step},
          {"mean_reward", r.mean_reward},
          {"mean_advantage_abs", r.mean_advantage_abs},
          {"mean_kl", r.mean_kl},
          {"clip_fraction", r.clip_fraction},
          {"objective", r.objective}};
}

StepRecord step_record_from_json(const json& j) {
  require_object(j, "train log record");
  StepRecord r;
  r.step = field<std::size_t>(j, "step");
  r.mean_reward = field<double>(j, "mean_reward");
  r.mean_advantage_abs = field<double>(j, "mean_advantage_abs");
  r.mean_kl = field<double>(j, "mean_kl");
  r.clip_fraction = field<double>(j, "clip_fraction");
  r.objective = field<double>(j, "objective");
  return r;
}

json to_json(const PolicyParams& p) {
  json j = {{"kind", std::string(to_string(p.kind))},
            {"theta", p.theta},
            {"vocab", p.vocab.entries()},
            {"dataset_name", p.vocab.dataset_name()}};
  if (p.kind == PolicyKind::CategoricalSequence) j["seq_length"] = p.seq_length;
  return j;
}

PolicyParams policy_params_from_json(const json& j) {
  require_object(j, "policy parameters");
  PolicyParams p;
  try {
    p.kind = parse_policy_kind(field<std::string>(j, "kind"));
    p.vocab = Vocabulary(j.contains("dataset_name") ? field<std::string>(j, "dataset_name") : "generic",
                         field<std::vector<std::string>>(j, "vocab"));
    p.theta = field<std::vector<double>>(j, "theta");
    if (p.kind == PolicyKind::CategoricalSequence) p.seq_length = field<std::size_t>(j, "seq_length");
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("policy parameters: ") + e.what());
  }
  return p;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<json> parse_jsonl(const std::string& text, const std::string& source) {
  std::vector<json> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw InputError(source + ":" + std::to_string(lineno) + ": expected one JSON object per line");
    }
    rows.push_back(std::move(j));
  }
  return rows;
}

std::vector<json> read_jsonl(const std::filesystem::path& path) { return parse_jsonl(read_text(path), path.string()); }

std::string dump_jsonl(const std::vector<json>& rows) {
  std::string out;
  for (const auto& r : rows) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

namespace {

template <typename T, typename Decode>
std::vector<T> read_records(const std::filesystem::path& path, Decode decode) {
  const auto rows = read_jsonl(path);
  std::vector<T> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    try {
      out.push_back(decode(rows[i]));
    } catch (const InputError& e) {
      throw InputError(path.string() + ": record " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

std::vector<QaRecord> read_qa_records(const std::filesystem::path& path) {
  return read_records<QaRecord>(path, qa_record_from_json);
}

void write_qa_records(const std::filesystem::path& path, const std::vector<QaRecord>& records) {
  std::vector<json> rows;
  for (const auto& r : records) rows.push_back(to_json(r));
  write_text(path, dump_jsonl(rows));
}

std::vector<ColdStartRecord> read_cold_start_records(const std::filesystem::path& path) {
  return read_records<ColdStartRecord>(path, cold_start_record_from_json);
}

void write_cold_start_records(const std::filesystem::path& path, const std::vector<ColdStartRecord>& records) {
  std::vector<json> rows;
  for (const auto& r : records) rows.push_back(to_json(r));
  write_text(path, dump_jsonl(rows));
}

}  // namespace coa
