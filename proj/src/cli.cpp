#include "coa/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "coa/config.hpp"
#include "coa/data.hpp"
#include "coa/format.hpp"
#include "coa/io.hpp"
#include "coa/metrics.hpp"
#include "coa/policy.hpp"
#include "coa/reward.hpp"
#include "coa/train.hpp"

namespace coa {

namespace {

namespace fs = std::filesystem;

/// A failure attributable to the inputs; reported as JSON on stderr, exit 1.
class DomainError : public std::runtime_error {
 public:
  DomainError(const std::string& what, json details = json::object())
      : std::runtime_error(what), details_(std::move(details)) {}
  const json& details() const noexcept { return details_; }

 private:
  json details_;
};

struct Io {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
};

// ---------------------------------------------------------------- validate

struct ValidateArgs {
  std::string mode = "coa";
  std::string input = "-";
  bool json_out = false;
};

int cmd_validate(const ValidateArgs& a, Io io) {
  ParseOptions opts;
  opts.mode = parse_format_mode(a.mode);
  std::string text;
  if (a.input == "-") {
    std::ostringstream ss;
    ss << io.in.rdbuf();
    text = ss.str();
  } else {
    text = read_text(a.input);
  }

  // JSON Lines with a `response` field on every row, otherwise one document.
  std::vector<std::pair<json, std::string>> docs;
  try {
    for (auto& row : parse_jsonl(text, a.input)) {
      if (!row.contains("response") || !row["response"].is_string()) throw InputError("no response field");
      docs.emplace_back(row.contains("id") ? row["id"] : json(nullptr), row["response"].get<std::string>());
    }
  } catch (const InputError&) {
    docs.clear();
  }
  if (docs.empty()) docs.emplace_back(json(nullptr), text);

  std::size_t invalid = 0;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const auto report = parse_coa(docs[i].second, opts).report;
    if (!report.valid()) ++invalid;
    if (a.json_out) {
      json j = to_json(report);
      if (!docs[i].first.is_null()) j["id"] = docs[i].first;
      io.out << j.dump() << '\n';
    } else {
      io.out << "document " << (docs[i].first.is_null() ? std::to_string(i + 1) : docs[i].first.dump()) << ": "
             << (report.valid() ? "valid" : "invalid") << '\n';
      for (const auto& v : report.violations) {
        io.out << "  " << to_string(v.code) << " [" << v.span.begin << ", " << v.span.end << "): " << v.message
               << '\n';
      }
    }
  }
  if (invalid) {
    throw DomainError("responses do not conform to the " + a.mode + " format",
                      {{"invalid", invalid}, {"total", docs.size()}});
  }
  return 0;
}

// ---------------------------------------------------------------- score

struct ScoreArgs {
  std::string spec;
  std::string input;
  std::string truth;
  std::string out;
  bool json_out = false;
};

std::map<std::string, QaRecord> index_truth(const std::vector<QaRecord>& truth) {
  std::map<std::string, QaRecord> by_id;
  for (const auto& r : truth) {
    validate(r);
    if (!by_id.emplace(r.id, r).second) throw DomainError("duplicate truth id '" + r.id + "'");
  }
  return by_id;
}

int cmd_score(const ScoreArgs& a, Io io) {
  const RunConfig cfg = RunConfig::load(a.spec);
  const auto truth = index_truth(read_qa_records(a.truth));
  const auto rows = read_jsonl(a.input);

  std::vector<std::string> missing;
  std::set<std::string> seen;
  for (const auto& row : rows) {
    if (!row.contains("id") || !row["id"].is_string() || !row.contains("response") || !row["response"].is_string()) {
      throw InputError(a.input + ": every row needs string fields id and response");
    }
    const auto id = row["id"].get<std::string>();
    if (!seen.insert(id).second) throw DomainError("duplicate response id '" + id + "'");
    if (!truth.count(id)) missing.push_back(id);
  }
  if (!missing.empty()) throw DomainError("responses without ground truth", {{"missing_in_truth", missing}});

  std::vector<json> out_rows;
  double total = 0.0;
  for (const auto& row : rows) {
    const QaRecord& rec = truth.at(row["id"].get<std::string>());
    RewardSpec spec;
    spec.task_metric = cfg.reward.task_metric;
    spec.format_mode = cfg.reward.format_mode;
    spec.vocabulary = record_vocabulary(rec);
    const auto scored = score_response(row["response"].get<std::string>(), record_answer(rec, spec.vocabulary), spec);
    total += scored.reward;
    out_rows.push_back({{"id", rec.id},
                        {"reward", scored.reward},
                        {"format_valid", scored.format_valid},
                        {"pred_entities", scored.pred.phrases(spec.vocabulary)}});
  }
  write_text(a.out, dump_jsonl(out_rows));
  if (a.json_out) {
    io.out << dump_jsonl(out_rows);
  } else {
    io.out << "scored " << out_rows.size() << " responses, mean reward "
           << (out_rows.empty() ? 0.0 : total / static_cast<double>(out_rows.size())) << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------- train-toy

struct TrainArgs {
  std::string config;
  std::string data;
  std::string out;
};

std::vector<QaRecord> training_records(const RunConfig& cfg) {
  auto records = read_qa_records(cfg.data.path);
  for (const auto& r : records) validate(r);
  if (cfg.data.n_train > 0 || cfg.data.n_test > 0) {
    auto split = sample_split(records, {cfg.data.n_train, cfg.data.n_test, cfg.data.split_seed});
    records = cfg.data.use_split == "test" ? split.test : split.train;
    if (cfg.data.use_split == "all") records.insert(records.end(), split.test.begin(), split.test.end());
  } else if (cfg.data.use_split != "all") {
    std::erase_if(records, [&](const QaRecord& r) { return r.split != cfg.data.use_split; });
  }
  if (records.empty()) throw DomainError("no training records selected from " + cfg.data.path);
  const Vocabulary vocab = record_vocabulary(records.front());
  for (const auto& r : records) {
    if (record_vocabulary(r) != vocab) {
      throw DomainError("record '" + r.id + "' uses a different vocabulary than '" + records.front().id + "'");
    }
  }
  return records;
}

int cmd_train(const TrainArgs& a, std::size_t threads, Io io) {
  RunConfig cfg = RunConfig::load(a.config);
  if (const char* env = std::getenv("COA_SEED"); env && *env) {
    char* end = nullptr;
    const unsigned long long seed = std::strtoull(env, &end, 10);
    if (*end != '\0') throw DomainError("COA_SEED must be a non-negative integer");
    cfg.run.seed = cfg.grpo.seed = seed;
  }
  if (!a.data.empty()) cfg.data.path = a.data;
  if (cfg.data.path.empty()) throw DomainError("no training data: pass --data or set [data].path");

  const auto records = training_records(cfg);
  const Vocabulary vocab = record_vocabulary(records.front());
  PolicyParams params = cfg.run.policy == PolicyKind::SubsetBernoulli
                            ? PolicyParams::subset_bernoulli(vocab, cfg.run.init_logit)
                            : PolicyParams::categorical_sequence(vocab, cfg.run.seq_length, cfg.run.init_logit);
  params.validate();

  TrainLog log;
  if (cfg.run.mode == RunMode::Rlvr) {
    ToyPolicy policy(params);
    RewardSpec spec{cfg.reward.task_metric, cfg.reward.format_mode, vocab};
    TrainOptions opts;
    opts.render_mode = cfg.run.render_mode;
    opts.threads = threads;
    log = train_rlvr(policy, records, spec, cfg.grpo, opts);
    params = policy.params();
  } else {
    SftConfig sft{cfg.run.sft_learning_rate, cfg.run.sft_batch_size, cfg.grpo.epochs, cfg.grpo.max_steps,
                  cfg.run.seed};
    log = train_sft(params, records, sft);
  }

  const fs::path out_dir(a.out);
  std::vector<json> rows;
  for (const auto& s : log.steps) rows.push_back(to_json(s));
  write_text(out_dir / "trainlog.jsonl", dump_jsonl(rows));
  write_text(out_dir / "params_final.json", to_json(params).dump(2) + "\n");
  write_text(out_dir / "config_resolved.json", cfg.resolved().dump(2) + "\n");

  const double final_reward = log.steps.empty() ? 0.0 : log.steps.back().mean_reward;
  io.out << to_string(cfg.run.mode) << ": " << log.steps.size() << " steps, final mean reward " << final_reward
         << ", greedy selection [";
  const auto greedy = greedy_selection(params).phrases(vocab);
  for (std::size_t i = 0; i < greedy.size(); ++i) io.out << (i ? ", " : "") << greedy[i];
  io.out << "]\n";
  return 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string pred;
  std::string truth;
  std::string vocab;
  std::string out;
  std::string per_class_csv;
  std::string averaging = "example";
  std::string classes = "present";
  std::string mode = "coa";
  bool json_out = false;
};

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

int cmd_eval(const EvalArgs& a, Io io) {
  const Vocabulary vocab = vocabulary_from_json(json::parse(read_text(a.vocab), nullptr, false));
  const GateMode mode = parse_gate_mode(a.mode);
  MetricsOptions options;
  if (a.averaging == "micro") {
    options.averaging = Averaging::Micro;
  } else if (a.averaging != "example") {
    throw DomainError("--averaging must be example or micro");
  }
  if (a.classes == "full") {
    options.classes = ClassSet::Full;
  } else if (a.classes != "present") {
    throw DomainError("--classes must be present or full");
  }

  std::map<std::string, EntitySet> truth;
  for (const auto& r : read_qa_records(a.truth)) {
    EntitySet gt;
    try {
      gt = EntitySet::from_phrases(vocab, r.answer_set);
    } catch (const std::invalid_argument& e) {
      throw DomainError("truth record '" + r.id + "': " + e.what());
    }
    if (!truth.emplace(r.id, std::move(gt)).second) throw DomainError("duplicate truth id '" + r.id + "'");
  }

  std::vector<EvalRecord> records;
  std::set<std::string> pred_ids;
  std::vector<std::string> missing_in_truth;
  for (const auto& row : read_jsonl(a.pred)) {
    if (!row.contains("id") || !row["id"].is_string()) throw InputError(a.pred + ": every row needs a string id");
    const auto id = row["id"].get<std::string>();
    if (!pred_ids.insert(id).second) throw DomainError("duplicate prediction id '" + id + "'");
    EntitySet pred(vocab.size(), {});
    if (row.contains("pred_entities")) {
      try {
        pred = EntitySet::from_phrases(vocab, row["pred_entities"].get<std::vector<std::string>>());
      } catch (const std::exception& e) {
        throw DomainError("prediction '" + id + "': " + e.what());
      }
    } else if (row.contains("response") && row["response"].is_string()) {
      const auto text = row["response"].get<std::string>();
      if (mode == GateMode::None) {
        pred = extract_entities(text, vocab);
      } else {
        ParseOptions po;
        po.mode = mode == GateMode::Cot ? FormatMode::Cot : FormatMode::Coa;
        if (auto parsed = parse_coa(text, po)) pred = extract_entities(parsed.response->answer, vocab);
      }
    } else {
      throw InputError(a.pred + ": row '" + id + "' needs pred_entities or response");
    }
    const auto it = truth.find(id);
    if (it == truth.end()) {
      missing_in_truth.push_back(id);
      continue;
    }
    records.push_back({id, std::move(pred), it->second});
  }
  std::vector<std::string> missing_in_pred;
  for (const auto& [id, gt] : truth) {
    if (!pred_ids.count(id)) missing_in_pred.push_back(id);
  }
  if (!missing_in_pred.empty() || !missing_in_truth.empty()) {
    throw DomainError("prediction and truth ids do not match",
                      {{"missing_in_pred", missing_in_pred}, {"missing_in_truth", missing_in_truth}});
  }
  if (records.empty()) throw DomainError("no records to evaluate");

  const MetricsReport report = aggregate_report(records, vocab, options);
  json j = to_json(report);
  j["averaging"] = a.averaging;
  j["classes"] = a.classes;
  write_text(a.out, j.dump(2) + "\n");
  if (!a.per_class_csv.empty()) {
    std::string csv = "class_index,name,P_c,R_c,F1_c,support,included\n";
    for (const auto& c : report.per_class) {
      std::ostringstream row;
      row.precision(17);
      row << c.class_index << ',' << csv_field(c.name) << ',' << c.precision << ',' << c.recall << ',' << c.f1
          << ',' << c.support << ',' << (c.included ? 1 : 0) << '\n';
      csv += row.str();
    }
    write_text(a.per_class_csv, csv);
  }
  if (a.json_out) {
    io.out << j.dump() << '\n';
  } else {
    io.out << "n=" << report.n << " precision=" << report.precision << " recall=" << report.recall
           << " f1=" << report.f1 << " f1_cls=" << report.f1_cls << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------- convert

struct ConvertArgs {
  std::string dataset = "generic";
  std::string annotations;
  std::string vocab;
  std::string template_path;
  std::string out;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::uint64_t seed = 0;
  bool sample = false;
};

int cmd_convert(const ConvertArgs& a, Io io) {
  const Vocabulary file_vocab = vocabulary_from_json(json::parse(read_text(a.vocab), nullptr, false));
  Vocabulary vocab;
  try {
    vocab = Vocabulary(a.dataset, file_vocab.entries());
  } catch (const std::invalid_argument& e) {
    throw DomainError(e.what());
  }
  const std::string tmpl = a.template_path.empty() ? std::string(kDefaultQuestionTemplate) : read_text(a.template_path);

  std::vector<AnnotationFrame> frames;
  for (const auto& row : read_jsonl(a.annotations)) {
    AnnotationFrame f;
    try {
      f.frame_id = row.at("frame_id").get<std::string>();
      f.image = row.contains("image") ? row["image"].get<std::string>() : f.frame_id;
      f.labels = row.at("labels").get<std::vector<std::string>>();
      if (row.contains("split")) f.split = row["split"].get<std::string>();
    } catch (const json::exception&) {
      throw InputError(a.annotations + ": rows need frame_id (string) and labels (list of strings)");
    }
    frames.push_back(std::move(f));
  }

  ConversionResult result;
  try {
    result = convert_annotations(frames, vocab, tmpl);
  } catch (const std::invalid_argument& e) {
    throw DomainError(e.what());
  }
  if (!result.errors.empty()) {
    json offenders = json::array();
    for (const auto& e : result.errors) {
      offenders.push_back({{"frame_id", e.frame_id}, {"unmapped_labels", e.unmapped_labels}, {"message", e.message}});
    }
    throw DomainError("annotation conversion failed", {{"errors", offenders}});
  }
  std::vector<QaRecord> records = std::move(result.records);
  if (a.sample) {
    try {
      auto split = sample_split(records, {a.n_train, a.n_test, a.seed});
      records = std::move(split.train);
      records.insert(records.end(), split.test.begin(), split.test.end());
    } catch (const std::invalid_argument& e) {
      throw DomainError(e.what());
    }
  }
  write_qa_records(a.out, records);
  io.out << "wrote " << records.size() << " records to " << a.out << '\n';
  return 0;
}

// ---------------------------------------------------------------- cold start

struct ManifestArgs {
  std::string images;
  std::string ratios = "0.375,0.375,0.25";
  std::uint64_t seed = 0;
  std::string templates;
  std::string out;
};

std::array<double, 3> parse_ratios(const std::string& s) {
  std::array<double, 3> r{};
  std::istringstream ss(s);
  std::string part;
  std::size_t i = 0;
  while (std::getline(ss, part, ',')) {
    if (i >= 3) throw DomainError("--ratios needs exactly three values");
    try {
      std::size_t used = 0;
      r[i] = std::stod(part, &used);
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw DomainError("invalid ratio '" + part + "'");
    }
    ++i;
  }
  if (i != 3) throw DomainError("--ratios needs exactly three values");
  return r;
}

int cmd_manifest(const ManifestArgs& a, Io io) {
  std::vector<ColdStartImage> images;
  for (const auto& row : read_jsonl(a.images)) {
    try {
      images.push_back({row.at("image").get<std::string>(), row.contains("title") ? row["title"].get<std::string>() : ""});
    } catch (const json::exception&) {
      throw InputError(a.images + ": rows need an image string and an optional title string");
    }
  }
  TemplatePools pools = default_cold_start_templates();
  if (!a.templates.empty()) {
    const json t = json::parse(read_text(a.templates), nullptr, false);
    try {
      pools.description = t.at("description").get<std::vector<std::string>>();
      pools.recognition = t.at("recognition").get<std::vector<std::string>>();
      pools.reasoning = t.at("reasoning").get<std::vector<std::string>>();
    } catch (const json::exception&) {
      throw InputError(a.templates + ": expected {description: [...], recognition: [...], reasoning: [...]}");
    }
  }
  std::vector<ColdStartRecord> manifest;
  try {
    manifest = build_cold_start_manifest(images, parse_ratios(a.ratios), a.seed, pools);
  } catch (const std::invalid_argument& e) {
    throw DomainError(e.what());
  }
  write_cold_start_records(a.out, manifest);
  std::map<std::string, std::size_t> counts;
  for (const auto& r : manifest) ++counts[std::string(to_string(r.question_type))];
  io.out << "wrote " << manifest.size() << " records (description " << counts["description"] << ", recognition "
         << counts["recognition"] << ", reasoning " << counts["reasoning"] << ")\n";
  return 0;
}

struct ImportArgs {
  std::string manifest;
  std::string responses;
  std::string out;
  std::string rejects;
};

int cmd_import(const ImportArgs& a, Io io) {
  const auto manifest = read_cold_start_records(a.manifest);
  std::vector<std::pair<std::string, std::string>> responses;
  for (const auto& row : read_jsonl(a.responses)) {
    try {
      responses.emplace_back(row.at("id").get<std::string>(), row.at("response").get<std::string>());
    } catch (const json::exception&) {
      throw InputError(a.responses + ": rows need string fields id and response");
    }
  }
  ImportResult result;
  try {
    result = import_cold_start_responses(manifest, responses);
  } catch (const std::invalid_argument& e) {
    throw DomainError(e.what());
  }
  write_cold_start_records(a.out, result.records);
  if (!a.rejects.empty()) {
    std::vector<json> rows;
    for (const auto& r : result.rejects) rows.push_back({{"id", r.id}, {"reason", "format"}, {"report", to_json(r.report)}});
    for (const auto& id : result.orphans) rows.push_back({{"id", id}, {"reason", "orphan"}});
    write_text(a.rejects, dump_jsonl(rows));
  }
  io.out << "accepted " << result.accepted << ", rejected " << result.rejects.size() << ", orphans "
         << result.orphans.size() << '\n';
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Structured-reasoning reward, GRPO toy training and evaluation tools", "coa"};
  app.require_subcommand(1);
  std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
  app.add_option("--threads", threads, "Worker threads for parallel stages")->check(CLI::PositiveNumber);

  ValidateArgs va;
  auto* validate = app.add_subcommand("validate", "Check responses against the reasoning format");
  validate->add_option("--mode", va.mode)->check(CLI::IsMember({"coa", "cot"}));
  validate->add_option("--input", va.input, "File, or - for stdin");
  validate->add_flag("--json", va.json_out, "One FormatReport JSON object per line");

  ScoreArgs sa;
  auto* score = app.add_subcommand("score", "Compute format-gated rewards for responses");
  score->add_option("--spec", sa.spec, "Config with a [reward] section")->required();
  score->add_option("--input", sa.input, "responses.jsonl with id and response")->required();
  score->add_option("--truth", sa.truth, "QA records")->required();
  score->add_option("--out", sa.out, "rewards.jsonl")->required();
  score->add_flag("--json", sa.json_out);

  TrainArgs ta;
  auto* train = app.add_subcommand("train-toy", "Train a toy policy with RLVR or SFT");
  train->add_option("--config", ta.config)->required();
  train->add_option("--data", ta.data, "QA records; overrides [data].path");
  train->add_option("--out", ta.out, "Run directory")->required();

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Precision/recall/F1 and class-macro F1");
  eval->add_option("--pred", ea.pred, "Rows with id and pred_entities or response")->required();
  eval->add_option("--truth", ea.truth)->required();
  eval->add_option("--vocab", ea.vocab)->required();
  eval->add_option("--out", ea.out)->required();
  eval->add_option("--per-class-csv", ea.per_class_csv);
  eval->add_option("--averaging", ea.averaging)->check(CLI::IsMember({"example", "micro"}));
  eval->add_option("--classes", ea.classes)->check(CLI::IsMember({"present", "full"}));
  eval->add_option("--mode", ea.mode, "Answer extraction for response rows")->check(CLI::IsMember({"coa", "cot", "none"}));
  eval->add_flag("--json", ea.json_out);

  ConvertArgs ca;
  auto* convert = app.add_subcommand("convert", "Turn recognition annotations into QA records");
  convert->add_option("--dataset", ca.dataset)->check(CLI::IsMember({"endovis2018", "cholect50", "generic"}));
  convert->add_option("--annotations", ca.annotations)->required();
  convert->add_option("--vocab", ca.vocab)->required();
  convert->add_option("--template", ca.template_path);
  convert->add_option("--out", ca.out)->required();
  auto* n_train = convert->add_option("--n-train", ca.n_train, "Sample a train split of this size");
  auto* n_test = convert->add_option("--n-test", ca.n_test, "Sample a test split of this size");
  convert->add_option("--seed", ca.seed);
  n_train->needs(n_test);
  n_test->needs(n_train);

  ManifestArgs ma;
  auto* manifest = app.add_subcommand("coldstart-manifest", "Assign cold-start question types to images");
  manifest->add_option("--images", ma.images)->required();
  manifest->add_option("--ratios", ma.ratios);
  manifest->add_option("--seed", ma.seed);
  manifest->add_option("--templates", ma.templates);
  manifest->add_option("--out", ma.out)->required();

  ImportArgs ia;
  auto* import = app.add_subcommand("coldstart-import", "Attach format-checked responses to a manifest");
  import->add_option("--manifest", ia.manifest)->required();
  import->add_option("--responses", ia.responses)->required();
  import->add_option("--out", ia.out)->required();
  import->add_option("--rejects", ia.rejects);

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.emplace_back("coa");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  const Io io{in, out, err};
  try {
    if (*validate) return cmd_validate(va, io);
    if (*score) return cmd_score(sa, io);
    if (*train) return cmd_train(ta, threads, io);
    if (*eval) return cmd_eval(ea, io);
    if (*convert) {
      ca.sample = n_train->count() > 0;
      return cmd_convert(ca, io);
    }
    if (*manifest) return cmd_manifest(ma, io);
    if (*import) return cmd_import(ia, io);
  } catch (const DomainError& e) {
    err << json{{"error", e.what()}, {"details", e.details()}}.dump() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << json{{"error", e.what()}, {"details", json::object()}}.dump() << '\n';
    return 1;
  }
  err << app.help();
  return 2;
}

}  // namespace coa
