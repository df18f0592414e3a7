#include "coa/config.hpp"

#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <functional>
#include <map>

#include "coa/io.hpp"

namespace coa {

namespace {

class LineParser {
 public:
  LineParser(std::string_view line, std::size_t lineno) : s_(line), lineno_(lineno) {}

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("line " + std::to_string(lineno_) + ": " + msg);
  }

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }

  bool at_end_or_comment() {
    skip_ws();
    return pos_ >= s_.size() || s_[pos_] == '#';
  }

  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }

  std::string bare_key() {
    skip_ws();
    const std::size_t b = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' || s_[pos_] == '-')) {
      ++pos_;
    }
    if (b == pos_) fail("expected a key");
    return std::string(s_.substr(b, pos_ - b));
  }

  void expect(char c) {
    skip_ws();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  nlohmann::json value() {
    skip_ws();
    const char c = peek();
    if (c == '"') return basic_string();
    if (c == '\'') return literal_string();
    if (c == '[') return array();
    return scalar();
  }

 private:
  nlohmann::json basic_string() {
    ++pos_;
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      char ch = s_[pos_++];
      if (ch == '\\') {
        if (pos_ >= s_.size()) fail("unterminated escape");
        const char e = s_[pos_++];
        switch (e) {
          case 'n': ch = '\n'; break;
          case 't': ch = '\t'; break;
          case 'r': ch = '\r'; break;
          case '"': ch = '"'; break;
          case '\\': ch = '\\'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      }
      out.push_back(ch);
    }
    if (pos_ >= s_.size()) fail("unterminated string");
    ++pos_;
    return out;
  }

  nlohmann::json literal_string() {
    ++pos_;
    const std::size_t end = s_.find('\'', pos_);
    if (end == std::string_view::npos) fail("unterminated string");
    std::string out(s_.substr(pos_, end - pos_));
    pos_ = end + 1;
    return out;
  }

  nlohmann::json array() {
    ++pos_;
    nlohmann::json arr = nlohmann::json::array();
    skip_ws();
    if (peek() == ']') {
      ++pos_;
      return arr;
    }
    while (true) {
      arr.push_back(value());
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        skip_ws();
        if (peek() == ']') {
          ++pos_;
          return arr;
        }
        continue;
      }
      if (peek() == ']') {
        ++pos_;
        return arr;
      }
      fail("expected ',' or ']' in array");
    }
  }

  nlohmann::json scalar() {
    const std::size_t b = pos_;
    while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' && s_[pos_] != '#' && s_[pos_] != ' ' &&
           s_[pos_] != '\t') {
      ++pos_;
    }
    std::string tok(s_.substr(b, pos_ - b));
    if (tok.empty()) fail("expected a value");
    if (tok == "true") return true;
    if (tok == "false") return false;
    std::string digits;
    for (char ch : tok) {
      if (ch != '_') digits.push_back(ch);
    }
    const bool is_float = digits.find_first_of(".eE") != std::string::npos || digits == "inf" ||
                          digits == "+inf" || digits == "-inf" || digits == "nan";
    errno = 0;
    char* end = nullptr;
    if (is_float) {
      const double d = std::strtod(digits.c_str(), &end);
      if (*end != '\0' || errno == ERANGE) fail("invalid number '" + tok + "'");
      return d;
    }
    if (!digits.empty() && digits[0] == '-') {
      const long long v = std::strtoll(digits.c_str(), &end, 10);
      if (*end != '\0' || errno == ERANGE) fail("invalid value '" + tok + "'");
      return v;
    }
    const unsigned long long v = std::strtoull(digits.c_str(), &end, 10);
    if (*end != '\0' || errno == ERANGE || digits.empty() || !std::isdigit(static_cast<unsigned char>(digits.back()))) {
      fail("invalid value '" + tok + "' (strings must be quoted)");
    }
    return v;
  }

  std::string_view s_;
  std::size_t lineno_;
  std::size_t pos_ = 0;
};

using Setter = std::function<void(const nlohmann::json&, const std::string&)>;

std::size_t as_count(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
    throw ConfigError(key + " must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

double as_real(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError(key + " must be a number");
  return v.get<double>();
}

std::string as_text(const nlohmann::json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError(key + " must be a string");
  return v.get<std::string>();
}

template <typename F>
auto checked(F&& parse, const std::string& key) {
  try {
    return parse();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

}  // namespace

nlohmann::json parse_toml_subset(std::string_view text) {
  nlohmann::json doc = nlohmann::json::object();
  std::string section;
  std::size_t lineno = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++lineno;
    start = end + 1;

    LineParser p(line, lineno);
    if (p.at_end_or_comment()) {
      if (end == text.size()) break;
      continue;
    }
    if (p.peek() == '[') {
      p.expect('[');
      section = p.bare_key();
      p.expect(']');
      if (!p.at_end_or_comment()) p.fail("trailing characters after section header");
      if (doc.contains(section)) p.fail("section [" + section + "] appears twice");
      doc[section] = nlohmann::json::object();
    } else {
      const std::string key = p.bare_key();
      p.expect('=');
      nlohmann::json value = p.value();
      if (!p.at_end_or_comment()) p.fail("trailing characters after value");
      if (section.empty()) p.fail("key '" + key + "' outside of a section");
      if (doc[section].contains(key)) p.fail("duplicate key '" + key + "'");
      doc[section][key] = std::move(value);
    }
    if (end == text.size()) break;
  }
  return doc;
}

std::string_view to_string(RunMode m) noexcept { return m == RunMode::Rlvr ? "rlvr" : "sft"; }

RunConfig RunConfig::from_document(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a sectioned document");
  RunConfig c;
  std::map<std::string, std::map<std::string, Setter>> schema;

  auto& g = schema["grpo"];
  g["group_size"] = [&](const auto& v, const auto& k) { c.grpo.group_size = as_count(v, k); };
  g["temperature"] = [&](const auto& v, const auto& k) { c.grpo.temperature = as_real(v, k); };
  g["clip_epsilon"] = [&](const auto& v, const auto& k) { c.grpo.clip_epsilon = as_real(v, k); };
  g["kl_beta"] = [&](const auto& v, const auto& k) { c.grpo.kl_beta = as_real(v, k); };
  g["learning_rate"] = [&](const auto& v, const auto& k) { c.grpo.learning_rate = as_real(v, k); };
  g["batch_size_prompts"] = [&](const auto& v, const auto& k) { c.grpo.batch_size_prompts = as_count(v, k); };
  g["epochs"] = [&](const auto& v, const auto& k) { c.grpo.epochs = as_count(v, k); };
  g["inner_updates"] = [&](const auto& v, const auto& k) { c.grpo.inner_updates = as_count(v, k); };
  g["max_steps"] = [&](const auto& v, const auto& k) { c.grpo.max_steps = as_count(v, k); };
  g["kl_clamp"] = [&](const auto& v, const auto& k) { c.grpo.kl_clamp = as_real(v, k); };

  auto& r = schema["reward"];
  r["task_metric"] = [&](const auto& v, const auto& k) {
    c.reward.task_metric = checked([&] { return parse_task_metric(as_text(v, k)); }, k);
  };
  r["format_mode"] = [&](const auto& v, const auto& k) {
    c.reward.format_mode = checked([&] { return parse_gate_mode(as_text(v, k)); }, k);
  };

  auto& d = schema["data"];
  d["path"] = [&](const auto& v, const auto& k) { c.data.path = as_text(v, k); };
  d["use_split"] = [&](const auto& v, const auto& k) {
    c.data.use_split = as_text(v, k);
    if (c.data.use_split != "train" && c.data.use_split != "test" && c.data.use_split != "all") {
      throw ConfigError(k + " must be train, test or all");
    }
  };
  d["n_train"] = [&](const auto& v, const auto& k) { c.data.n_train = as_count(v, k); };
  d["n_test"] = [&](const auto& v, const auto& k) { c.data.n_test = as_count(v, k); };
  d["split_seed"] = [&](const auto& v, const auto& k) { c.data.split_seed = as_count(v, k); };

  auto& u = schema["run"];
  u["seed"] = [&](const auto& v, const auto& k) { c.run.seed = as_count(v, k); };
  u["mode"] = [&](const auto& v, const auto& k) {
    const auto s = as_text(v, k);
    if (s == "rlvr") {
      c.run.mode = RunMode::Rlvr;
    } else if (s == "sft") {
      c.run.mode = RunMode::Sft;
    } else {
      throw ConfigError(k + " must be rlvr or sft");
    }
  };
  u["policy"] = [&](const auto& v, const auto& k) {
    c.run.policy = checked([&] { return parse_policy_kind(as_text(v, k)); }, k);
  };
  u["seq_length"] = [&](const auto& v, const auto& k) { c.run.seq_length = as_count(v, k); };
  u["init_logit"] = [&](const auto& v, const auto& k) { c.run.init_logit = as_real(v, k); };
  u["render_mode"] = [&](const auto& v, const auto& k) {
    c.run.render_mode = checked([&] { return parse_gate_mode(as_text(v, k)); }, k);
  };
  u["sft_learning_rate"] = [&](const auto& v, const auto& k) { c.run.sft_learning_rate = as_real(v, k); };
  u["sft_batch_size"] = [&](const auto& v, const auto& k) { c.run.sft_batch_size = as_count(v, k); };

  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const auto sec = schema.find(it.key());
    if (sec == schema.end()) throw ConfigError("unknown config section [" + it.key() + "]");
    if (!it.value().is_object()) throw ConfigError("[" + it.key() + "] must be a table");
    for (auto kv = it.value().begin(); kv != it.value().end(); ++kv) {
      const auto setter = sec->second.find(kv.key());
      const std::string name = it.key() + "." + kv.key();
      if (setter == sec->second.end()) throw ConfigError("unknown config key " + name);
      setter->second(kv.value(), name);
    }
  }
  c.grpo.seed = c.run.seed;
  try {
    c.grpo.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (c.run.sft_batch_size == 0) throw ConfigError("run.sft_batch_size must be >= 1");
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  nlohmann::json doc;
  if (path.extension() == ".json") {
    doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded()) throw ConfigError(path.string() + ": invalid JSON");
  } else {
    try {
      doc = parse_toml_subset(text);
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
  }
  return from_document(doc);
}

nlohmann::json RunConfig::resolved() const {
  nlohmann::json j;
  j["grpo"] = {{"group_size", grpo.group_size},
               {"temperature", grpo.temperature},
               {"clip_epsilon", grpo.clip_epsilon},
               {"kl_beta", grpo.kl_beta},
               {"learning_rate", grpo.learning_rate},
               {"batch_size_prompts", grpo.batch_size_prompts},
               {"epochs", grpo.epochs},
               {"inner_updates", grpo.inner_updates},
               {"max_steps", grpo.max_steps},
               {"kl_clamp", grpo.kl_clamp}};
  j["reward"] = {{"task_metric", std::string(to_string(reward.task_metric))},
                 {"format_mode", std::string(to_string(reward.format_mode))}};
  j["data"] = {{"path", data.path},
               {"use_split", data.use_split},
               {"n_train", data.n_train},
               {"n_test", data.n_test},
               {"split_seed", data.split_seed}};
  j["run"] = {{"seed", run.seed},
              {"mode", std::string(to_string(run.mode))},
              {"policy", std::string(to_string(run.policy))},
              {"seq_length", run.seq_length},
              {"init_logit", run.init_logit},
              {"render_mode", std::string(to_string(run.render_mode))},
              {"sft_learning_rate", run.sft_learning_rate},
              {"sft_batch_size", run.sft_batch_size}};
  return j;
}

}  // namespace coa
