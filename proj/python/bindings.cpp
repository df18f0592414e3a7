// Python bindings. Values cross the boundary as plain Python types: entity
// sets are lists of vocabulary phrases, reports are dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "coa/cli.hpp"
#include "coa/data.hpp"
#include "coa/format.hpp"
#include "coa/grpo.hpp"
#include "coa/io.hpp"
#include "coa/metrics.hpp"
#include "coa/reward.hpp"

namespace py = pybind11;
using namespace coa;

namespace {

py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

Vocabulary vocab_of(const std::vector<std::string>& entries) { return Vocabulary("generic", entries); }

ParseOptions options_for(const std::string& mode) {
  ParseOptions o;
  o.mode = parse_format_mode(mode);
  return o;
}

py::dict response_dict(const CoaResponse& r) {
  py::dict d;
  d["general_description"] = r.general_description;
  d["evidence"] = r.evidence;
  d["thought"] = r.thought;
  d["answer"] = r.answer;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Structured-response parsing, verifiable rewards, GRPO terms and evaluation metrics";

  static py::exception<FormatError> format_error(m, "FormatError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const FormatError& e) {
      PyErr_SetString(format_error.ptr(), e.what());
    }
  });

  m.def(
      "parse_coa",
      [](const std::string& text, const std::string& mode) {
        const auto r = parse_coa(text, options_for(mode));
        py::dict out = to_py(to_json(r.report));
        out["response"] = r.response ? py::object(response_dict(*r.response)) : py::none();
        return out;
      },
      py::arg("text"), py::arg("mode") = "coa",
      "Returns {valid, violations, response}; response is None unless valid.");

  m.def(
      "extract_answer",
      [](const std::string& text, const std::string& mode) { return extract_answer(text, options_for(mode)); },
      py::arg("text"), py::arg("mode") = "coa");

  m.def(
      "render_coa",
      [](const std::string& general_description, const std::string& evidence, const std::string& thought,
         const std::string& answer, const std::string& mode) {
        return render_coa({general_description, evidence, thought, answer}, parse_format_mode(mode));
      },
      py::arg("general_description") = "", py::arg("evidence") = "", py::arg("thought"), py::arg("answer"),
      py::arg("mode") = "coa");

  m.def(
      "lexicon_scan",
      [](const std::string& text, const std::vector<std::string>& terms) {
        std::vector<std::tuple<std::string, std::size_t, std::size_t>> out;
        for (const auto& h : lexicon_scan(text, Lexicon(terms))) out.emplace_back(h.term, h.span.begin, h.span.end);
        return out;
      },
      py::arg("text"), py::arg("terms"));

  m.def(
      "extract_entities",
      [](const std::string& text, const std::vector<std::string>& vocabulary) {
        const auto v = vocab_of(vocabulary);
        return extract_entities(text, v).phrases(v);
      },
      py::arg("text"), py::arg("vocabulary"));

  m.def(
      "task_reward",
      [](const std::vector<std::string>& pred, const std::vector<std::string>& gt,
         const std::vector<std::string>& vocabulary, const std::string& metric) {
        const auto v = vocab_of(vocabulary);
        return task_reward(EntitySet::from_phrases(v, pred), EntitySet::from_phrases(v, gt), parse_task_metric(metric));
      },
      py::arg("pred"), py::arg("gt"), py::arg("vocabulary"), py::arg("metric") = "f1");

  m.def(
      "composite_reward",
      [](const std::string& response, const std::vector<std::string>& gt, const std::vector<std::string>& vocabulary,
         const std::string& format_mode, const std::string& metric) {
        const auto v = vocab_of(vocabulary);
        const RewardSpec spec{parse_task_metric(metric), parse_gate_mode(format_mode), v};
        return composite_reward(response, EntitySet::from_phrases(v, gt), spec);
      },
      py::arg("response"), py::arg("gt"), py::arg("vocabulary"), py::arg("format_mode") = "coa",
      py::arg("metric") = "f1");

  m.def("compute_advantages", [](const std::vector<double>& r) { return compute_advantages(r); }, py::arg("rewards"));
  m.def("clipped_surrogate_term", &clipped_surrogate_term, py::arg("ratio"), py::arg("advantage"),
        py::arg("clip_epsilon") = 0.2);
  m.def("kl_penalty", &kl_penalty, py::arg("logp_theta"), py::arg("logp_ref"), py::arg("clamp") = 30.0);

  m.def(
      "grpo_objective",
      [](const std::vector<double>& rewards, const std::vector<double>& logprob_old,
         const std::vector<double>& logprob_ref, const std::vector<double>& logp_theta, double clip_epsilon,
         double kl_beta) {
        RolloutGroup g{"", {}, logprob_old, logprob_ref, rewards};
        GrpoConfig cfg;
        cfg.clip_epsilon = clip_epsilon;
        cfg.kl_beta = kl_beta;
        const auto obj = grpo_objective(g, logp_theta, cfg);
        py::dict out;
        out["objective"] = obj.objective;
        py::list terms;
        for (const auto& t : obj.per_sample) {
          py::dict d;
          d["ratio"] = t.ratio;
          d["advantage"] = t.advantage;
          d["surrogate"] = t.surrogate;
          d["kl"] = t.kl;
          d["clipped"] = t.clipped;
          d["d_logp"] = t.d_logp;
          terms.append(d);
        }
        out["per_sample"] = terms;
        return out;
      },
      py::arg("rewards"), py::arg("logprob_old"), py::arg("logprob_ref"), py::arg("logp_theta"),
      py::arg("clip_epsilon") = 0.2, py::arg("kl_beta") = 0.001);

  m.def(
      "example_prf",
      [](const std::vector<std::string>& pred, const std::vector<std::string>& gt,
         const std::vector<std::string>& vocabulary) {
        const auto v = vocab_of(vocabulary);
        const Prf p = example_prf(EntitySet::from_phrases(v, pred), EntitySet::from_phrases(v, gt));
        return std::make_tuple(p.precision, p.recall, p.f1);
      },
      py::arg("pred"), py::arg("gt"), py::arg("vocabulary"));

  m.def(
      "aggregate_report",
      [](const std::vector<std::vector<std::string>>& preds, const std::vector<std::vector<std::string>>& gts,
         const std::vector<std::string>& vocabulary, const std::string& averaging, const std::string& classes) {
        if (preds.size() != gts.size()) throw std::invalid_argument("preds and gts differ in length");
        const auto v = vocab_of(vocabulary);
        std::vector<EvalRecord> recs;
        for (std::size_t i = 0; i < preds.size(); ++i) {
          recs.push_back({std::to_string(i), EntitySet::from_phrases(v, preds[i]), EntitySet::from_phrases(v, gts[i])});
        }
        MetricsOptions o;
        if (averaging == "micro") {
          o.averaging = Averaging::Micro;
        } else if (averaging != "example") {
          throw std::invalid_argument("averaging must be example or micro");
        }
        if (classes == "full") {
          o.classes = ClassSet::Full;
        } else if (classes != "present") {
          throw std::invalid_argument("classes must be present or full");
        }
        return to_py(to_json(aggregate_report(recs, v, o)));
      },
      py::arg("preds"), py::arg("gts"), py::arg("vocabulary"), py::arg("averaging") = "example",
      py::arg("classes") = "present");

  m.def("apportion", &apportion, py::arg("n"), py::arg("ratios"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args, const std::string& stdin_text) {
        std::istringstream in(stdin_text);
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = run_cli(args, in, out, err);
        }
        return std::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), py::arg("stdin") = "", "Runs the command-line tool in-process; returns (code, stdout, stderr).");
}
