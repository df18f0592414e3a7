#include "coa/metrics.hpp"

#include <stdexcept>

namespace coa {

namespace {

double harmonic(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

double ratio_or(double num, double den, double fallback) { return den > 0.0 ? num / den : fallback; }

}  // namespace

Prf example_prf(const EntitySet& pred, const EntitySet& gt) {
  if (pred.universe() != gt.universe()) {
    throw std::invalid_argument("prediction and ground truth use different vocabularies");
  }
  if (pred.empty() && gt.empty()) return {1.0, 1.0, 1.0};
  const double hits = static_cast<double>(intersection_size(pred, gt));
  Prf out;
  out.precision = ratio_or(hits, static_cast<double>(pred.size()), 0.0);
  out.recall = ratio_or(hits, static_cast<double>(gt.size()), 0.0);
  out.f1 = harmonic(out.precision, out.recall);
  return out;
}

MetricsReport aggregate_report(const std::vector<EvalRecord>& records, const Vocabulary& vocab,
                               const MetricsOptions& options) {
  if (records.empty()) throw std::invalid_argument("cannot aggregate an empty record list");
  const std::size_t c = vocab.size();

  MetricsReport report;
  report.n = records.size();
  report.per_class.resize(c);
  for (std::size_t k = 0; k < c; ++k) {
    report.per_class[k].class_index = k;
    report.per_class[k].name = vocab[k];
  }

  double sum_p = 0.0, sum_r = 0.0, sum_f = 0.0;
  for (const auto& rec : records) {
    if (rec.pred.universe() != c || rec.gt.universe() != c) {
      throw std::invalid_argument("record '" + rec.id + "' does not match the vocabulary");
    }
    const Prf prf = example_prf(rec.pred, rec.gt);
    sum_p += prf.precision;
    sum_r += prf.recall;
    sum_f += prf.f1;
    for (auto k : rec.pred.members()) {
      if (rec.gt.contains(k)) {
        ++report.per_class[k].tp;
      } else {
        ++report.per_class[k].fp;
      }
    }
    for (auto k : rec.gt.members()) {
      if (!rec.pred.contains(k)) ++report.per_class[k].fn;
    }
  }

  std::size_t tp = 0, fp = 0, fn = 0;
  double sum_cls = 0.0;
  for (auto& cs : report.per_class) {
    cs.support = cs.tp + cs.fn;
    cs.precision = ratio_or(static_cast<double>(cs.tp), static_cast<double>(cs.tp + cs.fp), 0.0);
    cs.recall = ratio_or(static_cast<double>(cs.tp), static_cast<double>(cs.tp + cs.fn), 0.0);
    cs.f1 = harmonic(cs.precision, cs.recall);
    cs.included = options.classes == ClassSet::Full || cs.tp + cs.fp + cs.fn > 0;
    if (cs.included) {
      ++report.included_classes;
      sum_cls += cs.f1;
    }
    tp += cs.tp;
    fp += cs.fp;
    fn += cs.fn;
  }
  report.f1_cls_defined = report.included_classes > 0;
  report.f1_cls = report.f1_cls_defined ? sum_cls / static_cast<double>(report.included_classes) : 0.0;

  if (options.averaging == Averaging::Example) {
    const double n = static_cast<double>(records.size());
    report.precision = sum_p / n;
    report.recall = sum_r / n;
    report.f1 = sum_f / n;
  } else if (tp + fp + fn == 0) {
    report.precision = report.recall = report.f1 = 1.0;
  } else {
    report.precision = ratio_or(static_cast<double>(tp), static_cast<double>(tp + fp), 0.0);
    report.recall = ratio_or(static_cast<double>(tp), static_cast<double>(tp + fn), 0.0);
    report.f1 = harmonic(report.precision, report.recall);
  }
  return report;
}

}  // namespace coa
