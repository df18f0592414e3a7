#include "coa/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace coa {

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double log_sigmoid(double z) {
  if (z >= 0) return -std::log1p(std::exp(-z));
  return z - std::log1p(std::exp(z));
}

void require_temperature(double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw std::invalid_argument("temperature must be positive and finite");
  }
}

// Softmax of theta[row]/T for one sequence position.
std::vector<double> position_probs(const PolicyParams& p, std::size_t pos, double temperature) {
  const std::size_t n = p.num_symbols();
  const double* row = p.theta.data() + pos * n;
  double hi = row[0] / temperature;
  for (std::size_t j = 1; j < n; ++j) hi = std::max(hi, row[j] / temperature);
  std::vector<double> probs(n);
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    probs[j] = std::exp(row[j] / temperature - hi);
    total += probs[j];
  }
  for (auto& q : probs) q /= total;
  return probs;
}

EntitySet selection_from_choice(const PolicyParams& p, const std::vector<int>& choice) {
  std::vector<std::size_t> members;
  if (p.kind == PolicyKind::SubsetBernoulli) {
    for (std::size_t k = 0; k < choice.size(); ++k) {
      if (choice[k] != 0) members.push_back(k);
    }
  } else {
    const auto blank = static_cast<int>(p.vocab.size());
    for (int s : choice) {
      if (s != blank) members.push_back(static_cast<std::size_t>(s));
    }
  }
  return EntitySet(p.vocab.size(), std::move(members));
}

void check_response_shape(const PolicyParams& p, const ToyResponse& resp) {
  if (p.kind == PolicyKind::SubsetBernoulli) {
    if (resp.choice.size() != p.vocab.size()) {
      throw std::invalid_argument("response has " + std::to_string(resp.choice.size()) +
                                  " inclusion flags, policy has " + std::to_string(p.vocab.size()) +
                                  " entries");
    }
    for (int c : resp.choice) {
      if (c != 0 && c != 1) throw std::invalid_argument("inclusion flags must be 0 or 1");
    }
    return;
  }
  if (resp.choice.size() != p.seq_length) {
    throw std::invalid_argument("response length " + std::to_string(resp.choice.size()) +
                                " does not match sequence length " + std::to_string(p.seq_length));
  }
  for (int s : resp.choice) {
    if (s < 0 || static_cast<std::size_t>(s) >= p.num_symbols()) {
      throw std::invalid_argument("symbol " + std::to_string(s) + " out of range");
    }
  }
}

constexpr std::string_view kDescription =
    "A close-up view with several elongated metallic shapes over a glossy pink and red surface.";
constexpr std::string_view kEvidence =
    "Task: choose from the candidate list. Visual: rigid tool-like outlines at the image edges.";
constexpr std::string_view kThought = "Compare each candidate with the visible objects and keep the matches.";
constexpr std::string_view kNothing = "none of the candidates";

}  // namespace

std::string_view to_string(PolicyKind kind) noexcept {
  return kind == PolicyKind::SubsetBernoulli ? "subset_bernoulli" : "categorical_sequence";
}

PolicyKind parse_policy_kind(std::string_view s) {
  if (s == "subset_bernoulli" || s == "SubsetBernoulli") return PolicyKind::SubsetBernoulli;
  if (s == "categorical_sequence" || s == "CategoricalSequence") return PolicyKind::CategoricalSequence;
  throw std::invalid_argument("unknown policy kind '" + std::string(s) + "'");
}

PolicyParams PolicyParams::subset_bernoulli(Vocabulary vocab, double init) {
  PolicyParams p;
  p.kind = PolicyKind::SubsetBernoulli;
  p.theta.assign(vocab.size(), init);
  p.vocab = std::move(vocab);
  return p;
}

PolicyParams PolicyParams::categorical_sequence(Vocabulary vocab, std::size_t seq_length, double init) {
  PolicyParams p;
  p.kind = PolicyKind::CategoricalSequence;
  p.seq_length = seq_length;
  p.theta.assign(seq_length * (vocab.size() + 1), init);
  p.vocab = std::move(vocab);
  return p;
}

std::size_t PolicyParams::expected_size() const noexcept {
  return kind == PolicyKind::SubsetBernoulli ? vocab.size() : seq_length * num_symbols();
}

void PolicyParams::validate() const {
  if (vocab.size() == 0) throw std::invalid_argument("policy vocabulary is empty");
  if (kind == PolicyKind::CategoricalSequence && seq_length == 0) {
    throw std::invalid_argument("sequence policy needs seq_length >= 1");
  }
  if (theta.size() != expected_size()) {
    throw std::invalid_argument("theta has " + std::to_string(theta.size()) + " values, expected " +
                                std::to_string(expected_size()));
  }
  for (double t : theta) {
    if (!std::isfinite(t)) throw std::invalid_argument("theta contains a non-finite value");
  }
}

void PolicyParams::clamp() noexcept {
  for (auto& t : theta) t = std::clamp(t, -kLogitClamp, kLogitClamp);
}

std::vector<ToyResponse> sample(const PolicyParams& params, std::size_t group_size,
                                double temperature, Rng& rng) {
  require_temperature(temperature);
  params.validate();
  std::vector<ToyResponse> out;
  out.reserve(group_size);
  if (params.kind == PolicyKind::SubsetBernoulli) {
    const auto probs = inclusion_probabilities(params, temperature);
    for (std::size_t g = 0; g < group_size; ++g) {
      ToyResponse r;
      r.choice.resize(probs.size());
      for (std::size_t k = 0; k < probs.size(); ++k) r.choice[k] = rng.uniform() < probs[k] ? 1 : 0;
      r.selection = selection_from_choice(params, r.choice);
      out.push_back(std::move(r));
    }
    return out;
  }
  std::vector<std::vector<double>> probs;
  for (std::size_t pos = 0; pos < params.seq_length; ++pos) {
    probs.push_back(position_probs(params, pos, temperature));
  }
  for (std::size_t g = 0; g < group_size; ++g) {
    ToyResponse r;
    r.choice.resize(params.seq_length);
    for (std::size_t pos = 0; pos < params.seq_length; ++pos) {
      const double u = rng.uniform();
      double acc = 0.0;
      std::size_t sym = probs[pos].size() - 1;
      for (std::size_t j = 0; j < probs[pos].size(); ++j) {
        acc += probs[pos][j];
        if (u < acc) {
          sym = j;
          break;
        }
      }
      r.choice[pos] = static_cast<int>(sym);
    }
    r.selection = selection_from_choice(params, r.choice);
    out.push_back(std::move(r));
  }
  return out;
}

LogProbGrad logprob_and_grad(const PolicyParams& params, const ToyResponse& resp, double temperature) {
  require_temperature(temperature);
  params.validate();
  check_response_shape(params, resp);
  LogProbGrad out;
  out.grad.assign(params.theta.size(), 0.0);
  if (params.kind == PolicyKind::SubsetBernoulli) {
    for (std::size_t k = 0; k < params.theta.size(); ++k) {
      const double z = params.theta[k] / temperature;
      const bool y = resp.choice[k] != 0;
      out.logprob += y ? log_sigmoid(z) : log_sigmoid(-z);
      out.grad[k] = ((y ? 1.0 : 0.0) - sigmoid(z)) / temperature;
    }
    return out;
  }
  const std::size_t n = params.num_symbols();
  for (std::size_t pos = 0; pos < params.seq_length; ++pos) {
    const auto probs = position_probs(params, pos, temperature);
    const auto s = static_cast<std::size_t>(resp.choice[pos]);
    out.logprob += std::log(probs[s]);
    for (std::size_t j = 0; j < n; ++j) {
      out.grad[pos * n + j] = ((j == s ? 1.0 : 0.0) - probs[j]) / temperature;
    }
  }
  return out;
}

ToyResponse response_for(const PolicyParams& params, const EntitySet& target) {
  if (target.universe() != params.vocab.size()) {
    throw std::invalid_argument("target set does not match the policy vocabulary");
  }
  ToyResponse r;
  if (params.kind == PolicyKind::SubsetBernoulli) {
    r.choice.assign(params.vocab.size(), 0);
    for (auto k : target.members()) r.choice[k] = 1;
  } else {
    if (target.size() > params.seq_length) {
      throw std::invalid_argument("target has " + std::to_string(target.size()) +
                                  " entities but the sequence holds " + std::to_string(params.seq_length));
    }
    r.choice.assign(params.seq_length, static_cast<int>(params.vocab.size()));
    std::size_t pos = 0;
    for (auto k : target.members()) r.choice[pos++] = static_cast<int>(k);
  }
  r.selection = target;
  return r;
}

EntitySet greedy_selection(const PolicyParams& params) {
  params.validate();
  std::vector<int> choice;
  if (params.kind == PolicyKind::SubsetBernoulli) {
    for (double t : params.theta) choice.push_back(t > 0.0 ? 1 : 0);
  } else {
    const std::size_t n = params.num_symbols();
    for (std::size_t pos = 0; pos < params.seq_length; ++pos) {
      const auto row = params.theta.begin() + static_cast<std::ptrdiff_t>(pos * n);
      choice.push_back(static_cast<int>(std::max_element(row, row + static_cast<std::ptrdiff_t>(n)) - row));
    }
  }
  return selection_from_choice(params, choice);
}

std::vector<double> inclusion_probabilities(const PolicyParams& params, double temperature) {
  require_temperature(temperature);
  if (params.kind != PolicyKind::SubsetBernoulli) {
    throw std::invalid_argument("inclusion probabilities are defined for subset policies only");
  }
  std::vector<double> probs;
  probs.reserve(params.theta.size());
  for (double t : params.theta) probs.push_back(sigmoid(t / temperature));
  return probs;
}

std::string render_response(const ToyResponse& resp, GateMode mode, const Vocabulary& vocab) {
  std::string list;
  for (auto k : resp.selection.members()) {
    if (!list.empty()) list += ", ";
    list += vocab[k];
  }
  if (mode == GateMode::None) return list;
  CoaResponse r;
  r.thought = std::string(kThought);
  r.answer = list.empty() ? std::string(kNothing) : list;
  if (mode == GateMode::Cot) return render_coa(r, FormatMode::Cot);
  r.general_description = std::string(kDescription);
  r.evidence = std::string(kEvidence);
  return render_coa(r, FormatMode::Coa);
}

PolicyParams sft_step(const PolicyParams& params, const ToyResponse& reference, double learning_rate) {
  const auto lg = logprob_and_grad(params, reference, 1.0);
  PolicyParams next = params;
  for (std::size_t i = 0; i < next.theta.size(); ++i) next.theta[i] += learning_rate * lg.grad[i];
  next.clamp();
  return next;
}

ToyPolicy::ToyPolicy(PolicyParams params) : params_(std::move(params)) { params_.validate(); }

std::vector<ToyResponse> ToyPolicy::sample(std::string_view, std::size_t group_size, double temperature,
                                           Rng& rng) const {
  return coa::sample(params_, group_size, temperature, rng);
}

LogProbGrad ToyPolicy::logprob_and_grad(std::string_view, const ToyResponse& resp,
                                        double temperature) const {
  return coa::logprob_and_grad(params_, resp, temperature);
}

std::string ToyPolicy::render(const ToyResponse& resp, GateMode mode) const {
  return render_response(resp, mode, params_.vocab);
}

void ToyPolicy::set_parameters(std::vector<double> theta) {
  PolicyParams next = params_;
  next.theta = std::move(theta);
  next.clamp();
  next.validate();
  params_ = std::move(next);
}

}  // namespace coa
