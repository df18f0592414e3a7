#pragma once

// Desk-scale stochastic policies with exact log-probabilities and analytic
// gradients. They stand in for a language model so the optimizer, the format
// gate and the reward path can be checked end to end.
//
//   SubsetBernoulli       one logit per vocabulary entry; each entry is
//                         selected independently with p = sigmoid(theta/T).
//   CategoricalSequence   seq_length positions, each a softmax over the
//                         vocabulary plus one trailing "blank" symbol; the
//                         selection is the set of non-blank symbols emitted.

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "coa/reward.hpp"
#include "coa/rng.hpp"

namespace coa {

enum class PolicyKind { SubsetBernoulli, CategoricalSequence };

std::string_view to_string(PolicyKind kind) noexcept;
PolicyKind parse_policy_kind(std::string_view s);

inline constexpr double kLogitClamp = 30.0;

struct PolicyParams {
  PolicyKind kind = PolicyKind::SubsetBernoulli;
  std::vector<double> theta;
  Vocabulary vocab;
  std::size_t seq_length = 0;  // CategoricalSequence only

  static PolicyParams subset_bernoulli(Vocabulary vocab, double init = 0.0);
  static PolicyParams categorical_sequence(Vocabulary vocab, std::size_t seq_length, double init = 0.0);

  std::size_t num_symbols() const noexcept { return vocab.size() + 1; }
  std::size_t expected_size() const noexcept;
  // Throws std::invalid_argument on shape mismatch or non-finite theta.
  void validate() const;
  void clamp() noexcept;
};

struct ToyResponse {
  // SubsetBernoulli: 0/1 per vocabulary entry. CategoricalSequence: symbol per
  // position, where vocab.size() is the blank symbol.
  std::vector<int> choice;
  EntitySet selection;
};

struct LogProbGrad {
  double logprob = 0.0;
  std::vector<double> grad;
};

std::vector<ToyResponse> sample(const PolicyParams& params, std::size_t group_size,
                                double temperature, Rng& rng);

LogProbGrad logprob_and_grad(const PolicyParams& params, const ToyResponse& resp,
                             double temperature = 1.0);

// A response whose selection is exactly `target`. For sequences the members
// fill positions in index order followed by blanks; throws if they do not fit.
ToyResponse response_for(const PolicyParams& params, const EntitySet& target);

// Deterministic decoding: logit > 0 per entry, or per-position argmax.
EntitySet greedy_selection(const PolicyParams& params);

std::vector<double> inclusion_probabilities(const PolicyParams& params, double temperature = 1.0);

// Coa mode always yields text that passes the coa gate; cot mode yields
// thought+answer only; none yields the bare comma-separated list.
std::string render_response(const ToyResponse& resp, GateMode mode, const Vocabulary& vocab);

// One gradient-descent step on -log p(reference) at temperature 1.
PolicyParams sft_step(const PolicyParams& params, const ToyResponse& reference, double learning_rate);

/// Handle the trainer drives. Implementations must be safe for concurrent
/// const calls.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual std::vector<ToyResponse> sample(std::string_view prompt_id, std::size_t group_size,
                                          double temperature, Rng& rng) const = 0;
  virtual LogProbGrad logprob_and_grad(std::string_view prompt_id, const ToyResponse& resp,
                                       double temperature) const = 0;
  virtual std::string render(const ToyResponse& resp, GateMode mode) const = 0;

  virtual const std::vector<double>& parameters() const = 0;
  virtual void set_parameters(std::vector<double> theta) = 0;
  virtual std::unique_ptr<Policy> clone() const = 0;
};

/// Prompt-independent toy policy over PolicyParams.
class ToyPolicy final : public Policy {
 public:
  explicit ToyPolicy(PolicyParams params);

  std::vector<ToyResponse> sample(std::string_view prompt_id, std::size_t group_size,
                                  double temperature, Rng& rng) const override;
  LogProbGrad logprob_and_grad(std::string_view prompt_id, const ToyResponse& resp,
                               double temperature) const override;
  std::string render(const ToyResponse& resp, GateMode mode) const override;

  const std::vector<double>& parameters() const override { return params_.theta; }
  void set_parameters(std::vector<double> theta) override;
  std::unique_ptr<Policy> clone() const override { return std::make_unique<ToyPolicy>(*this); }

  const PolicyParams& params() const noexcept { return params_; }

 private:
  PolicyParams params_;
};

}  // namespace coa
