#pragma once

// Group-relative policy optimization.
//
// For one prompt the old policy samples G responses with rewards r_i. Each
// response gets the group-normalized advantage
//
//   A_i = (r_i - mean(r)) / std(r)        (population std; 0 if std == 0)
//
// and the per-prompt objective, which training MAXIMIZES, is
//
//   J = 1/G sum_i [ min(rho_i A_i, clip(rho_i, 1-eps, 1+eps) A_i) - beta k3_i ]
//
// with the sequence-level ratio rho_i = exp(logp_theta_i - logp_old_i) and the
// non-negative KL estimator k3_i = exp(u) - u - 1, u = logp_ref_i - logp_theta_i.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace coa {

struct GrpoConfig {
  std::size_t group_size = 8;
  double temperature = 1.0;
  double clip_epsilon = 0.2;
  double kl_beta = 0.001;
  double learning_rate = 1e-6;
  std::size_t batch_size_prompts = 14;  // 14 prompts x 8 responses = 112
  std::size_t epochs = 1;
  std::size_t inner_updates = 1;  // gradient steps per sampled batch; old policy refreshed after
  std::size_t max_steps = 0;      // 0 = no cap
  double kl_clamp = 30.0;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct RolloutGroup {
  std::string prompt_id;
  std::vector<std::string> responses;
  std::vector<double> logprob_old;
  std::vector<double> logprob_ref;
  std::vector<double> rewards;

  std::size_t size() const noexcept { return rewards.size(); }
  void validate() const;
};

std::vector<double> compute_advantages(std::span<const double> rewards);

double clipped_surrogate_term(double ratio, double advantage, double clip_epsilon);

double kl_penalty(double logp_theta, double logp_ref, double clamp = 30.0);

struct SampleTerm {
  double ratio = 1.0;
  double advantage = 0.0;
  double surrogate = 0.0;
  double kl = 0.0;
  bool clipped = false;      // the clipped branch is the strict minimum
  double d_logp = 0.0;       // d objective / d logp_theta_i
};

struct GroupObjective {
  double objective = 0.0;
  std::vector<SampleTerm> per_sample;
};

// Throws std::domain_error when any intermediate is non-finite.
GroupObjective grpo_objective(const RolloutGroup& group, std::span<const double> logp_theta,
                              const GrpoConfig& cfg);

// sum_i d_logp_i * grad_logp_i, the objective gradient w.r.t. policy parameters.
std::vector<double> objective_gradient(const GroupObjective& obj,
                                       const std::vector<std::vector<double>>& grad_logp);

}  // namespace coa
