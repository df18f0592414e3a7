#include "coa/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace coa {

void GrpoConfig::validate() const {
  if (group_size < 2) throw std::invalid_argument("grpo.group_size must be >= 2");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw std::invalid_argument("grpo.temperature must be > 0");
  }
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) {
    throw std::invalid_argument("grpo.clip_epsilon must lie in (0, 1)");
  }
  if (!(kl_beta >= 0.0) || !std::isfinite(kl_beta)) throw std::invalid_argument("grpo.kl_beta must be >= 0");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("grpo.learning_rate must be >= 0");
  }
  if (batch_size_prompts == 0) throw std::invalid_argument("grpo.batch_size_prompts must be >= 1");
  if (epochs == 0) throw std::invalid_argument("grpo.epochs must be >= 1");
  if (inner_updates == 0) throw std::invalid_argument("grpo.inner_updates must be >= 1");
  if (!(kl_clamp > 0.0)) throw std::invalid_argument("grpo.kl_clamp must be > 0");
}

void RolloutGroup::validate() const {
  const std::size_t g = rewards.size();
  if (g < 2) throw std::invalid_argument("rollout group needs at least 2 responses");
  if (logprob_old.size() != g || logprob_ref.size() != g || (!responses.empty() && responses.size() != g)) {
    throw std::invalid_argument("rollout group '" + prompt_id + "' has mismatched list lengths");
  }
  for (std::size_t i = 0; i < g; ++i) {
    if (!std::isfinite(logprob_old[i]) || !std::isfinite(logprob_ref[i]) || !std::isfinite(rewards[i])) {
      throw std::invalid_argument("rollout group '" + prompt_id + "' has a non-finite value at " +
                                  std::to_string(i));
    }
  }
}

std::vector<double> compute_advantages(std::span<const double> rewards) {
  const std::size_t g = rewards.size();
  if (g < 2) throw std::invalid_argument("advantages need a group of at least 2 rewards");
  for (double r : rewards) {
    if (!std::isfinite(r)) throw std::invalid_argument("rewards must be finite");
  }
  std::vector<double> adv(g, 0.0);
  const auto [lo, hi] = std::minmax_element(rewards.begin(), rewards.end());
  if (*lo == *hi) return adv;

  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(g);
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= static_cast<double>(g);
  const double sd = std::sqrt(var);
  for (std::size_t i = 0; i < g; ++i) adv[i] = (rewards[i] - mean) / sd;
  return adv;
}

double clipped_surrogate_term(double ratio, double advantage, double clip_epsilon) {
  const double clipped = std::clamp(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon);
  return std::min(ratio * advantage, clipped * advantage);
}

double kl_penalty(double logp_theta, double logp_ref, double clamp) {
  const double u = std::clamp(logp_ref - logp_theta, -clamp, clamp);
  if (std::abs(u) < 1e-3) {
    // Taylor form: exact zero only at u == 0, no cancellation near it.
    return u * u * (0.5 + u * (1.0 / 6.0 + u * (1.0 / 24.0 + u / 120.0)));
  }
  return std::expm1(u) - u;
}

GroupObjective grpo_objective(const RolloutGroup& group, std::span<const double> logp_theta,
                              const GrpoConfig& cfg) {
  group.validate();
  const std::size_t g = group.size();
  if (logp_theta.size() != g) {
    throw std::invalid_argument("logp_theta has " + std::to_string(logp_theta.size()) +
                                " entries, group has " + std::to_string(g));
  }
  const auto adv = compute_advantages(group.rewards);
  const double inv_g = 1.0 / static_cast<double>(g);
  const double eps = cfg.clip_epsilon;

  GroupObjective out;
  out.per_sample.resize(g);
  for (std::size_t i = 0; i < g; ++i) {
    SampleTerm& t = out.per_sample[i];
    t.advantage = adv[i];
    t.ratio = std::exp(logp_theta[i] - group.logprob_old[i]);
    const double unclipped = t.ratio * t.advantage;
    const double clipped = std::clamp(t.ratio, 1.0 - eps, 1.0 + eps) * t.advantage;
    t.surrogate = std::min(unclipped, clipped);
    t.clipped = clipped < unclipped;
    t.kl = kl_penalty(logp_theta[i], group.logprob_ref[i], cfg.kl_clamp);

    const double u = group.logprob_ref[i] - logp_theta[i];
    const double d_surrogate = t.clipped ? 0.0 : t.ratio * t.advantage;
    const double d_kl = std::abs(u) < cfg.kl_clamp ? -std::expm1(u) : 0.0;
    t.d_logp = inv_g * (d_surrogate - cfg.kl_beta * d_kl);

    out.objective += inv_g * (t.surrogate - cfg.kl_beta * t.kl);
    if (!std::isfinite(t.ratio) || !std::isfinite(t.surrogate) || !std::isfinite(t.kl) ||
        !std::isfinite(t.d_logp)) {
      throw std::domain_error("non-finite objective term for sample " + std::to_string(i) +
                              " of prompt '" + group.prompt_id + "' (ratio " + std::to_string(t.ratio) +
                              ")");
    }
  }
  return out;
}

std::vector<double> objective_gradient(const GroupObjective& obj,
                                       const std::vector<std::vector<double>>& grad_logp) {
  if (grad_logp.size() != obj.per_sample.size()) {
    throw std::invalid_argument("one log-probability gradient per sample is required");
  }
  if (grad_logp.empty()) return {};
  std::vector<double> grad(grad_logp.front().size(), 0.0);
  for (std::size_t i = 0; i < grad_logp.size(); ++i) {
    if (grad_logp[i].size() != grad.size()) throw std::invalid_argument("gradient size mismatch");
    const double w = obj.per_sample[i].d_logp;
    for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += w * grad_logp[i][k];
  }
  return grad;
}

}  // namespace coa
