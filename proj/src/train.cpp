#include "coa/train.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include "coa/metrics.hpp"
#include "coa/rng.hpp"

namespace coa {

namespace {

// Runs fn(i) for i in [0, n) on up to `threads` workers. Results must be written
// to per-index slots; the first exception by index is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  auto guarded = [&](std::size_t i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) guarded(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const std::size_t workers = std::min(threads, n);
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) guarded(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                                                   std::size_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = Rng::substream(seed, epoch, hash_string("shuffle"));
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < n; i += batch_size) {
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(n, i + batch_size)));
  }
  return batches;
}

struct Rollout {
  std::vector<ToyResponse> samples;
  RolloutGroup group;
};

struct UpdateTerms {
  GroupObjective objective;
  std::vector<double> grad;
};

}  // namespace

TrainLog train_rlvr(Policy& policy, const std::vector<QaRecord>& dataset, const RewardSpec& spec,
                    const GrpoConfig& cfg, const TrainOptions& options) {
  cfg.validate();
  if (dataset.empty()) throw std::invalid_argument("training dataset is empty");
  std::vector<EntitySet> truth;
  truth.reserve(dataset.size());
  for (const auto& rec : dataset) truth.push_back(record_answer(rec, spec.vocabulary));

  const std::unique_ptr<Policy> reference = policy.clone();
  TrainLog log;
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& batch : make_batches(dataset.size(), cfg.batch_size_prompts, cfg.seed, epoch)) {
      if (cfg.max_steps && step >= cfg.max_steps) return log;
      const std::unique_ptr<Policy> old = policy.clone();
      std::vector<Rollout> rollouts(batch.size());

      try {
        parallel_for(batch.size(), options.threads, [&](std::size_t j) {
          const QaRecord& rec = dataset[batch[j]];
          Rng rng = Rng::substream(cfg.seed, step, hash_string(rec.id));
          Rollout& ro = rollouts[j];
          ro.samples = old->sample(rec.id, cfg.group_size, cfg.temperature, rng);
          ro.group.prompt_id = rec.id;
          for (const auto& s : ro.samples) {
            std::string text = old->render(s, options.render_mode);
            ro.group.rewards.push_back(composite_reward(text, truth[batch[j]], spec));
            ro.group.responses.push_back(std::move(text));
            ro.group.logprob_old.push_back(old->logprob_and_grad(rec.id, s, cfg.temperature).logprob);
            ro.group.logprob_ref.push_back(reference->logprob_and_grad(rec.id, s, cfg.temperature).logprob);
          }
        });
      } catch (const std::exception& e) {
        throw TrainError(step, std::string("rollout failed: ") + e.what());
      }

      StepRecord rec;
      rec.step = step;
      std::size_t n_samples = 0;
      std::size_t n_clipped = 0;
      std::size_t n_terms = 0;
      for (const auto& ro : rollouts) {
        for (double r : ro.group.rewards) rec.mean_reward += r;
        n_samples += ro.group.size();
      }
      rec.mean_reward /= static_cast<double>(n_samples);

      for (std::size_t u = 0; u < cfg.inner_updates; ++u) {
        std::vector<UpdateTerms> terms(batch.size());
        try {
          parallel_for(batch.size(), options.threads, [&](std::size_t j) {
            const Rollout& ro = rollouts[j];
            std::vector<double> logp(ro.samples.size());
            std::vector<std::vector<double>> grads(ro.samples.size());
            for (std::size_t i = 0; i < ro.samples.size(); ++i) {
              auto lg = policy.logprob_and_grad(ro.group.prompt_id, ro.samples[i], cfg.temperature);
              logp[i] = lg.logprob;
              grads[i] = std::move(lg.grad);
            }
            terms[j].objective = grpo_objective(ro.group, logp, cfg);
            terms[j].grad = objective_gradient(terms[j].objective, grads);
          });
        } catch (const std::exception& e) {
          throw TrainError(step, e.what());
        }

        std::vector<double> theta = policy.parameters();
        std::vector<double> grad(theta.size(), 0.0);
        const double inv_b = 1.0 / static_cast<double>(batch.size());
        for (const auto& t : terms) {
          for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += inv_b * t.grad[k];
          for (const auto& s : t.objective.per_sample) {
            if (s.clipped) ++n_clipped;
            ++n_terms;
            if (u == 0) {
              rec.mean_advantage_abs += std::abs(s.advantage);
              rec.mean_kl += s.kl;
            }
          }
          if (u == 0) rec.objective += inv_b * t.objective.objective;
        }
        for (std::size_t k = 0; k < theta.size(); ++k) {
          theta[k] += cfg.learning_rate * grad[k];
          if (!std::isfinite(theta[k])) throw TrainError(step, "parameter update produced a non-finite value");
        }
        policy.set_parameters(std::move(theta));
      }
      rec.mean_advantage_abs /= static_cast<double>(n_samples);
      rec.mean_kl /= static_cast<double>(n_samples);
      rec.clip_fraction = n_terms ? static_cast<double>(n_clipped) / static_cast<double>(n_terms) : 0.0;

      log.steps.push_back(rec);
      if (options.on_step) options.on_step(rec, policy, *reference);
      ++step;
    }
  }
  return log;
}

TrainLog train_sft(PolicyParams& params, const std::vector<QaRecord>& dataset, const SftConfig& cfg) {
  params.validate();
  if (dataset.empty()) throw std::invalid_argument("training dataset is empty");
  if (cfg.batch_size == 0 || cfg.epochs == 0) throw std::invalid_argument("sft batch_size and epochs must be >= 1");
  if (!(cfg.learning_rate >= 0.0)) throw std::invalid_argument("sft learning_rate must be >= 0");

  std::vector<ToyResponse> references;
  references.reserve(dataset.size());
  for (const auto& rec : dataset) references.push_back(response_for(params, record_answer(rec, params.vocab)));

  TrainLog log;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& batch : make_batches(dataset.size(), cfg.batch_size, cfg.seed, epoch)) {
      if (cfg.max_steps && step >= cfg.max_steps) return log;
      std::vector<double> grad(params.theta.size(), 0.0);
      StepRecord rec;
      rec.step = step;
      const double inv_b = 1.0 / static_cast<double>(batch.size());
      for (auto i : batch) {
        const auto lg = logprob_and_grad(params, references[i], 1.0);
        rec.objective += inv_b * lg.logprob;
        for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += inv_b * lg.grad[k];
      }
      for (std::size_t k = 0; k < grad.size(); ++k) params.theta[k] += cfg.learning_rate * grad[k];
      params.clamp();
      const EntitySet greedy = greedy_selection(params);
      for (auto i : batch) rec.mean_reward += inv_b * example_prf(greedy, references[i].selection).f1;
      log.steps.push_back(rec);
      ++step;
    }
  }
  return log;
}

}  // namespace coa
