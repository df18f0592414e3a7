#pragma once

// Training loops: the RLVR loop around the GRPO objective, and the
// likelihood-imitation (SFT) baseline.

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "coa/data.hpp"
#include "coa/grpo.hpp"
#include "coa/policy.hpp"
#include "coa/reward.hpp"

namespace coa {

/// One optimizer step. `objective` is the maximized GRPO objective for RLVR
/// runs and the mean reference log-likelihood for SFT runs.
struct StepRecord {
  std::size_t step = 0;
  double mean_reward = 0.0;
  double mean_advantage_abs = 0.0;
  double mean_kl = 0.0;
  double clip_fraction = 0.0;
  double objective = 0.0;

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct TrainLog {
  std::vector<StepRecord> steps;

  friend bool operator==(const TrainLog&, const TrainLog&) = default;
};

class TrainError : public std::runtime_error {
 public:
  TrainError(std::size_t step, const std::string& what)
      : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

struct TrainOptions {
  GateMode render_mode = GateMode::Coa;  // how the policy's choices are rendered to text
  std::size_t threads = 1;
  // Called after every update with the live and the frozen reference policy.
  std::function<void(const StepRecord&, const Policy& current, const Policy& reference)> on_step;
};

// Records are matched against spec.vocabulary. Each step samples a batch of
// prompts from the current (old) policy, scores them with composite_reward,
// and applies cfg.inner_updates gradient-ascent updates. The reference policy
// is the step-0 snapshot. Identical seeds give identical logs for any thread
// count.
TrainLog train_rlvr(Policy& policy, const std::vector<QaRecord>& dataset, const RewardSpec& spec,
                    const GrpoConfig& cfg, const TrainOptions& options = {});

struct SftConfig {
  double learning_rate = 1e-5;
  std::size_t batch_size = 1;
  std::size_t epochs = 1;
  std::size_t max_steps = 0;
  std::uint64_t seed = 0;
};

// Minimizes the negative log-likelihood of each record's answer set. The
// logged mean_reward is the F1 of the greedy selection against the batch.
TrainLog train_sft(PolicyParams& params, const std::vector<QaRecord>& dataset, const SftConfig& cfg);

}  // namespace coa
