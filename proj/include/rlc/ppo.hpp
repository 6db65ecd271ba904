#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace rlc {

// Optimization hyper-parameters for policy training.  `max_new_tokens`
// has no usable default and must be set by the caller.
struct PPOConfig {
  double gamma = 0.99;          // discount
  double lam = 0.95;            // GAE lambda
  double clip_eps = 0.2;        // surrogate clip width
  int ppo_epochs = 4;           // passes over each rollout batch
  int batch_size = 12;          // episodes per rollout batch
  double value_coef = 1.0;      // weight of the value loss
  double learning_rate = 1e-4;  // Adam step size
  double kl_coef = 0.05;        // per-token penalty toward the reference policy
  double entropy_coef = 0.01;   // weight of the entropy bonus
  long total_grad_steps = 6000; // optimizer updates before stopping
  int max_new_tokens = 0;       // episode length cap (required)
};

// Throws Error when a field is out of range.
void validate(const PPOConfig& cfg);

// One sampled episode with everything PPO needs frozen at collection time.
struct Episode {
  std::string id;                // task instance id, used in diagnostics
  std::vector<int> prompt;       // token ids
  std::vector<int> response;     // sampled tokens (stop token included)
  Eigen::VectorXd old_logprobs;  // behavior policy log pi(a_t | s_t)
  Eigen::VectorXd ref_logprobs;  // frozen reference log probs of the same tokens
  Eigen::VectorXd values;        // V(s_t) at collection
  Eigen::VectorXd rewards;       // shaped per-step rewards
  double bootstrap_value = 0.0;  // V(s_T) when truncated, 0 when terminal
  double terminal_reward = 0.0;  // raw evaluator reward (for logging)
};

// Per-step reward shaping: each step pays the KL penalty
// kl_coef * (old_logprob - ref_logprob) and the episode's scalar reward
// is added on the final step.
Eigen::VectorXd shape_rewards(const Eigen::VectorXd& old_logprobs,
                              const Eigen::VectorXd& ref_logprobs, double terminal_reward,
                              double kl_coef);

// Episodes plus flattened GAE outputs.  Advantages are normalized to
// mean 0 / std 1 across the whole batch (std floored at 1e-8).
struct RolloutBatch {
  std::vector<Episode> episodes;
  Eigen::VectorXd advantages;          // flattened, normalized
  Eigen::VectorXd returns;             // flattened value targets
  std::vector<Eigen::Index> offsets;   // episode start offsets into the flat arrays
  Eigen::Index total_tokens = 0;
};

RolloutBatch assemble_batch(std::vector<Episode> episodes, const PPOConfig& cfg);

// Flat per-token views of a quantity across all episodes of a batch.
Eigen::VectorXd flatten_old_logprobs(const RolloutBatch& batch);

struct PPOLossTerms {
  double policy_loss = 0.0;   // clipped surrogate (negated, to minimize)
  double value_loss = 0.0;    // MSE against returns
  double mean_entropy = 0.0;  // bonus term (entered negatively in total)
  double total = 0.0;
};

// Clipped-surrogate PPO objective over one batch.  All means are over
// tokens.  `new_*` are flat per-token quantities under the current
// parameters, aligned with batch offsets.  A non-finite probability
// ratio raises Error naming the offending episode.
PPOLossTerms ppo_loss(const RolloutBatch& batch, const Eigen::VectorXd& new_logprobs,
                      const Eigen::VectorXd& new_values, const Eigen::VectorXd& new_entropies,
                      const PPOConfig& cfg);

// Loss plus analytic partials of `total` w.r.t. each per-token input;
// feed these through the policy's backward pass to get parameter
// gradients.
struct PPOLossGrads {
  PPOLossTerms terms;
  Eigen::VectorXd d_logprob;
  Eigen::VectorXd d_value;
  Eigen::VectorXd d_entropy;
};

PPOLossGrads ppo_loss_backward(const RolloutBatch& batch, const Eigen::VectorXd& new_logprobs,
                               const Eigen::VectorXd& new_values,
                               const Eigen::VectorXd& new_entropies, const PPOConfig& cfg);

}  // namespace rlc
