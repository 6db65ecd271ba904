#include "rlc/ppo.hpp"

#include <algorithm>
#include <cmath>

#include "rlc/error.hpp"
#include "rlc/gae.hpp"

namespace rlc {

void validate(const PPOConfig& cfg) {
  if (cfg.gamma < 0.0 || cfg.gamma > 1.0) throw Error("ppo config: gamma must be in [0, 1]");
  if (cfg.lam < 0.0 || cfg.lam > 1.0) throw Error("ppo config: lam must be in [0, 1]");
  if (cfg.clip_eps <= 0.0) throw Error("ppo config: clip_eps must be positive");
  if (cfg.ppo_epochs < 1) throw Error("ppo config: ppo_epochs must be at least 1");
  if (cfg.batch_size < 1) throw Error("ppo config: batch_size must be at least 1");
  if (cfg.value_coef < 0.0) throw Error("ppo config: value_coef must be non-negative");
  if (cfg.learning_rate <= 0.0) throw Error("ppo config: learning_rate must be positive");
  if (cfg.kl_coef < 0.0) throw Error("ppo config: kl_coef must be non-negative");
  if (cfg.entropy_coef < 0.0) throw Error("ppo config: entropy_coef must be non-negative");
  if (cfg.total_grad_steps < 1) throw Error("ppo config: total_grad_steps must be at least 1");
  if (cfg.max_new_tokens < 1) throw Error("ppo config: max_new_tokens must be set");
}

Eigen::VectorXd shape_rewards(const Eigen::VectorXd& old_logprobs,
                              const Eigen::VectorXd& ref_logprobs, double terminal_reward,
                              double kl_coef) {
  if (old_logprobs.size() != ref_logprobs.size())
    throw Error("shape_rewards: logprob vectors differ in length");
  if (old_logprobs.size() == 0) throw Error("shape_rewards: empty episode");
  Eigen::VectorXd rewards = -kl_coef * (old_logprobs - ref_logprobs);
  rewards[rewards.size() - 1] += terminal_reward;
  return rewards;
}

RolloutBatch assemble_batch(std::vector<Episode> episodes, const PPOConfig& cfg) {
  if (episodes.empty()) throw Error("assemble_batch: no episodes");

  RolloutBatch batch;
  batch.offsets.reserve(episodes.size());
  Eigen::Index total = 0;
  for (const Episode& ep : episodes) {
    const auto n = static_cast<Eigen::Index>(ep.response.size());
    if (n == 0) throw Error("assemble_batch: empty episode " + ep.id);
    if (ep.old_logprobs.size() != n || ep.ref_logprobs.size() != n || ep.values.size() != n ||
        ep.rewards.size() != n)
      throw Error("assemble_batch: inconsistent episode " + ep.id);
    batch.offsets.push_back(total);
    total += n;
  }
  batch.total_tokens = total;
  batch.advantages.resize(total);
  batch.returns.resize(total);

  for (size_t e = 0; e < episodes.size(); ++e) {
    const Episode& ep = episodes[e];
    const auto n = static_cast<Eigen::Index>(ep.response.size());
    const GaeResult<double> gae =
        compute_gae<double>(ep.rewards, ep.values, ep.bootstrap_value, cfg.gamma, cfg.lam);
    batch.advantages.segment(batch.offsets[e], n) = gae.advantages;
    batch.returns.segment(batch.offsets[e], n) = gae.returns;
  }

  // Batch-level advantage normalization (population std, floored).
  const double mean = batch.advantages.mean();
  const double var = (batch.advantages.array() - mean).square().mean();
  const double std = std::max(std::sqrt(var), 1e-8);
  batch.advantages = (batch.advantages.array() - mean) / std;

  batch.episodes = std::move(episodes);
  return batch;
}

Eigen::VectorXd flatten_old_logprobs(const RolloutBatch& batch) {
  Eigen::VectorXd flat(batch.total_tokens);
  for (size_t e = 0; e < batch.episodes.size(); ++e)
    flat.segment(batch.offsets[e], batch.episodes[e].old_logprobs.size()) =
        batch.episodes[e].old_logprobs;
  return flat;
}

namespace {

const std::string& episode_at(const RolloutBatch& batch, Eigen::Index token) {
  size_t e = batch.episodes.size() - 1;
  while (e > 0 && batch.offsets[e] > token) --e;
  return batch.episodes[e].id;
}

void check_flat_sizes(const RolloutBatch& batch, const Eigen::VectorXd& a,
                      const Eigen::VectorXd& b, const Eigen::VectorXd& c) {
  if (a.size() != batch.total_tokens || b.size() != batch.total_tokens ||
      c.size() != batch.total_tokens)
    throw Error("ppo_loss: flat inputs do not match the batch token count");
}

}  // namespace

PPOLossGrads ppo_loss_backward(const RolloutBatch& batch, const Eigen::VectorXd& new_logprobs,
                               const Eigen::VectorXd& new_values,
                               const Eigen::VectorXd& new_entropies, const PPOConfig& cfg) {
  check_flat_sizes(batch, new_logprobs, new_values, new_entropies);
  const Eigen::VectorXd old_logprobs = flatten_old_logprobs(batch);
  const auto n = batch.total_tokens;
  const double inv_n = 1.0 / static_cast<double>(n);

  PPOLossGrads out;
  out.d_logprob = Eigen::VectorXd::Zero(n);
  out.d_value.resize(n);
  out.d_entropy = Eigen::VectorXd::Constant(n, -cfg.entropy_coef * inv_n);

  double surrogate_sum = 0.0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double ratio = std::exp(new_logprobs[t] - old_logprobs[t]);
    if (!std::isfinite(ratio))
      throw Error("ppo_loss: non-finite probability ratio in episode " + episode_at(batch, t));
    const double adv = batch.advantages[t];
    const double clipped = std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
    const double surr_plain = ratio * adv;
    const double surr_clipped = clipped * adv;
    surrogate_sum += std::min(surr_plain, surr_clipped);
    // Gradient flows only while the unclipped branch attains the min.
    if (surr_plain <= surr_clipped) out.d_logprob[t] = -inv_n * adv * ratio;
  }

  const Eigen::ArrayXd value_err = new_values.array() - batch.returns.array();
  out.d_value = (cfg.value_coef * 2.0 * inv_n) * value_err.matrix();

  out.terms.policy_loss = -surrogate_sum * inv_n;
  out.terms.value_loss = value_err.square().mean();
  out.terms.mean_entropy = new_entropies.mean();
  out.terms.total = out.terms.policy_loss + cfg.value_coef * out.terms.value_loss -
                    cfg.entropy_coef * out.terms.mean_entropy;
  return out;
}

PPOLossTerms ppo_loss(const RolloutBatch& batch, const Eigen::VectorXd& new_logprobs,
                      const Eigen::VectorXd& new_values, const Eigen::VectorXd& new_entropies,
                      const PPOConfig& cfg) {
  return ppo_loss_backward(batch, new_logprobs, new_values, new_entropies, cfg).terms;
}

}  // namespace rlc
