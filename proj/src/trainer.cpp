#include "rlc/trainer.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "rlc/error.hpp"

namespace rlc {

using nlohmann::json;

const char* const kCurvesHeader = "step,mean_reward,mean_kl,mean_entropy,eval_score";

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

DecodingParams greedy_params(int max_new_tokens) {
  DecodingParams p;
  p.temperature = 0.0;
  p.top_k = 0;
  p.top_p = 1.0;
  p.max_new_tokens = max_new_tokens;
  return p;
}

}  // namespace

std::string format_curve_row(const CurveRow& row) {
  return std::to_string(row.step) + "," + fmt_double(row.mean_reward) + "," +
         fmt_double(row.mean_kl) + "," + fmt_double(row.mean_entropy) + "," +
         fmt_double(row.eval_score);
}

RolloutBatch collect_rollouts(const ToyPolicy& policy, const ToyPolicy& reference,
                              const std::vector<const TaskInstance*>& batch,
                              const DecodingParams& sampling, const PPOConfig& cfg,
                              const RewardFn& reward, std::mt19937_64& rng) {
  std::vector<Episode> episodes;
  episodes.reserve(batch.size());
  for (const TaskInstance* item : batch) {
    const std::vector<int> prompt = policy.tokenize(render_prompt(*item));
    const ToyPolicy::Rollout roll = policy.sample_rollout(prompt, sampling, rng);

    std::vector<int> body = roll.tokens;
    if (roll.terminal) body.pop_back();  // reward sees the text without the stop token
    const std::string completion = policy.detokenize(body);

    Episode ep;
    ep.id = item->id;
    ep.prompt = prompt;
    ep.response = roll.tokens;
    ep.old_logprobs = roll.logprobs;
    ep.values = roll.values;
    ep.ref_logprobs = reference.evaluate(prompt, roll.tokens).logprobs;
    // The reward scores whatever text was produced, so hitting the token
    // cap still ends the episode: there is no future left to bootstrap.
    // Paying gamma*V(s_T) on top of the reward would teach the policy to
    // dodge the stop token whenever predicted values run positive.
    ep.bootstrap_value = 0.0;
    ep.terminal_reward = reward(*item, completion);
    ep.rewards = shape_rewards(ep.old_logprobs, ep.ref_logprobs, ep.terminal_reward, cfg.kl_coef);
    episodes.push_back(std::move(ep));
  }
  return assemble_batch(std::move(episodes), cfg);
}

double exact_episode_kl(const ToyPolicy& policy, const ToyPolicy& reference,
                        const std::vector<int>& prompt, const std::vector<int>& response) {
  if (response.empty()) throw Error("exact_episode_kl: empty response");
  double total = 0.0;
  std::vector<int> prefix;
  prefix.reserve(response.size());
  for (int tok : response) {
    const Eigen::VectorXd lp = log_softmax(policy.next_token_logits(prompt, prefix));
    const Eigen::VectorXd lq = log_softmax(reference.next_token_logits(prompt, prefix));
    total += (lp.array().exp() * (lp - lq).array()).sum();
    prefix.push_back(tok);
  }
  // KL is nonnegative by Jensen; only summation roundoff can dip below.
  return std::max(0.0, total / static_cast<double>(response.size()));
}

double greedy_probe_score(ToyPolicy& policy, const Dataset& data, int n,
                          const DecodingParams& sampling, const RewardFn& reward) {
  const size_t count = std::min<size_t>(static_cast<size_t>(std::max(n, 1)), data.size());
  const DecodingParams greedy = greedy_params(sampling.max_new_tokens);
  double total = 0.0;
  for (size_t i = 0; i < count; ++i) {
    const TaskInstance& item = data[i];
    total += reward(item, policy.generate(render_prompt(item), greedy, 0));
  }
  return total / static_cast<double>(count);
}

TrainResult train(ToyPolicy& policy, const Dataset& data, const PPOConfig& cfg,
                  const DecodingParams& sampling_in, const RewardFn& reward, uint64_t seed,
                  const TrainerOptions& opt) {
  validate(cfg);
  if (policy.mode() != ModelMode::Trainable) throw Error("train: policy must be trainable");
  if (data.empty()) throw Error("train: empty dataset");
  if (!reward) throw Error("train: no reward function");

  DecodingParams sampling = sampling_in;
  sampling.max_new_tokens = cfg.max_new_tokens;

  TrainResult result;
  // Transient reward-source failures consume a budget; exhausting it
  // aborts the run instead of silently training on zeros.
  const RewardFn safe_reward = [&](const TaskInstance& item, const std::string& completion) {
    try {
      return reward(item, completion);
    } catch (const TransportError& e) {
      if (++result.reward_failures > opt.reward_failure_budget)
        throw Error(std::string("reward failure budget exhausted: ") + e.what());
      return 0.0;
    }
  };

  const ToyPolicy reference = policy.clone_frozen();
  std::mt19937_64 rng(seed);

  std::ofstream curves;
  if (!opt.out_dir.empty()) {
    std::filesystem::create_directories(opt.out_dir);
    curves.open(opt.out_dir / "curves.csv", std::ios::binary | std::ios::trunc);
    if (!curves) throw Error("cannot write " + (opt.out_dir / "curves.csv").string());
    curves << kCurvesHeader << '\n' << std::flush;
  }

  long iter = 0;
  while (result.grad_steps < cfg.total_grad_steps) {
    const std::vector<const TaskInstance*> batch_items =
        sample_batch(data, cfg.batch_size, rng);
    const RolloutBatch batch =
        collect_rollouts(policy, reference, batch_items, sampling, cfg, safe_reward, rng);
    result.episodes += static_cast<long>(batch.episodes.size());

    // Collection-time statistics (parameters still match the behavior policy).
    double reward_sum = 0.0, kl_sum = 0.0, entropy_sum = 0.0;
    for (const Episode& ep : batch.episodes) {
      reward_sum += ep.terminal_reward;
      kl_sum += exact_episode_kl(policy, reference, ep.prompt, ep.response);
      entropy_sum += policy.evaluate(ep.prompt, ep.response).entropies.mean();
    }
    const double n_eps = static_cast<double>(batch.episodes.size());

    for (int epoch = 0; epoch < cfg.ppo_epochs && result.grad_steps < cfg.total_grad_steps;
         ++epoch) {
      Eigen::VectorXd new_lp(batch.total_tokens);
      Eigen::VectorXd new_v(batch.total_tokens);
      Eigen::VectorXd new_h(batch.total_tokens);
      for (size_t e = 0; e < batch.episodes.size(); ++e) {
        const Episode& ep = batch.episodes[e];
        const ToyPolicy::SeqEval ev = policy.evaluate(ep.prompt, ep.response);
        const auto len = static_cast<Eigen::Index>(ep.response.size());
        new_lp.segment(batch.offsets[e], len) = ev.logprobs;
        new_v.segment(batch.offsets[e], len) = ev.values;
        new_h.segment(batch.offsets[e], len) = ev.entropies;
      }
      const PPOLossGrads grads = ppo_loss_backward(batch, new_lp, new_v, new_h, cfg);

      Eigen::VectorXd grad = Eigen::VectorXd::Zero(policy.num_params());
      for (size_t e = 0; e < batch.episodes.size(); ++e) {
        const Episode& ep = batch.episodes[e];
        const auto len = static_cast<Eigen::Index>(ep.response.size());
        policy.accumulate_grad(ep.prompt, ep.response,
                               grads.d_logprob.segment(batch.offsets[e], len),
                               grads.d_value.segment(batch.offsets[e], len),
                               grads.d_entropy.segment(batch.offsets[e], len), grad);
      }
      policy.adam_step(grad, cfg.learning_rate);
      ++result.grad_steps;
    }
    ++iter;

    const bool finished = result.grad_steps >= cfg.total_grad_steps;
    if (iter % std::max(opt.log_interval, 1) == 0 || finished) {
      CurveRow row;
      row.step = result.grad_steps;
      row.mean_reward = reward_sum / n_eps;
      row.mean_kl = kl_sum / n_eps;
      row.mean_entropy = entropy_sum / n_eps;
      row.eval_score =
          greedy_probe_score(policy, data, opt.eval_probe_instances, sampling, safe_reward);
      result.curves.push_back(row);
      if (curves.is_open()) {
        // One full line per write keeps concurrent readers consistent.
        curves << format_curve_row(row) << '\n' << std::flush;
        if (!curves) throw Error("failed while appending to curves.csv");
      }
    }
    if (opt.checkpoint_interval > 0 && !opt.out_dir.empty() &&
        (iter % opt.checkpoint_interval == 0 || finished)) {
      write_checkpoint(opt.out_dir / "checkpoints" / ("step-" + std::to_string(result.grad_steps)),
                       policy, cfg, sampling, rng);
    }
  }
  return result;
}

void write_checkpoint(const std::filesystem::path& dir, const ToyPolicy& policy,
                      const PPOConfig& cfg, const DecodingParams& sampling,
                      const std::mt19937_64& rng) {
  std::filesystem::create_directories(dir);
  policy.save(dir / "model");

  json snap;
  snap["ppo"] = {{"gamma", cfg.gamma},
                 {"lam", cfg.lam},
                 {"clip_eps", cfg.clip_eps},
                 {"ppo_epochs", cfg.ppo_epochs},
                 {"batch_size", cfg.batch_size},
                 {"value_coef", cfg.value_coef},
                 {"learning_rate", cfg.learning_rate},
                 {"kl_coef", cfg.kl_coef},
                 {"entropy_coef", cfg.entropy_coef},
                 {"total_grad_steps", cfg.total_grad_steps},
                 {"max_new_tokens", cfg.max_new_tokens}};
  snap["decoding"] = {{"temperature", sampling.temperature},
                      {"top_k", sampling.top_k},
                      {"top_p", sampling.top_p},
                      {"max_new_tokens", sampling.max_new_tokens}};
  std::ofstream cfg_out(dir / "config.json", std::ios::binary);
  if (!cfg_out) throw Error("cannot write " + (dir / "config.json").string());
  cfg_out << snap.dump(2) << '\n';

  std::ofstream rng_out(dir / "rng.txt", std::ios::binary);
  if (!rng_out) throw Error("cannot write " + (dir / "rng.txt").string());
  rng_out << rng << '\n';
}

Checkpoint read_checkpoint(const std::filesystem::path& dir) {
  std::ifstream cfg_in(dir / "config.json");
  if (!cfg_in) throw ParseError("cannot read " + (dir / "config.json").string());
  json snap;
  try {
    cfg_in >> snap;
  } catch (const json::parse_error& e) {
    throw ParseError("invalid checkpoint config: " + std::string(e.what()));
  }

  PPOConfig cfg;
  const json& p = snap.at("ppo");
  cfg.gamma = p.at("gamma").get<double>();
  cfg.lam = p.at("lam").get<double>();
  cfg.clip_eps = p.at("clip_eps").get<double>();
  cfg.ppo_epochs = p.at("ppo_epochs").get<int>();
  cfg.batch_size = p.at("batch_size").get<int>();
  cfg.value_coef = p.at("value_coef").get<double>();
  cfg.learning_rate = p.at("learning_rate").get<double>();
  cfg.kl_coef = p.at("kl_coef").get<double>();
  cfg.entropy_coef = p.at("entropy_coef").get<double>();
  cfg.total_grad_steps = p.at("total_grad_steps").get<long>();
  cfg.max_new_tokens = p.at("max_new_tokens").get<int>();

  DecodingParams sampling;
  const json& d = snap.at("decoding");
  sampling.temperature = d.at("temperature").get<double>();
  sampling.top_k = d.at("top_k").get<int>();
  sampling.top_p = d.at("top_p").get<double>();
  sampling.max_new_tokens = d.at("max_new_tokens").get<int>();

  std::ifstream rng_in(dir / "rng.txt");
  if (!rng_in) throw ParseError("cannot read " + (dir / "rng.txt").string());
  std::mt19937_64 rng;
  rng_in >> rng;
  if (!rng_in) throw ParseError("invalid RNG state in " + (dir / "rng.txt").string());

  return Checkpoint{ToyPolicy::load(dir / "model"), cfg, sampling, rng};
}

}  // namespace rlc
