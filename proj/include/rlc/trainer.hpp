#pragma once

#include <filesystem>
#include <functional>
#include <random>

#include "rlc/dataset.hpp"
#include "rlc/ppo.hpp"
#include "rlc/toy_policy.hpp"

namespace rlc {

// Scalar reward for one completion.  Self-evaluation training and
// metric-reward training differ only in the function plugged in here.
using RewardFn = std::function<double(const TaskInstance& item, const std::string& completion)>;

struct TrainerOptions {
  std::filesystem::path out_dir;      // empty: keep everything in memory
  int log_interval = 1;               // curve row every n update iterations
  int checkpoint_interval = 0;        // checkpoint every n iterations (0: none)
  int eval_probe_instances = 64;      // greedy probe size for the eval_score column
  int reward_failure_budget = 5;      // tolerated transport failures of the reward source
};

// One row of curves.csv; `step` counts optimizer updates.
struct CurveRow {
  long step = 0;
  double mean_reward = 0.0;   // raw evaluator reward over the batch
  double mean_kl = 0.0;       // exact per-token KL(policy || reference) at collection
  double mean_entropy = 0.0;  // mean next-token entropy at collection
  double eval_score = 0.0;    // mean reward of greedy completions on the probe set
};

struct TrainResult {
  std::vector<CurveRow> curves;
  long grad_steps = 0;
  long episodes = 0;
  long reward_failures = 0;
};

// Samples one episode batch, shapes rewards against the frozen reference
// and prepares GAE targets.  Exposed separately for testing.
RolloutBatch collect_rollouts(const ToyPolicy& policy, const ToyPolicy& reference,
                              const std::vector<const TaskInstance*>& batch,
                              const DecodingParams& sampling, const PPOConfig& cfg,
                              const RewardFn& reward, std::mt19937_64& rng);

// PPO fine-tuning of `policy` against `reward`.  A frozen copy taken at
// entry serves as the KL reference.  Deterministic given (policy state,
// data, configs, seed): two runs with identical inputs produce identical
// curves and parameters.  When `opt.out_dir` is set, writes curves.csv
// (appending one finished row at a time) and checkpoints/step-N/
// directories containing parameters, the config snapshot and the
// trainer RNG state.
TrainResult train(ToyPolicy& policy, const Dataset& data, const PPOConfig& cfg,
                  const DecodingParams& sampling, const RewardFn& reward, uint64_t seed,
                  const TrainerOptions& opt);

// Exact KL(policy || reference) averaged over the response tokens of one
// episode, computed over the full vocabulary at each visited state.
double exact_episode_kl(const ToyPolicy& policy, const ToyPolicy& reference,
                        const std::vector<int>& prompt, const std::vector<int>& response);

// Mean reward of greedy completions over the first `n` instances.
double greedy_probe_score(ToyPolicy& policy, const Dataset& data, int n,
                          const DecodingParams& sampling, const RewardFn& reward);

// --- checkpoints -----------------------------------------------------

void write_checkpoint(const std::filesystem::path& dir, const ToyPolicy& policy,
                      const PPOConfig& cfg, const DecodingParams& sampling,
                      const std::mt19937_64& rng);

struct Checkpoint {
  ToyPolicy policy;
  PPOConfig config;
  DecodingParams sampling;
  std::mt19937_64 rng;
};

Checkpoint read_checkpoint(const std::filesystem::path& dir);

// Formats one curves.csv row (shortest round-trip double format).
std::string format_curve_row(const CurveRow& row);
extern const char* const kCurvesHeader;

}  // namespace rlc
