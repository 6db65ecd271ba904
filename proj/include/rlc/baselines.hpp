#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "rlc/dataset.hpp"
#include "rlc/metrics.hpp"
#include "rlc/model.hpp"
#include "rlc/toy_policy.hpp"
#include "rlc/trainer.hpp"

namespace rlc {

// Direct generation: a single completion per instance.
std::string direct_generation(TextModel& model, const TaskInstance& item,
                              const DecodingParams& params, uint64_t seed);

// Majority vote over k sampled reasoning paths.
struct VoteRecord {
  std::string instance_id;
  std::string answer;  // winning extracted answer (canonical form)
  int vote_count = 0;  // votes the winner received
  int vote_total = 0;  // number of sampled paths
};

// Samples k completions, extracts final answers and majority-votes;
// ties break toward the lexicographically smallest answer.
VoteRecord self_consistency_vote(TextModel& model, const TaskInstance& item, int k,
                                 const DecodingParams& params, std::mt19937_64& rng);

// Self-consistency answers for a whole dataset (the LMSI labeling step).
std::vector<VoteRecord> pseudo_labels(TextModel& model, const Dataset& data, int k,
                                      const DecodingParams& params, uint64_t seed);

// NDJSON round-trip: {instance_id, answer, vote_count, vote_total}.
void save_pseudo_labels(const std::vector<VoteRecord>& records,
                        const std::filesystem::path& path);
std::vector<VoteRecord> load_pseudo_labels(const std::filesystem::path& path);

// --- supervised fine-tuning (LMSI) ------------------------------------

struct FinetuneOptions {
  int epochs = 3;
  int batch_size = 12;
  double learning_rate = 1e-4;
};

struct FinetuneResult {
  std::vector<double> epoch_losses;  // mean negative log-likelihood per epoch
  long grad_steps = 0;
  long skipped_pairs = 0;  // targets that failed to tokenize
};

// Cross-entropy fine-tuning of the policy on (prompt, target) pairs;
// targets get the stop token appended when the policy defines one.
FinetuneResult finetune_supervised(ToyPolicy& policy,
                                   const std::vector<std::pair<std::string, std::string>>& pairs,
                                   const FinetuneOptions& opt, uint64_t seed);

// Full LMSI round: label the dataset with self-consistency votes, then
// fine-tune the policy on its own pseudo-labels.
struct LmsiResult {
  std::vector<VoteRecord> labels;
  FinetuneResult finetune;
};
LmsiResult lmsi_round(ToyPolicy& policy, const Dataset& data, int paths,
                      const DecodingParams& params, const FinetuneOptions& opt, uint64_t seed);

// --- metric-reward fine-tuning (RLFT) ----------------------------------

// Reward for supervised RL: exact answer match on reasoning tasks, the
// named text metric otherwise.  Instances must carry references.
RewardFn make_metric_reward(const std::string& metric_name,
                            std::shared_ptr<TokenEmbedder> embedder);

// Per-instance metric rows for completions over labeled instances
// (unlabeled instances are skipped).  Metric name "accuracy" maps to
// exact answer matching.
MetricReport build_report(const Dataset& data, const std::vector<std::string>& completions,
                          const std::vector<std::string>& metric_names,
                          std::shared_ptr<TokenEmbedder> embedder);

}  // namespace rlc
