#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <random>
#include <string>

#include "rlc/eval.hpp"
#include "rlc/model.hpp"

namespace rlc {

// An answer evaluator.  Implementations either wrap a frozen text model
// (self-evaluation) or follow a scripted rule (verification harness).
// Every judge counts replies it could not parse.
class Judge {
 public:
  virtual ~Judge() = default;

  virtual Verdict verdict(const TaskInstance& item, const std::string& answer) = 0;
  virtual std::optional<int> quality(const TaskInstance& item, const std::string& answer) = 0;
  // Preference between two answers in presentation-independent order:
  // First refers to `a`, Second to `b`, regardless of how the judge saw them.
  virtual Preference compare(const TaskInstance& item, const std::string& a,
                             const std::string& b) = 0;
  virtual std::string identity() const = 0;

  long unparsed_count() const { return unparsed_.load(); }

 protected:
  void note_unparsed() { unparsed_.fetch_add(1); }

 private:
  std::atomic<long> unparsed_{0};
};

// Judge backed by a frozen TextModel: renders the evaluation prompt,
// queries the model greedily (temperature 0) and parses the reply.
// Comparison calls randomize which candidate is presented first and undo
// the permutation afterwards, cancelling position bias on average.
class ModelJudge final : public Judge {
 public:
  // `model` must be frozen; `seed` drives the comparison order coin.
  ModelJudge(std::shared_ptr<TextModel> model, PromptLibrary library, uint64_t seed,
             int max_reply_tokens = 16);

  Verdict verdict(const TaskInstance& item, const std::string& answer) override;
  std::optional<int> quality(const TaskInstance& item, const std::string& answer) override;
  Preference compare(const TaskInstance& item, const std::string& a,
                     const std::string& b) override;
  std::string identity() const override;

  const PromptLibrary& library() const { return library_; }

 private:
  std::string ask(const std::string& prompt);

  std::shared_ptr<TextModel> model_;
  PromptLibrary library_;
  std::mt19937_64 rng_;
  DecodingParams greedy_;
};

// Scalar reward for reinforcement learning: Verdict yes -> 1.0 / no -> 0.0,
// Quality score -> (score - 1) / 9; unparseable judgments count and score 0.
// Compare mode has no single-answer reward and is rejected.
double self_eval_reward(Judge& judge, EvalMode mode, const TaskInstance& item,
                        const std::string& completion);

}  // namespace rlc
