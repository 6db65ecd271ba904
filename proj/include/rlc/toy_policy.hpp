#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "rlc/model.hpp"

namespace rlc {

// Small character-level policy network used as the trainable backend.
//
// Tokens are single characters from a user-supplied vocabulary; one of
// them may be designated as the stop token that ends generation.  Each
// decoding step is a one-hidden-layer network over hand-rolled features
// of (prompt, partial response):
//
//   x = [ onehot(prompt[t])        read pointer (PAD past the end)
//         onehot(previous output)  BOS at the first step
//         mean prompt onehot       bag-of-characters summary
//         onehot(min(t, P-1))      response position
//         1{output so far tracks the pointer} ]
//
//   h      = tanh(W1 x + b1)
//   logits = logit_gain * (W2 h + Ws x + b2)      (over the vocabulary)
//   value  = value_gain * (w3.h + s3.x + b3)      (state-value estimate)
//
// The skip matrix Ws gives pointer-style tasks a linear solution path;
// the output gains let small learning rates move logits across a useful
// range.  Weights start at N(0, init_scale^2), so a fresh model is close
// to uniform over the vocabulary.  All parameters live in one flat
// vector (Eigen maps carve out the blocks), which keeps Adam and
// finite-difference checks trivial.
class ToyPolicy final : public TextModel {
 public:
  struct Options {
    int width = 32;              // hidden units
    int max_positions = 16;      // response positions with distinct encodings
    double logit_gain = 60.0;
    double value_gain = 30.0;
    double init_scale = 0.002;
    double stop_bias = 0.0;      // constant prior added to the stop logit
    int max_prompt_chars = 512;  // context budget for incoming prompts
    std::string stop;            // stop character; empty disables stopping
  };

  // `vocab` lists the distinct token characters; order defines token ids.
  ToyPolicy(std::string vocab, Options opt, uint64_t seed);

  // --- TextModel ----------------------------------------------------
  std::string generate(const std::string& prompt, const DecodingParams& params,
                       uint64_t seed) override;
  LogProbSeq score(const std::string& prompt, const std::string& completion) override;
  ModelMode mode() const override { return mode_; }
  std::string identity() const override;

  // --- tokenizer ------------------------------------------------------
  std::vector<int> tokenize(const std::string& text) const;  // throws on unknown chars
  std::string detokenize(const std::vector<int>& tokens) const;
  int vocab_size() const { return vocab_size_; }
  int stop_token() const { return stop_token_; }  // -1 when no stop character
  const std::string& vocab() const { return vocab_; }

  // --- distribution probes ---------------------------------------------
  // Raw next-token logits given the prompt and an already-emitted prefix.
  Eigen::VectorXd next_token_logits(const std::vector<int>& prompt,
                                    const std::vector<int>& response_prefix) const;

  // --- sampling / teacher forcing ---------------------------------------
  struct Rollout {
    std::vector<int> tokens;   // sampled response (includes the stop token if emitted)
    Eigen::VectorXd logprobs;  // full-softmax log-prob of each sampled token
    Eigen::VectorXd values;    // state value before emitting token t
    Eigen::VectorXd entropies; // full-softmax entropy at each step
    bool terminal = false;     // ended by the stop token (vs. length cutoff)
    double bootstrap_value = 0.0;  // value of the successor state when truncated
  };
  Rollout sample_rollout(const std::vector<int>& prompt, const DecodingParams& params,
                         std::mt19937_64& rng) const;

  struct SeqEval {
    Eigen::VectorXd logprobs;
    Eigen::VectorXd values;
    Eigen::VectorXd entropies;
  };
  // Teacher-forced pass over a fixed response under current parameters.
  SeqEval evaluate(const std::vector<int>& prompt, const std::vector<int>& response) const;

  // Value of the state reached after the whole response was emitted.
  double successor_value(const std::vector<int>& prompt, const std::vector<int>& response) const;

  // --- differentiation ---------------------------------------------------
  // Backpropagates given per-step loss partials and accumulates into
  // `grad` (same layout as params()):
  //   d_logprob[t]  = dL / d log pi(response[t] | state_t)
  //   d_value[t]    = dL / d value_t
  //   d_entropy[t]  = dL / d entropy_t
  void accumulate_grad(const std::vector<int>& prompt, const std::vector<int>& response,
                       const Eigen::VectorXd& d_logprob, const Eigen::VectorXd& d_value,
                       const Eigen::VectorXd& d_entropy, Eigen::Ref<Eigen::VectorXd> grad) const;

  // --- optimization --------------------------------------------------
  const Eigen::VectorXd& params() const { return params_; }
  void set_params(const Eigen::VectorXd& p);
  Eigen::Index num_params() const { return params_.size(); }
  // One Adam update (beta1 0.9, beta2 0.999, eps 1e-8); frozen models refuse.
  void adam_step(const Eigen::VectorXd& grad, double learning_rate);

  // --- lifecycle ------------------------------------------------------
  ToyPolicy clone_frozen() const;
  void save(const std::filesystem::path& dir) const;
  static ToyPolicy load(const std::filesystem::path& dir);

  const Options& options() const { return opt_; }

 private:
  struct StepCtx;  // per-step forward cache (features, activations)

  void init_param_layout();
  void build_features(const std::vector<int>& prompt, const Eigen::VectorXd& pooled, int t,
                      int last_token, bool on_track, Eigen::VectorXd& x) const;
  Eigen::VectorXd pooled_prompt(const std::vector<int>& prompt) const;
  StepCtx forward_step(const std::vector<int>& prompt, const Eigen::VectorXd& pooled, int t,
                       int last_token, bool on_track) const;

  std::string vocab_;
  std::unordered_map<char, int> char_to_id_;
  int vocab_size_ = 0;
  int stop_token_ = -1;
  Options opt_;
  uint64_t seed_ = 0;
  ModelMode mode_ = ModelMode::Trainable;

  int feat_ids_ = 0;  // vocab + BOS + PAD
  int dim_x_ = 0;

  Eigen::VectorXd params_;
  // Adam state
  Eigen::VectorXd adam_m_, adam_v_;
  long adam_t_ = 0;

  // Block offsets into params_ (W1, b1, W2, Ws, b2, w3, s3, b3).
  struct Blocks {
    Eigen::Index w1 = 0, b1 = 0, w2 = 0, ws = 0, b2 = 0, w3 = 0, s3 = 0, b3 = 0, total = 0;
  } blk_;
};

}  // namespace rlc
