#pragma once

#include <Eigen/Core>
#include <random>

namespace rlc {

// Sampling controls for autoregressive generation.  temperature == 0
// selects greedy decoding; top_k <= 0 and top_p >= 1 disable their
// respective filters.
struct DecodingParams {
  double temperature = 1.0;
  int top_k = 50;
  double top_p = 0.95;
  int max_new_tokens = 64;
};

// Numerically stable log-softmax / softmax over a logit vector.
Eigen::VectorXd log_softmax(const Eigen::VectorXd& logits);
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

// Entropy (nats) of the full softmax distribution of `logits`.
double softmax_entropy(const Eigen::VectorXd& logits);

// Turns raw logits into the filtered sampling distribution:
//   1. divide logits by temperature (temperature 0 => all mass on the
//      argmax, ties broken toward the lowest index);
//   2. keep the top_k highest logits, ties again toward lower indices;
//   3. over the survivors in descending probability order, keep the
//      shortest prefix whose *unrenormalized* softmax mass reaches top_p;
//   4. renormalize once at the end.
// Returns a probability vector over the full vocabulary with zeros on
// filtered entries.
Eigen::VectorXd filter_logits(const Eigen::VectorXd& logits, const DecodingParams& params);

// Inverse-CDF draw from a probability vector; deterministic in `rng`
// across platforms (no std::*_distribution involved).
int sample_from_probs(const Eigen::VectorXd& probs, std::mt19937_64& rng);

// Uniform double in [0, 1) from the top 53 bits of the generator.
double uniform_unit(std::mt19937_64& rng);

}  // namespace rlc
