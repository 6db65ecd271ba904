#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "rlc/decoding.hpp"

namespace rlc {

enum class ModelMode { Trainable, Frozen };

// Per-token log-probabilities of a completion under a model; `tokens`
// and `logprobs` always have equal length.
struct LogProbSeq {
  std::vector<std::string> tokens;
  Eigen::VectorXd logprobs;
};

// Minimal autoregressive text model surface shared by the trainable toy
// backend and remote inference servers.
class TextModel {
 public:
  virtual ~TextModel() = default;

  // Samples a completion for `prompt`; deterministic given (prompt,
  // params, seed).
  virtual std::string generate(const std::string& prompt, const DecodingParams& params,
                               uint64_t seed) = 0;

  // Teacher-forced per-token log-probabilities of `completion` after
  // `prompt`.
  virtual LogProbSeq score(const std::string& prompt, const std::string& completion) = 0;

  virtual ModelMode mode() const = 0;

  // Stable label naming the backend (for logs and probe records).
  virtual std::string identity() const = 0;
};

}  // namespace rlc
