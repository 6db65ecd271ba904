#pragma once

#include <Eigen/Core>
#include <memory>
#include <string>
#include <vector>

namespace rlc {

// Produces one unit-norm contextual embedding per token (row per token).
class TokenEmbedder {
 public:
  virtual ~TokenEmbedder() = default;
  virtual Eigen::MatrixXd embed(const std::vector<std::string>& tokens) = 0;
  virtual std::string identity() const = 0;
};

// Offline default: each token type gets a deterministic hashed random
// direction, mixed with its neighbours so that context shifts the
// embedding.  No external service, stable across platforms.
class HashedEmbedder final : public TokenEmbedder {
 public:
  explicit HashedEmbedder(int dim = 64, double neighbor_weight = 0.3);
  Eigen::MatrixXd embed(const std::vector<std::string>& tokens) override;
  std::string identity() const override;

 private:
  Eigen::VectorXd token_direction(const std::string& token) const;
  int dim_;
  double neighbor_weight_;
};

// Embeddings served over HTTP: POST /v1/embed {tokens} -> {vectors}.
// Error behaviour mirrors RemoteModel (TransportError / CapabilityError
// / ParseError).
class RemoteEmbedder final : public TokenEmbedder {
 public:
  explicit RemoteEmbedder(std::string base_url, int timeout_seconds = 30);
  ~RemoteEmbedder() override;
  RemoteEmbedder(RemoteEmbedder&&) noexcept;
  RemoteEmbedder& operator=(RemoteEmbedder&&) noexcept;

  Eigen::MatrixXd embed(const std::vector<std::string>& tokens) override;
  std::string identity() const override;

 private:
  std::string base_url_;
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace rlc
