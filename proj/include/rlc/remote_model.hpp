#pragma once

#include <memory>
#include <string>

#include "rlc/model.hpp"

namespace rlc {

// HTTP client for an inference server exposing
//   POST /v1/generate {prompt, temperature, top_k, top_p, max_new_tokens, seed}
//     -> {completion}
//   POST /v1/score    {prompt, completion} -> {token_logprobs, tokens?}
// Connection failures and non-2xx statuses raise TransportError, except
// 404, which signals a missing capability and raises CapabilityError.
// Malformed response bodies raise ParseError.
class RemoteModel final : public TextModel {
 public:
  explicit RemoteModel(std::string base_url, int timeout_seconds = 30);
  ~RemoteModel() override;

  RemoteModel(RemoteModel&&) noexcept;
  RemoteModel& operator=(RemoteModel&&) noexcept;

  std::string generate(const std::string& prompt, const DecodingParams& params,
                       uint64_t seed) override;
  LogProbSeq score(const std::string& prompt, const std::string& completion) override;
  ModelMode mode() const override { return ModelMode::Frozen; }
  std::string identity() const override;

 private:
  std::string post_json(const std::string& path, const std::string& body);

  std::string base_url_;
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace rlc
