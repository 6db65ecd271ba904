#include "rlc/remote_model.hpp"

#include <httplib.h>
#include <json.hpp>

#include "rlc/error.hpp"

namespace rlc {

using nlohmann::json;

struct RemoteModel::Impl {
  explicit Impl(const std::string& url) : client(url.c_str()) {}
  httplib::Client client;
};

RemoteModel::RemoteModel(std::string base_url, int timeout_seconds)
    : base_url_(std::move(base_url)), impl_(std::make_unique<Impl>(base_url_)) {
  if (base_url_.empty()) throw Error("remote backend needs a base url");
  impl_->client.set_connection_timeout(timeout_seconds, 0);
  impl_->client.set_read_timeout(timeout_seconds, 0);
  impl_->client.set_write_timeout(timeout_seconds, 0);
}

RemoteModel::~RemoteModel() = default;
RemoteModel::RemoteModel(RemoteModel&&) noexcept = default;
RemoteModel& RemoteModel::operator=(RemoteModel&&) noexcept = default;

std::string RemoteModel::post_json(const std::string& path, const std::string& body) {
  httplib::Result res = impl_->client.Post(path.c_str(), body, "application/json");
  if (!res)
    throw TransportError("cannot reach " + base_url_ + path + ": " +
                         httplib::to_string(res.error()));
  if (res->status == 404)
    throw CapabilityError("backend " + base_url_ + " does not support " + path);
  if (res->status < 200 || res->status >= 300)
    throw TransportError("backend " + base_url_ + path + " returned status " +
                         std::to_string(res->status));
  return res->body;
}

std::string RemoteModel::generate(const std::string& prompt, const DecodingParams& params,
                                  uint64_t seed) {
  if (prompt.empty()) throw Error("generate: empty prompt");
  json req;
  req["prompt"] = prompt;
  req["temperature"] = params.temperature;
  req["top_k"] = params.top_k;
  req["top_p"] = params.top_p;
  req["max_new_tokens"] = params.max_new_tokens;
  req["seed"] = seed;
  const std::string body = post_json("/v1/generate", req.dump());
  json res;
  try {
    res = json::parse(body);
  } catch (const json::parse_error& e) {
    throw ParseError("invalid /v1/generate response: " + std::string(e.what()));
  }
  if (!res.contains("completion") || !res["completion"].is_string())
    throw ParseError("/v1/generate response lacks a string \"completion\"");
  return res["completion"].get<std::string>();
}

LogProbSeq RemoteModel::score(const std::string& prompt, const std::string& completion) {
  if (prompt.empty()) throw Error("score: empty prompt");
  json req;
  req["prompt"] = prompt;
  req["completion"] = completion;
  const std::string body = post_json("/v1/score", req.dump());
  json res;
  try {
    res = json::parse(body);
  } catch (const json::parse_error& e) {
    throw ParseError("invalid /v1/score response: " + std::string(e.what()));
  }
  if (!res.contains("token_logprobs") || !res["token_logprobs"].is_array())
    throw ParseError("/v1/score response lacks a \"token_logprobs\" array");

  LogProbSeq seq;
  const auto& arr = res["token_logprobs"];
  seq.logprobs.resize(static_cast<Eigen::Index>(arr.size()));
  Eigen::Index i = 0;
  for (const auto& v : arr) {
    if (!v.is_number()) throw ParseError("token_logprobs must contain numbers");
    seq.logprobs[i++] = v.get<double>();
  }
  if (res.contains("tokens")) {
    if (!res["tokens"].is_array() || res["tokens"].size() != arr.size())
      throw ParseError("\"tokens\" must be an array matching token_logprobs");
    for (const auto& t : res["tokens"]) {
      if (!t.is_string()) throw ParseError("\"tokens\" must contain strings");
      seq.tokens.push_back(t.get<std::string>());
    }
  } else {
    seq.tokens.assign(static_cast<size_t>(seq.logprobs.size()), std::string());
  }
  return seq;
}

std::string RemoteModel::identity() const { return "remote(" + base_url_ + ")"; }

}  // namespace rlc
