#include "rlc/toy_policy.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "rlc/error.hpp"

namespace rlc {

using nlohmann::json;
using Eigen::Index;
using MatMap = Eigen::Map<Eigen::MatrixXd>;
using ConstMatMap = Eigen::Map<const Eigen::MatrixXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

// Box-Muller gaussian from the raw generator; identical on every platform.
double gaussian(std::mt19937_64& rng) {
  const double u1 = 1.0 - uniform_unit(rng);
  const double u2 = uniform_unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::string printable(char c) {
  if (std::isprint(static_cast<unsigned char>(c))) return std::string(1, c);
  char buf[8];
  std::snprintf(buf, sizeof buf, "\\x%02x", static_cast<unsigned char>(c));
  return buf;
}

}  // namespace

struct ToyPolicy::StepCtx {
  Eigen::VectorXd x;       // features
  Eigen::VectorXd h;       // hidden activations
  Eigen::VectorXd logits;  // gain-scaled output logits
  Eigen::VectorXd logp;    // log-softmax of logits
  double value = 0.0;
};

ToyPolicy::ToyPolicy(std::string vocab, Options opt, uint64_t seed)
    : vocab_(std::move(vocab)), opt_(std::move(opt)), seed_(seed) {
  if (vocab_.empty()) throw Error("toy policy needs a non-empty vocabulary");
  for (size_t i = 0; i < vocab_.size(); ++i) {
    if (!char_to_id_.emplace(vocab_[i], static_cast<int>(i)).second)
      throw Error(std::string("duplicate vocabulary character '") + printable(vocab_[i]) + "'");
  }
  vocab_size_ = static_cast<int>(vocab_.size());
  if (!opt_.stop.empty()) {
    if (opt_.stop.size() != 1) throw Error("stop token must be a single character");
    auto it = char_to_id_.find(opt_.stop[0]);
    if (it == char_to_id_.end()) throw Error("stop token is not part of the vocabulary");
    stop_token_ = it->second;
  }
  if (opt_.width < 1) throw Error("toy policy width must be positive");
  if (opt_.max_positions < 1) throw Error("max_positions must be positive");

  feat_ids_ = vocab_size_ + 2;  // vocabulary + BOS + PAD
  dim_x_ = 3 * feat_ids_ + opt_.max_positions + 1;  // +1: pointer-match flag
  init_param_layout();

  std::mt19937_64 rng(seed_);
  for (Index i = 0; i < params_.size(); ++i) params_[i] = opt_.init_scale * gaussian(rng);
  adam_m_ = Eigen::VectorXd::Zero(params_.size());
  adam_v_ = Eigen::VectorXd::Zero(params_.size());
}

void ToyPolicy::init_param_layout() {
  const Index h = opt_.width, d = dim_x_, v = vocab_size_;
  Index off = 0;
  blk_.w1 = off; off += h * d;
  blk_.b1 = off; off += h;
  blk_.w2 = off; off += v * h;
  blk_.ws = off; off += v * d;
  blk_.b2 = off; off += v;
  blk_.w3 = off; off += h;
  blk_.s3 = off; off += d;
  blk_.b3 = off; off += 1;
  blk_.total = off;
  params_ = Eigen::VectorXd::Zero(blk_.total);
}

Eigen::VectorXd ToyPolicy::pooled_prompt(const std::vector<int>& prompt) const {
  Eigen::VectorXd pooled = Eigen::VectorXd::Zero(feat_ids_);
  if (prompt.empty()) return pooled;
  for (int tok : prompt) pooled[tok] += 1.0;
  pooled /= static_cast<double>(prompt.size());
  return pooled;
}

// True when every output before step t repeated the forward pointer;
// the conjunction is what the value head needs to predict success.
namespace {
bool step_on_track(const std::vector<int>& prompt, int t_prev, int last, bool prev_track) {
  return prev_track && t_prev < static_cast<int>(prompt.size()) &&
         last == prompt[static_cast<size_t>(t_prev)];
}

bool prefix_on_track(const std::vector<int>& prompt, const std::vector<int>& response) {
  bool track = true;
  for (size_t j = 0; j < response.size() && track; ++j)
    track = step_on_track(prompt, static_cast<int>(j), response[j], track);
  return track;
}
}  // namespace

void ToyPolicy::build_features(const std::vector<int>& prompt, const Eigen::VectorXd& pooled,
                               int t, int last_token, bool on_track, Eigen::VectorXd& x) const {
  const int bos = vocab_size_;
  const int pad = vocab_size_ + 1;
  const int len = static_cast<int>(prompt.size());
  x.setZero(dim_x_);
  const int fwd = t < len ? prompt[static_cast<size_t>(t)] : pad;
  const int last = last_token < 0 ? bos : last_token;
  x[fwd] = 1.0;
  x[feat_ids_ + last] = 1.0;
  x.segment(2 * feat_ids_, feat_ids_) = pooled;
  x[3 * feat_ids_ + std::min(t, opt_.max_positions - 1)] = 1.0;
  x[3 * feat_ids_ + opt_.max_positions] = on_track ? 1.0 : 0.0;
}

ToyPolicy::StepCtx ToyPolicy::forward_step(const std::vector<int>& prompt,
                                           const Eigen::VectorXd& pooled, int t,
                                           int last_token, bool on_track) const {
  const Index h = opt_.width, d = dim_x_, v = vocab_size_;
  ConstMatMap W1(params_.data() + blk_.w1, h, d);
  ConstVecMap b1(params_.data() + blk_.b1, h);
  ConstMatMap W2(params_.data() + blk_.w2, v, h);
  ConstMatMap Ws(params_.data() + blk_.ws, v, d);
  ConstVecMap b2(params_.data() + blk_.b2, v);
  ConstVecMap w3(params_.data() + blk_.w3, h);
  ConstVecMap s3(params_.data() + blk_.s3, d);
  const double b3 = params_[blk_.b3];

  StepCtx ctx;
  build_features(prompt, pooled, t, last_token, on_track, ctx.x);
  ctx.h = (W1 * ctx.x + b1).array().tanh();
  ctx.logits = opt_.logit_gain * (W2 * ctx.h + Ws * ctx.x + b2);
  if (stop_token_ >= 0) ctx.logits[stop_token_] += opt_.stop_bias;
  ctx.logp = log_softmax(ctx.logits);
  ctx.value = opt_.value_gain * (w3.dot(ctx.h) + s3.dot(ctx.x) + b3);
  return ctx;
}

std::vector<int> ToyPolicy::tokenize(const std::string& text) const {
  std::vector<int> out;
  out.reserve(text.size());
  for (char c : text) {
    auto it = char_to_id_.find(c);
    if (it == char_to_id_.end())
      throw Error(std::string("unknown token character '") + printable(c) + "'");
    out.push_back(it->second);
  }
  return out;
}

std::string ToyPolicy::detokenize(const std::vector<int>& tokens) const {
  std::string out;
  out.reserve(tokens.size());
  for (int tok : tokens) {
    if (tok < 0 || tok >= vocab_size_) throw Error("token id out of range");
    out.push_back(vocab_[static_cast<size_t>(tok)]);
  }
  return out;
}

Eigen::VectorXd ToyPolicy::next_token_logits(const std::vector<int>& prompt,
                                             const std::vector<int>& response_prefix) const {
  const Eigen::VectorXd pooled = pooled_prompt(prompt);
  const int t = static_cast<int>(response_prefix.size());
  const int last = response_prefix.empty() ? -1 : response_prefix.back();
  return forward_step(prompt, pooled, t, last, prefix_on_track(prompt, response_prefix)).logits;
}

ToyPolicy::Rollout ToyPolicy::sample_rollout(const std::vector<int>& prompt,
                                             const DecodingParams& params,
                                             std::mt19937_64& rng) const {
  if (params.max_new_tokens < 1) throw Error("max_new_tokens must be positive");
  const Eigen::VectorXd pooled = pooled_prompt(prompt);

  Rollout roll;
  std::vector<double> lps, vals, ents;
  int last = -1;
  bool track = true;
  for (int t = 0; t < params.max_new_tokens; ++t) {
    if (t > 0) track = step_on_track(prompt, t - 1, last, track);
    const StepCtx ctx = forward_step(prompt, pooled, t, last, track);
    const Eigen::VectorXd probs = filter_logits(ctx.logits, params);
    const int tok = sample_from_probs(probs, rng);
    roll.tokens.push_back(tok);
    lps.push_back(ctx.logp[tok]);
    vals.push_back(ctx.value);
    ents.push_back(-(ctx.logp.array().exp() * ctx.logp.array()).sum());
    last = tok;
    if (stop_token_ >= 0 && tok == stop_token_) {
      roll.terminal = true;
      break;
    }
  }
  const auto n = static_cast<Index>(roll.tokens.size());
  roll.logprobs = ConstVecMap(lps.data(), n);
  roll.values = ConstVecMap(vals.data(), n);
  roll.entropies = ConstVecMap(ents.data(), n);
  if (!roll.terminal) {
    const int t = static_cast<int>(roll.tokens.size());
    track = step_on_track(prompt, t - 1, last, track);
    roll.bootstrap_value = forward_step(prompt, pooled, t, last, track).value;
  }
  return roll;
}

ToyPolicy::SeqEval ToyPolicy::evaluate(const std::vector<int>& prompt,
                                       const std::vector<int>& response) const {
  const Eigen::VectorXd pooled = pooled_prompt(prompt);
  const auto n = static_cast<Index>(response.size());
  SeqEval ev;
  ev.logprobs.resize(n);
  ev.values.resize(n);
  ev.entropies.resize(n);
  int last = -1;
  bool track = true;
  for (Index t = 0; t < n; ++t) {
    if (t > 0) track = step_on_track(prompt, static_cast<int>(t) - 1, last, track);
    const StepCtx ctx = forward_step(prompt, pooled, static_cast<int>(t), last, track);
    const int tok = response[static_cast<size_t>(t)];
    if (tok < 0 || tok >= vocab_size_) throw Error("response token id out of range");
    ev.logprobs[t] = ctx.logp[tok];
    ev.values[t] = ctx.value;
    ev.entropies[t] = -(ctx.logp.array().exp() * ctx.logp.array()).sum();
    last = tok;
  }
  return ev;
}

double ToyPolicy::successor_value(const std::vector<int>& prompt,
                                  const std::vector<int>& response) const {
  const Eigen::VectorXd pooled = pooled_prompt(prompt);
  const int last = response.empty() ? -1 : response.back();
  return forward_step(prompt, pooled, static_cast<int>(response.size()), last,
                      prefix_on_track(prompt, response))
      .value;
}

void ToyPolicy::accumulate_grad(const std::vector<int>& prompt, const std::vector<int>& response,
                                const Eigen::VectorXd& d_logprob, const Eigen::VectorXd& d_value,
                                const Eigen::VectorXd& d_entropy,
                                Eigen::Ref<Eigen::VectorXd> grad) const {
  const auto n = static_cast<Index>(response.size());
  if (d_logprob.size() != n || d_value.size() != n || d_entropy.size() != n)
    throw Error("gradient partials do not match the response length");
  if (grad.size() != params_.size()) throw Error("gradient buffer has the wrong size");

  const Index h = opt_.width, d = dim_x_, v = vocab_size_;
  ConstMatMap W1(params_.data() + blk_.w1, h, d);
  ConstMatMap W2(params_.data() + blk_.w2, v, h);
  ConstVecMap w3(params_.data() + blk_.w3, h);

  MatMap gW1(grad.data() + blk_.w1, h, d);
  VecMap gb1(grad.data() + blk_.b1, h);
  MatMap gW2(grad.data() + blk_.w2, v, h);
  MatMap gWs(grad.data() + blk_.ws, v, d);
  VecMap gb2(grad.data() + blk_.b2, v);
  VecMap gw3(grad.data() + blk_.w3, h);
  VecMap gs3(grad.data() + blk_.s3, d);

  const Eigen::VectorXd pooled = pooled_prompt(prompt);
  int last = -1;
  bool track = true;
  for (Index t = 0; t < n; ++t) {
    if (t > 0) track = step_on_track(prompt, static_cast<int>(t) - 1, last, track);
    const StepCtx ctx = forward_step(prompt, pooled, static_cast<int>(t), last, track);
    const int tok = response[static_cast<size_t>(t)];
    const Eigen::VectorXd p = ctx.logp.array().exp();
    const double entropy = -(p.array() * ctx.logp.array()).sum();

    // dL/dlogits from the taken-token log-prob and from the entropy.
    Eigen::VectorXd dz = -d_logprob[t] * p;
    dz[tok] += d_logprob[t];
    if (d_entropy[t] != 0.0)
      dz.array() += d_entropy[t] * (-p.array() * (ctx.logp.array() + entropy));

    const Eigen::VectorXd du = opt_.logit_gain * dz;
    const double dvin = d_value[t] * opt_.value_gain;

    gW2.noalias() += du * ctx.h.transpose();
    gWs.noalias() += du * ctx.x.transpose();
    gb2 += du;
    gw3 += dvin * ctx.h;
    gs3 += dvin * ctx.x;
    grad[blk_.b3] += dvin;

    Eigen::VectorXd dh = W2.transpose() * du + dvin * w3;
    const Eigen::VectorXd da1 = (1.0 - ctx.h.array().square()).matrix().cwiseProduct(dh);
    gW1.noalias() += da1 * ctx.x.transpose();
    gb1 += da1;

    last = tok;
  }
}

void ToyPolicy::set_params(const Eigen::VectorXd& p) {
  if (mode_ == ModelMode::Frozen) throw Error("cannot modify a frozen model");
  if (p.size() != params_.size()) throw Error("parameter vector has the wrong size");
  params_ = p;
}

void ToyPolicy::adam_step(const Eigen::VectorXd& grad, double learning_rate) {
  if (mode_ == ModelMode::Frozen) throw Error("cannot train a frozen model");
  if (grad.size() != params_.size()) throw Error("gradient vector has the wrong size");
  if (!grad.allFinite()) throw Error("non-finite gradient in optimizer step");
  ++adam_t_;
  adam_m_ = kAdamBeta1 * adam_m_ + (1.0 - kAdamBeta1) * grad;
  adam_v_ = kAdamBeta2 * adam_v_.array() + (1.0 - kAdamBeta2) * grad.array().square();
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(adam_t_));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(adam_t_));
  params_.array() -=
      learning_rate * (adam_m_.array() / c1) / ((adam_v_.array() / c2).sqrt() + kAdamEps);
}

std::string ToyPolicy::generate(const std::string& prompt, const DecodingParams& params,
                                uint64_t seed) {
  if (prompt.empty()) throw Error("generate: empty prompt");
  if (static_cast<int>(prompt.size()) > opt_.max_prompt_chars)
    throw Error("prompt exceeds context budget (" + std::to_string(prompt.size()) + " > " +
                std::to_string(opt_.max_prompt_chars) + " characters)");
  std::mt19937_64 rng(seed);
  const Rollout roll = sample_rollout(tokenize(prompt), params, rng);
  std::vector<int> body = roll.tokens;
  if (roll.terminal) body.pop_back();  // drop the stop token from the text
  return detokenize(body);
}

LogProbSeq ToyPolicy::score(const std::string& prompt, const std::string& completion) {
  if (prompt.empty()) throw Error("score: empty prompt");
  const SeqEval ev = evaluate(tokenize(prompt), tokenize(completion));
  LogProbSeq seq;
  seq.logprobs = ev.logprobs;
  seq.tokens.reserve(completion.size());
  for (char c : completion) seq.tokens.emplace_back(1, c);
  return seq;
}

std::string ToyPolicy::identity() const {
  std::string id = "toy(v=" + std::to_string(vocab_size_) + ",h=" + std::to_string(opt_.width) +
                   ",seed=" + std::to_string(seed_) + ")";
  if (mode_ == ModelMode::Frozen) id += "/frozen";
  return id;
}

ToyPolicy ToyPolicy::clone_frozen() const {
  ToyPolicy copy = *this;
  copy.mode_ = ModelMode::Frozen;
  copy.adam_m_.setZero();
  copy.adam_v_.setZero();
  copy.adam_t_ = 0;
  return copy;
}

namespace {

void write_blob(const std::filesystem::path& path, const Eigen::VectorXd& v) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(v.size())));
  if (!out) throw Error("failed while writing " + path.string());
}

Eigen::VectorXd read_blob(const std::filesystem::path& path, Eigen::Index expect) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read " + path.string());
  Eigen::VectorXd v(expect);
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(expect)));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(expect)))
    throw ParseError("parameter blob has the wrong size: " + path.string());
  return v;
}

}  // namespace

void ToyPolicy::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  json meta;
  meta["vocab"] = vocab_;
  meta["stop"] = opt_.stop;
  meta["width"] = opt_.width;
  meta["max_positions"] = opt_.max_positions;
  meta["logit_gain"] = opt_.logit_gain;
  meta["value_gain"] = opt_.value_gain;
  meta["init_scale"] = opt_.init_scale;
  meta["stop_bias"] = opt_.stop_bias;
  meta["max_prompt_chars"] = opt_.max_prompt_chars;
  meta["seed"] = seed_;
  meta["mode"] = mode_ == ModelMode::Frozen ? "frozen" : "trainable";
  meta["adam_t"] = adam_t_;
  std::ofstream out(dir / "model.json", std::ios::binary);
  if (!out) throw Error("cannot write " + (dir / "model.json").string());
  out << meta.dump(2) << '\n';
  write_blob(dir / "params.bin", params_);
  if (mode_ == ModelMode::Trainable) {
    write_blob(dir / "adam_m.bin", adam_m_);
    write_blob(dir / "adam_v.bin", adam_v_);
  }
}

ToyPolicy ToyPolicy::load(const std::filesystem::path& dir) {
  std::ifstream in(dir / "model.json");
  if (!in) throw ParseError("cannot read " + (dir / "model.json").string());
  json meta;
  try {
    in >> meta;
  } catch (const json::parse_error& e) {
    throw ParseError("invalid model metadata: " + std::string(e.what()));
  }
  Options opt;
  opt.stop = meta.at("stop").get<std::string>();
  opt.width = meta.at("width").get<int>();
  opt.max_positions = meta.at("max_positions").get<int>();
  opt.logit_gain = meta.at("logit_gain").get<double>();
  opt.value_gain = meta.at("value_gain").get<double>();
  opt.init_scale = meta.at("init_scale").get<double>();
  opt.stop_bias = meta.at("stop_bias").get<double>();
  opt.max_prompt_chars = meta.at("max_prompt_chars").get<int>();
  ToyPolicy model(meta.at("vocab").get<std::string>(), opt, meta.at("seed").get<uint64_t>());
  model.params_ = read_blob(dir / "params.bin", model.params_.size());
  model.adam_t_ = meta.at("adam_t").get<long>();
  if (meta.at("mode").get<std::string>() == "frozen") {
    model.mode_ = ModelMode::Frozen;
  } else {
    model.adam_m_ = read_blob(dir / "adam_m.bin", model.params_.size());
    model.adam_v_ = read_blob(dir / "adam_v.bin", model.params_.size());
  }
  return model;
}

}  // namespace rlc
