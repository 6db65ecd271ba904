// Acceptance gate: ten end-to-end checks, one pass/fail line each.
// Exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rlc/baselines.hpp"
#include "rlc/cli.hpp"
#include "rlc/eval.hpp"
#include "rlc/gae.hpp"
#include "rlc/harness.hpp"
#include "rlc/judge.hpp"
#include "rlc/metrics.hpp"
#include "rlc/ppo.hpp"
#include "rlc/text.hpp"
#include "rlc/toy_policy.hpp"
#include "rlc/trainer.hpp"

using namespace rlc;
using Failures = std::vector<std::string>;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void expect(Failures& fails, bool ok, const std::string& what) {
  if (!ok) fails.push_back(what);
}

double urand(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

// ---- 1: advantage estimation matches a brute-force recomputation ----------

Failures criterion_gae() {
  Failures fails;
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index T = 1 + static_cast<Eigen::Index>(rng() % 10);
    Eigen::VectorXd rewards(T), values(T);
    for (Eigen::Index t = 0; t < T; ++t) {
      rewards[t] = urand(rng, -1.0, 1.0);
      values[t] = urand(rng, -1.0, 1.0);
    }
    const double gamma = urand(rng, 0.0, 1.0);
    const double lam = urand(rng, 0.0, 1.0);
    const double bootstrap = trial % 3 == 0 ? urand(rng, -1.0, 1.0) : 0.0;

    const GaeResult<double> got = compute_gae<double>(rewards, values, bootstrap, gamma, lam);
    for (Eigen::Index t = 0; t < T; ++t) {
      // Direct definition: discounted sum of one-step value errors.
      double adv = 0.0, coef = 1.0;
      for (Eigen::Index l = t; l < T; ++l) {
        const double next = l + 1 < T ? values[l + 1] : bootstrap;
        adv += coef * (rewards[l] + gamma * next - values[l]);
        coef *= gamma * lam;
      }
      worst = std::max({worst, std::abs(got.advantages[t] - adv),
                        std::abs(got.returns[t] - (adv + values[t]))});
    }
  }
  expect(fails, worst <= 1e-9,
         "recursive advantages drift from the direct sum by " + num(worst));
  return fails;
}

// ---- 2: surrogate loss hand values and a full finite-difference check ------

Episode flat_episode(std::string id, std::initializer_list<double> logprobs) {
  Episode ep;
  ep.id = std::move(id);
  const auto n = static_cast<Eigen::Index>(logprobs.size());
  ep.prompt = {0};
  ep.response.assign(static_cast<size_t>(n), 0);
  ep.old_logprobs.resize(n);
  Eigen::Index i = 0;
  for (double lp : logprobs) ep.old_logprobs[i++] = lp;
  ep.ref_logprobs = ep.old_logprobs;
  ep.values = Eigen::VectorXd::Zero(n);
  ep.rewards = Eigen::VectorXd::Zero(n);
  return ep;
}

Failures criterion_ppo() {
  Failures fails;
  PPOConfig cfg;
  cfg.max_new_tokens = 4;

  {  // probability ratio 2 with unit advantage clips at 1 + eps
    RolloutBatch batch = assemble_batch({flat_episode("clip", {-0.5})}, cfg);
    batch.advantages << 1.0;
    batch.returns << 0.0;
    const Eigen::VectorXd new_lp = batch.episodes[0].old_logprobs.array() + std::log(2.0);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
    const PPOLossTerms terms = ppo_loss(batch, new_lp, zero, zero, cfg);
    expect(fails, std::abs(terms.policy_loss - (-1.2)) <= 1e-9,
           "clipped surrogate at ratio 2: expected -1.2, got " + num(terms.policy_loss));
    expect(fails, std::abs(terms.total - (-1.2)) <= 1e-9,
           "total loss with exact value fit: expected -1.2, got " + num(terms.total));
  }
  {  // ratio 1 reduces to the negated mean advantage
    RolloutBatch batch = assemble_batch({flat_episode("unit", {-0.3, -0.7})}, cfg);
    batch.advantages << 0.5, -1.5;
    batch.returns << 0.0, 0.0;
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
    const PPOLossTerms terms =
        ppo_loss(batch, batch.episodes[0].old_logprobs, zero, zero, cfg);
    expect(fails, std::abs(terms.policy_loss - 0.5) <= 1e-9,
           "surrogate at ratio 1: expected -mean(adv) = 0.5, got " + num(terms.policy_loss));
  }

  // Full-chain gradient: loss -> per-token partials -> policy parameters,
  // validated against central finite differences of the scalar loss.
  std::string vocab;
  const Dataset data = make_copy_suite(8, 3, 2, 5, &vocab);
  ToyPolicy::Options opt;
  opt.width = 8;
  opt.stop = "\n";
  ToyPolicy policy(vocab, opt, 5);
  const ToyPolicy reference = policy.clone_frozen();
  std::vector<const TaskInstance*> items;
  for (size_t i = 0; i < data.size(); ++i) items.push_back(&data[i]);
  DecodingParams sampling;
  sampling.max_new_tokens = cfg.max_new_tokens;
  std::mt19937_64 rng(3);
  const RolloutBatch batch = collect_rollouts(policy, reference, items, sampling, cfg,
                                              make_metric_reward("accuracy", nullptr), rng);

  ToyPolicy probe = policy;
  const auto loss_at = [&](const Eigen::VectorXd& theta) {
    probe.set_params(theta);
    Eigen::VectorXd lp(batch.total_tokens), v(batch.total_tokens), h(batch.total_tokens);
    for (size_t e = 0; e < batch.episodes.size(); ++e) {
      const Episode& ep = batch.episodes[e];
      const ToyPolicy::SeqEval ev = probe.evaluate(ep.prompt, ep.response);
      const auto len = static_cast<Eigen::Index>(ep.response.size());
      lp.segment(batch.offsets[e], len) = ev.logprobs;
      v.segment(batch.offsets[e], len) = ev.values;
      h.segment(batch.offsets[e], len) = ev.entropies;
    }
    return ppo_loss(batch, lp, v, h, cfg).total;
  };

  const Eigen::VectorXd theta0 = policy.params();
  Eigen::VectorXd lp0(batch.total_tokens), v0(batch.total_tokens), h0(batch.total_tokens);
  for (size_t e = 0; e < batch.episodes.size(); ++e) {
    const Episode& ep = batch.episodes[e];
    const ToyPolicy::SeqEval ev = policy.evaluate(ep.prompt, ep.response);
    const auto len = static_cast<Eigen::Index>(ep.response.size());
    lp0.segment(batch.offsets[e], len) = ev.logprobs;
    v0.segment(batch.offsets[e], len) = ev.values;
    h0.segment(batch.offsets[e], len) = ev.entropies;
  }
  const PPOLossGrads grads = ppo_loss_backward(batch, lp0, v0, h0, cfg);
  Eigen::VectorXd analytic = Eigen::VectorXd::Zero(policy.num_params());
  for (size_t e = 0; e < batch.episodes.size(); ++e) {
    const Episode& ep = batch.episodes[e];
    const auto len = static_cast<Eigen::Index>(ep.response.size());
    policy.accumulate_grad(ep.prompt, ep.response, grads.d_logprob.segment(batch.offsets[e], len),
                           grads.d_value.segment(batch.offsets[e], len),
                           grads.d_entropy.segment(batch.offsets[e], len), analytic);
  }

  const double h = 1e-5;
  Eigen::VectorXd fd(theta0.size());
  for (Eigen::Index i = 0; i < theta0.size(); ++i) {
    Eigen::VectorXd t = theta0;
    t[i] = theta0[i] + h;
    const double up = loss_at(t);
    t[i] = theta0[i] - h;
    const double down = loss_at(t);
    fd[i] = (up - down) / (2.0 * h);
  }
  const double rel = (fd - analytic).norm() / std::max(1e-12, fd.norm());
  expect(fails, rel < 1e-4,
         "parameter gradient vs central differences: relative error " + num(rel));
  return fails;
}

// ---- 3: KL stays nonnegative; frozen judges never move ---------------------

Failures criterion_kl_fixedness() {
  Failures fails;

  // Vocabulary covering the task text plus every evaluation template, so
  // the policy can read the judge prompts addressed to it.
  std::string vocab;
  const Dataset data = make_copy_suite(200, 7, 4, 21, &vocab);
  const PromptLibrary lib;
  std::set<char> chars(vocab.begin(), vocab.end());
  for (size_t i = 0; i < data.size(); ++i) {
    const std::string prompt = render_prompt(data[i]);
    chars.insert(prompt.begin(), prompt.end());
  }
  for (const EvalMode mode : {EvalMode::Verdict, EvalMode::Quality, EvalMode::Compare})
    for (const TaskKind kind :
         {TaskKind::ReasoningMultichoice, TaskKind::ReasoningGeneration, TaskKind::Translation,
          TaskKind::Summarization}) {
      const std::string& tmpl = lib.tmpl(mode, kind);
      chars.insert(tmpl.begin(), tmpl.end());
    }
  const std::string full_vocab(chars.begin(), chars.end());

  ToyPolicy::Options opt;
  opt.stop = "\n";
  opt.stop_bias = 1.3;
  ToyPolicy policy(full_vocab, opt, 21);

  // The evaluator is a frozen copy of the untrained policy; training must
  // never leak into it (or into any frozen clone).
  auto evaluator = std::make_shared<ToyPolicy>(policy.clone_frozen());
  ToyPolicy reference_probe = policy.clone_frozen();
  ModelJudge judge(evaluator, lib, 21);
  const RewardFn reward = [&judge](const TaskInstance& item, const std::string& completion) {
    return self_eval_reward(judge, default_eval_mode(item.kind), item, completion);
  };

  DecodingParams greedy;
  greedy.temperature = 0.0;
  greedy.max_new_tokens = 16;
  std::vector<std::string> probes;
  for (size_t i = 0; i < 8; ++i)
    probes.push_back(build_eval_prompt(lib, EvalMode::Verdict, data[i], data[i].reference));
  std::vector<std::string> evaluator_before, reference_before;
  for (const std::string& p : probes) {
    evaluator_before.push_back(evaluator->generate(p, greedy, 0));
    reference_before.push_back(reference_probe.generate(p, greedy, 0));
  }

  PPOConfig cfg;
  cfg.max_new_tokens = 5;
  cfg.total_grad_steps = 500;
  DecodingParams sampling;
  sampling.max_new_tokens = cfg.max_new_tokens;
  TrainerOptions topt;
  topt.log_interval = 1;
  topt.eval_probe_instances = 8;
  const TrainResult result = train(policy, data, cfg, sampling, reward, 21, topt);

  expect(fails, result.grad_steps == 500,
         "expected 500 optimizer updates, got " + std::to_string(result.grad_steps));
  size_t negative = 0;
  for (const CurveRow& row : result.curves)
    if (row.mean_kl < 0.0) ++negative;
  expect(fails, negative == 0,
         std::to_string(negative) + " of " + std::to_string(result.curves.size()) +
             " logged steps carry a negative divergence from the reference");
  expect(fails, result.curves.size() == 125,
         "expected one curve row per iteration (125), got " +
             std::to_string(result.curves.size()));

  for (size_t i = 0; i < probes.size(); ++i) {
    if (evaluator->generate(probes[i], greedy, 0) != evaluator_before[i]) {
      fails.push_back("evaluator reply changed after training on probe " + std::to_string(i));
      break;
    }
  }
  for (size_t i = 0; i < probes.size(); ++i) {
    if (reference_probe.generate(probes[i], greedy, 0) != reference_before[i]) {
      fails.push_back("frozen reference reply changed after training on probe " +
                      std::to_string(i));
      break;
    }
  }
  return fails;
}

// ---- 4: evaluation prompt and parser fixtures -------------------------------

class FixedReplyModel final : public TextModel {
 public:
  explicit FixedReplyModel(std::string reply) : reply_(std::move(reply)) {}
  std::string generate(const std::string&, const DecodingParams&, uint64_t) override {
    return reply_;
  }
  LogProbSeq score(const std::string&, const std::string&) override {
    throw CapabilityError("fixed-reply model does not score");
  }
  ModelMode mode() const override { return ModelMode::Frozen; }
  std::string identity() const override { return "fixed-reply"; }

 private:
  std::string reply_;
};

Failures criterion_parsing() {
  Failures fails;
  const PromptLibrary lib;

  TaskInstance sum_q;
  sum_q.id = "q";
  sum_q.instruction = default_instruction(TaskKind::ReasoningGeneration);
  sum_q.problem = "1+1?";
  sum_q.kind = TaskKind::ReasoningGeneration;
  expect(fails,
         build_eval_prompt(lib, EvalMode::Verdict, sum_q, "2") ==
             "Is the answer to the question correct? The question is: 1+1?. The answer is: 2",
         "correctness prompt is not byte-exact");

  TaskInstance summary = sum_q;
  summary.kind = TaskKind::Summarization;
  expect(fails,
         build_eval_prompt(lib, EvalMode::Quality, summary, "s")
                 .find("Only give a score from 1 to 10, without explanation.") !=
             std::string::npos,
         "summary quality prompt lost its scoring instruction");
  expect(fails,
         build_compare_prompt(lib, summary, "first summary", "second summary")
             .ends_with("Which one is better."),
         "comparison prompt does not end with the preference question");

  expect(fails, parse_verdict("Yes") == Verdict::Yes, "\"Yes\" must parse as yes");
  expect(fails, parse_verdict("  no.") == Verdict::No, "\"  no.\" must parse as no");
  expect(fails, parse_verdict("it is partially right") == Verdict::Unparsed,
         "hedged replies must stay unparsed");

  expect(fails, parse_score("7") == 7, "\"7\" must parse as score 7");
  expect(fails, parse_score("Score: 9.") == 9, "\"Score: 9.\" must parse as score 9");
  expect(fails, !parse_score("excellent translation").has_value(),
         "scoreless praise must stay unparsed");

  {
    ModelJudge yes(std::make_shared<FixedReplyModel>("yes"), lib, 1);
    expect(fails, self_eval_reward(yes, EvalMode::Verdict, sum_q, "2") == 1.0,
           "a yes verdict must reward 1.0");
    ModelJudge seven(std::make_shared<FixedReplyModel>("7"), lib, 1);
    const double r = self_eval_reward(seven, EvalMode::Quality, summary, "s");
    expect(fails, std::abs(r - (7.0 - 1.0) / 9.0) <= 1e-9,
           "score 7 must reward (7-1)/9, got " + num(r));
    ModelJudge mute(std::make_shared<FixedReplyModel>("I cannot tell"), lib, 1);
    expect(fails, self_eval_reward(mute, EvalMode::Verdict, sum_q, "2") == 0.0,
           "unparseable replies must reward 0");
    expect(fails, mute.unparsed_count() == 1, "unparseable replies must be counted");
  }

  expect(fails, parse_preference("(1)") == Preference::First,
         "\"(1)\" must parse as the first candidate");
  {
    ModelJudge biased(std::make_shared<FixedReplyModel>("both are fine"), lib, 2);
    expect(fails, biased.compare(sum_q, "a", "b") == Preference::Unparsed,
           "\"both are fine\" must stay unparsed");
  }
  {
    // A judge that always answers "(1)" must split First/Second evenly,
    // because presentation order is randomized and then undone.
    ModelJudge biased(std::make_shared<FixedReplyModel>("(1)"), lib, 77);
    int firsts = 0;
    const int calls = 1000;
    for (int i = 0; i < calls; ++i)
      if (biased.compare(sum_q, "a", "b") == Preference::First) ++firsts;
    const double freq = static_cast<double>(firsts) / calls;
    const double band = 3.0 * std::sqrt(0.25 / calls);
    expect(fails, std::abs(freq - 0.5) <= band,
           "position bias survives randomization: first-candidate frequency " + num(freq));
  }
  return fails;
}

// ---- 5 / 9(rlft): policy training on the copy task -------------------------

struct CopyRun {
  double before = 0.0;
  double after = 0.0;
};

// One training run on the 500-instance copy corpus (8-character
// vocabulary, words up to length 4).  `flip` corrupts the scripted
// verdict with that probability; `through_judge` routes the reward
// through the self-evaluation path, otherwise the exact-match metric
// reward is used directly.
CopyRun copy_training_run(uint64_t seed, double flip, bool through_judge, long steps) {
  std::string vocab;
  const Dataset data = make_copy_suite(500, 7, 4, seed, &vocab);
  ToyPolicy::Options opt;
  opt.stop = "\n";
  opt.stop_bias = 1.3;  // a fresh policy must be able to stop by chance
  ToyPolicy policy(vocab, opt, seed);

  OracleJudge judge(flip, seed + 99);
  const RewardFn reward =
      through_judge
          ? RewardFn([&judge](const TaskInstance& item, const std::string& completion) {
              return self_eval_reward(judge, EvalMode::Verdict, item, completion);
            })
          : make_metric_reward("accuracy", nullptr);
  const RewardFn exact = make_metric_reward("accuracy", nullptr);

  PPOConfig cfg;
  cfg.max_new_tokens = 5;
  cfg.total_grad_steps = steps;
  DecodingParams sampling;
  sampling.max_new_tokens = cfg.max_new_tokens;
  TrainerOptions topt;
  topt.log_interval = 25;

  CopyRun out;
  out.before = greedy_probe_score(policy, data, static_cast<int>(data.size()), sampling, exact);
  train(policy, data, cfg, sampling, reward, seed, topt);
  out.after = greedy_probe_score(policy, data, static_cast<int>(data.size()), sampling, exact);
  return out;
}

Failures criterion_self_improvement() {
  Failures fails;

  double before_sum = 0.0, after_sum = 0.0;
  std::string clean_detail;
  for (const uint64_t seed : {1, 2, 3}) {
    const CopyRun run = copy_training_run(seed, 0.0, true, 2000);
    before_sum += run.before;
    after_sum += run.after;
    clean_detail += " seed " + std::to_string(seed) + ": " + num(run.before) + " -> " +
                    num(run.after) + ";";
  }
  expect(fails, before_sum / 3.0 < 0.2,
         "untrained accuracy should start below 0.2;" + clean_detail);
  expect(fails, after_sum / 3.0 >= 0.8,
         "perfect-verdict training should average >= 0.8;" + clean_detail);

  double noisy_sum = 0.0;
  std::string noisy_detail;
  for (const uint64_t seed : {11, 12, 13}) {
    const CopyRun run = copy_training_run(seed, 0.2, true, 2000);
    noisy_sum += run.after;
    noisy_detail += " seed " + std::to_string(seed) + ": " + num(run.after) + ";";
  }
  expect(fails, noisy_sum / 3.0 >= 0.6,
         "training under a 20%-corrupted verdict should average >= 0.6;" + noisy_detail);
  return fails;
}

// ---- 6: resample-on-no reaches the closed form ------------------------------

Failures criterion_se_resample() {
  Failures fails;
  const Dataset data = make_copy_suite(10000, 7, 4, 42, nullptr);
  StochasticAccuracyModel model(data, 0.6, 7);
  OracleJudge judge(0.0, 5);
  const SeResampleResult res = run_se_resample(model, judge, data, DecodingParams{}, 9);

  // One retry of every wrong draft: 0.6 + 0.4 * 0.6 = 0.84.
  const double band = 3.0 * std::sqrt(0.84 * 0.16 / static_cast<double>(res.n));
  expect(fails, std::abs(res.acc_with - 0.84) <= band,
         "self-checked accuracy " + num(res.acc_with) + " misses 0.84 +/- " + num(band));
  expect(fails, res.acc_with > res.acc_without,
         "self-checking failed to improve on the draft accuracy (" + num(res.acc_without) +
             " -> " + num(res.acc_with) + ")");
  return fails;
}

// ---- 7: best-of-k selection tracks the metric -------------------------------

double expected_winner_metric(const std::vector<double>& m, double q) {
  const auto pwin = [&](size_t a, size_t b) {
    if (m[a] > m[b]) return q;
    if (m[a] < m[b]) return 1.0 - q;
    return 0.5;
  };
  const double p01 = pwin(0, 1);  // first round: candidate 0 vs 1
  const double p0 = p01 * pwin(0, 2);
  const double p1 = (1.0 - p01) * pwin(1, 2);
  return p0 * m[0] + p1 * m[1] + (1.0 - p0 - p1) * m[2];
}

Failures criterion_best_of_k() {
  Failures fails;
  const Dataset data = make_text_suite(50, TaskKind::Translation, 31);
  const MetricFn bleu_fn = metric_by_name("bleu", nullptr);
  const DecodingParams params;

  {  // a perfect metric judge never picks below an instance's average
    CandidatePoolModel model(data, 17);
    MetricJudge judge(bleu_fn, "bleu", 1.0, 3);
    const BestOfKResult res = run_best_of_k(model, judge, data, 3, bleu_fn, params, 7);
    size_t below = 0;
    for (const auto& row : res.rows)
      if (row.winner_metric < row.mean_metric - 1e-12) ++below;
    expect(fails, below == 0,
           std::to_string(below) + " of 50 instances selected below their own average");
  }

  // Imperfect judge: observed aggregate gain vs the tournament expectation
  // computed from the (fixed) candidate pool.
  const int reps = 200;
  std::vector<double> gaps;
  double expected_with = 0.0, mean_without = 0.0;
  std::vector<double> first_rep_metrics;
  for (int rep = 0; rep < reps; ++rep) {
    CandidatePoolModel model(data, 17);  // same seed: identical candidates every rep
    MetricJudge judge(bleu_fn, "bleu", 0.8, 1000 + static_cast<uint64_t>(rep));
    const BestOfKResult res = run_best_of_k(model, judge, data, 3, bleu_fn, params, 7);
    if (rep == 0) {
      for (const auto& row : res.rows) {
        expected_with += expected_winner_metric(row.metric_values, 0.8);
        first_rep_metrics.insert(first_rep_metrics.end(), row.metric_values.begin(),
                                 row.metric_values.end());
      }
      expected_with /= static_cast<double>(res.rows.size());
      mean_without = res.mean_without;
    } else if (rep == 1) {
      std::vector<double> again;
      for (const auto& row : res.rows)
        again.insert(again.end(), row.metric_values.begin(), row.metric_values.end());
      expect(fails, again == first_rep_metrics,
             "candidate pool is not reproducible across repetitions");
    }
    gaps.push_back(res.mean_with - res.mean_without);
  }
  const double expected_gap = expected_with - mean_without;
  double mean_gap = 0.0;
  for (double g : gaps) mean_gap += g;
  mean_gap /= reps;
  double var = 0.0;
  for (double g : gaps) var += (g - mean_gap) * (g - mean_gap);
  const double se = std::sqrt(var / (reps - 1)) / std::sqrt(static_cast<double>(reps));
  expect(fails, std::abs(mean_gap - expected_gap) <= 3.0 * se,
         "selection gain " + num(mean_gap) + " misses the enumerated expectation " +
             num(expected_gap) + " +/- " + num(3.0 * se));
  return fails;
}

// ---- 8: correlation separates real judges from coin flips -------------------

Failures criterion_correlation() {
  Failures fails;
  const Dataset data = make_text_suite(500, TaskKind::Translation, 47);
  const MetricFn bleu_fn = metric_by_name("bleu", nullptr);
  const MetricFn rouge_fn = metric_by_name("rouge_l", nullptr);
  const DecodingParams params;
  std::map<std::string, MetricFn> metrics;
  metrics["bleu"] = bleu_fn;
  metrics["rouge_l"] = rouge_fn;

  const auto run = [&](MetricFn judged, const char* name, double q, uint64_t seed) {
    CandidatePoolModel model(data, 23);
    MetricJudge judge(std::move(judged), name, q, seed);
    return run_correlation(model, judge, data, metrics, params, 13);
  };

  {
    const CorrelationResult res = run(bleu_fn, "bleu", 0.8, 11);
    const double thresh = 3.0 / std::sqrt(static_cast<double>(res.used - 1));
    const auto& coef = res.coefficients.at("bleu");
    expect(fails, coef.has_value() && *coef > thresh,
           "word-overlap judge: coefficient " + (coef ? num(*coef) : "undefined") +
               " not above " + num(thresh));
  }
  {
    const CorrelationResult res = run(rouge_fn, "rouge_l", 0.8, 15);
    const double thresh = 3.0 / std::sqrt(static_cast<double>(res.used - 1));
    const auto& coef = res.coefficients.at("rouge_l");
    expect(fails, coef.has_value() && *coef > thresh,
           "subsequence judge: coefficient " + (coef ? num(*coef) : "undefined") +
               " not above " + num(thresh));
  }
  {
    const CorrelationResult res = run(bleu_fn, "bleu", 0.5, 19);  // a pure coin flip
    const double thresh = 3.0 / std::sqrt(static_cast<double>(res.used - 1));
    for (const char* name : {"bleu", "rouge_l"}) {
      const auto& coef = res.coefficients.at(name);
      expect(fails, coef.has_value() && std::abs(*coef) <= thresh,
             std::string("coin-flip judge correlates with ") + name + ": " +
                 (coef ? num(*coef) : "undefined"));
    }
  }
  return fails;
}

// ---- 9: baselines behave -----------------------------------------------------

Failures criterion_baselines() {
  Failures fails;

  // Majority vote over three draws from an 80%-correct model.
  std::string vocab;
  const Dataset data = make_copy_suite(5000, 7, 4, 53, &vocab);
  StochasticAccuracyModel model(data, 0.8, 3);
  const std::vector<VoteRecord> votes = pseudo_labels(model, data, 3, DecodingParams{}, 21);
  double correct = 0.0;
  for (size_t i = 0; i < votes.size(); ++i)
    if (votes[i].answer == normalize_answer(data[i].reference)) correct += 1.0;
  const double acc = correct / static_cast<double>(votes.size());
  const double expected = 0.8 * 0.8 * 0.8 + 3 * 0.8 * 0.8 * 0.2;  // majority of three
  const double band = 3.0 * std::sqrt(expected * (1.0 - expected) / 5000.0);
  expect(fails, std::abs(acc - expected) <= band,
         "vote accuracy " + num(acc) + " misses " + num(expected) + " +/- " + num(band));

  // Fine-tuning on those pseudo-labels must not hurt; off-vocabulary
  // wrong answers are skipped, so the usable labels are the correct ones.
  ToyPolicy::Options opt;
  opt.stop = "\n";
  opt.stop_bias = 1.3;
  ToyPolicy policy(vocab, opt, 8);
  DecodingParams sampling;
  sampling.max_new_tokens = 5;
  const RewardFn exact = make_metric_reward("accuracy", nullptr);
  const double before =
      greedy_probe_score(policy, data, static_cast<int>(data.size()), sampling, exact);
  std::vector<std::pair<std::string, std::string>> pairs;
  for (size_t i = 0; i < votes.size(); ++i)
    pairs.emplace_back(render_prompt(data[i]), votes[i].answer);
  const FinetuneResult tuned = finetune_supervised(policy, pairs, FinetuneOptions{}, 8);
  const double after =
      greedy_probe_score(policy, data, static_cast<int>(data.size()), sampling, exact);
  expect(fails, after >= before,
         "pseudo-label fine-tuning reduced accuracy " + num(before) + " -> " + num(after));
  expect(fails, tuned.skipped_pairs < static_cast<long>(pairs.size()),
         "no pseudo-label pair was usable for fine-tuning");

  // Metric-reward training upper-bounds the self-evaluated run.
  const CopyRun rlft = copy_training_run(1, 0.0, false, 2000);
  expect(fails, rlft.after >= 0.9,
         "exact-match reward training reached only " + num(rlft.after) + " (need 0.9)");
  return fails;
}

// ---- 10: training runs are byte-reproducible ---------------------------------

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

int quiet_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "rlc");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream sink;
  std::streambuf* saved = std::cout.rdbuf(sink.rdbuf());
  const int rc = run_cli(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(saved);
  return rc;
}

Failures criterion_determinism() {
  Failures fails;
  const auto base = std::filesystem::temp_directory_path() / "rlc_acceptance_determinism";
  std::filesystem::remove_all(base);
  std::filesystem::create_directories(base);
  const auto dataset = base / "copy.ndjson";
  save_dataset(make_copy_suite(40, 4, 3, 77, nullptr), dataset);

  const auto run_once = [&](const char* tag) {
    const auto out = base / tag;
    const int rc = quiet_cli({"train", "--dataset", dataset.string(), "--method", "sirlc",
                              "--seed", "5", "--max-new-tokens", "4", "--steps", "40",
                              "--set", "ppo.batch_size=6", "--set", "model.width=16",
                              "--set", "train.log_interval=1", "--set", "train.eval_probe=8",
                              "--out-dir", out.string()});
    return std::make_pair(rc, slurp(out / "curves.csv"));
  };
  const auto [rc_a, curves_a] = run_once("a");
  const auto [rc_b, curves_b] = run_once("b");
  expect(fails, rc_a == 0 && rc_b == 0,
         "training runs exited " + std::to_string(rc_a) + " / " + std::to_string(rc_b));
  expect(fails, !curves_a.empty(), "first run wrote no curves");
  expect(fails, curves_a == curves_b, "identical configs produced different curve files");
  std::filesystem::remove_all(base);
  return fails;
}

}  // namespace

int main() {
  struct Criterion {
    const char* label;
    Failures (*fn)();
  };
  const Criterion criteria[] = {
      {"advantage estimation matches the direct definition", criterion_gae},
      {"surrogate loss hand values and finite differences", criterion_ppo},
      {"divergence stays nonnegative and frozen judges stay fixed", criterion_kl_fixedness},
      {"evaluation prompts and reply parsing are byte-exact", criterion_parsing},
      {"self-evaluation training lifts copy-task accuracy", criterion_self_improvement},
      {"resample-on-no reaches the closed-form accuracy", criterion_se_resample},
      {"best-of-k selection tracks the preferred metric", criterion_best_of_k},
      {"correlation separates real judges from coin flips", criterion_correlation},
      {"vote, pseudo-label and metric-reward baselines behave", criterion_baselines},
      {"training runs are byte-reproducible end to end", criterion_determinism},
  };

  int failed = 0;
  int index = 0;
  for (const Criterion& c : criteria) {
    ++index;
    const auto t0 = std::chrono::steady_clock::now();
    Failures fails;
    try {
      fails = c.fn();
    } catch (const std::exception& e) {
      fails.push_back(std::string("unexpected exception: ") + e.what());
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %2d: %s  %s (%.1fs)\n", index, fails.empty() ? "PASS" : "FAIL",
                c.label, dt);
    for (const std::string& f : fails) std::printf("    - %s\n", f.c_str());
    if (!fails.empty()) ++failed;
  }
  std::printf("acceptance: %d/10 criteria passed\n", 10 - failed);
  return failed;
}
