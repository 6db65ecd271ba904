#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "rlc/dataset.hpp"
#include "rlc/judge.hpp"
#include "rlc/metrics.hpp"
#include "rlc/model.hpp"

namespace rlc {

// --- synthetic task suites ---------------------------------------------

// Copy-task suite for policy training: the instruction is a bare [TEXT]
// slot and the reference equals the problem, a random string over the
// first `alphabet` lowercase letters.  Lengths mix 1..max_length with a
// square-law skew toward short strings (curriculum: short prompts are
// what a fresh policy can complete by chance).  Returns the dataset;
// `vocab_out` receives the character vocabulary including the '\n'
// stop token.
Dataset make_copy_suite(int n, int alphabet, int max_length, uint64_t seed,
                        std::string* vocab_out = nullptr);

// Labeled short-sentence suite for metric/judging experiments: problems
// are sentence fragments over a small word pool, references are short
// word sequences.  `kind` selects the task kind of every instance.
Dataset make_text_suite(int n, TaskKind kind, uint64_t seed);

// --- scripted models -----------------------------------------------------

// Answers with the instance reference with probability `p`, otherwise
// with a wrong answer that is a fixed function of the instance (so
// repeated wrong votes agree).  Decoding parameters are ignored; each
// call consumes internal randomness.
class StochasticAccuracyModel final : public TextModel {
 public:
  StochasticAccuracyModel(const Dataset& data, double p, uint64_t seed);

  std::string generate(const std::string& prompt, const DecodingParams& params,
                       uint64_t seed) override;
  LogProbSeq score(const std::string& prompt, const std::string& completion) override;
  ModelMode mode() const override { return ModelMode::Frozen; }
  std::string identity() const override;

  static std::string wrong_answer(const TaskInstance& item);

 private:
  const TaskInstance& lookup(const std::string& prompt) const;
  std::unordered_map<std::string, const TaskInstance*> by_prompt_;
  double p_;
  std::mt19937_64 rng_;
};

// Emits noisy variants of the instance reference: per call it picks a
// corruption level and randomly drops or replaces words.  Gives
// best-of-k and correlation experiments candidates of varying quality.
class CandidatePoolModel final : public TextModel {
 public:
  CandidatePoolModel(const Dataset& data, uint64_t seed);

  std::string generate(const std::string& prompt, const DecodingParams& params,
                       uint64_t seed) override;
  LogProbSeq score(const std::string& prompt, const std::string& completion) override;
  ModelMode mode() const override { return ModelMode::Frozen; }
  std::string identity() const override;

 private:
  std::unordered_map<std::string, const TaskInstance*> by_prompt_;
  std::vector<std::string> word_pool_;
  std::mt19937_64 rng_;
};

// --- scripted judges -----------------------------------------------------

// Ground-truth judge with an optional error rate: the true verdict
// (exact answer match against the reference) is flipped with
// probability `flip_prob`.  Comparison prefers the matching answer and
// stays unparsed on ties.
class OracleJudge final : public Judge {
 public:
  explicit OracleJudge(double flip_prob = 0.0, uint64_t seed = 0);

  Verdict verdict(const TaskInstance& item, const std::string& answer) override;
  std::optional<int> quality(const TaskInstance& item, const std::string& answer) override;
  Preference compare(const TaskInstance& item, const std::string& a,
                     const std::string& b) override;
  std::string identity() const override;

 private:
  bool flip() { return flip_prob_ > 0.0 && uniform_unit(rng_) < flip_prob_; }
  double flip_prob_;
  std::mt19937_64 rng_;
};

// Judge that always answers yes / top score / first answer.
class AlwaysYesJudge final : public Judge {
 public:
  Verdict verdict(const TaskInstance&, const std::string&) override { return Verdict::Yes; }
  std::optional<int> quality(const TaskInstance&, const std::string&) override { return 10; }
  Preference compare(const TaskInstance&, const std::string&, const std::string&) override {
    return Preference::First;
  }
  std::string identity() const override { return "scripted-always-yes"; }
};

// Judge aligned with a text metric: with probability `q` it picks the
// true metric-better candidate, otherwise the other one; exact metric
// ties fall to a coin flip.  q = 1 is a perfect metric judge, q = 0.5
// is indistinguishable from coin flipping.
class MetricJudge final : public Judge {
 public:
  MetricJudge(MetricFn metric, std::string metric_name, double q, uint64_t seed);

  Verdict verdict(const TaskInstance& item, const std::string& answer) override;
  std::optional<int> quality(const TaskInstance& item, const std::string& answer) override;
  Preference compare(const TaskInstance& item, const std::string& a,
                     const std::string& b) override;
  std::string identity() const override;

 private:
  MetricFn metric_;
  std::string metric_name_;
  double q_;
  std::mt19937_64 rng_;
};

// --- experiments -----------------------------------------------------------

// Draft, self-check, resample once: the first sample is kept unless the
// judge says "no", in which case a single resample replaces it.
struct SeResampleResult {
  long n = 0;
  double acc_without = 0.0;  // first-sample accuracy
  double acc_with = 0.0;     // accuracy after the self-check pass
  long resampled = 0;
  struct Row {
    std::string id;
    bool first_correct = false;
    bool resampled = false;
    bool final_correct = false;
  };
  std::vector<Row> rows;
};
SeResampleResult run_se_resample(TextModel& model, Judge& judge, const Dataset& data,
                                 const DecodingParams& params, uint64_t seed);

// Best-of-k selection: k candidates per instance; without SE the k
// candidates' metric scores are averaged, with SE a round-robin
// winner-stays tournament (unparsed comparisons keep the incumbent)
// picks one candidate.
struct BestOfKResult {
  struct Row {
    std::string id;
    std::vector<std::string> candidates;
    std::vector<double> metric_values;  // aligned with candidates
    int winner = 0;                     // index selected by the judge
    double mean_metric = 0.0;           // no-SE score
    double winner_metric = 0.0;         // SE score
  };
  std::vector<Row> rows;
  double mean_without = 0.0;
  double mean_with = 0.0;
};
BestOfKResult run_best_of_k(TextModel& model, Judge& judge, const Dataset& data, int k,
                            const MetricFn& metric, const DecodingParams& params, uint64_t seed);

// Pairwise preference vs. metric-difference correlation: two samples per
// instance, judge preference encoded +-1, metric difference reduced to
// its sign, Pearson across instances.  Metrics whose difference signs
// never vary yield no coefficient ("undefined").
struct CorrelationResult {
  struct Row {
    std::string id;
    std::string first, second;
    int preference = 0;  // +1 first, -1 second, 0 unparsed (row excluded)
  };
  std::vector<Row> rows;
  std::map<std::string, std::optional<double>> coefficients;
  long used = 0;  // rows with a parsed preference
};
CorrelationResult run_correlation(TextModel& model, Judge& judge, const Dataset& data,
                                  const std::map<std::string, MetricFn>& metrics,
                                  const DecodingParams& params, uint64_t seed);

// CSV renderings of the experiment outputs (one row per instance plus a
// summary block).
std::string se_resample_csv(const SeResampleResult& r);
std::string best_of_k_csv(const BestOfKResult& r);
std::string correlation_csv(const CorrelationResult& r);

}  // namespace rlc
