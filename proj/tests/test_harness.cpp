#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "rlc/error.hpp"
#include "rlc/harness.hpp"
#include "rlc/metrics.hpp"
#include "rlc/text.hpp"

using namespace rlc;

TEST_CASE("make_copy_suite shape") {
  std::string vocab;
  const Dataset data = make_copy_suite(200, 4, 6, 11, &vocab);
  CHECK(vocab == "abcd\n");
  REQUIRE(data.size() == 200);
  size_t short_ones = 0;
  for (size_t i = 0; i < data.size(); ++i) {
    const TaskInstance& item = data[i];
    CHECK(item.id == "copy-" + std::to_string(i));
    CHECK(item.instruction == "[TEXT]");
    CHECK(item.problem == item.reference);
    CHECK(item.has_reference);
    CHECK(item.kind == TaskKind::ReasoningGeneration);
    REQUIRE(!item.problem.empty());
    CHECK(item.problem.size() <= 6);
    for (char c : item.problem) {
      CHECK(c >= 'a');
      CHECK(c <= 'd');
    }
    if (item.problem.size() == 1) ++short_ones;
  }
  CHECK(short_ones > 60);  // square-skewed lengths put ~half the mass on 1

  // Deterministic per seed, distinct across seeds.
  const Dataset again = make_copy_suite(200, 4, 6, 11, nullptr);
  CHECK(again[7].problem == data[7].problem);
  const Dataset other = make_copy_suite(200, 4, 6, 12, nullptr);
  bool any_differs = false;
  for (size_t i = 0; i < 200 && !any_differs; ++i)
    any_differs = other[i].problem != data[i].problem;
  CHECK(any_differs);

  CHECK_THROWS_AS(make_copy_suite(0, 4, 6, 1, nullptr), Error);
  CHECK_THROWS_AS(make_copy_suite(10, 0, 6, 1, nullptr), Error);
  CHECK_THROWS_AS(make_copy_suite(10, 27, 6, 1, nullptr), Error);
  CHECK_THROWS_AS(make_copy_suite(10, 4, 0, 1, nullptr), Error);
}

TEST_CASE("make_text_suite shape") {
  const Dataset data = make_text_suite(50, TaskKind::Summarization, 3);
  REQUIRE(data.size() == 50);
  for (size_t i = 0; i < data.size(); ++i) {
    const TaskInstance& item = data[i];
    CHECK(item.kind == TaskKind::Summarization);
    CHECK(item.has_reference);
    CHECK(item.instruction == default_instruction(TaskKind::Summarization));
    CHECK(item.problem.find(item.reference) != std::string::npos);
    const size_t words = split_tokens(item.reference).size();
    CHECK(words >= 4);
    CHECK(words <= 8);
  }
  CHECK_THROWS_AS(make_text_suite(10, TaskKind::ReasoningMultichoice, 3), Error);
}

TEST_CASE("stochastic accuracy model") {
  const Dataset data = make_copy_suite(50, 4, 4, 5, nullptr);
  const DecodingParams params;

  StochasticAccuracyModel always(data, 1.0, 9);
  StochasticAccuracyModel never(data, 0.0, 9);
  for (size_t i = 0; i < data.size(); ++i) {
    const std::string prompt = render_prompt(data[i]);
    CHECK(always.generate(prompt, params, 0) == data[i].reference);
    const std::string wrong = never.generate(prompt, params, 0);
    CHECK(wrong == "not " + data[i].reference);
    CHECK(exact_answer_match(data[i], wrong) == 0.0);
  }

  StochasticAccuracyModel coin(data, 0.7, 42);
  int hits = 0;
  const int trials = 4000;
  for (int t = 0; t < trials; ++t) {
    const size_t i = static_cast<size_t>(t) % data.size();
    if (coin.generate(render_prompt(data[i]), params, 0) == data[i].reference) ++hits;
  }
  const double rate = static_cast<double>(hits) / trials;
  CHECK(rate == doctest::Approx(0.7).epsilon(0.05));

  CHECK_THROWS_AS(StochasticAccuracyModel(data, 1.5, 0), Error);
  CHECK_THROWS_WITH_AS(always.generate("who are you?", params, 0),
                       doctest::Contains("does not belong"), Error);
  CHECK_THROWS_AS(always.score("a", "b"), CapabilityError);
  CHECK(always.identity() == "scripted-accuracy(p=1)");
}

TEST_CASE("candidate pool model") {
  const Dataset data = make_text_suite(20, TaskKind::Translation, 8);
  const DecodingParams params;

  CandidatePoolModel pool(data, 21);
  CandidatePoolModel pool_again(data, 21);
  for (int round = 0; round < 3; ++round) {
    for (size_t i = 0; i < data.size(); ++i) {
      const std::string prompt = render_prompt(data[i]);
      const std::string cand = pool.generate(prompt, params, 0);
      CHECK(cand == pool_again.generate(prompt, params, 0));  // seed fixes the stream
      CHECK(!cand.empty());
    }
  }

  // Candidates vary in quality; some are verbatim copies of the reference.
  CandidatePoolModel fresh(data, 4);
  std::set<std::string> seen;
  bool any_exact = false;
  const std::string prompt = render_prompt(data[0]);
  for (int t = 0; t < 40; ++t) {
    const std::string cand = fresh.generate(prompt, params, 0);
    seen.insert(cand);
    any_exact = any_exact || cand == data[0].reference;
  }
  CHECK(seen.size() > 3);
  CHECK(any_exact);

  CHECK_THROWS_AS(fresh.generate("stray prompt", params, 0), Error);
  CHECK_THROWS_AS(fresh.score("a", "b"), CapabilityError);
}

TEST_CASE("oracle judge") {
  TaskInstance item;
  item.id = "q";
  item.kind = TaskKind::ReasoningGeneration;
  item.reference = "42";
  item.has_reference = true;

  OracleJudge oracle;
  CHECK(oracle.verdict(item, "The answer is 42.") == Verdict::Yes);
  CHECK(oracle.verdict(item, "The answer is 41.") == Verdict::No);
  CHECK(oracle.quality(item, "The answer is 42.") == 10);
  CHECK(oracle.quality(item, "The answer is 41.") == 1);
  CHECK(oracle.compare(item, "42", "41") == Preference::First);
  CHECK(oracle.compare(item, "41", "42") == Preference::Second);
  CHECK(oracle.unparsed_count() == 0);
  CHECK(oracle.compare(item, "40", "41") == Preference::Unparsed);
  CHECK(oracle.unparsed_count() == 1);
  CHECK(oracle.identity() == "scripted-oracle");

  OracleJudge inverted(1.0, 3);
  CHECK(inverted.verdict(item, "42") == Verdict::No);
  CHECK(inverted.verdict(item, "41") == Verdict::Yes);
  CHECK(inverted.compare(item, "42", "41") == Preference::Second);
  CHECK(inverted.identity() == "scripted-noisy(flip=1)");

  TaskInstance blank = item;
  blank.has_reference = false;
  CHECK_THROWS_AS(oracle.verdict(blank, "42"), Error);
  CHECK_THROWS_AS(OracleJudge(-0.1, 0), Error);

  // flip(p) inverts the verdict with probability p.
  OracleJudge noisy(0.25, 17);
  int yes = 0;
  const int trials = 4000;
  for (int t = 0; t < trials; ++t)
    if (noisy.verdict(item, "42") == Verdict::Yes) ++yes;
  CHECK(static_cast<double>(yes) / trials == doctest::Approx(0.75).epsilon(0.04));
}

TEST_CASE("metric judge") {
  TaskInstance item;
  item.id = "q";
  item.kind = TaskKind::Translation;
  item.reference = "the cat sat";
  item.has_reference = true;
  const MetricFn metric = metric_by_name("rouge_l", nullptr);

  MetricJudge faithful(metric, "rouge_l", 1.0, 0);
  CHECK(faithful.verdict(item, "the cat sat") == Verdict::Yes);
  CHECK(faithful.verdict(item, "dog ran far") == Verdict::No);
  CHECK(faithful.quality(item, "the cat sat") == 10);
  CHECK(faithful.quality(item, "dog ran far") == 1);
  // rouge_l("the cat", ref): P = 1, R = 2/3 -> F1 = 0.8 -> round(1 + 9*0.8) = 8.
  CHECK(faithful.quality(item, "the cat") == 8);
  CHECK(faithful.compare(item, "the cat sat", "dog ran far") == Preference::First);
  CHECK(faithful.compare(item, "dog ran far", "the cat sat") == Preference::Second);
  CHECK(faithful.identity() == "scripted-prefer-rouge_l(q=1)");

  MetricJudge contrarian(metric, "rouge_l", 0.0, 0);
  CHECK(contrarian.compare(item, "the cat sat", "dog ran far") == Preference::Second);

  // Exact metric ties fall to a coin flip regardless of q.
  MetricJudge tied(metric, "rouge_l", 1.0, 5);
  int firsts = 0;
  for (int t = 0; t < 2000; ++t)
    if (tied.compare(item, "dog ran", "far too") == Preference::First) ++firsts;
  CHECK(static_cast<double>(firsts) / 2000 == doctest::Approx(0.5).epsilon(0.08));

  CHECK_THROWS_AS(MetricJudge(MetricFn{}, "none", 1.0, 0), Error);
  CHECK_THROWS_AS(MetricJudge(metric, "rouge_l", 2.0, 0), Error);
}

TEST_CASE("se-resample experiment") {
  const Dataset data = make_copy_suite(400, 4, 4, 2, nullptr);
  const DecodingParams params;

  SUBCASE("perfect judge lets wrong drafts retry") {
    StochasticAccuracyModel model(data, 0.5, 7);
    OracleJudge judge;
    const SeResampleResult res = run_se_resample(model, judge, data, params, 13);
    CHECK(res.n == 400);
    CHECK(res.acc_without == doctest::Approx(0.5).epsilon(0.15));
    CHECK(res.acc_with > res.acc_without);
    // acc_with = p + (1-p)p = 0.75 in expectation.
    CHECK(res.acc_with == doctest::Approx(0.75).epsilon(0.12));

    long wrong_firsts = 0;
    for (const auto& row : res.rows) {
      if (!row.first_correct) ++wrong_firsts;
      if (!row.resampled) CHECK(row.final_correct == row.first_correct);
    }
    CHECK(res.resampled == wrong_firsts);  // the oracle triggers exactly on misses
  }

  SUBCASE("always-yes judge never resamples") {
    StochasticAccuracyModel model(data, 0.5, 7);
    AlwaysYesJudge judge;
    const SeResampleResult res = run_se_resample(model, judge, data, params, 13);
    CHECK(res.resampled == 0);
    CHECK(res.acc_with == res.acc_without);
  }
}

TEST_CASE("best-of-k experiment") {
  const Dataset data = make_text_suite(60, TaskKind::Translation, 19);
  const DecodingParams params;
  const MetricFn metric = metric_by_name("bleu", nullptr);

  SUBCASE("perfect metric judge surfaces the metric-best candidate") {
    CandidatePoolModel model(data, 3);
    MetricJudge judge(metric, "bleu", 1.0, 4);
    const BestOfKResult res = run_best_of_k(model, judge, data, 4, metric, params, 8);
    REQUIRE(res.rows.size() == 60);
    for (const auto& row : res.rows) {
      REQUIRE(row.candidates.size() == 4);
      const double best = *std::max_element(row.metric_values.begin(), row.metric_values.end());
      CHECK(row.winner_metric == doctest::Approx(best));  // winner-stays finds the max
      CHECK(row.winner_metric >= row.mean_metric - 1e-12);
    }
    CHECK(res.mean_with > res.mean_without);
  }

  SUBCASE("k = 1 is a no-op") {
    CandidatePoolModel model(data, 3);
    AlwaysYesJudge judge;
    const BestOfKResult res = run_best_of_k(model, judge, data, 1, metric, params, 8);
    for (const auto& row : res.rows) CHECK(row.winner == 0);
    CHECK(res.mean_with == doctest::Approx(res.mean_without));
  }

  SUBCASE("judges that never prefer the challenger keep the first candidate") {
    CandidatePoolModel model(data, 3);
    AlwaysYesJudge judge;  // compare() always answers First
    const BestOfKResult res = run_best_of_k(model, judge, data, 4, metric, params, 8);
    for (const auto& row : res.rows) CHECK(row.winner == 0);
  }

  CandidatePoolModel model(data, 3);
  AlwaysYesJudge judge;
  CHECK_THROWS_AS(run_best_of_k(model, judge, data, 0, metric, params, 8), Error);
  CHECK_THROWS_AS(run_best_of_k(model, judge, data, 2, MetricFn{}, params, 8), Error);
}

TEST_CASE("correlation experiment") {
  const Dataset data = make_text_suite(150, TaskKind::Translation, 23);
  const DecodingParams params;
  const MetricFn bleu_fn = metric_by_name("bleu", nullptr);

  CandidatePoolModel model(data, 31);
  MetricJudge judge(bleu_fn, "bleu", 1.0, 6);
  std::map<std::string, MetricFn> metrics;
  metrics["bleu"] = bleu_fn;
  metrics["constant"] = [](const std::string&, const std::string&) { return 0.25; };

  const CorrelationResult res = run_correlation(model, judge, data, metrics, params, 40);
  REQUIRE(res.rows.size() == 150);
  CHECK(res.used == 150);  // a metric judge always states a preference
  REQUIRE(res.coefficients.at("bleu").has_value());
  CHECK(*res.coefficients.at("bleu") > 0.5);  // judge tracks the metric almost surely
  CHECK(!res.coefficients.at("constant").has_value());  // zero-variance signs: undefined

  CHECK_THROWS_AS(run_correlation(model, judge, data, {}, params, 40), Error);
}

TEST_CASE("experiment CSV layouts") {
  SeResampleResult se;
  se.rows.push_back({"q1", true, false, true});
  se.rows.push_back({"q2", false, true, true});
  se.acc_without = 0.5;
  se.acc_with = 1.0;
  se.resampled = 1;
  se.n = 2;
  CHECK(se_resample_csv(se) ==
        "id,first_correct,resampled,final_correct\n"
        "q1,1,0,1\n"
        "q2,0,1,1\n"
        "summary,acc_without,0.5\n"
        "summary,acc_with,1\n"
        "summary,resampled,1\n");

  BestOfKResult bok;
  BestOfKResult::Row row;
  row.id = "q1";
  row.candidates = {"a", "b"};
  row.metric_values = {0.25, 0.75};
  row.mean_metric = 0.5;
  row.winner = 1;
  row.winner_metric = 0.75;
  bok.rows.push_back(row);
  bok.mean_without = 0.5;
  bok.mean_with = 0.75;
  CHECK(best_of_k_csv(bok) ==
        "id,winner,mean_metric,winner_metric\n"
        "q1,1,0.5,0.75\n"
        "summary,mean_without,0.5\n"
        "summary,mean_with,0.75\n");

  CorrelationResult corr;
  corr.rows.push_back({"q1", "x", "y", 1});
  corr.rows.push_back({"q2", "x", "y", -1});
  corr.coefficients["bleu"] = 0.5;
  corr.coefficients["rouge_l"] = std::nullopt;
  corr.used = 2;
  CHECK(correlation_csv(corr) ==
        "id,preference\n"
        "q1,1\n"
        "q2,-1\n"
        "coefficient,bleu,0.5\n"
        "coefficient,rouge_l,undefined\n"
        "summary,used,2\n");
}
