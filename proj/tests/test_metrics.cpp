#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "rlc/embedder.hpp"
#include "rlc/error.hpp"
#include "rlc/metrics.hpp"

using namespace rlc;

TEST_CASE("bleu hand values") {
  // cand "the cat sat" vs ref "the cat sat on the mat":
  //   p1 = 3/3, p2 = (2+1)/(2+1), p3 = (1+1)/(1+1), p4 = smoothed over zero
  //   available 4-grams = 1; brevity = exp(1 - 6/3) = e^-1.
  CHECK(bleu("the cat sat", "the cat sat on the mat") == doctest::Approx(std::exp(-1.0)));

  // Equal lengths, partial overlap: p1 = 2/3, p2 = 1/3, p3 = 1/2, p4 = 1,
  // no brevity penalty -> (2/3 * 1/3 * 1/2)^(1/4) = 3^(-1/2).
  CHECK(bleu("the dog sat", "the cat sat") == doctest::Approx(1.0 / std::sqrt(3.0)));

  CHECK(bleu("a b c d e", "a b c d e") == doctest::Approx(1.0));
  CHECK(bleu("x y z", "a b c") == 0.0);  // no unigram overlap, no smoothing
  CHECK(bleu("", "a b c") == 0.0);
  CHECK(bleu("a b c", "") == 0.0);
}

TEST_CASE("bleu brevity penalty only punishes short candidates") {
  const double short_cand = bleu("a b", "a b c d");
  const double long_cand = bleu("a b c d e f", "a b c d");
  CHECK(short_cand < bleu("a b c d", "a b c d"));
  CHECK(long_cand <= 1.0);
  CHECK(long_cand > 0.0);
}

TEST_CASE("rouge_l hand values") {
  // LCS("the cat sat", "the cat on the mat") = "the cat" (2 tokens):
  // P = 2/3, R = 2/5, F1 = 2PR/(P+R) = 0.5.
  CHECK(rouge_l("the cat sat", "the cat on the mat") == doctest::Approx(0.5));
  CHECK(rouge_l("a b c", "a b c") == doctest::Approx(1.0));
  CHECK(rouge_l("x y", "a b") == 0.0);
  CHECK(rouge_l("", "a b") == 0.0);
  CHECK(rouge_l("a b", "") == 0.0);
  // LCS is order-sensitive where bag overlap is not.
  CHECK(rouge_l("c b a", "a b c") < rouge_l("a b c", "a b c"));
}

TEST_CASE("bert_score via hashed embedder") {
  HashedEmbedder embedder;
  CHECK(bert_score("the quick brown fox", "the quick brown fox", embedder) ==
        doctest::Approx(1.0));
  CHECK(bert_score("", "a b", embedder) == 0.0);
  CHECK(bert_score("a b", "", embedder) == 0.0);

  // Cosines are clamped to [0, 1], so the score stays in range for any pair.
  std::mt19937_64 rng(7);
  const char* words[] = {"alpha", "beta", "gamma", "delta", "epsilon", "zeta"};
  for (int trial = 0; trial < 20; ++trial) {
    std::string a, b;
    for (int i = 0; i < 4; ++i) {
      a += std::string(words[rng() % 6]) + " ";
      b += std::string(words[rng() % 6]) + " ";
    }
    const double s = bert_score(a, b, embedder);
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
  }

  // Sharing more words raises the greedy-match score.
  const double close = bert_score("alpha beta gamma", "alpha beta delta", embedder);
  const double far = bert_score("alpha beta gamma", "zeta epsilon delta", embedder);
  CHECK(close > far);
}

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

TEST_CASE("pearson hand values and error contracts") {
  CHECK(pearson(vec({1, 2, 3}), vec({2, 4, 6})) == doctest::Approx(1.0));
  CHECK(pearson(vec({1, 2, 3}), vec({6, 4, 2})) == doctest::Approx(-1.0));
  CHECK(pearson(vec({1, 2, 3, 4}), vec({1, 3, 2, 4})) == doctest::Approx(0.8));
  CHECK_THROWS_WITH_AS(pearson(vec({1}), vec({2})), doctest::Contains("at least two"), Error);
  CHECK_THROWS_WITH_AS(pearson(vec({1, 2}), vec({1, 2, 3})), doctest::Contains("length"), Error);
  CHECK_THROWS_WITH_AS(pearson(vec({1, 1, 1}), vec({1, 2, 3})), doctest::Contains("zero variance"),
                       Error);
}

TEST_CASE("exact_answer_match honours answer extraction") {
  TaskInstance item;
  item.id = "t0";
  item.kind = TaskKind::ReasoningGeneration;
  item.reference = "42";
  item.has_reference = true;
  CHECK(exact_answer_match(item, "Let me think. The answer is 42.") == 1.0);
  CHECK(exact_answer_match(item, "The answer is 41.") == 0.0);

  item.kind = TaskKind::ReasoningMultichoice;
  item.reference = "C";
  CHECK(exact_answer_match(item, "So the answer is (C).") == 1.0);
  CHECK(exact_answer_match(item, "So the answer is (B).") == 0.0);
}

TEST_CASE("metric_by_name dispatch") {
  auto embedder = std::make_shared<HashedEmbedder>();
  CHECK(metric_by_name("bleu", nullptr)("a b c", "a b c") == doctest::Approx(1.0));
  CHECK(metric_by_name("rouge_l", nullptr)("a b", "a b") == doctest::Approx(1.0));
  CHECK(metric_by_name("bertscore", embedder)("a b", "a b") == doctest::Approx(1.0));
  CHECK_THROWS_WITH_AS(metric_by_name("bertscore", nullptr), doctest::Contains("embedder"), Error);
  CHECK_THROWS_WITH_AS(metric_by_name("meteor", nullptr), doctest::Contains("unknown metric"),
                       Error);
}

TEST_CASE("metric report layout") {
  MetricReport report;
  report.add("q1", "bleu", 0.5);
  report.add("q2", "bleu", 0.25);
  report.add("q1", "rouge_l", 1.0);

  const auto agg = report.aggregates();
  CHECK(agg.at("bleu") == doctest::Approx(0.375));
  CHECK(agg.at("rouge_l") == doctest::Approx(1.0));

  const std::string csv = report.to_csv();
  CHECK(csv ==
        "id,metric,value\n"
        "q1,bleu,0.5\n"
        "q2,bleu,0.25\n"
        "q1,rouge_l,1\n"
        "aggregate,bleu,0.375\n"
        "aggregate,rouge_l,1\n");
}
