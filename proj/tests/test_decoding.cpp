#include <doctest.h>

#include <cmath>

#include "rlc/decoding.hpp"

using namespace rlc;

namespace {

Eigen::VectorXd make_logits(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST_CASE("softmax family") {
  const Eigen::VectorXd logits = make_logits({1.0, 2.0, 3.0});
  const Eigen::VectorXd p = softmax(logits);
  CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p[2] > p[1]);
  const Eigen::VectorXd lp = log_softmax(logits);
  for (int i = 0; i < 3; ++i) CHECK(std::exp(lp[i]) == doctest::Approx(p[i]).epsilon(1e-12));

  SUBCASE("stable under large offsets") {
    // The normalizer rounds at the ulp of the offset (~2e-7 at 1e9);
    // the check is overflow safety, not bit equality.
    const Eigen::VectorXd shifted = logits.array() + 1e9;
    CHECK((softmax(shifted) - p).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(log_softmax(shifted).allFinite());
  }
  SUBCASE("entropy") {
    const Eigen::VectorXd uniform = Eigen::VectorXd::Zero(8);
    CHECK(softmax_entropy(uniform) == doctest::Approx(std::log(8.0)).epsilon(1e-12));
    CHECK(softmax_entropy(make_logits({0.0, 200.0})) == doctest::Approx(0.0).epsilon(1e-6));
  }
}

TEST_CASE("logit filtering") {
  DecodingParams params;
  params.top_k = 0;
  params.top_p = 1.0;

  SUBCASE("temperature zero is greedy with low-index ties") {
    params.temperature = 0.0;
    Eigen::VectorXd p = filter_logits(make_logits({1.0, 3.0, 3.0, 2.0}), params);
    CHECK(p[1] == 1.0);
    CHECK(p.sum() == 1.0);
  }
  SUBCASE("temperature rescales") {
    params.temperature = 0.5;
    const Eigen::VectorXd logits = make_logits({1.0, 2.0});
    const Eigen::VectorXd expect = softmax(make_logits({2.0, 4.0}));
    CHECK((filter_logits(logits, params) - expect).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("top_k keeps the k best") {
    params.top_k = 2;
    const Eigen::VectorXd p = filter_logits(make_logits({1.0, 4.0, 3.0, 2.0}), params);
    CHECK(p[0] == 0.0);
    CHECK(p[3] == 0.0);
    CHECK(p[1] > p[2]);
    CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("top_p keeps the shortest prefix by unrenormalized mass") {
    // probs 0.6 / 0.3 / 0.1: top_p 0.65 needs the first two entries
    const Eigen::VectorXd logits = make_logits({std::log(0.6), std::log(0.3), std::log(0.1)});
    params.top_p = 0.65;
    const Eigen::VectorXd p = filter_logits(logits, params);
    CHECK(p[2] == 0.0);
    CHECK(p[0] == doctest::Approx(0.6 / 0.9).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(0.3 / 0.9).epsilon(1e-12));
    // top_p at least the first survivor's mass keeps just it
    params.top_p = 0.60;
    CHECK(filter_logits(logits, params)[0] == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("sampling primitives") {
  SUBCASE("deterministic in the generator") {
    const Eigen::VectorXd probs = softmax(make_logits({0.1, 0.7, 0.2}));
    std::mt19937_64 a(5), b(5);
    for (int i = 0; i < 200; ++i) CHECK(sample_from_probs(probs, a) == sample_from_probs(probs, b));
  }
  SUBCASE("frequencies follow the distribution") {
    Eigen::VectorXd probs(3);
    probs << 0.2, 0.5, 0.3;
    std::mt19937_64 rng(11);
    Eigen::Vector3d counts = Eigen::Vector3d::Zero();
    const int n = 20000;
    for (int i = 0; i < n; ++i) counts[sample_from_probs(probs, rng)] += 1.0;
    for (int i = 0; i < 3; ++i) {
      const double se = std::sqrt(probs[i] * (1 - probs[i]) / n);
      CHECK(std::abs(counts[i] / n - probs[i]) < 4 * se);
    }
  }
  SUBCASE("uniform_unit range") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 1000; ++i) {
      const double u = uniform_unit(rng);
      CHECK(u >= 0.0);
      CHECK(u < 1.0);
    }
  }
}
