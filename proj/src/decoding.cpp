#include "rlc/decoding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "rlc/error.hpp"

namespace rlc {

Eigen::VectorXd log_softmax(const Eigen::VectorXd& logits) {
  const double m = logits.maxCoeff();
  const double lse = std::log((logits.array() - m).exp().sum()) + m;
  return logits.array() - lse;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  return log_softmax(logits).array().exp();
}

double softmax_entropy(const Eigen::VectorXd& logits) {
  const Eigen::VectorXd lp = log_softmax(logits);
  return -(lp.array().exp() * lp.array()).sum();
}

Eigen::VectorXd filter_logits(const Eigen::VectorXd& logits, const DecodingParams& params) {
  const Eigen::Index v = logits.size();
  if (v == 0) throw Error("filter_logits: empty logit vector");
  if (params.temperature < 0.0) throw Error("filter_logits: negative temperature");
  if (params.top_p <= 0.0) throw Error("filter_logits: top_p must be positive");

  Eigen::VectorXd probs = Eigen::VectorXd::Zero(v);
  if (params.temperature == 0.0) {
    Eigen::Index best = 0;
    logits.maxCoeff(&best);  // Eigen reports the first (lowest-index) maximum
    probs[best] = 1.0;
    return probs;
  }

  const Eigen::VectorXd scaled = logits / params.temperature;

  // Indices in descending logit order; stable so ties favour low indices.
  std::vector<Eigen::Index> order(static_cast<size_t>(v));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return scaled[a] > scaled[b]; });

  size_t keep = order.size();
  if (params.top_k > 0) keep = std::min<size_t>(keep, static_cast<size_t>(params.top_k));

  // Softmax restricted to the top-k survivors.
  const double m = scaled[order[0]];
  double z = 0.0;
  std::vector<double> mass(keep);
  for (size_t i = 0; i < keep; ++i) {
    mass[i] = std::exp(scaled[order[i]] - m);
    z += mass[i];
  }
  for (double& p : mass) p /= z;

  // Nucleus cut: shortest descending prefix reaching top_p, measured on
  // the top-k distribution before any further renormalization.
  if (params.top_p < 1.0) {
    double cum = 0.0;
    for (size_t i = 0; i < keep; ++i) {
      cum += mass[i];
      if (cum >= params.top_p) {
        keep = i + 1;
        break;
      }
    }
  }

  double total = 0.0;
  for (size_t i = 0; i < keep; ++i) total += mass[i];
  for (size_t i = 0; i < keep; ++i) probs[order[i]] = mass[i] / total;
  return probs;
}

double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

int sample_from_probs(const Eigen::VectorXd& probs, std::mt19937_64& rng) {
  const double u = uniform_unit(rng);
  double cum = 0.0;
  int last_positive = -1;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last_positive = static_cast<int>(i);
    cum += probs[i];
    if (u < cum) return static_cast<int>(i);
  }
  if (last_positive < 0) throw Error("sample_from_probs: no positive mass");
  return last_positive;  // guards against rounding shortfall at u ~ 1
}

}  // namespace rlc
