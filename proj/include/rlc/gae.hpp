#pragma once

#include <Eigen/Core>

#include "rlc/error.hpp"

namespace rlc {

template <typename Scalar>
struct GaeResult {
  Eigen::Vector<Scalar, Eigen::Dynamic> advantages;
  Eigen::Vector<Scalar, Eigen::Dynamic> returns;
};

// Generalized advantage estimation over a single episode.
//
//   delta_t = r_t + gamma * V(s_{t+1}) - V(s_t)
//   A_t     = delta_t + gamma * lam * A_{t+1}
//
// with V(s_T) = `bootstrap` (zero for terminal states).  The returned
// `returns` are A_t + V(s_t), the regression targets for the value head.
template <typename Scalar>
GaeResult<Scalar> compute_gae(const Eigen::Ref<const Eigen::Vector<Scalar, Eigen::Dynamic>>& rewards,
                              const Eigen::Ref<const Eigen::Vector<Scalar, Eigen::Dynamic>>& values,
                              Scalar bootstrap, Scalar gamma, Scalar lam) {
  const Eigen::Index n = rewards.size();
  if (values.size() != n) throw Error("compute_gae: rewards and values differ in length");

  GaeResult<Scalar> out;
  out.advantages.resize(n);
  out.returns.resize(n);
  Scalar running = Scalar(0);
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    const Scalar next_value = t + 1 < n ? values[t + 1] : bootstrap;
    const Scalar delta = rewards[t] + gamma * next_value - values[t];
    running = delta + gamma * lam * running;
    out.advantages[t] = running;
    out.returns[t] = running + values[t];
  }
  return out;
}

}  // namespace rlc
