#include "rlc/gae.hpp"

namespace rlc {

// The estimator itself is a header template; anchor the common scalar
// instantiations here.
template GaeResult<double> compute_gae<double>(
    const Eigen::Ref<const Eigen::VectorXd>&, const Eigen::Ref<const Eigen::VectorXd>&, double,
    double, double);
template GaeResult<float> compute_gae<float>(const Eigen::Ref<const Eigen::VectorXf>&,
                                             const Eigen::Ref<const Eigen::VectorXf>&, float,
                                             float, float);

}  // namespace rlc
