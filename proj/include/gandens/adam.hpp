#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace gandens {

// Adam moment accumulator; plain constant-step gradient stalls on these
// networks because small-weight ReQU features scale quadratically.
struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  int t = 0;

  explicit AdamState(int dim) : m(Eigen::VectorXd::Zero(dim)), v(Eigen::VectorXd::Zero(dim)) {}

  Eigen::VectorXd step(const Eigen::VectorXd& grad, double lr) {
    ++t;
    m = 0.9 * m + 0.1 * grad;
    v = 0.999 * v + 0.001 * grad.cwiseProduct(grad);
    double mc = 1.0 - std::pow(0.9, t);
    double vc = 1.0 - std::pow(0.999, t);
    Eigen::VectorXd denom = (v / vc).cwiseSqrt().array() + 1e-8;
    return lr * (m / mc).cwiseQuotient(denom);
  }
};

}  // namespace gandens
