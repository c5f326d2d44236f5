#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gandens/rng.hpp"

namespace gandens {

// Feed-forward network with rectified quadratic activations
// sigma(t) = (max(t, 0))^2, shift vectors subtracted before activation,
// a linear output layer, and all parameters constrained to [-1, 1].

struct Architecture {
  int hidden = 0;              // number of hidden layers N
  std::vector<int> widths;     // p_0, ..., p_{N+1}

  Architecture() = default;
  Architecture(int n_hidden, std::vector<int> w);

  int input_dim() const { return widths.front(); }
  int output_dim() const { return widths.back(); }
  // total parameter count: all weight-matrix entries plus all shifts
  int param_count() const;
  bool operator==(const Architecture&) const = default;
};

class RequNet {
 public:
  RequNet() = default;
  // Zero-initialized network of the given shape.
  explicit RequNet(const Architecture& arch, std::optional<int> sparsity = std::nullopt);

  const Architecture& arch() const { return arch_; }
  std::optional<int> sparsity_budget() const { return sparsity_; }

  // weight(i): matrix applied at stage i, shape p_{i+1} x p_i, i = 0..N.
  Eigen::MatrixXd& weight(int i) { return weights_[i]; }
  const Eigen::MatrixXd& weight(int i) const { return weights_[i]; }
  // shift(i): vector subtracted before the i-th activation, length p_i, i = 1..N.
  Eigen::VectorXd& shift(int i) { return shifts_[i - 1]; }
  const Eigen::VectorXd& shift(int i) const { return shifts_[i - 1]; }

  // Throws std::invalid_argument if any entry lies outside [-1, 1] or the
  // sparsity budget is exceeded.
  void validate() const;
  int nonzero_count() const;

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const;

  // Gradient of upstream . forward(x) with respect to the flat parameter
  // vector (same enumeration as to_params).
  Eigen::VectorXd grad_params(const Eigen::VectorXd& x, const Eigen::VectorXd& upstream) const;
  // Gradient of upstream . forward(x) with respect to the input x.
  Eigen::VectorXd grad_input(const Eigen::VectorXd& x, const Eigen::VectorXd& upstream) const;

  // Partial compositions.  partial_up(k, i, .) is the activation-terminated
  // prefix mapping R^{p_{i-1}} -> R^{p_k}; the conventions partial_up(0, 1, x) = x
  // and partial_down(N, N+2, x) = x are honored.  partial_down(j, k, .) is the
  // affine-terminated suffix mapping R^{p_{k-1}} -> R^{p_{j+1}}.
  Eigen::VectorXd partial_up(int k, int i, const Eigen::VectorXd& x) const;
  Eigen::VectorXd partial_down(int j, int k, const Eigen::VectorXd& x) const;

  // Flat parameter enumeration: W_0 row-major, then W_1, ..., W_N, then
  // v_1, ..., v_N.  Round-trip with from_params is bit-exact.
  Eigen::VectorXd to_params() const;
  static RequNet from_params(const Architecture& arch, const Eigen::VectorXd& params,
                             std::optional<int> sparsity = std::nullopt);

  // Clamp every parameter to [-1, 1]; if a sparsity budget is set, keep only
  // the largest-magnitude entries within the budget (never increases the
  // nonzero count).
  void project_constraints();

  // Uniform(-scale, scale) parameters.
  static RequNet random(const Architecture& arch, Rng& rng, double scale = 1.0,
                        std::optional<int> sparsity = std::nullopt);

  std::string to_json() const;
  static RequNet from_json(const std::string& text);

  bool operator==(const RequNet&) const = default;

 private:
  Architecture arch_;
  std::vector<Eigen::MatrixXd> weights_;  // N+1 matrices
  std::vector<Eigen::VectorXd> shifts_;   // N shift vectors (index 0 <-> v_1)
  std::optional<int> sparsity_;
};

// Coefficients bounding the effect of a parameter perturbation of sup-norm
// eps: multiplying by eps bounds sup |f1 - f2| on [0,1]^{p_0} (sup_coeff) and
// sup |Df1 - Df2| (jac_coeff; requires at least one hidden layer, the
// coefficient is zero for a purely affine net).  Both grow doubly
// exponentially in depth, so they are computed in log space; `value` saturates
// to +infinity when not representable and `overflowed` is set.
struct PerturbationCoeff {
  double log_value = 0.0;
  double value = 0.0;
  bool overflowed = false;
};

struct PerturbationBounds {
  PerturbationCoeff sup_coeff;
  PerturbationCoeff jac_coeff;
};

PerturbationBounds perturbation_bounds(const Architecture& arch);

// Sup-norm bound on partial_up(k, i, x) over inputs with sup-norm <= K,
// and the matching Lipschitz coefficient of partial_down(j, k, .) on the
// same ball.
double partial_sup_bound(const Architecture& arch, int k, int i, double K);
double partial_lip_bound(const Architecture& arch, int j, int k, double K);

// Exact affine map y -> offset + slope * y (per axis) on [0,1]^d realized by
// a width-6d net whose pre-activations stay positive on the cube.  Requires
// slope in [0, 1] and offset in [0, 0.5].
RequNet affine_net(int d, double offset, double slope);

}  // namespace gandens
