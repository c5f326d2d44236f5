#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "gandens/rng.hpp"

namespace gandens {

using DensityFn = std::function<double(const Eigen::VectorXd&)>;

// Nodes and positive weights summing to one, representing the uniform
// (Lebesgue) measure on [0,1]^d.
struct QuadratureScheme {
  enum class Kind { midpoint, gauss_legendre, monte_carlo };

  Kind kind = Kind::gauss_legendre;
  int dim = 1;
  std::string id;
  std::vector<Eigen::VectorXd> nodes;
  std::vector<double> weights;

  std::size_t node_count() const { return nodes.size(); }
  void validate() const;  // throws on weight/node violations

  double integrate(const DensityFn& f) const;
};

// Tensor-product rules on the unit cube.  Gauss-Legendre rules may be split
// into equal panels per axis so that integrands with jumps at panel
// boundaries are still integrated accurately.
QuadratureScheme midpoint_rule(int dim, int nodes_per_axis);
QuadratureScheme gauss_legendre_rule(int dim, int nodes_per_axis, int panels_per_axis = 1);
QuadratureScheme monte_carlo_rule(int dim, std::size_t node_count, std::uint64_t seed);

// Default scheme per dimension: 2x64 Gauss-Legendre panels for d = 1,
// 2x32 per axis for d = 2, Monte Carlo with 2e5 nodes otherwise.
QuadratureScheme default_rule(int dim);

// One-dimensional Gauss-Legendre nodes/weights on [0, 1].
void gauss_legendre_01(int n, std::vector<double>& nodes, std::vector<double>& weights);

struct DivergenceEstimate {
  double value = 0.0;
  std::string scheme_id;
  std::size_t node_count = 0;
};

// Integral of p log(p/q).  Nodes where p <= 1e-300 contribute zero; a node
// with q <= 1e-300 < p yields +infinity (absolute-continuity failure is a
// value, not an exception).
DivergenceEstimate kl(const DensityFn& p, const DensityFn& q, const QuadratureScheme& quad);

// Jensen-Shannon divergence: always finite, symmetric, in [0, log 2].
DivergenceEstimate js(const DensityFn& p, const DensityFn& q, const QuadratureScheme& quad);

// Symmetric chi-square integral (p-q)^2 / (p+q); nodes with p+q = 0 contribute 0.
DivergenceEstimate chi_sym(const DensityFn& p, const DensityFn& q, const QuadratureScheme& quad);

// Quadratic sandwich around the Jensen-Shannon divergence:
//   chi/4 <= JS <= (log 2 / 2) chi   with chi the symmetric chi-square.
struct SandwichReport {
  double lhs = 0.0;  // chi/4
  double js = 0.0;
  double rhs = 0.0;  // (log2/2) chi
  double slack = 0.0;
  bool pass = false;
};
SandwichReport sandwich_check(const DensityFn& p, const DensityFn& q, const QuadratureScheme& quad);

// Triangle inequality for sqrt(JS) on a triple of densities.
bool js_sqrt_metric_check(const DensityFn& p, const DensityFn& q, const DensityFn& r,
                          const QuadratureScheme& quad);

}  // namespace gandens
