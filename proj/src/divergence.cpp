#include "gandens/divergence.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gandens {

namespace {

constexpr double kZeroDensity = 1e-300;
constexpr double kLog2 = 0.6931471805599453;

void tensorize(int dim, const std::vector<double>& n1, const std::vector<double>& w1,
               QuadratureScheme& out) {
  std::size_t per_axis = n1.size();
  std::size_t total = 1;
  for (int k = 0; k < dim; ++k) total *= per_axis;
  out.nodes.reserve(total);
  out.weights.reserve(total);
  std::vector<std::size_t> idx(dim, 0);
  for (std::size_t t = 0; t < total; ++t) {
    Eigen::VectorXd x(dim);
    double w = 1.0;
    for (int k = 0; k < dim; ++k) {
      x[k] = n1[idx[k]];
      w *= w1[idx[k]];
    }
    out.nodes.push_back(std::move(x));
    out.weights.push_back(w);
    for (int k = dim - 1; k >= 0; --k) {
      if (++idx[k] < per_axis) break;
      idx[k] = 0;
    }
  }
}

}  // namespace

void QuadratureScheme::validate() const {
  if (nodes.size() != weights.size()) throw std::invalid_argument("quadrature: node/weight size mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (weights[i] <= 0.0) throw std::invalid_argument("quadrature: nonpositive weight");
    total += weights[i];
    for (int k = 0; k < nodes[i].size(); ++k) {
      if (nodes[i][k] < 0.0 || nodes[i][k] > 1.0) throw std::invalid_argument("quadrature: node outside cube");
    }
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("quadrature: weights do not sum to 1");
}

double QuadratureScheme::integrate(const DensityFn& f) const {
  double total = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) total += weights[i] * f(nodes[i]);
  return total;
}

void gauss_legendre_01(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  // Newton iteration on the Legendre polynomial, symmetric roots on [-1,1].
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    double w = 2.0 / ((1.0 - x * x) * pp * pp);
    nodes[i] = 0.5 * (1.0 - x);  // map [-1,1] -> [0,1], descending cos order
    nodes[n - 1 - i] = 0.5 * (1.0 + x);
    weights[i] = 0.5 * w;
    weights[n - 1 - i] = 0.5 * w;
  }
}

QuadratureScheme midpoint_rule(int dim, int nodes_per_axis) {
  if (nodes_per_axis < 1) throw std::invalid_argument("midpoint_rule: need at least one node");
  std::vector<double> n1(nodes_per_axis), w1(nodes_per_axis, 1.0 / nodes_per_axis);
  for (int i = 0; i < nodes_per_axis; ++i) n1[i] = (i + 0.5) / nodes_per_axis;
  QuadratureScheme out;
  out.kind = QuadratureScheme::Kind::midpoint;
  out.dim = dim;
  out.id = "midpoint" + std::to_string(nodes_per_axis) + "d" + std::to_string(dim);
  tensorize(dim, n1, w1, out);
  return out;
}

QuadratureScheme gauss_legendre_rule(int dim, int nodes_per_axis, int panels_per_axis) {
  if (nodes_per_axis < 1 || panels_per_axis < 1) throw std::invalid_argument("gauss_legendre_rule: bad sizes");
  std::vector<double> base_n, base_w;
  gauss_legendre_01(nodes_per_axis, base_n, base_w);
  std::vector<double> n1, w1;
  n1.reserve(static_cast<std::size_t>(nodes_per_axis) * panels_per_axis);
  w1.reserve(n1.capacity());
  double h = 1.0 / panels_per_axis;
  for (int p = 0; p < panels_per_axis; ++p) {
    for (int i = 0; i < nodes_per_axis; ++i) {
      n1.push_back((p + base_n[i]) * h);
      w1.push_back(base_w[i] * h);
    }
  }
  QuadratureScheme out;
  out.kind = QuadratureScheme::Kind::gauss_legendre;
  out.dim = dim;
  out.id = "gl" + std::to_string(nodes_per_axis) + "x" + std::to_string(panels_per_axis) + "d" +
           std::to_string(dim);
  tensorize(dim, n1, w1, out);
  return out;
}

QuadratureScheme monte_carlo_rule(int dim, std::size_t node_count, std::uint64_t seed) {
  if (node_count == 0) throw std::invalid_argument("monte_carlo_rule: need nodes");
  QuadratureScheme out;
  out.kind = QuadratureScheme::Kind::monte_carlo;
  out.dim = dim;
  out.id = "mc" + std::to_string(node_count) + "d" + std::to_string(dim) + "s" + std::to_string(seed);
  Rng rng(seed);
  out.nodes.reserve(node_count);
  out.weights.assign(node_count, 1.0 / static_cast<double>(node_count));
  for (std::size_t i = 0; i < node_count; ++i) {
    Eigen::VectorXd x(dim);
    for (int k = 0; k < dim; ++k) x[k] = rng.uniform01();
    out.nodes.push_back(std::move(x));
  }
  return out;
}

QuadratureScheme default_rule(int dim) {
  if (dim == 1) return gauss_legendre_rule(1, 64, 2);
  if (dim == 2) return gauss_legendre_rule(2, 32, 2);
  return monte_carlo_rule(dim, 200000, 0);
}

DivergenceEstimate kl(const DensityFn& p, const DensityFn& q, const QuadratureScheme& quad) {
  double total = 0.0;
  for (std::size_t i = 0; i < quad.nodes.size(); ++i) {
    double pv = p(quad.nodes[i]);
    if (pv <= kZeroDensity) continue;
    double qv = q(quad.nodes[i]);
    if (qv <= kZeroDensity) {
      total = std::numeric_limits<double>::infinity();
      break;
    }
    total += quad.weights[i] * pv * std::log(pv / qv);
  }
  return {total, quad.id, quad.node_count()};
}

DivergenceEstimate js(const DensityFn& p, const DensityFn& q, const QuadratureScheme& quad) {
  double total = 0.0;
  for (std::size_t i = 0; i < quad.nodes.size(); ++i) {
    double pv = p(quad.nodes[i]);
    double qv = q(quad.nodes[i]);
    double mv = 0.5 * (pv + qv);
    double term = 0.0;
    if (pv > kZeroDensity) term += 0.5 * pv * std::log(pv / mv);
    if (qv > kZeroDensity) term += 0.5 * qv * std::log(qv / mv);
    total += quad.weights[i] * term;
  }
  return {total, quad.id, quad.node_count()};
}

DivergenceEstimate chi_sym(const DensityFn& p, const DensityFn& q, const QuadratureScheme& quad) {
  double total = 0.0;
  for (std::size_t i = 0; i < quad.nodes.size(); ++i) {
    double pv = p(quad.nodes[i]);
    double qv = q(quad.nodes[i]);
    double s = pv + qv;
    if (s <= kZeroDensity) continue;
    double d = pv - qv;
    total += quad.weights[i] * d * d / s;
  }
  return {total, quad.id, quad.node_count()};
}

SandwichReport sandwich_check(const DensityFn& p, const DensityFn& q, const QuadratureScheme& quad) {
  SandwichReport rep;
  double chi = chi_sym(p, q, quad).value;
  rep.js = js(p, q, quad).value;
  rep.lhs = 0.25 * chi;
  rep.rhs = 0.5 * kLog2 * chi;
  rep.slack = 1e-8 + 1e-3 * chi;
  rep.pass = (rep.lhs - rep.slack <= rep.js) && (rep.js <= rep.rhs + rep.slack);
  return rep;
}

bool js_sqrt_metric_check(const DensityFn& p, const DensityFn& q, const DensityFn& r,
                          const QuadratureScheme& quad) {
  double dpr = std::sqrt(std::max(0.0, js(p, r, quad).value));
  double dpq = std::sqrt(std::max(0.0, js(p, q, quad).value));
  double dqr = std::sqrt(std::max(0.0, js(q, r, quad).value));
  return dpr <= dpq + dqr + 1e-8;
}

}  // namespace gandens
