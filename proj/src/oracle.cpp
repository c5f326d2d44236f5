#include "gandens/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "gandens/parallel.hpp"

namespace gandens {

namespace {

constexpr double kLog2 = 0.6931471805599453;

double exp_or_inf(double log_value) {
  if (log_value > std::log(std::numeric_limits<double>::max())) {
    return std::numeric_limits<double>::infinity();
  }
  return std::exp(log_value);
}

double log_class_lipschitz(const Architecture& arch) {
  const int N = arch.hidden;
  double pow2N = std::pow(2.0, N);
  double out = std::log(N + 1.0) + N * std::log(2.0);
  for (int p : arch.widths) out += pow2N * std::log(p + 1.0);
  return out;
}

}  // namespace

double class_lipschitz_coeff(const Architecture& arch) {
  return exp_or_inf(log_class_lipschitz(arch));
}

double class_range_bound(const Architecture& arch) {
  const int N = arch.hidden;
  if (N == 0) return static_cast<double>(arch.widths[0]);
  return arch.widths[N] * partial_sup_bound(arch, N, 1, 1.0);
}

double disc_class_input_lipschitz(const Architecture& disc_arch, double d_min, double d_max,
                                  double K) {
  // squash slope never exceeds (d_max - d_min)/4
  double raw = disc_arch.hidden == 0 ? static_cast<double>(disc_arch.widths[0])
                                     : partial_lip_bound(disc_arch, disc_arch.hidden, 1, K);
  return 0.25 * (d_max - d_min) * raw;
}

ConstantsBundle constants(double d_min, double d_max, const Architecture& gen_arch,
                          const Architecture& disc_arch, double h_d, int d, double lambda,
                          double h_g) {
  if (!(0.0 < d_min && d_min <= d_max && d_max < 1.0)) {
    throw std::invalid_argument("constants: need 0 < d_min <= d_max < 1");
  }
  if (h_d <= 0.0) throw std::invalid_argument("constants: h_d must be positive");
  if (gen_arch.hidden < 1) {
    throw std::invalid_argument("constants: generator class needs a hidden layer");
  }
  ConstantsBundle b;
  double log_l_g = log_class_lipschitz(gen_arch);
  double log_l_theta = log_class_lipschitz(disc_arch);
  b.l_g = exp_or_inf(log_l_g);
  b.l_theta = exp_or_inf(log_l_theta);
  b.l_x = h_d;

  // density parameter-Lipschitz coefficient: sup-to-H1 constant times the
  // Jacobian perturbation coefficient of the generator class
  const int N = gen_arch.hidden;
  double log_l_p = std::log(density_lipschitz_constant(d, lambda, h_g)) +
                   std::log(static_cast<double>(N)) + std::log(N + 1.0) + (N + 1) * std::log(2.0);
  double exp_width = std::pow(2.0, N + 1) + 1.0;
  for (int p : gen_arch.widths) log_l_p += exp_width * std::log(p + 1.0);
  b.l_p = exp_or_inf(log_l_p);

  b.c_eps_net = b.l_g * b.l_x / (2.0 - 2.0 * d_max) + b.l_theta / std::min(d_min, 1.0 - d_max);

  double two_log2_sq = 2.0 * kLog2 * kLog2;
  double branch1 = two_log2_sq;
  if (std::abs(0.5 - d_min) > 1e-15) {
    double t = std::log(2.0 * d_min);
    branch1 = std::max(t * t / (0.5 - d_min), two_log2_sq);
  }
  double branch2 = two_log2_sq;
  if (std::abs(d_max - 0.5) > 1e-15) {
    double t = std::log(2.0 - 2.0 * d_max);
    branch2 = std::max(t * t / (d_max - 0.5), two_log2_sq);
  }
  double branch3 = std::log(M_E / (2.0 * d_min)) / (2.0 * d_min * d_min) +
                   std::log(M_E / (2.0 - 2.0 * d_max)) /
                       ((2.0 - 2.0 * d_max) * (2.0 - 2.0 * d_max));
  b.c_var = branch1 + branch2 + branch3;

  b.c_d = std::max(std::log(std::max(1.0 / d_max, 1.0 / d_min)),
                   std::log(std::max(1.0 / (1.0 - d_max), 1.0 / (1.0 - d_min))));

  b.c_delta = 1.0 + std::sqrt(std::min(
                        d_min / ((1.0 - d_min) * std::log(1.0 / (1.0 - d_max))),
                        (1.0 - d_max) / (d_max * std::log(1.0 / d_min))));
  return b;
}

double delta_gap(const RequNet& gen, const ClampedDiscriminator& disc, const DensityFn& p_star,
                 double lambda, const QuadratureScheme& quad) {
  GeneratorDensity p_w(gen, lambda);
  double total = 0.0;
  for (std::size_t i = 0; i < quad.nodes.size(); ++i) {
    const auto& x = quad.nodes[i];
    double ps = p_star(x);
    double pw = p_w.density(x);
    double sum = ps + pw;
    if (sum <= 0.0) continue;
    double ratio = ps / sum;
    double dv = disc(x);
    // pointwise-nonnegative gap integrand (JS integrand minus loss integrand)
    double term = 0.0;
    if (ps > 0.0) term += 0.5 * ps * std::log(ratio / dv);
    if (pw > 0.0) term += 0.5 * pw * std::log((1.0 - ratio) / (1.0 - dv));
    total += quad.weights[i] * term;
  }
  return total;
}

namespace {

// Multistart projected gradient ascent of the population loss over the
// discriminator parameters at a fixed generator density.
double max_population_loss(const std::vector<double>& p_star_nodes,
                           const std::vector<double>& p_w_nodes, const QuadratureScheme& quad,
                           const Architecture& disc_arch, double d_min, double d_max,
                           const DiscOptimizerConfig& opt, Rng& rng) {
  double best = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  for (int start = 0; start < opt.starts; ++start) {
    RequNet net = RequNet::random(disc_arch, rng, start == 0 ? 0.0 : 0.5);
    for (int step = 0; step < opt.steps; ++step) {
      ClampedDiscriminator disc(net, d_min, d_max);
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(disc_arch.param_count());
      for (std::size_t i = 0; i < quad.nodes.size(); ++i) {
        auto [value, slope] = disc.value_and_slope(quad.nodes[i]);
        double coeff = 0.5 * quad.weights[i] *
                       (p_star_nodes[i] * slope / value -
                        p_w_nodes[i] * slope / (1.0 - value));
        grad += coeff * net.grad_params(quad.nodes[i], one);
      }
      Eigen::VectorXd theta = net.to_params() + opt.lr * grad;
      net = RequNet::from_params(disc_arch, theta.cwiseMax(-1.0).cwiseMin(1.0));
    }
    ClampedDiscriminator disc(net, d_min, d_max);
    double loss = 0.0;
    for (std::size_t i = 0; i < quad.nodes.size(); ++i) {
      double dv = disc(quad.nodes[i]);
      loss += quad.weights[i] * 0.5 *
              (p_star_nodes[i] * std::log(dv) + p_w_nodes[i] * std::log(1.0 - dv));
    }
    best = std::max(best, loss);
  }
  return best;
}

}  // namespace

OracleTerms delta_terms(const std::vector<RequNet>& gen_grid, const Architecture& disc_arch,
                        double d_min, double d_max, const DensityFn& p_star, double lambda,
                        const QuadratureScheme& quad, const DiscOptimizerConfig& opt,
                        std::uint64_t seed) {
  if (gen_grid.empty()) throw std::invalid_argument("delta_terms: empty generator grid");
  OracleTerms terms;
  terms.delta_g = std::numeric_limits<double>::infinity();
  terms.delta_d = 0.0;
  terms.grid_spec = "generators=" + std::to_string(gen_grid.size()) +
                    ";disc_starts=" + std::to_string(opt.starts);

  std::vector<double> p_star_nodes(quad.nodes.size());
  for (std::size_t i = 0; i < quad.nodes.size(); ++i) p_star_nodes[i] = p_star(quad.nodes[i]);

  Rng rng(seed);
  int skipped = 0;
  for (std::size_t g = 0; g < gen_grid.size(); ++g) {
    std::vector<double> p_w_nodes(quad.nodes.size());
    double js_value = 0.0;
    try {
      GeneratorDensity p_w(gen_grid[g], lambda);
      for (std::size_t i = 0; i < quad.nodes.size(); ++i) {
        p_w_nodes[i] = p_w.density(quad.nodes[i]);
      }
    } catch (const std::runtime_error&) {
      ++skipped;
      continue;
    }
    for (std::size_t i = 0; i < quad.nodes.size(); ++i) {
      double ps = p_star_nodes[i], pw = p_w_nodes[i];
      double m = 0.5 * (ps + pw);
      double term = 0.0;
      if (ps > 0.0) term += 0.5 * ps * std::log(ps / m);
      if (pw > 0.0) term += 0.5 * pw * std::log(pw / m);
      js_value += quad.weights[i] * term;
    }
    terms.delta_g = std::min(terms.delta_g, js_value);

    Rng local = rng.child(g);
    double best_loss = max_population_loss(p_star_nodes, p_w_nodes, quad, disc_arch, d_min, d_max,
                                           opt, local);
    terms.delta_d = std::max(terms.delta_d, std::max(0.0, js_value - kLog2 - best_loss));
  }
  if (skipped > 0) terms.grid_spec += ";skipped=" + std::to_string(skipped);
  terms.delta_g = std::max(0.0, terms.delta_g);
  return terms;
}

GapSandwichReport delta_gap_sandwich_check(const RequNet& gen, const ClampedDiscriminator& disc,
                                           const DensityFn& p_star, double lambda,
                                           const QuadratureScheme& quad, double c_delta,
                                           double d_min, double d_max) {
  GeneratorDensity p_w(gen, lambda);
  GapSandwichReport rep;
  double norm_sq = 0.0;
  double gap = 0.0;
  for (std::size_t i = 0; i < quad.nodes.size(); ++i) {
    const auto& x = quad.nodes[i];
    double ps = p_star(x);
    double pw = p_w.density(x);
    double sum = ps + pw;
    if (sum <= 0.0) continue;
    double ratio = ps / sum;
    double dv = disc(x);
    double diff = ratio - dv;
    norm_sq += quad.weights[i] * diff * diff * sum;
    double term = 0.0;
    if (ps > 0.0) term += 0.5 * ps * std::log(ratio / dv);
    if (pw > 0.0) term += 0.5 * pw * std::log((1.0 - ratio) / (1.0 - dv));
    gap += quad.weights[i] * term;
  }
  rep.lower = norm_sq;
  rep.gap = gap;
  double cc = c_delta * c_delta / ((c_delta - 1.0) * (c_delta - 1.0) * d_min * (1.0 - d_max));
  rep.upper = cc * norm_sq;
  rep.slack = 1e-6 + 1e-3 * std::abs(gap);
  rep.pass = (rep.lower <= gap + rep.slack) && (gap <= rep.upper + rep.slack);
  return rep;
}

double bernstein_rhs(double js_value, double delta_value, std::size_t n, double confidence_delta,
                     const ConstantsBundle& bundle) {
  if (confidence_delta <= 0.0 || confidence_delta >= 1.0) {
    throw std::invalid_argument("bernstein_rhs: delta in (0,1)");
  }
  double log_term = std::log(2.0 / confidence_delta);
  return std::sqrt(bundle.c_var * (9.0 * js_value + delta_value) * log_term / (2.0 * n)) +
         2.0 * bundle.c_d * log_term / (3.0 * n);
}

double uniform_bound_rhs(double eps, std::size_t n, double confidence_delta, int d_g, int d_d,
                         double js_value, double delta_value, const ConstantsBundle& bundle) {
  if (eps <= 0.0 || eps > 2.0) throw std::invalid_argument("uniform_bound_rhs: eps in (0,2]");
  double log_card = d_g * std::log(2.0 / eps) + d_d * std::log(2.0 / eps) +
                    std::log(2.0 / confidence_delta);
  return 3.0 * bundle.c_eps_net * eps + std::sqrt(bundle.l_p) * std::sqrt(eps) +
         4.0 * std::sqrt(bundle.c_var * js_value * log_card / (2.0 * n)) +
         std::sqrt(bundle.c_var * delta_value * log_card / (2.0 * n)) +
         2.0 * (bundle.c_var + bundle.c_d) * log_card / (3.0 * n);
}

double default_eps_net(std::size_t n, double confidence_delta, int d_g, int d_d,
                       const ConstantsBundle& bundle) {
  double log_term = d_g * std::log(2.0 * n) + d_d * std::log(2.0 * n) +
                    std::log(8.0 / confidence_delta);
  double a = bundle.c_var * log_term / (bundle.c_eps_net * n);
  double b = bundle.c_var * bundle.c_var * log_term * log_term / (bundle.l_p * bundle.l_p * n * n);
  double eps = std::min({a, b, 1.0});
  return eps > 0.0 ? eps : 1e-12;
}

void ConcentrationCheckConfig::validate() const {
  if (replicates < 100) throw std::invalid_argument("concentration: need at least 100 replicates");
  if (confidence_delta <= 0.0 || confidence_delta >= 1.0) {
    throw std::invalid_argument("concentration: delta in (0,1)");
  }
  if (eps_net < 0.0 || eps_net > 2.0) throw std::invalid_argument("concentration: eps in (0,2]");
}

ConcentrationReport concentration_monte_carlo(const RequNet& gen, const ClampedDiscriminator& disc,
                                              const DiffMap& g_star, const DensityFn& p_star,
                                              double lambda, const QuadratureScheme& quad,
                                              const ConstantsBundle& bundle,
                                              const ConcentrationCheckConfig& config) {
  config.validate();
  ConcentrationReport rep;
  rep.population = population_loss(gen, disc, p_star, quad);
  {
    GeneratorDensity p_w(gen, lambda);
    rep.js = js(p_star, p_w.as_fn(), quad).value;
  }
  rep.gap = std::max(0.0, delta_gap(gen, disc, p_star, lambda, quad));
  rep.bound = bernstein_rhs(rep.js, rep.gap, config.n, config.confidence_delta, bundle);

  const int R = config.replicates;
  std::vector<double> deviations(R);
  Rng rng(config.seed);
  parallel_for(R, [&](std::size_t r) {
    Rng local = rng.child(r);
    Dataset data = sample_dataset(g_star, config.n, local.next_u64());
    deviations[r] = std::abs(empirical_loss(gen, disc, data) - rep.population);
  });
  std::sort(deviations.begin(), deviations.end());
  std::size_t idx = static_cast<std::size_t>(
      std::ceil((1.0 - config.confidence_delta) * R));
  idx = std::min<std::size_t>(std::max<std::size_t>(idx, 1), R) - 1;
  rep.quantile = deviations[idx];
  rep.resolution_warning = R * config.confidence_delta < 10.0;
  rep.pass = rep.quantile <= rep.bound;

  int d_g = gen.arch().param_count();
  int d_d = disc.net().arch().param_count();
  rep.eps_net = config.eps_net > 0.0
                    ? config.eps_net
                    : default_eps_net(config.n, config.confidence_delta, d_g, d_d, bundle);
  rep.uniform_bound = uniform_bound_rhs(rep.eps_net, config.n, config.confidence_delta, d_g, d_d,
                                        rep.js, rep.gap, bundle);
  return rep;
}

LipschitzCheckReport loss_lipschitz_check(const Architecture& gen_arch,
                                          const Architecture& disc_arch, double d_min, double d_max,
                                          const Dataset& data, const ConstantsBundle& bundle,
                                          int pairs, std::uint64_t seed) {
  LipschitzCheckReport rep;
  rep.pairs = pairs;
  Rng rng(seed);
  double gen_bound_coeff = bundle.l_g * bundle.l_x / (2.0 - 2.0 * d_max);
  double disc_bound_coeff = bundle.l_theta / std::min(d_min, 1.0 - d_max);
  for (int k = 0; k < pairs; ++k) {
    RequNet w1 = RequNet::random(gen_arch, rng);
    RequNet w2 = RequNet::random(gen_arch, rng);
    RequNet t1 = RequNet::random(disc_arch, rng);
    RequNet t2 = RequNet::random(disc_arch, rng);
    ClampedDiscriminator d1(t1, d_min, d_max);
    ClampedDiscriminator d2(t2, d_min, d_max);

    double w_dist = (w1.to_params() - w2.to_params()).lpNorm<Eigen::Infinity>();
    double w_dev = std::abs(empirical_loss(w1, d1, data) - empirical_loss(w2, d1, data));
    double w_bound = gen_bound_coeff * w_dist;
    if (w_bound > 0.0) rep.worst_ratio = std::max(rep.worst_ratio, w_dev / w_bound);
    if (w_dev > w_bound + 1e-12) ++rep.violations;

    double t_dist = (t1.to_params() - t2.to_params()).lpNorm<Eigen::Infinity>();
    double t_dev = std::abs(empirical_loss(w1, d1, data) - empirical_loss(w1, d2, data));
    double t_bound = disc_bound_coeff * t_dist;
    if (t_bound > 0.0) rep.worst_ratio = std::max(rep.worst_ratio, t_dev / t_bound);
    if (t_dev > t_bound + 1e-12) ++rep.violations;
  }
  rep.pass = rep.violations == 0;
  return rep;
}

double oracle_rhs(const OracleTerms& terms, int d_g, int d_d, std::size_t n,
                  double confidence_delta, const ConstantsBundle& bundle) {
  if (n < 1) throw std::invalid_argument("oracle_rhs: n must be positive");
  if (confidence_delta <= 0.0 || confidence_delta >= 1.0) {
    throw std::invalid_argument("oracle_rhs: delta in (0,1)");
  }
  double l_max = std::max({bundle.l_g * bundle.l_x, bundle.l_theta, bundle.l_p, 1.0});
  double log_term = (d_g + d_d) * std::log(2.0 * l_max * n) + std::log(8.0 / confidence_delta);
  return std::sqrt((terms.delta_g + terms.delta_d) * log_term / n) + log_term / n;
}

}  // namespace gandens
