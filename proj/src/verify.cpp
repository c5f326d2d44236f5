#include "gandens/verify.hpp"

#include <algorithm>
#include <cmath>

#include "gandens/families.hpp"
#include "gandens/gan.hpp"
#include "gandens/lowerbound.hpp"
#include "gandens/oracle.hpp"
#include "gandens/parallel.hpp"
#include "gandens/planner.hpp"
#include "gandens/pushforward.hpp"
#include "json.hpp"

namespace gandens {

namespace {

constexpr double kLog2 = 0.6931471805599453;

DensityFn uniform_density() {
  return [](const Eigen::VectorXd&) { return 1.0; };
}

DensityFn left_half_density() {
  return [](const Eigen::VectorXd& x) { return x[0] <= 0.5 ? 2.0 : 0.0; };
}

DensityFn right_half_density() {
  return [](const Eigen::VectorXd& x) { return x[0] > 0.5 ? 2.0 : 0.0; };
}

double ols_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= xs.size();
  my /= ys.size();
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  return sxy / sxx;
}

// audited smoothness bound (values, first and second derivatives) of a map
double audited_h2_bound(const DiffMap& g, double lambda) {
  HolderEstimate est = holder_diagnostics(g, lambda, 2.0, 33);
  return 1.25 * std::max(est.c_s_norm, est.holder_quotient);
}

}  // namespace

void SuiteResult::add(const std::string& check, bool ok, double observed, double bound,
                      const std::string& detail) {
  checks.push_back({check, ok, observed, bound, detail});
  if (!ok) pass = false;
}

// ---------------------------------------------------------------------------
// divergence suite
// ---------------------------------------------------------------------------

SuiteResult divergence_suite(std::uint64_t seed) {
  SuiteResult suite;
  suite.name = "divergence";
  Rng rng(seed);
  QuadratureScheme quad1 = gauss_legendre_rule(1, 64, 2);
  DensityFn uni = uniform_density();
  DensityFn left = left_half_density();
  DensityFn right = right_half_density();

  // worked values with closed forms
  double kl_worked = kl(left, uni, quad1).value;
  suite.add("kl_closed_form", std::abs(kl_worked - kLog2) <= 1e-9, kl_worked, kLog2);
  double kl_inf = kl(uni, left, quad1).value;
  suite.add("kl_support_violation", std::isinf(kl_inf), kl_inf, 0.0, "expected +inf");
  double js_disjoint = js(left, right, quad1).value;
  suite.add("js_disjoint_log2", std::abs(js_disjoint - kLog2) <= 1e-6, js_disjoint, kLog2);
  double js_worked = js(uni, left, quad1).value;
  double js_expected = 0.75 * std::log(4.0 / 3.0);
  suite.add("js_worked_pair", std::abs(js_worked - js_expected) <= 1e-6, js_worked, js_expected);
  double chi_worked = chi_sym(uni, left, quad1).value;
  suite.add("chi_worked_pair", std::abs(chi_worked - 2.0 / 3.0) <= 1e-6, chi_worked, 2.0 / 3.0);
  double chi_disjoint = chi_sym(left, right, quad1).value;
  suite.add("chi_disjoint", std::abs(chi_disjoint - 2.0) <= 1e-6, chi_disjoint, 2.0);
  auto sw = sandwich_check(uni, left, quad1);
  suite.add("sandwich_worked_pair", sw.pass, sw.js, sw.rhs);

  // random push-forward pairs in one dimension
  std::vector<DensityFn> pool;
  std::vector<Eigen::VectorXd> pool_params;
  std::vector<GeneratorDensity> keep;
  keep.reserve(40);
  for (int i = 0; i < 40; ++i) {
    keep.push_back(pinned_density(1, rng, 0.004 + 0.026 * rng.uniform01()));
    pool.push_back(keep.back().as_fn());
    pool_params.push_back(keep.back().net().to_params());
  }
  double max_self = 0.0, max_asym = 0.0, min_js = 0.0, max_js = 0.0;
  int sandwich_fail = 0;
  for (int k = 0; k < 100; ++k) {
    const auto& p = pool[rng.below(pool.size())];
    const auto& q = pool[rng.below(pool.size())];
    max_self = std::max(max_self, std::abs(js(p, p, quad1).value));
    double ab = js(p, q, quad1).value;
    double ba = js(q, p, quad1).value;
    max_asym = std::max(max_asym, std::abs(ab - ba));
    min_js = std::min(min_js, ab);
    max_js = std::max(max_js, ab);
    if (!sandwich_check(p, q, quad1).pass) ++sandwich_fail;
  }
  suite.add("js_self_zero", max_self <= 1e-12, max_self, 1e-12);
  suite.add("js_symmetry", max_asym <= 1e-12, max_asym, 1e-12);
  suite.add("js_range", min_js >= -1e-12 && max_js <= kLog2 + 1e-9, max_js, kLog2 + 1e-9);
  suite.add("sandwich_d1_100", sandwich_fail == 0, sandwich_fail, 0.0);

  // two-dimensional pairs
  QuadratureScheme quad2 = gauss_legendre_rule(2, 32, 2);
  int sandwich2_fail = 0;
  for (int k = 0; k < 25; ++k) {
    GeneratorDensity p = pinned_density(2, rng, 0.004 + 0.016 * rng.uniform01());
    GeneratorDensity q = pinned_density(2, rng, 0.004 + 0.016 * rng.uniform01());
    if (!sandwich_check(p.as_fn(), q.as_fn(), quad2).pass) ++sandwich2_fail;
  }
  suite.add("sandwich_d2_25", sandwich2_fail == 0, sandwich2_fail, 0.0);

  int triangle_fail = 0;
  for (int k = 0; k < 100; ++k) {
    const auto& p = pool[rng.below(pool.size())];
    const auto& q = pool[rng.below(pool.size())];
    const auto& r = pool[rng.below(pool.size())];
    if (!js_sqrt_metric_check(p, q, r, quad1)) ++triangle_fail;
  }
  suite.add("sqrt_js_triangle_100", triangle_fail == 0, triangle_fail, 0.0);

  // parameter-Holder bound on the common architecture
  {
    Architecture gen_arch(1, {1, 6, 1});
    double h_g = 0.0;
    for (const auto& g : keep) h_g = std::max(h_g, audited_h2_bound(g.map(), 1.5));
    ConstantsBundle bundle = constants(0.2, 0.8, gen_arch, Architecture(1, {1, 3, 1}), 1.0, 1,
                                       1.5, h_g);
    double worst = 0.0;
    bool ok = true;
    for (int k = 0; k < 50; ++k) {
      std::size_t a = rng.below(pool.size()), b = rng.below(pool.size());
      double dist = (pool_params[a] - pool_params[b]).lpNorm<Eigen::Infinity>();
      double v = js(pool[a], pool[b], quad1).value;
      double bound = bundle.l_p * std::sqrt(dist);
      if (dist == 0.0) continue;
      worst = std::max(worst, v / bound);
      if (v > bound) ok = false;
    }
    suite.add("js_param_holder", ok, worst, 1.0, "js <= l_p sqrt(param distance)");
  }

  // quadrature refinement on a smooth pair
  {
    QuadratureScheme fine = gauss_legendre_rule(1, 128, 2);
    double coarse_v = js(pool[0], pool[1], quad1).value;
    double fine_v = js(pool[0], pool[1], fine).value;
    suite.add("quadrature_convergence", std::abs(coarse_v - fine_v) < 1e-4,
              std::abs(coarse_v - fine_v), 1e-4);
  }
  return suite;
}

// ---------------------------------------------------------------------------
// network perturbation suite
// ---------------------------------------------------------------------------

namespace {

std::vector<Eigen::VectorXd> eval_grid(int input_dim) {
  std::vector<Eigen::VectorXd> pts;
  if (input_dim == 1) {
    for (int i = 0; i < 65; ++i) pts.push_back(Eigen::VectorXd::Constant(1, i / 64.0));
  } else if (input_dim == 2) {
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) {
        Eigen::VectorXd x(2);
        x << i / 7.0, j / 7.0;
        pts.push_back(x);
      }
    pts.push_back(Eigen::VectorXd::Constant(2, 0.5));
  } else {
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        for (int k = 0; k < 4; ++k) {
          Eigen::VectorXd x(3);
          x << i / 3.0, j / 3.0, k / 3.0;
          pts.push_back(x);
        }
    pts.push_back(Eigen::VectorXd::Constant(3, 0.5));
  }
  return pts;
}

Architecture random_small_arch(Rng& rng, int max_hidden, int max_width) {
  int hidden = static_cast<int>(rng.below(max_hidden + 1));
  std::vector<int> widths(hidden + 2);
  for (auto& w : widths) w = 1 + static_cast<int>(rng.below(max_width));
  return Architecture(hidden, widths);
}

// x with every pre-activation at least `margin` away from the activation kink
bool kink_free(const RequNet& net, const Eigen::VectorXd& x, double margin) {
  const auto& arch = net.arch();
  Eigen::VectorXd h = net.weight(0) * x;
  for (int k = 1; k <= arch.hidden; ++k) {
    Eigen::VectorXd pre = h - net.shift(k);
    for (int i = 0; i < pre.size(); ++i) {
      if (std::abs(pre[i]) < margin) return false;
    }
    h = net.weight(k) * pre.unaryExpr([](double t) { return t > 0.0 ? t * t : 0.0; });
  }
  return true;
}

}  // namespace

SuiteResult perturbation_suite(std::uint64_t seed) {
  SuiteResult suite;
  suite.name = "network_perturbation";
  Rng rng(seed);

  {
    auto pb = perturbation_bounds(Architecture(1, {1, 1, 1}));
    suite.add("sup_coeff_n1", std::abs(pb.sup_coeff.value - 64.0) <= 1e-9, pb.sup_coeff.value, 64.0);
    suite.add("jac_coeff_n1", std::abs(pb.jac_coeff.value - 8192.0) <= 1e-8, pb.jac_coeff.value,
              8192.0);
    auto pb0 = perturbation_bounds(Architecture(0, {3, 2}));
    suite.add("sup_coeff_n0", std::abs(pb0.sup_coeff.value - 4.0) <= 1e-12, pb0.sup_coeff.value, 4.0);
    suite.add("jac_coeff_n0_zero", pb0.jac_coeff.value == 0.0, pb0.jac_coeff.value, 0.0);
  }

  // perturbation bounds on 100 paired networks
  const double eps_levels[3] = {1e-4, 1e-3, 1e-2};
  int sup_fail = 0, jac_fail = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Architecture arch = random_small_arch(rng, 2, 3);
    double eps = eps_levels[trial % 3];
    RequNet a = RequNet::random(arch, rng);
    Eigen::VectorXd pa = a.to_params();
    Eigen::VectorXd pb = pa;
    for (int i = 0; i < pb.size(); ++i) {
      pb[i] = std::clamp(pa[i] + rng.uniform(-eps, eps), -1.0, 1.0);
    }
    RequNet b = RequNet::from_params(arch, pb);
    auto bounds = perturbation_bounds(arch);
    double sup_bound = eps * bounds.sup_coeff.value * (1.0 + 1e-12);
    double jac_bound = eps * bounds.jac_coeff.value * (1.0 + 1e-12);
    for (const auto& x : eval_grid(arch.input_dim())) {
      double dv = (a.forward(x) - b.forward(x)).lpNorm<Eigen::Infinity>();
      if (dv > sup_bound) ++sup_fail;
      if (arch.hidden >= 1) {
        double dj = (a.jacobian(x) - b.jacobian(x)).cwiseAbs().maxCoeff();
        if (dj > jac_bound) ++jac_fail;
      }
    }
  }
  suite.add("sup_perturbation_100", sup_fail == 0, sup_fail, 0.0);
  suite.add("jac_perturbation_100", jac_fail == 0, jac_fail, 0.0,
            "hidden-layer pairs only (coefficient vanishes for affine nets)");

  // Jacobian against central finite differences away from kinks
  {
    double worst = 0.0;
    int done = 0;
    while (done < 100) {
      Architecture arch = random_small_arch(rng, 2, 4);
      RequNet net = RequNet::random(arch, rng);
      Eigen::VectorXd x(arch.input_dim());
      bool found = false;
      for (int attempt = 0; attempt < 200; ++attempt) {
        for (int i = 0; i < x.size(); ++i) x[i] = rng.uniform01();
        if (kink_free(net, x, 1e-3)) {
          found = true;
          break;
        }
      }
      if (!found) continue;
      Eigen::MatrixXd J = net.jacobian(x);
      Eigen::MatrixXd Jfd(J.rows(), J.cols());
      const double step = 1e-5;
      for (int c = 0; c < J.cols(); ++c) {
        Eigen::VectorXd xp = x, xm = x;
        xp[c] += step;
        xm[c] -= step;
        Jfd.col(c) = (net.forward(xp) - net.forward(xm)) / (2.0 * step);
      }
      double rel = (J - Jfd).cwiseAbs().maxCoeff() / std::max(1.0, J.cwiseAbs().maxCoeff());
      worst = std::max(worst, rel);
      ++done;
    }
    suite.add("jacobian_fd_100", worst <= 1e-5, worst, 1e-5);
  }

  // first derivative is continuous across the activation kink
  {
    RequNet net{Architecture(1, {1, 1, 1})};
    net.weight(0)(0, 0) = 1.0;
    net.shift(1)[0] = 0.5;
    net.weight(1)(0, 0) = 1.0;
    double lo = net.jacobian(Eigen::VectorXd::Constant(1, 0.5 - 1e-7))(0, 0);
    double hi = net.jacobian(Eigen::VectorXd::Constant(1, 0.5 + 1e-7))(0, 0);
    double at = net.jacobian(Eigen::VectorXd::Constant(1, 0.5))(0, 0);
    bool ok = std::abs(hi - lo) <= 1e-6 && at == 0.0;
    suite.add("c1_at_kink", ok, std::abs(hi - lo), 1e-6);
  }

  // splitting identity and partial-evaluation bounds
  {
    double worst_split = 0.0;
    int bound_fail = 0;
    for (int trial = 0; trial < 20; ++trial) {
      Architecture arch = random_small_arch(rng, 2, 3);
      if (arch.hidden == 0) continue;
      RequNet net = RequNet::random(arch, rng);
      Eigen::VectorXd x(arch.input_dim());
      for (int i = 0; i < x.size(); ++i) x[i] = rng.uniform01();
      Eigen::VectorXd ref = net.forward(x);
      for (int k = 0; k <= arch.hidden; ++k) {
        Eigen::VectorXd via = net.partial_down(arch.hidden, k + 1, net.partial_up(k, 1, x));
        worst_split = std::max(worst_split, (via - ref).lpNorm<Eigen::Infinity>());
      }
      for (int k = 1; k <= arch.hidden; ++k) {
        for (int i = 1; i <= k; ++i) {
          Eigen::VectorXd sub(arch.widths[i - 1]);
          for (int t = 0; t < sub.size(); ++t) sub[t] = rng.uniform(-1.0, 1.0);
          double bound = partial_sup_bound(arch, k, i, 1.0);
          if (net.partial_up(k, i, sub).lpNorm<Eigen::Infinity>() > bound) ++bound_fail;
        }
      }
    }
    suite.add("splitting_identity", worst_split == 0.0, worst_split, 0.0);
    suite.add("partial_sup_bounds", bound_fail == 0, bound_fail, 0.0);
    double worked = partial_sup_bound(Architecture(1, {1, 1, 1}), 1, 1, 1.0);
    suite.add("partial_bound_worked", std::abs(worked - 4.0) <= 1e-12, worked, 4.0);
    double clamped = partial_sup_bound(Architecture(1, {1, 1, 1}), 1, 1, 0.5);
    suite.add("partial_bound_k_clamp", std::abs(clamped - 4.0) <= 1e-12, clamped, 4.0);
  }

  // parameter gradients against finite differences
  {
    double worst = 0.0;
    int done = 0;
    while (done < 50) {
      Architecture arch = random_small_arch(rng, 2, 3);
      RequNet net = RequNet::random(arch, rng);
      Eigen::VectorXd x(arch.input_dim());
      bool found = false;
      for (int attempt = 0; attempt < 200; ++attempt) {
        for (int i = 0; i < x.size(); ++i) x[i] = rng.uniform01();
        if (kink_free(net, x, 1e-3)) {
          found = true;
          break;
        }
      }
      if (!found) continue;
      Eigen::VectorXd upstream(arch.output_dim());
      for (int i = 0; i < upstream.size(); ++i) upstream[i] = rng.uniform(-1.0, 1.0);
      Eigen::VectorXd grad = net.grad_params(x, upstream);
      Eigen::VectorXd params = net.to_params();
      const double step = 1e-5;
      double scale = std::max(1.0, grad.cwiseAbs().maxCoeff());
      for (int i = 0; i < params.size(); ++i) {
        Eigen::VectorXd pp = params, pm = params;
        pp[i] += step;
        pm[i] -= step;
        double fp = upstream.dot(RequNet::from_params(arch, pp.cwiseMax(-1.0).cwiseMin(1.0)).forward(x));
        double fm = upstream.dot(RequNet::from_params(arch, pm.cwiseMax(-1.0).cwiseMin(1.0)).forward(x));
        double fd = (fp - fm) / (pp[i] - pm[i]);
        worst = std::max(worst, std::abs(grad[i] - fd) / scale);
      }
      ++done;
    }
    suite.add("grad_params_fd_50", worst <= 1e-4, worst, 1e-4);
  }
  {
    Architecture arch(1, {2, 3, 2});
    Rng local = rng.child(7);
    RequNet net = RequNet::random(arch, local);
    Eigen::VectorXd x = Eigen::VectorXd::Constant(2, 0.3);
    double z = net.grad_params(x, Eigen::VectorXd::Zero(2)).cwiseAbs().maxCoeff();
    suite.add("grad_zero_upstream", z == 0.0, z, 0.0);
  }

  // round trips and constraint enforcement
  {
    bool ok = true;
    for (int trial = 0; trial < 100; ++trial) {
      Architecture arch = random_small_arch(rng, 2, 4);
      RequNet net = RequNet::random(arch, rng);
      if (!(RequNet::from_params(arch, net.to_params()) == net)) ok = false;
    }
    suite.add("param_roundtrip_100", ok, ok ? 0.0 : 1.0, 0.0);
    bool rejected = false;
    try {
      Eigen::VectorXd bad = Eigen::VectorXd::Constant(1, 1.5);
      RequNet::from_params(Architecture(0, {1, 1}), bad);
    } catch (const std::invalid_argument&) {
      rejected = true;
    }
    suite.add("out_of_range_rejected", rejected, rejected ? 1.0 : 0.0, 1.0);
    bool json_ok = true;
    for (int trial = 0; trial < 20; ++trial) {
      Architecture arch = random_small_arch(rng, 2, 4);
      RequNet net = RequNet::random(arch, rng);
      if (!(RequNet::from_json(net.to_json()) == net)) json_ok = false;
    }
    suite.add("json_roundtrip_20", json_ok, json_ok ? 0.0 : 1.0, 0.0);
  }

  // sparsity projection
  {
    Architecture arch(2, {2, 3, 3, 2});
    bool ok = true;
    for (int trial = 0; trial < 20; ++trial) {
      RequNet net = RequNet::random(arch, rng, 1.0, 7);
      if (net.nonzero_count() > 7) ok = false;
      int before = net.nonzero_count();
      net.project_constraints();
      if (net.nonzero_count() > before) ok = false;
      try {
        net.validate();
      } catch (const std::invalid_argument&) {
        ok = false;
      }
    }
    suite.add("sparsity_projection", ok, ok ? 0.0 : 1.0, 0.0);
  }
  return suite;
}

// ---------------------------------------------------------------------------
// density suite
// ---------------------------------------------------------------------------

SuiteResult density_suite(std::uint64_t seed) {
  SuiteResult suite;
  suite.name = "density";
  Rng rng(seed);
  QuadratureScheme quad1 = default_rule(1);

  // worked inversion/density values
  {
    GeneratorDensity half(affine_net(1, 0.0, 0.5), 2.5);
    double y = half.invert(Eigen::VectorXd::Constant(1, 0.2))[0];
    suite.add("invert_linear", std::abs(y - 0.4) <= 1e-9, y, 0.4);
    double dv = half.density(Eigen::VectorXd::Constant(1, 0.3));
    suite.add("density_linear", std::abs(dv - 2.0) <= 1e-9, dv, 2.0);
    double dg = half.density_general([](const Eigen::VectorXd& v) { return 2.0 * v[0]; },
                                     Eigen::VectorXd::Constant(1, 0.3));
    suite.add("density_general_worked", std::abs(dg - 2.4) <= 1e-9, dg, 2.4);
    bool threw = false;
    try {
      half.density(Eigen::VectorXd::Constant(1, 0.9));
    } catch (const InversionError&) {
      threw = true;
    }
    suite.add("outside_image_error", threw, threw ? 1.0 : 0.0, 1.0);
  }
  {
    PushforwardDensity sine(std::make_shared<SineMap>(1, 0.05), 1.5);
    double y = sine.invert(Eigen::VectorXd::Constant(1, 0.2))[0];
    suite.add("invert_sine_analytic", std::abs(y - 0.25) <= 1e-8, y, 0.25);
    double dv = sine.density(Eigen::VectorXd::Constant(1, 0.2));
    suite.add("density_sine_analytic", std::abs(dv - 1.0) <= 1e-8, dv, 1.0);
    HolderEstimate est = holder_diagnostics(sine.map(), 1.5, 2.0, 33);
    double lo = 1.0 - 0.1 * M_PI, hi = 1.0 + 0.1 * M_PI;
    bool ok = std::abs(est.min_singular - lo) <= 1e-6 && std::abs(est.max_singular - hi) <= 1e-6;
    suite.add("sine_derivative_extrema", ok, est.min_singular, lo);
  }
  {
    auto [pmin, pmax] = density_bounds(2.0, 1);
    suite.add("density_bounds_worked", pmin == 0.5 && pmax == 2.0, pmin, 0.5);
    auto [pmin2, pmax2] = density_bounds(1.5, 2);
    suite.add("density_bounds_d2", std::abs(pmin2 - 1.0 / 2.25) <= 1e-12 &&
                                       std::abs(pmax2 - 2.25) <= 1e-12,
              pmax2, 2.25);
    bool rejected = false;
    try {
      density_bounds(1.0, 1);
    } catch (const std::invalid_argument&) {
      rejected = true;
    }
    suite.add("lambda_at_most_one_rejected", rejected, rejected ? 1.0 : 0.0, 1.0);
    double l2 = density_lipschitz_constant(1, 2.0, 1.0);
    suite.add("density_lipschitz_worked", std::abs(l2 - 24.0) <= 1e-12, l2, 24.0);
    double l2_limit = density_lipschitz_constant(1, 1.0 + 1e-12, 0.0);
    suite.add("density_lipschitz_limit", std::abs(l2_limit - 1.0) <= 1e-6, l2_limit, 1.0);
  }
  {
    HolderEstimate est = holder_diagnostics(IdentityMap(1), 1.5, 2.0, 33);
    bool ok = std::abs(est.c_s_norm - 1.0) <= 1e-12 && est.holder_quotient <= 1e-9 &&
              std::abs(est.min_singular - 1.0) <= 1e-12;
    suite.add("holder_identity", ok, est.holder_quotient, 0.0);
  }

  // normalization, round trips, envelope bounds
  double worst_norm1 = 0.0, worst_round = 0.0;
  bool envelope_ok = true;
  for (int trial = 0; trial < 10; ++trial) {
    GeneratorDensity g = pinned_density(1, rng, 0.004 + 0.026 * rng.uniform01());
    worst_norm1 = std::max(worst_norm1, std::abs(quad1.integrate(g.as_fn()) - 1.0));
    auto [pmin, pmax] = density_bounds(g.lambda_bound(), 1);
    for (int i = 0; i < 33; ++i) {
      Eigen::VectorXd x = Eigen::VectorXd::Constant(1, i / 32.0);
      Eigen::VectorXd y = g.invert(x);
      worst_round = std::max(worst_round, std::abs(g.map().value(y)[0] - x[0]));
      double dv = g.density(x);
      if (dv < pmin - 1e-9 || dv > pmax + 1e-9) envelope_ok = false;
    }
  }
  suite.add("normalization_d1", worst_norm1 <= 1e-4, worst_norm1, 1e-4);
  suite.add("roundtrip_d1", worst_round <= 1e-8, worst_round, 1e-8);

  double worst_norm2 = 0.0, worst_round2 = 0.0;
  QuadratureScheme quad2 = default_rule(2);
  for (int trial = 0; trial < 3; ++trial) {
    GeneratorDensity g = pinned_density(2, rng, 0.004 + 0.016 * rng.uniform01());
    worst_norm2 = std::max(worst_norm2, std::abs(quad2.integrate(g.as_fn()) - 1.0));
    auto [pmin, pmax] = density_bounds(g.lambda_bound(), 2);
    for (int i = 0; i < 33; ++i) {
      for (int j = 0; j < 33; ++j) {
        Eigen::VectorXd x(2);
        x << i / 32.0, j / 32.0;
        Eigen::VectorXd y = g.invert(x);
        worst_round2 = std::max(worst_round2, (g.map().value(y) - x).lpNorm<Eigen::Infinity>());
        double dv = g.density(x);
        if (dv < pmin - 1e-9 || dv > pmax + 1e-9) envelope_ok = false;
      }
    }
  }
  suite.add("normalization_d2", worst_norm2 <= 1e-4, worst_norm2, 1e-4);
  suite.add("roundtrip_d2", worst_round2 <= 1e-8, worst_round2, 1e-8);
  suite.add("density_envelope", envelope_ok, envelope_ok ? 0.0 : 1.0, 0.0,
            "values within [lambda^-d, lambda^d]");

  // density response to generator perturbations on 50 pairs
  {
    double worst_ratio = 0.0;
    bool ok = true;
    for (int trial = 0; trial < 50; ++trial) {
      GeneratorDensity gu = pinned_density(1, rng, 0.004 + 0.026 * rng.uniform01());
      GeneratorDensity gv = pinned_density(1, rng, 0.004 + 0.026 * rng.uniform01());
      double h_g = std::max(audited_h2_bound(gu.map(), 1.5), audited_h2_bound(gv.map(), 1.5));
      double l2 = density_lipschitz_constant(1, 1.5, h_g);
      double dist = 0.0, dsup = 0.0;
      for (int i = 0; i < 65; ++i) {
        Eigen::VectorXd x = Eigen::VectorXd::Constant(1, i / 64.0);
        dist = std::max(dist, (gu.map().value(x) - gv.map().value(x)).lpNorm<Eigen::Infinity>());
        dist = std::max(dist,
                        (gu.map().jacobian(x) - gv.map().jacobian(x)).cwiseAbs().maxCoeff());
        dsup = std::max(dsup, std::abs(gu.density(x) - gv.density(x)));
      }
      double bound = l2 * dist;
      if (bound > 0.0) worst_ratio = std::max(worst_ratio, dsup / bound);
      if (dsup > bound) ok = false;
    }
    suite.add("density_lipschitz_50", ok, worst_ratio, 1.0);
  }

  // refining the quadrature shrinks the normalization error
  {
    GeneratorDensity g = pinned_density(1, rng, 0.025);
    double e64 = std::abs(midpoint_rule(1, 64).integrate(g.as_fn()) - 1.0);
    double e128 = std::abs(midpoint_rule(1, 128).integrate(g.as_fn()) - 1.0);
    suite.add("refinement_halves_error", e128 <= 0.75 * e64 + 1e-12, e128, 0.75 * e64);
  }
  return suite;
}

// ---------------------------------------------------------------------------
// oracle suite
// ---------------------------------------------------------------------------

namespace {

// second, independently coded evaluation of the constants (plain loops and
// literal formulas) for the double-entry check
ConstantsBundle constants_reference(double d_min, double d_max, const Architecture& g,
                                    const Architecture& dsc, double h_d, int d, double lambda,
                                    double h_g) {
  ConstantsBundle b;
  auto lip = [](const Architecture& a) {
    double prod = 1.0;
    for (int p : a.widths) {
      double f = 1.0;
      for (int k = 0; k < (1 << a.hidden); ++k) f *= (p + 1.0);
      prod *= f;
    }
    return (a.hidden + 1.0) * std::pow(2.0, a.hidden) * prod;
  };
  b.l_g = lip(g);
  b.l_theta = lip(dsc);
  b.l_x = h_d;
  double prod = 1.0;
  for (int p : g.widths) {
    double f = 1.0;
    for (int k = 0; k < 2 * (1 << g.hidden) + 1; ++k) f *= (p + 1.0);
    prod *= f;
  }
  double l2 = std::pow(static_cast<double>(d), 2.0 + d / 2.0) * std::pow(lambda, 3.0 * d) *
              (1.0 + h_g * lambda * std::sqrt(static_cast<double>(d)));
  b.l_p = l2 * g.hidden * (g.hidden + 1.0) * std::pow(2.0, g.hidden + 1.0) * prod;
  b.c_eps_net = b.l_g * b.l_x / (2.0 - 2.0 * d_max) +
                b.l_theta / (d_min < 1.0 - d_max ? d_min : 1.0 - d_max);
  double lt = std::log(2.0);
  double t1 = d_min == 0.5 ? 2.0 * lt * lt
                           : std::max(std::pow(std::log(2.0 * d_min), 2) / (0.5 - d_min),
                                      2.0 * lt * lt);
  double t2 = d_max == 0.5 ? 2.0 * lt * lt
                           : std::max(std::pow(std::log(2.0 - 2.0 * d_max), 2) / (d_max - 0.5),
                                      2.0 * lt * lt);
  double t3 = std::log(std::exp(1.0) / (2.0 * d_min)) / (2.0 * d_min * d_min) +
              std::log(std::exp(1.0) / (2.0 - 2.0 * d_max)) /
                  std::pow(2.0 - 2.0 * d_max, 2);
  b.c_var = t1 + t2 + t3;
  double inv1 = 1.0 / d_max > 1.0 / d_min ? 1.0 / d_max : 1.0 / d_min;
  double inv2 = 1.0 / (1.0 - d_max) > 1.0 / (1.0 - d_min) ? 1.0 / (1.0 - d_max)
                                                          : 1.0 / (1.0 - d_min);
  b.c_d = std::log(inv1) > std::log(inv2) ? std::log(inv1) : std::log(inv2);
  double br1 = d_min / ((1.0 - d_min) * std::log(1.0 / (1.0 - d_max)));
  double br2 = (1.0 - d_max) / (d_max * std::log(1.0 / d_min));
  b.c_delta = 1.0 + std::sqrt(br1 < br2 ? br1 : br2);
  return b;
}

double rel_diff(double a, double b) {
  double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

}  // namespace

SuiteResult oracle_suite(std::uint64_t seed) {
  SuiteResult suite;
  suite.name = "oracle";
  Rng rng(seed);
  const double d_min = 0.2, d_max = 0.8, lambda = 1.5;
  QuadratureScheme quad = gauss_legendre_rule(1, 64, 2);
  Architecture gen_arch(1, {1, 6, 1});
  Architecture disc_arch(1, {1, 8, 1});

  RequNet g_star = pinned_generator(1, rng, 0.02);
  GeneratorDensity p_star_density(g_star, lambda);
  DensityFn p_star = p_star_density.as_fn();

  // worked constants
  {
    ConstantsBundle half = constants(0.5, 0.5, gen_arch, disc_arch, 1.0, 1, lambda, 1.0);
    double expected = 1.0 + std::sqrt(1.0 / std::log(2.0));
    suite.add("c_delta_half", rel_diff(half.c_delta, expected) <= 1e-12, half.c_delta, expected);
    ConstantsBundle wide = constants(0.1, 0.9, gen_arch, disc_arch, 1.0, 1, lambda, 1.0);
    suite.add("c_d_worked", rel_diff(wide.c_d, std::log(10.0)) <= 1e-12, wide.c_d, std::log(10.0));
    double lg = class_lipschitz_coeff(Architecture(1, {1, 1, 1}));
    suite.add("l_g_worked", rel_diff(lg, 256.0) <= 1e-12, lg, 256.0);
  }
  // double-entry constants
  {
    double h_d = disc_class_input_lipschitz(disc_arch, d_min, d_max,
                                            class_range_bound(gen_arch));
    double h_g = audited_h2_bound(p_star_density.map(), lambda);
    ConstantsBundle a = constants(d_min, d_max, gen_arch, disc_arch, h_d, 1, lambda, h_g);
    ConstantsBundle b = constants_reference(d_min, d_max, gen_arch, disc_arch, h_d, 1, lambda, h_g);
    double worst = std::max({rel_diff(a.c_eps_net, b.c_eps_net), rel_diff(a.c_var, b.c_var),
                             rel_diff(a.c_d, b.c_d), rel_diff(a.c_delta, b.c_delta),
                             rel_diff(a.l_g, b.l_g), rel_diff(a.l_theta, b.l_theta),
                             rel_diff(a.l_x, b.l_x), rel_diff(a.l_p, b.l_p)});
    suite.add("constants_double_entry", worst <= 1e-12, worst, 1e-12);
  }

  ConstantsBundle bundle = constants(d_min, d_max, gen_arch, disc_arch,
                                     disc_class_input_lipschitz(disc_arch, d_min, d_max,
                                                                class_range_bound(gen_arch)),
                                     1, lambda, audited_h2_bound(p_star_density.map(), lambda));

  // discriminator-gap sandwich and nonnegativity on 100 random pairs
  {
    int sandwich_fail = 0;
    double min_gap = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      RequNet gen = pinned_generator(1, rng, 0.004 + 0.026 * rng.uniform01());
      RequNet theta = RequNet::random(disc_arch, rng, 0.5);
      ClampedDiscriminator disc(theta, d_min, d_max);
      auto rep = delta_gap_sandwich_check(gen, disc, p_star, lambda, quad, bundle.c_delta,
                                          d_min, d_max);
      if (!rep.pass) ++sandwich_fail;
      min_gap = std::min(min_gap, rep.gap);
    }
    suite.add("gap_sandwich_100", sandwich_fail == 0, sandwich_fail, 0.0);
    suite.add("goodfellow_gap_nonneg", min_gap >= -1e-8, min_gap, -1e-8);
  }
  // gap at the ideal discriminator and matched generator
  {
    RequNet zero_disc(disc_arch);
    ClampedDiscriminator half_disc(zero_disc, d_min, d_max);
    double gap = delta_gap(g_star, half_disc, p_star, lambda, quad);
    suite.add("gap_matched_zero", std::abs(gap) <= 1e-10, gap, 0.0);
    // with D = 1/2 and generator = identity, the gap equals the divergence
    DensityFn left = left_half_density();
    double gap_js = delta_gap(affine_net(1, 0.0, 1.0), half_disc, left, 1.5, quad);
    double expected = 0.75 * std::log(4.0 / 3.0);
    suite.add("gap_equals_js_at_half", std::abs(gap_js - expected) <= 1e-9, gap_js, expected);
  }

  // approximation terms over a realizable grid
  {
    std::vector<RequNet> grid;
    grid.push_back(g_star);
    for (int i = 0; i < 4; ++i) grid.push_back(pinned_generator(1, rng, 0.01 + 0.01 * i));
    DiscOptimizerConfig opt;
    OracleTerms terms = delta_terms(grid, disc_arch, d_min, d_max, p_star, lambda, quad, opt,
                                    rng.next_u64());
    suite.add("delta_g_realizable", terms.delta_g <= 1e-9, terms.delta_g, 1e-9);
    suite.add("delta_d_small", terms.delta_d <= 0.02, terms.delta_d, 0.02,
              "upper bound via multistart ascent");
    std::vector<RequNet> single{grid[1]};
    OracleTerms one = delta_terms(single, disc_arch, d_min, d_max, p_star, lambda, quad, opt,
                                  rng.next_u64());
    GeneratorDensity pw(grid[1], lambda);
    double js_one = js(p_star, pw.as_fn(), quad).value;
    suite.add("delta_g_single_grid", rel_diff(one.delta_g, js_one) <= 1e-9, one.delta_g, js_one);
  }

  // loss Lipschitz bounds on 1000 parameter pairs
  {
    Architecture small_gen(1, {1, 3, 1});
    Architecture small_disc(1, {1, 3, 1});
    double h_d = disc_class_input_lipschitz(small_disc, d_min, d_max,
                                            class_range_bound(small_gen));
    ConstantsBundle small_bundle = constants(d_min, d_max, small_gen, small_disc, h_d, 1, lambda,
                                             1.0);
    Dataset data = sample_dataset(SineMap(1, 0.05), 128, rng.next_u64());
    auto rep = loss_lipschitz_check(small_gen, small_disc, d_min, d_max, data, small_bundle, 1000,
                                    rng.next_u64());
    suite.add("loss_lipschitz_1000", rep.pass, rep.worst_ratio, 1.0);
  }

  // bounded loss
  {
    Dataset data = sample_dataset(SineMap(1, 0.05), 64, rng.next_u64());
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
      RequNet gen = RequNet::random(gen_arch, rng);
      ClampedDiscriminator disc(RequNet::random(disc_arch, rng), d_min, d_max);
      worst = std::max(worst, std::abs(empirical_loss(gen, disc, data)));
    }
    suite.add("loss_bounded", worst <= 1.5 * bundle.c_d, worst, 1.5 * bundle.c_d);
  }

  // monotonicity of the closed-form bounds
  {
    double b1 = bernstein_rhs(0.2, 0.1, 1000, 0.05, bundle);
    double b2 = bernstein_rhs(0.2, 0.1, 2000, 0.05, bundle);
    double b3 = bernstein_rhs(0.2, 0.1, 1000, 0.1, bundle);
    suite.add("bernstein_monotone", b2 < b1 && b3 < b1, b2, b1);
    OracleTerms zero_terms{0.0, 0.0, ""};
    double r_pure = oracle_rhs(zero_terms, 20, 20, 4096, 0.1, bundle);
    double l_max = std::max({bundle.l_g * bundle.l_x, bundle.l_theta, bundle.l_p, 1.0});
    double log_term = 40.0 * std::log(2.0 * l_max * 4096.0) + std::log(80.0);
    suite.add("oracle_rhs_pure_term", rel_diff(r_pure, log_term / 4096.0) <= 1e-12, r_pure,
              log_term / 4096.0);
    OracleTerms some_terms{0.005, 0.005, ""};
    double r1 = oracle_rhs(some_terms, 20, 20, 4096, 0.1, bundle);
    double r2 = oracle_rhs(some_terms, 20, 20, 8192, 0.1, bundle);
    suite.add("oracle_rhs_monotone", r2 < r1, r2, r1);
    // double-entry of the assembled value
    double by_hand = std::sqrt(0.01 * log_term / 4096.0) + log_term / 4096.0;
    suite.add("oracle_rhs_double_entry", rel_diff(r1, by_hand) <= 1e-12, r1, by_hand);
  }
  // uniform deviation bound double-entry
  {
    double eps = default_eps_net(500, 0.05, 10, 12, bundle);
    double v = uniform_bound_rhs(eps, 500, 0.05, 10, 12, 0.1, 0.05, bundle);
    double lc = 22.0 * std::log(2.0 / eps) + std::log(40.0);
    double by_hand = 3.0 * bundle.c_eps_net * eps + std::sqrt(bundle.l_p * eps) +
                     4.0 * std::sqrt(bundle.c_var * 0.1 * lc / 1000.0) +
                     std::sqrt(bundle.c_var * 0.05 * lc / 1000.0) +
                     2.0 * (bundle.c_var + bundle.c_d) * lc / 1500.0;
    suite.add("uniform_bound_double_entry", rel_diff(v, by_hand) <= 1e-12, v, by_hand);
  }
  return suite;
}

// ---------------------------------------------------------------------------
// concentration suite
// ---------------------------------------------------------------------------

SuiteResult concentration_suite(std::uint64_t seed) {
  SuiteResult suite;
  suite.name = "concentration";
  Rng rng(seed);
  const double d_min = 0.2, d_max = 0.8, lambda = 1.5;
  QuadratureScheme quad = gauss_legendre_rule(1, 64, 2);
  Architecture gen_arch(1, {1, 6, 1});
  Architecture disc_arch(1, {1, 8, 1});

  auto g_star = std::make_shared<RequMap>(pinned_generator(1, rng, 0.02));
  PushforwardDensity p_star_density(g_star, lambda);
  DensityFn p_star = p_star_density.as_fn();
  RequNet gen = pinned_generator(1, rng, 0.025);
  ClampedDiscriminator disc(RequNet::random(disc_arch, rng, 0.5), d_min, d_max);
  ConstantsBundle bundle = constants(d_min, d_max, gen_arch, disc_arch,
                                     disc_class_input_lipschitz(disc_arch, d_min, d_max,
                                                                class_range_bound(gen_arch)),
                                     1, lambda, audited_h2_bound(*g_star, lambda));

  ConcentrationCheckConfig config;
  config.replicates = 10000;
  config.n = 500;
  config.confidence_delta = 0.05;
  config.seed = rng.next_u64();
  auto rep = concentration_monte_carlo(gen, disc, *g_star, p_star, lambda, quad, bundle, config);
  suite.add("bernstein_quantile_R10000", rep.pass, rep.quantile, rep.bound);
  suite.add("no_resolution_warning", !rep.resolution_warning, rep.resolution_warning ? 1.0 : 0.0,
            0.0);

  // a much looser confidence level still dominates
  ConcentrationCheckConfig loose = config;
  loose.replicates = 2000;
  loose.confidence_delta = 0.999;
  auto rep_loose = concentration_monte_carlo(gen, disc, *g_star, p_star, lambda, quad, bundle,
                                             loose);
  suite.add("bernstein_loose_level", rep_loose.pass, rep_loose.quantile, rep_loose.bound);

  // identical seeds give identical reports
  ConcentrationCheckConfig det = config;
  det.replicates = 500;
  auto r1 = concentration_monte_carlo(gen, disc, *g_star, p_star, lambda, quad, bundle, det);
  auto r2 = concentration_monte_carlo(gen, disc, *g_star, p_star, lambda, quad, bundle, det);
  suite.add("report_deterministic", r1.quantile == r2.quantile && r1.bound == r2.bound,
            std::abs(r1.quantile - r2.quantile), 0.0);

  // small replicate counts at tight levels are flagged
  ConcentrationCheckConfig tiny = config;
  tiny.replicates = 100;
  auto r3 = concentration_monte_carlo(gen, disc, *g_star, p_star, lambda, quad, bundle, tiny);
  suite.add("resolution_warning_flagged", r3.resolution_warning, r3.resolution_warning ? 1.0 : 0.0,
            1.0);

  // unbiasedness: the empirical loss averages to the population loss
  {
    const int R = 2000;
    const std::size_t n = 256;
    double L = population_loss(gen, disc, p_star, quad);
    std::vector<double> values(R);
    Rng mc = rng.child(17);
    parallel_for(R, [&](std::size_t r) {
      Rng local = mc.child(r);
      Dataset data = sample_dataset(*g_star, n, local.next_u64());
      values[r] = empirical_loss(gen, disc, data);
    });
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= R;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= (R - 1);
    double tol = 3.0 * std::sqrt(var / R) + 1e-12;
    suite.add("unbiasedness_3se", std::abs(mean - L) <= tol, std::abs(mean - L), tol);
  }
  return suite;
}

// ---------------------------------------------------------------------------
// fisher / lower-bound family suite
// ---------------------------------------------------------------------------

SuiteResult fisher_suite(std::uint64_t seed) {
  SuiteResult suite;
  suite.name = "fisher";
  Rng rng(seed);
  const double beta = 3.0;
  BumpFunction bump = make_bump(1);

  // worked bump values
  {
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
    double v0 = bump.value(zero);
    suite.add("bump_peak_one", std::abs(v0 - 1.0) <= 1e-12, v0, 1.0);
    double g0 = bump.gradient(zero)[0];
    double h0 = bump.hessian(zero)(0, 0);
    suite.add("bump_origin_curvature", g0 == 0.0 && std::abs(h0 + 2.0) <= 1e-12, h0, -2.0);
    Eigen::VectorXd outside = Eigen::VectorXd::Constant(1, 1.2);
    bool zero_outside = bump.value(outside) == 0.0 && bump.gradient(outside)[0] == 0.0 &&
                        bump.hessian(outside)(0, 0) == 0.0;
    suite.add("bump_zero_outside", zero_outside, zero_outside ? 0.0 : 1.0, 0.0);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      Eigen::VectorXd x = Eigen::VectorXd::Constant(1, -0.8 + 1.6 * (i + 0.5) / 20.0);
      double step = 1e-6;
      Eigen::VectorXd xp = x, xm = x;
      xp[0] += step;
      xm[0] -= step;
      double fd = (bump.value(xp) - bump.value(xm)) / (2.0 * step);
      worst = std::max(worst, std::abs(fd - bump.gradient(x)[0]) /
                                  std::max(1.0, std::abs(bump.gradient(x)[0])));
    }
    suite.add("bump_gradient_fd", worst <= 1e-6, worst, 1e-6);
  }

  // packing lattice
  {
    auto centers = packing_centers(0.05, 1);
    bool ok = centers.size() == 4 && std::abs(centers[0][0] - 1.0 / 3.0) <= 1e-12;
    for (std::size_t i = 0; i + 1 < centers.size(); ++i) {
      if (std::abs(centers[i + 1][0] - centers[i][0] - 0.11) > 1e-12) ok = false;
    }
    for (const auto& c : centers) {
      if (c[0] < 1.0 / 3.0 - 1e-12 || c[0] > 2.0 / 3.0 + 1e-12) ok = false;
    }
    suite.add("packing_worked", ok, static_cast<double>(centers.size()), 4.0);
    bool threw = false;
    try {
      packing_centers(0.2, 1);
    } catch (const PackingError&) {
      threw = true;
    }
    suite.add("packing_too_large_h", threw, threw ? 1.0 : 0.0, 1.0);
    auto centers2 = packing_centers(0.05, 2);
    suite.add("packing_d2_count", centers2.size() == 16, static_cast<double>(centers2.size()),
              16.0);
  }

  // family with h = 0.04
  const double h = 0.04;
  auto centers = packing_centers(h, 1);
  const int M = static_cast<int>(centers.size());
  Eigen::VectorXd theta(M);
  for (int j = 0; j < M; ++j) theta[j] = rng.uniform(-1.0, 1.0);
  theta *= 0.9 * h / std::max(theta.norm(), 1e-12);
  PerturbedFamily fam(h, beta, centers, theta, bump, 1.5);
  PerturbedFamily fam0(h, beta, centers, Eigen::VectorXd::Zero(M), bump, 1.5);

  {
    bool ok = true;
    for (int i = 0; i <= 20; ++i) {
      Eigen::VectorXd x = Eigen::VectorXd::Constant(1, i / 20.0);
      if (std::abs(fam0.log_density(x)) > 0.0) ok = false;
      if ((fam0.inverse_map(x) - x).lpNorm<Eigen::Infinity>() > 0.0) ok = false;
    }
    suite.add("identity_at_zero_theta", ok, ok ? 0.0 : 1.0, 0.0);
    // away from every center the map and log-density are untouched
    Eigen::VectorXd far = Eigen::VectorXd::Constant(1, 0.1);
    bool far_ok = fam.log_density(far) == 0.0 && (fam.inverse_map(far) - far).norm() == 0.0 &&
                  fam.score(far, 0) == 0.0;
    suite.add("untouched_outside_bumps", far_ok, far_ok ? 0.0 : 1.0, 0.0);
    // single-center analytic displacement
    std::vector<Eigen::VectorXd> one_center{Eigen::VectorXd::Constant(1, 0.5)};
    Eigen::VectorXd th1 = Eigen::VectorXd::Constant(1, h);
    PerturbedFamily single(h, beta, one_center, th1, bump, 1.5);
    Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 0.5 + h / 2.0);
    double expected = x[0] + std::pow(h, beta) * h *
                                 bump.gradient(Eigen::VectorXd::Constant(1, 0.5))[0];
    double got = single.inverse_map(x)[0];
    suite.add("inverse_map_analytic", std::abs(got - expected) <= 1e-15, got, expected);
    // scalar log-density specialization
    double u = 0.5;
    double lhs = single.log_density(x);
    double rhs = std::log(1.0 + std::pow(h, beta - 1.0) * h *
                                    bump.hessian(Eigen::VectorXd::Constant(1, u))(0, 0));
    suite.add("log_density_scalar", std::abs(lhs - rhs) <= 1e-12, lhs, rhs);
  }

  // score against finite differences in theta
  {
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      int j = static_cast<int>(rng.below(M));
      Eigen::VectorXd x = centers[j];
      x[0] += h * rng.uniform(-0.9, 0.9);
      double s = fam.score(x, j);
      const double step = 1e-7;
      Eigen::VectorXd tp = theta, tm = theta;
      tp[j] += step;
      tm[j] -= step;
      PerturbedFamily fp(h, beta, centers, tp, bump, 1.5);
      PerturbedFamily fm(h, beta, centers, tm, bump, 1.5);
      double fd = (fp.log_density(x) - fm.log_density(x)) / (2.0 * step);
      worst = std::max(worst, std::abs(s - fd) / std::max(1.0, std::abs(s)));
    }
    suite.add("score_fd_100", worst <= 1e-5, worst, 1e-5);
  }

  // density normalization via ball-restricted quadrature
  {
    std::vector<double> n1, w1;
    gauss_legendre_01(256, n1, w1);
    double total = 1.0;
    for (int j = 0; j < M; ++j) {
      for (std::size_t i = 0; i < n1.size(); ++i) {
        Eigen::VectorXd x = centers[j];
        x[0] += h * (2.0 * n1[i] - 1.0);
        total += 2.0 * h * w1[i] * (fam.density(x) - 1.0);
      }
    }
    suite.add("family_normalization", std::abs(total - 1.0) <= 1e-8, total, 1.0);
    // density stays within the effective regularity envelope
    double max_dev = 0.0;
    for (int j = 0; j < M; ++j) {
      for (int t = 0; t <= 32; ++t) {
        Eigen::VectorXd x = centers[j];
        x[0] += h * (2.0 * t / 32.0 - 1.0);
        max_dev = std::max(max_dev, std::abs(std::log(fam.density(x))));
      }
    }
    double margin = fam.validity_margin();
    double lam_eff = std::max(1.0 / margin, std::exp(max_dev)) + 1e-9;
    suite.add("family_envelope", max_dev <= std::log(lam_eff), max_dev, std::log(lam_eff),
              "validity margin " + std::to_string(margin));
  }

  // Fisher information: closed-form reduction and scaling in h
  {
    std::vector<Eigen::VectorXd> one_center{Eigen::VectorXd::Constant(1, 0.5)};
    Eigen::VectorXd th0 = Eigen::VectorXd::Zero(1);
    std::vector<double> hs = {0.04, 0.02, 0.01};
    std::vector<double> log_h, log_i;
    double worst_closed = 0.0;
    double min_entry = std::numeric_limits<double>::infinity();
    for (double hh : hs) {
      PerturbedFamily f(hh, beta, one_center, th0, bump, 1.5);
      FisherEstimate est = fisher_information(f, 64);
      // independent 1d reduction: h^{2 beta - 1} int (phi'')^2
      std::vector<double> n1, w1;
      gauss_legendre_01(256, n1, w1);
      double integral = 0.0;
      for (std::size_t i = 0; i < n1.size(); ++i) {
        double u = 2.0 * n1[i] - 1.0;
        double second = bump.hessian(Eigen::VectorXd::Constant(1, u))(0, 0);
        integral += 2.0 * w1[i] * second * second;
      }
      double closed = std::pow(hh, 2.0 * beta - 1.0) * integral;
      worst_closed = std::max(worst_closed, rel_diff(est.per_index[0], closed));
      log_h.push_back(std::log(hh));
      log_i.push_back(std::log(est.per_index[0]));
      min_entry = std::min(min_entry, est.per_index[0]);
    }
    suite.add("fisher_nonneg", min_entry >= 0.0, min_entry, 0.0);
    suite.add("fisher_closed_form", worst_closed <= 1e-6, worst_closed, 1e-6);
    double slope = ols_slope(log_h, log_i);
    double target = 2.0 * beta + 1.0 - 2.0;  // d = 1
    suite.add("fisher_scaling_slope", std::abs(slope - target) <= 0.2, slope, target);
  }

  // score lower bound on the r0-balls
  {
    auto centers02 = packing_centers(0.02, 1);
    PerturbedFamily f02(0.02, beta, centers02,
                        Eigen::VectorXd::Zero(static_cast<int>(centers02.size())), bump, 1.5);
    auto rep = score_lower_bound_check(f02);
    suite.add("score_bound_h002", rep.pass && rep.precondition_ok, rep.min_abs_score,
              rep.threshold);
    // the analytic value at a center
    double at_center = std::abs(f02.score(centers02[0], 0));
    double expected = std::pow(0.02, beta - 1.0) * 2.0;
    suite.add("score_at_center", rel_diff(at_center, expected) <= 1e-12, at_center, expected);
    // an h above the smallness threshold is flagged, not asserted
    std::vector<Eigen::VectorXd> wide_center{Eigen::VectorXd::Constant(1, 0.5)};
    PerturbedFamily wide(0.45, beta, wide_center, Eigen::VectorXd::Zero(1), bump, 1.5);
    auto wide_rep = score_lower_bound_check(wide);
    suite.add("score_bound_guard", !wide_rep.precondition_ok && !wide_rep.pass,
              wide_rep.precondition_ok ? 1.0 : 0.0, 0.0);
  }

  // family validity
  {
    double margin = fam.validity_margin();
    suite.add("family_validity_margin", margin >= 0.1, margin, 0.1);
    bool threw = false;
    try {
      Eigen::VectorXd big = Eigen::VectorXd::Constant(M, h);
      PerturbedFamily bad(h, beta, centers, big, bump, 1.5);
    } catch (const std::invalid_argument&) {
      threw = true;
    }
    suite.add("theta_ball_enforced", threw, threw ? 1.0 : 0.0, 1.0);
  }
  return suite;
}

SuiteResult lower_bound_suite(std::uint64_t seed) {
  SuiteResult suite;
  suite.name = "lower_bound";
  const double beta = 3.0;
  const int d = 1;
  const double lambda = 1.5;

  {
    double h = bandwidth(1024, beta, d, lambda);
    double by_hand = std::exp(-std::log(1536.0) / 7.0);
    suite.add("bandwidth_worked", rel_diff(h, by_hand) <= 1e-12 && std::abs(h - 0.3506) <= 2e-4,
              h, 0.3506);
    double unit = bandwidth(1, beta, d, 1.0);
    suite.add("bandwidth_unit", unit == 1.0, unit, 1.0);
    suite.add("bandwidth_monotone", bandwidth(2048, beta, d, lambda) < h,
              bandwidth(2048, beta, d, lambda), h);
  }
  {
    double v = van_trees_rhs(4.0, 1000, 0.0, 8.0);
    suite.add("van_trees_zero_fisher", rel_diff(v, 2.0) <= 1e-12, v, 2.0);
    double v1 = van_trees_rhs(4.0, 1000, 1e-3, 8.0);
    double v2 = van_trees_rhs(4.0, 2000, 1e-3, 8.0);
    suite.add("van_trees_monotone_n", v2 < v1, v2, v1);
    double by_hand = 16.0 / (1000.0 * 1e-3 + 8.0);
    suite.add("van_trees_double_entry", rel_diff(v1, by_hand) <= 1e-12, v1, by_hand);
  }
  double j0 = prior_energy_coefficient(4, 100000, seed);
  suite.add("prior_energy_positive", j0 > 0.0 && std::isfinite(j0), j0, 0.0);

  {
    std::vector<double> log_n, log_b;
    double prev = std::numeric_limits<double>::infinity();
    bool monotone = true;
    for (int e = 8; e <= 16; ++e) {
      std::size_t n = static_cast<std::size_t>(1) << e;
      LowerBoundPoint pt = assembled_lower_bound(n, beta, d, lambda, j0);
      log_n.push_back(std::log(static_cast<double>(n)));
      log_b.push_back(std::log(pt.value));
      if (pt.value >= prev) monotone = false;
      prev = pt.value;
    }
    double slope = ols_slope(log_n, log_b);
    double target = -2.0 * beta / (2.0 * beta + d);
    suite.add("assembled_slope", std::abs(slope - target) <= 0.05, slope, target);
    suite.add("assembled_monotone", monotone, monotone ? 0.0 : 1.0, 0.0);
  }
  return suite;
}

VerifyReport verify_all(std::uint64_t seed) {
  VerifyReport report;
  report.seed = seed;
  Rng rng(seed);
  report.suites.push_back(divergence_suite(rng.child(1).next_u64()));
  report.suites.push_back(perturbation_suite(rng.child(2).next_u64()));
  report.suites.push_back(density_suite(rng.child(3).next_u64()));
  report.suites.push_back(oracle_suite(rng.child(4).next_u64()));
  report.suites.push_back(concentration_suite(rng.child(5).next_u64()));
  report.suites.push_back(fisher_suite(rng.child(6).next_u64()));
  report.suites.push_back(lower_bound_suite(rng.child(7).next_u64()));
  for (const auto& suite : report.suites) report.pass = report.pass && suite.pass;
  return report;
}

std::string report_to_json(const VerifyReport& report) {
  nlohmann::ordered_json j;
  j["seed"] = report.seed;
  j["pass"] = report.pass;
  j["suites"] = nlohmann::ordered_json::array();
  for (const auto& suite : report.suites) {
    nlohmann::ordered_json s;
    s["name"] = suite.name;
    s["pass"] = suite.pass;
    s["checks"] = nlohmann::ordered_json::array();
    for (const auto& check : suite.checks) {
      nlohmann::ordered_json c;
      c["name"] = check.name;
      c["pass"] = check.pass;
      c["observed"] = check.observed;
      c["bound"] = check.bound;
      if (!check.detail.empty()) c["detail"] = check.detail;
      s["checks"].push_back(c);
    }
    j["suites"].push_back(s);
  }
  return j.dump(2);
}

}  // namespace gandens
