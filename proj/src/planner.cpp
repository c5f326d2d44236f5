#include "gandens/planner.hpp"

#include <cmath>
#include <stdexcept>

namespace gandens {

namespace {

double log2_clamped(double x) { return std::log2(x); }

// ceil(max(log2(a), log2(log2(h)))) v 1
int depth_log_term(double a, double h) {
  double inner = log2_clamped(a);
  if (h > 1.0) inner = std::max(inner, log2_clamped(log2_clamped(h)));
  int up = static_cast<int>(std::ceil(inner - 1e-12));
  return std::max(up, 1);
}

}  // namespace

long long sparsity_constant(double beta, int d, double h) {
  int fb = static_cast<int>(std::floor(beta));
  long long head = 60LL * depth_log_term(2.0 * d * fb + d, h) + 38;
  return head + 20LL * d * d + 144LL * d * fb + 8LL * d;
}

ArchPlan plan_architecture(std::size_t n, double beta, int d, double h_star, double h_g,
                           double lambda) {
  if (n < 3) throw std::invalid_argument("plan_architecture: n must be at least 3");
  if (beta <= 2.0) throw std::invalid_argument("plan_architecture: beta must exceed 2");
  if (d < 1) throw std::invalid_argument("plan_architecture: d must be positive");
  if (h_star <= 0.0) throw std::invalid_argument("plan_architecture: h_star must be positive");

  ArchPlan plan;
  plan.n = n;
  plan.beta = beta;
  plan.d = d;
  plan.h_star = h_star;
  plan.h_g = h_g > 0.0 ? h_g : 2.0 * h_star;
  plan.lambda = lambda;

  const int fb = static_cast<int>(std::floor(beta));
  double ratio = std::ceil(static_cast<double>(n) / std::log(static_cast<double>(n)));
  double k_real = std::pow(ratio, 1.0 / (2.0 * beta + d));
  plan.K = std::max(2, static_cast<int>(std::llround(k_real)));

  int ceil_log2_d = static_cast<int>(std::ceil(log2_clamped(d) - 1e-12));
  plan.gen_hidden = 6 + 2 * (fb - 1) + ceil_log2_d + 2 * depth_log_term(2.0 * d * fb + 3.0 * d, h_star);
  plan.disc_hidden = 6 + 2 * (fb - 2) + ceil_log2_d + 2 * depth_log_term(2.0 * d * fb + d, h_star);

  double gen_cells = std::pow(static_cast<double>(plan.K + fb + 1), d);
  double disc_cells = std::pow(static_cast<double>(plan.K + fb), d);
  plan.gen_width = static_cast<int>(
      std::max({4.0 * d * gen_cells, 12.0 * (plan.K + 2.0 * fb + 3.0), static_cast<double>(d)}));
  plan.disc_width = static_cast<int>(
      std::max({4.0 * d * disc_cells, 12.0 * (plan.K + 2.0 * fb + 1.0), 1.0}));

  plan.gen_budget = sparsity_constant(beta + 1.0, d, h_star) * d *
                    static_cast<long long>(gen_cells);
  plan.disc_budget = sparsity_constant(beta, d, h_star) * static_cast<long long>(disc_cells);
  return plan;
}

}  // namespace gandens
