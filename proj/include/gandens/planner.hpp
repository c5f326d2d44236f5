#pragma once

#include <cstddef>

namespace gandens {

// Network sizing derived from the approximation-rate analysis: the grid
// parameter K grows like (n / log n)^{1/(2 beta + d)} (rounded to the nearest
// integer, floored at 2), depths depend only on (beta, d, H*), and the
// nonzero-weight budgets grow like (n / log n)^{d/(2 beta + d)}.  The budgets
// are ceilings: trained networks may use fewer nonzeros.
struct ArchPlan {
  int K = 2;
  int gen_hidden = 0;
  int gen_width = 0;
  long long gen_budget = 0;   // d_G: nonzero-weight budget = parameter dimension
  int disc_hidden = 0;
  int disc_width = 0;
  long long disc_budget = 0;  // d_D
  // echoed inputs
  std::size_t n = 0;
  double beta = 0.0;
  int d = 0;
  double h_star = 0.0;
  double h_g = 0.0;
  double lambda = 0.0;
};

// Sparsity constant of the approximation construction.
long long sparsity_constant(double beta, int d, double h);

ArchPlan plan_architecture(std::size_t n, double beta, int d, double h_star,
                           double h_g = -1.0, double lambda = 1.5);

}  // namespace gandens
