#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "gandens/divergence.hpp"
#include "gandens/gan.hpp"
#include "gandens/pushforward.hpp"
#include "gandens/requ_net.hpp"

namespace gandens {

// Closed-form constants entering the risk bounds.  All values are computed
// from the clamp range, the network architectures, and the declared
// smoothness/regularity bounds.
struct ConstantsBundle {
  double c_eps_net = 0.0;  // l_G l_X / (2 - 2 d_max) + l_Theta / (d_min ^ (1 - d_max))
  double c_var = 0.0;      // variance constant of the concentration bound
  double c_d = 0.0;        // sup bound on |log D| and |log(1 - D)|
  double c_delta = 0.0;    // curvature constant of the discriminator-gap sandwich
  double l_g = 0.0;        // parameter-Lipschitz coefficient of the generator class
  double l_theta = 0.0;    // parameter-Lipschitz coefficient of the discriminator class
  double l_x = 0.0;        // input-Lipschitz bound of the discriminator class (= H_D)
  double l_p = 0.0;        // parameter-Lipschitz coefficient of the push-forward density
};

// Parameter-Lipschitz coefficient (N+1) 2^N prod_{p in A} (p+1)^{2^N} over
// the full width vector.
double class_lipschitz_coeff(const Architecture& arch);

// Sup-norm bound on the output of every parameter-constrained network of the
// given shape over the unit cube.
double class_range_bound(const Architecture& arch);

// Input-Lipschitz bound valid for every clamped discriminator of the given
// shape with parameters in [-1,1], on inputs of sup-norm up to K.
double disc_class_input_lipschitz(const Architecture& disc_arch, double d_min, double d_max,
                                  double K);

ConstantsBundle constants(double d_min, double d_max, const Architecture& gen_arch,
                          const Architecture& disc_arch, double h_d, int d, double lambda,
                          double h_g);

// Gap functional Delta(w, theta) = JS(p_w, p_star) - log 2 - L(w, theta),
// computed with a single quadrature rule so the integrand stays pointwise
// nonnegative.
double delta_gap(const RequNet& gen, const ClampedDiscriminator& disc, const DensityFn& p_star,
                 double lambda, const QuadratureScheme& quad);

struct OracleTerms {
  double delta_g = 0.0;  // min over the generator grid of JS(p_w, p_star)
  double delta_d = 0.0;  // max over the grid of the optimized discriminator gap
  std::string grid_spec;
};

struct DiscOptimizerConfig {
  int starts = 8;
  int steps = 60;
  double lr = 0.5;
};

// Approximation terms over a finite generator grid; the inner minimization
// over discriminators runs multistart gradient ascent on the population loss,
// so delta_d is reported as an upper bound on the exact value.  Generators
// whose density evaluation fails are skipped and recorded in grid_spec.
OracleTerms delta_terms(const std::vector<RequNet>& gen_grid, const Architecture& disc_arch,
                        double d_min, double d_max, const DensityFn& p_star, double lambda,
                        const QuadratureScheme& quad, const DiscOptimizerConfig& opt,
                        std::uint64_t seed);

struct GapSandwichReport {
  double lower = 0.0;  // squared L2(p_star + p_w) distance to the ratio discriminator
  double gap = 0.0;
  double upper = 0.0;  // curvature-weighted squared distance
  double slack = 0.0;
  bool pass = false;
};

// Quadratic sandwich for the discriminator gap:
//   |D* - D|^2_{L2(p*+p_w)} <= Delta(w,theta) <= C^2 / ((C-1)^2 d_min (1-d_max)) |D* - D|^2.
GapSandwichReport delta_gap_sandwich_check(const RequNet& gen, const ClampedDiscriminator& disc,
                                           const DensityFn& p_star, double lambda,
                                           const QuadratureScheme& quad, double c_delta,
                                           double d_min, double d_max);

// Concentration bound on |L_n - L|:
//   sqrt(c_var (9 JS + Delta) log(2/delta) / (2n)) + 2 c_d log(2/delta) / (3n).
double bernstein_rhs(double js_value, double delta_value, std::size_t n, double confidence_delta,
                     const ConstantsBundle& bundle);

// Uniform (net-augmented) deviation bound at discretization scale eps.
double uniform_bound_rhs(double eps, std::size_t n, double confidence_delta, int d_g, int d_d,
                         double js_value, double delta_value, const ConstantsBundle& bundle);
// Discretization scale used by the oracle-rate argument.
double default_eps_net(std::size_t n, double confidence_delta, int d_g, int d_d,
                       const ConstantsBundle& bundle);

struct ConcentrationCheckConfig {
  int replicates = 10000;
  double confidence_delta = 0.05;
  std::size_t n = 500;
  double eps_net = 0.0;  // echoed in the report; 0 means "use default_eps_net"
  std::uint64_t seed = 1;

  void validate() const;
};

struct ConcentrationReport {
  double quantile = 0.0;       // empirical (1 - delta)-quantile of |L_n - L|
  double bound = 0.0;          // bernstein_rhs at the same level
  double js = 0.0;
  double gap = 0.0;
  double population = 0.0;     // L(w, theta)
  double eps_net = 0.0;
  double uniform_bound = 0.0;  // deviation bound at eps_net
  bool resolution_warning = false;  // replicates * delta < 10
  bool pass = false;
};

// Draws R independent datasets of size n from the push-forward of g_star,
// computes |L_n - L| for each (replicates run concurrently on independent
// streams), and compares the empirical quantile against the bound.
ConcentrationReport concentration_monte_carlo(const RequNet& gen, const ClampedDiscriminator& disc,
                                              const DiffMap& g_star, const DensityFn& p_star,
                                              double lambda, const QuadratureScheme& quad,
                                              const ConstantsBundle& bundle,
                                              const ConcentrationCheckConfig& config);

struct LipschitzCheckReport {
  int pairs = 0;
  int violations = 0;
  double worst_ratio = 0.0;  // observed deviation / bound
  bool pass = false;
};

// Loss Lipschitzness in each parameter block:
//   |L_n(w1,t) - L_n(w2,t)| <= l_G l_X |w1-w2|_inf / (2 - 2 d_max)
//   |L_n(w,t1) - L_n(w,t2)| <= l_Theta |t1-t2|_inf / (d_min ^ (1 - d_max)).
LipschitzCheckReport loss_lipschitz_check(const Architecture& gen_arch,
                                          const Architecture& disc_arch, double d_min, double d_max,
                                          const Dataset& data, const ConstantsBundle& bundle,
                                          int pairs, std::uint64_t seed);

// Structural right side of the oracle inequality (unit leading constant):
//   sqrt((dG+dD) log-term (delta_g+delta_d) / n) + log-term / n.
double oracle_rhs(const OracleTerms& terms, int d_g, int d_d, std::size_t n,
                  double confidence_delta, const ConstantsBundle& bundle);

}  // namespace gandens
