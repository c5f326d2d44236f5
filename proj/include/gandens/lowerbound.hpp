#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

#include "gandens/divergence.hpp"

namespace gandens {

// Smooth bump supported exactly on the closed unit ball:
//   phi(x) = scale * exp(-1 / (1 - |x|^2)),  phi = 0 for |x| >= 1.
// With scale = e the maximum is phi(0) = 1 and -Hess phi(0) = 2 I.
struct BumpFunction {
  double scale = M_E;
  int dim = 1;
  double h_phi = 0.0;  // grid-estimated smoothness bound, used for r0

  double value(const Eigen::VectorXd& x) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const;
};

// Grid estimate of max(sup |phi|, sup |grad|, sup |Hess|, Lip(Hess)); a lower
// bound on the true smoothness norm.
double estimate_bump_smoothness(const BumpFunction& bump, int grid_res = 41);
BumpFunction make_bump(int dim);

struct PackingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Axis-aligned lattice in [1/3, 2/3]^d with spacing 2.2 h (> 2h separation);
// requires h < 1/12 so that at least two points fit per axis.
std::vector<Eigen::VectorXd> packing_centers(double h, int d);
// Real-valued lattice density (count per axis ~ 1/(6.6 h)), used when the
// integer lattice is evaluated as a function of a continuously varying h.
double packing_density(double h, int d);

struct FamilyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Perturbation family around the identity map: the INVERSE map is
//   x + h^beta sum_j theta_j grad phi((x - x_j)/h),
// so the log-density of the push-forward is the log-determinant of
//   A(x) = I + h^{beta-1} sum_j theta_j Hess phi((x - x_j)/h).
class PerturbedFamily {
 public:
  PerturbedFamily(double h, double beta, std::vector<Eigen::VectorXd> centers,
                  Eigen::VectorXd theta, BumpFunction bump, double lambda);

  double h() const { return h_; }
  double beta() const { return beta_; }
  int dim() const { return d_; }
  const std::vector<Eigen::VectorXd>& centers() const { return centers_; }
  const Eigen::VectorXd& theta() const { return theta_; }
  const BumpFunction& bump() const { return bump_; }
  double lambda() const { return lambda_; }

  Eigen::VectorXd inverse_map(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd curvature_matrix(const Eigen::VectorXd& x) const;  // A(x)
  // log det A(x); throws FamilyError if A(x) is not positive definite
  double log_density(const Eigen::VectorXd& x) const;
  double density(const Eigen::VectorXd& x) const;
  // d log p / d theta_j = h^{beta-1} tr(A(x)^{-1} Hess phi((x-x_j)/h))
  double score(const Eigen::VectorXd& x, int j) const;

  // smallest eigenvalue of A over a diagnostic grid; the family is valid when
  // this stays above 0.1
  double validity_margin(int grid_res = 33) const;

 private:
  double h_;
  double beta_;
  int d_;
  std::vector<Eigen::VectorXd> centers_;
  Eigen::VectorXd theta_;
  BumpFunction bump_;
  double lambda_;
};

struct FisherEstimate {
  std::vector<double> per_index;
  double total = 0.0;
  std::string quadrature_id;
};

// Per-index Fisher integrals over the bump balls (the integrand vanishes
// elsewhere); per-ball tensor grids with the given nodes per axis.
FisherEstimate fisher_information(const PerturbedFamily& fam, int nodes_per_axis = 64);

// Bayesian Cramer-Rao (van Trees) lower bound M^2 / (n * fisher_total + prior_energy).
double van_trees_rhs(double M, std::size_t n, double fisher_total, double prior_energy);

// Energy of the rescaled prior h^{-M} lambda0(theta/h): J = j0(M) * M / h^2
// with j0 the per-coordinate energy of a normalized bump prior on the unit
// ball of R^M, computed by Monte Carlo.
double prior_energy_coefficient(int M, std::size_t mc_points, std::uint64_t seed);

struct ScoreBoundReport {
  double r0 = 0.0;
  double min_abs_score = 0.0;
  double threshold = 0.0;  // h^{beta-1} d / 2
  bool precondition_ok = false;  // -Hess phi >= I/2 on the r0-ball
  bool pass = false;
};

// On each ball B(x_j, r0) with r0 = h / (2 (H_phi v 1)), the score magnitude
// must stay above h^{beta-1} d / 2.  If the curvature precondition fails the
// report flags it instead of asserting.
ScoreBoundReport score_lower_bound_check(const PerturbedFamily& fam, int grid_res = 21);

// h(n) = (1 / (n Lambda^d d^2))^{1/(2 beta + d)}
double bandwidth(std::size_t n, double beta, int d, double lambda);

// Assembled van Trees density lower bound at sample size n with h = bandwidth(n):
// the parametric bound multiplied by the density-separation factor
// h^{2 beta - 2 + d} / Lambda^{2d}.  The lattice density is evaluated as a
// real number and the per-coordinate prior energy is frozen at dimension
// m_ref, so the assembly scales exactly as in the closed-form analysis.
struct LowerBoundPoint {
  std::size_t n = 0;
  double h = 0.0;
  double m_density = 0.0;
  double fisher_per_center = 0.0;
  double prior_j0 = 0.0;
  double value = 0.0;
};

LowerBoundPoint assembled_lower_bound(std::size_t n, double beta, int d, double lambda,
                                      double prior_j0, int nodes_per_axis = 64);

}  // namespace gandens
