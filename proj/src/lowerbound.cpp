#include "gandens/lowerbound.hpp"

#include <cmath>

#include "gandens/rng.hpp"

namespace gandens {

double BumpFunction::value(const Eigen::VectorXd& x) const {
  double u = x.squaredNorm();
  if (u >= 1.0) return 0.0;
  return scale * std::exp(-1.0 / (1.0 - u));
}

Eigen::VectorXd BumpFunction::gradient(const Eigen::VectorXd& x) const {
  double u = x.squaredNorm();
  if (u >= 1.0) return Eigen::VectorXd::Zero(x.size());
  double w = 1.0 - u;
  return value(x) * (-2.0 / (w * w)) * x;
}

Eigen::MatrixXd BumpFunction::hessian(const Eigen::VectorXd& x) const {
  int d = static_cast<int>(x.size());
  double u = x.squaredNorm();
  if (u >= 1.0) return Eigen::MatrixXd::Zero(d, d);
  double w = 1.0 - u;
  double v = value(x);
  Eigen::VectorXd g = (-2.0 / (w * w)) * x;  // gradient of -1/(1-u)
  // Hess phi = phi (g g^T + Hess of the exponent)
  Eigen::MatrixXd hess_exp = (-2.0 / (w * w)) * Eigen::MatrixXd::Identity(d, d) -
                             (8.0 / (w * w * w)) * (x * x.transpose());
  return v * (g * g.transpose() + hess_exp);
}

double estimate_bump_smoothness(const BumpFunction& bump, int grid_res) {
  // lattice over [-1,1]^d restricted to the ball
  const int d = bump.dim;
  std::vector<Eigen::VectorXd> pts;
  std::vector<int> idx(d, 0);
  std::size_t total = 1;
  for (int k = 0; k < d; ++k) total *= grid_res;
  for (std::size_t t = 0; t < total; ++t) {
    Eigen::VectorXd x(d);
    for (int k = 0; k < d; ++k) x[k] = -1.0 + 2.0 * idx[k] / (grid_res - 1);
    if (x.squaredNorm() < 1.0) pts.push_back(x);
    for (int k = d - 1; k >= 0; --k) {
      if (++idx[k] < grid_res) break;
      idx[k] = 0;
    }
  }
  double bound = 0.0;
  std::vector<Eigen::MatrixXd> hessians(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bound = std::max(bound, std::abs(bump.value(pts[i])));
    bound = std::max(bound, bump.gradient(pts[i]).cwiseAbs().maxCoeff());
    hessians[i] = bump.hessian(pts[i]);
    bound = std::max(bound, hessians[i].cwiseAbs().maxCoeff());
  }
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      double dist = (pts[i] - pts[j]).norm();
      if (dist < 1e-12) continue;
      double diff = (hessians[i] - hessians[j]).cwiseAbs().maxCoeff();
      bound = std::max(bound, diff / dist);
    }
  }
  return bound;
}

BumpFunction make_bump(int dim) {
  BumpFunction bump;
  bump.dim = dim;
  bump.scale = M_E;
  bump.h_phi = estimate_bump_smoothness(bump, dim == 1 ? 81 : 21);
  return bump;
}

std::vector<Eigen::VectorXd> packing_centers(double h, int d) {
  if (h <= 0.0) throw std::invalid_argument("packing_centers: h must be positive");
  if (h >= 1.0 / 12.0) {
    throw PackingError("packing_centers: h too large, interval cannot hold a 2h-separated pair");
  }
  double spacing = 2.2 * h;
  std::vector<double> axis;
  for (double x = 1.0 / 3.0; x <= 2.0 / 3.0 + 1e-15; x += spacing) axis.push_back(x);
  std::vector<Eigen::VectorXd> out;
  std::vector<std::size_t> idx(d, 0);
  std::size_t per_axis = axis.size();
  std::size_t total = 1;
  for (int k = 0; k < d; ++k) total *= per_axis;
  out.reserve(total);
  for (std::size_t t = 0; t < total; ++t) {
    Eigen::VectorXd c(d);
    for (int k = 0; k < d; ++k) c[k] = axis[idx[k]];
    out.push_back(std::move(c));
    for (int k = d - 1; k >= 0; --k) {
      if (++idx[k] < per_axis) break;
      idx[k] = 0;
    }
  }
  return out;
}

double packing_density(double h, int d) {
  return std::pow(1.0 / (6.6 * h), d);
}

PerturbedFamily::PerturbedFamily(double h, double beta, std::vector<Eigen::VectorXd> centers,
                                 Eigen::VectorXd theta, BumpFunction bump, double lambda)
    : h_(h), beta_(beta), centers_(std::move(centers)), theta_(std::move(theta)),
      bump_(std::move(bump)), lambda_(lambda) {
  if (h_ <= 0.0) throw std::invalid_argument("PerturbedFamily: h must be positive");
  if (beta_ <= 2.0) throw std::invalid_argument("PerturbedFamily: beta must exceed 2");
  if (centers_.empty()) throw std::invalid_argument("PerturbedFamily: no centers");
  d_ = static_cast<int>(centers_.front().size());
  if (theta_.size() != static_cast<int>(centers_.size())) {
    throw std::invalid_argument("PerturbedFamily: theta length must match center count");
  }
  if (theta_.norm() > h_ + 1e-12) {
    throw std::invalid_argument("PerturbedFamily: |theta| must not exceed h");
  }
  for (std::size_t i = 0; i < centers_.size(); ++i) {
    for (std::size_t j = i + 1; j < centers_.size(); ++j) {
      if ((centers_[i] - centers_[j]).norm() <= 2.0 * h_) {
        throw std::invalid_argument("PerturbedFamily: centers not 2h-separated");
      }
    }
  }
}

Eigen::VectorXd PerturbedFamily::inverse_map(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out = x;
  double hb = std::pow(h_, beta_);
  for (std::size_t j = 0; j < centers_.size(); ++j) {
    Eigen::VectorXd u = (x - centers_[j]) / h_;
    if (u.squaredNorm() >= 1.0) continue;
    out += hb * theta_[j] * bump_.gradient(u);
  }
  return out;
}

Eigen::MatrixXd PerturbedFamily::curvature_matrix(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(d_, d_);
  double hb1 = std::pow(h_, beta_ - 1.0);
  for (std::size_t j = 0; j < centers_.size(); ++j) {
    Eigen::VectorXd u = (x - centers_[j]) / h_;
    if (u.squaredNorm() >= 1.0) continue;
    A += hb1 * theta_[j] * bump_.hessian(u);
  }
  return A;
}

double PerturbedFamily::log_density(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd A = curvature_matrix(x);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A);
  double out = 0.0;
  for (int i = 0; i < d_; ++i) {
    double ev = eig.eigenvalues()[i];
    if (ev <= 0.0) throw FamilyError("log_density: curvature matrix not positive definite");
    out += std::log(ev);
  }
  return out;
}

double PerturbedFamily::density(const Eigen::VectorXd& x) const {
  return std::exp(log_density(x));
}

double PerturbedFamily::score(const Eigen::VectorXd& x, int j) const {
  if (j < 0 || j >= static_cast<int>(centers_.size())) {
    throw std::invalid_argument("score: index out of range");
  }
  Eigen::VectorXd u = (x - centers_[j]) / h_;
  if (u.squaredNorm() >= 1.0) return 0.0;
  Eigen::MatrixXd A = curvature_matrix(x);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  if (std::abs(lu.determinant()) < 1e-12) throw FamilyError("score: singular curvature matrix");
  return std::pow(h_, beta_ - 1.0) * lu.solve(bump_.hessian(u)).trace();
}

double PerturbedFamily::validity_margin(int grid_res) const {
  double min_eig = std::numeric_limits<double>::infinity();
  // the matrix differs from the identity only inside the balls
  for (std::size_t j = 0; j < centers_.size(); ++j) {
    for (int t = 0; t < grid_res; ++t) {
      for (int axis = 0; axis < d_; ++axis) {
        Eigen::VectorXd x = centers_[j];
        x[axis] += -h_ + 2.0 * h_ * t / (grid_res - 1);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(curvature_matrix(x));
        min_eig = std::min(min_eig, eig.eigenvalues().minCoeff());
      }
    }
  }
  return std::min(min_eig, 1.0);  // outside the balls A = I
}

FisherEstimate fisher_information(const PerturbedFamily& fam, int nodes_per_axis) {
  FisherEstimate est;
  est.quadrature_id = "ball-gl" + std::to_string(nodes_per_axis);
  const int d = fam.dim();
  std::vector<double> n1, w1;
  gauss_legendre_01(nodes_per_axis, n1, w1);
  est.per_index.resize(fam.centers().size(), 0.0);
  for (std::size_t j = 0; j < fam.centers().size(); ++j) {
    // tensor grid over the bounding box of B(x_j, h), indicator-restricted
    const Eigen::VectorXd& c = fam.centers()[j];
    std::vector<int> idx(d, 0);
    std::size_t total = 1;
    for (int k = 0; k < d; ++k) total *= nodes_per_axis;
    double acc = 0.0;
    for (std::size_t t = 0; t < total; ++t) {
      Eigen::VectorXd x(d);
      double w = 1.0;
      for (int k = 0; k < d; ++k) {
        x[k] = c[k] + fam.h() * (2.0 * n1[idx[k]] - 1.0);
        w *= 2.0 * fam.h() * w1[idx[k]];
      }
      if ((x - c).squaredNorm() < fam.h() * fam.h()) {
        double s = fam.score(x, static_cast<int>(j));
        acc += w * s * s * fam.density(x);
      }
      for (int k = d - 1; k >= 0; --k) {
        if (++idx[k] < nodes_per_axis) break;
        idx[k] = 0;
      }
    }
    est.per_index[j] = acc;
    est.total += acc;
  }
  return est;
}

double van_trees_rhs(double M, std::size_t n, double fisher_total, double prior_energy) {
  double denom = static_cast<double>(n) * fisher_total + prior_energy;
  if (denom <= 0.0) throw std::invalid_argument("van_trees_rhs: degenerate denominator");
  return M * M / denom;
}

double prior_energy_coefficient(int M, std::size_t mc_points, std::uint64_t seed) {
  if (M < 1) throw std::invalid_argument("prior_energy_coefficient: M must be positive");
  // lambda0 = bump / Z on the unit ball of R^M;
  // per-coordinate energy = (1/M) * (1/Z) int |grad bump|^2 / bump.
  BumpFunction bump;
  bump.dim = M;
  Rng rng(seed);
  double vol_ball = std::pow(M_PI, 0.5 * M) / std::tgamma(0.5 * M + 1.0);
  double sum_mass = 0.0, sum_energy = 0.0;
  for (std::size_t i = 0; i < mc_points; ++i) {
    // uniform point in the ball: normalized Gaussian direction, radius u^{1/M}
    Eigen::VectorXd g(M);
    for (int k = 0; k < M; ++k) g[k] = rng.normal();
    double norm = g.norm();
    if (norm < 1e-14) continue;
    double r = std::pow(rng.uniform01(), 1.0 / M);
    Eigen::VectorXd x = (r / norm) * g;
    double b = bump.value(x);
    sum_mass += b;
    if (b > 1e-300) sum_energy += bump.gradient(x).squaredNorm() / b;
  }
  double z = vol_ball * sum_mass / mc_points;
  double energy = vol_ball * sum_energy / mc_points;
  return energy / (z * M);
}

ScoreBoundReport score_lower_bound_check(const PerturbedFamily& fam, int grid_res) {
  ScoreBoundReport rep;
  const int d = fam.dim();
  double h_phi = std::max(fam.bump().h_phi, 1.0);
  rep.r0 = fam.h() / (2.0 * h_phi);
  rep.threshold = std::pow(fam.h(), fam.beta() - 1.0) * d / 2.0;
  rep.min_abs_score = std::numeric_limits<double>::infinity();
  // smallness threshold: the perturbation series needs H_phi h^beta < 1
  rep.precondition_ok = fam.h() < std::pow(h_phi, -1.0 / fam.beta());

  for (std::size_t j = 0; j < fam.centers().size(); ++j) {
    const Eigen::VectorXd& c = fam.centers()[j];
    std::vector<int> idx(d, 0);
    std::size_t total = 1;
    for (int k = 0; k < d; ++k) total *= grid_res;
    for (std::size_t t = 0; t < total; ++t) {
      Eigen::VectorXd x(d);
      for (int k = 0; k < d; ++k) {
        x[k] = c[k] + rep.r0 * (2.0 * idx[k] / (grid_res - 1.0) - 1.0);
      }
      if ((x - c).norm() <= rep.r0) {
        Eigen::VectorXd u = (x - c) / fam.h();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(-fam.bump().hessian(u));
        if (eig.eigenvalues().minCoeff() < 0.5) rep.precondition_ok = false;
        rep.min_abs_score = std::min(rep.min_abs_score,
                                     std::abs(fam.score(x, static_cast<int>(j))));
      }
      for (int k = d - 1; k >= 0; --k) {
        if (++idx[k] < grid_res) break;
        idx[k] = 0;
      }
    }
  }
  rep.pass = rep.precondition_ok && rep.min_abs_score >= rep.threshold;
  return rep;
}

double bandwidth(std::size_t n, double beta, int d, double lambda) {
  if (n < 1) throw std::invalid_argument("bandwidth: n must be positive");
  double base = 1.0 / (static_cast<double>(n) * std::pow(lambda, d) * d * d);
  return std::pow(base, 1.0 / (2.0 * beta + d));
}

LowerBoundPoint assembled_lower_bound(std::size_t n, double beta, int d, double lambda,
                                      double prior_j0, int nodes_per_axis) {
  LowerBoundPoint pt;
  pt.n = n;
  pt.h = bandwidth(n, beta, d, lambda);
  pt.m_density = packing_density(pt.h, d);
  pt.prior_j0 = prior_j0;

  // Fisher integral of a single centered bump at theta = 0; the center's
  // position does not matter, only the scale h.
  BumpFunction bump = make_bump(d);
  std::vector<Eigen::VectorXd> center{Eigen::VectorXd::Constant(d, 0.5)};
  PerturbedFamily fam(pt.h, beta, center, Eigen::VectorXd::Zero(1), bump, lambda);
  pt.fisher_per_center = fisher_information(fam, nodes_per_axis).per_index[0];

  double fisher_total = pt.m_density * pt.fisher_per_center;
  double prior_energy = prior_j0 * pt.m_density / (pt.h * pt.h);
  double separation = std::pow(pt.h, 2.0 * beta - 2.0 + d) / std::pow(lambda, 2.0 * d);
  pt.value = separation * van_trees_rhs(pt.m_density, n, fisher_total, prior_energy);
  return pt;
}

}  // namespace gandens
