#include "gandens/pushforward.hpp"

#include <cmath>
#include <fstream>
#include <vector>

namespace gandens {

namespace {

constexpr double kSingularDet = 1e-12;

Eigen::VectorXd clamp_cube(Eigen::VectorXd y) {
  for (int i = 0; i < y.size(); ++i) y[i] = std::min(1.0, std::max(0.0, y[i]));
  return y;
}

std::vector<double> axis_grid(int res) {
  std::vector<double> g(res);
  for (int i = 0; i < res; ++i) g[i] = res == 1 ? 0.5 : static_cast<double>(i) / (res - 1);
  return g;
}

// All lattice points of a res^d grid on the cube.
std::vector<Eigen::VectorXd> cube_grid(int d, int res) {
  std::vector<double> ax = axis_grid(res);
  std::vector<Eigen::VectorXd> out;
  std::size_t total = 1;
  for (int k = 0; k < d; ++k) total *= res;
  out.reserve(total);
  std::vector<int> idx(d, 0);
  for (std::size_t t = 0; t < total; ++t) {
    Eigen::VectorXd x(d);
    for (int k = 0; k < d; ++k) x[k] = ax[idx[k]];
    out.push_back(std::move(x));
    for (int k = d - 1; k >= 0; --k) {
      if (++idx[k] < res) break;
      idx[k] = 0;
    }
  }
  return out;
}

}  // namespace

RequMap::RequMap(RequNet net) : net_(std::move(net)) {
  if (net_.arch().input_dim() != net_.arch().output_dim()) {
    throw std::invalid_argument("RequMap: generator must have equal input/output width");
  }
}

Eigen::VectorXd SineMap::value(const Eigen::VectorXd& y) const {
  Eigen::VectorXd out(d_);
  for (int i = 0; i < d_; ++i) out[i] = y[i] - amplitude_ * std::sin(2.0 * M_PI * y[i]);
  return out;
}

Eigen::MatrixXd SineMap::jacobian(const Eigen::VectorXd& y) const {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(d_, d_);
  for (int i = 0; i < d_; ++i) J(i, i) = 1.0 - 2.0 * M_PI * amplitude_ * std::cos(2.0 * M_PI * y[i]);
  return J;
}

PushforwardDensity::PushforwardDensity(std::shared_ptr<const DiffMap> map, double lambda_bound,
                                       InversionConfig inversion)
    : map_(std::move(map)), lambda_(lambda_bound), inv_(inversion) {
  inv_.validate();
  if (lambda_ <= 1.0) throw std::invalid_argument("PushforwardDensity: lambda bound must exceed 1");
}

Eigen::VectorXd PushforwardDensity::invert(const Eigen::VectorXd& x) const {
  const int d = map_->dim();
  if (x.size() != d) throw std::invalid_argument("invert: dimension mismatch");

  Eigen::VectorXd y = clamp_cube(x);
  double residual = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < inv_.max_iterations; ++iter) {
    Eigen::VectorXd r = map_->value(y) - x;
    residual = r.lpNorm<Eigen::Infinity>();
    if (residual <= inv_.tolerance) return y;
    Eigen::MatrixXd J = map_->jacobian(y);
    double det = J.determinant();
    if (std::abs(det) < kSingularDet) {
      throw RegularityError("invert: singular Jacobian encountered");
    }
    y = clamp_cube(y - inv_.damping * J.partialPivLu().solve(r));
  }
  // Monotone scalar fallback: 40 bisection steps.
  if (d == 1) {
    double sign = map_->jacobian(Eigen::VectorXd::Constant(1, 0.5))(0, 0) >= 0.0 ? 1.0 : -1.0;
    double lo = 0.0, hi = 1.0;
    for (int step = 0; step < 40; ++step) {
      double mid = 0.5 * (lo + hi);
      double v = sign * (map_->value(Eigen::VectorXd::Constant(1, mid))[0] - x[0]);
      if (v < 0.0)
        lo = mid;
      else
        hi = mid;
    }
    Eigen::VectorXd yb = Eigen::VectorXd::Constant(1, 0.5 * (lo + hi));
    double res_b = (map_->value(yb) - x).lpNorm<Eigen::Infinity>();
    if (res_b <= inv_.tolerance) return yb;
    residual = std::min(residual, res_b);
  }
  throw InversionError("invert: no convergence", residual, inv_.max_iterations);
}

double PushforwardDensity::density(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y = invert(x);
  double det = map_->jacobian(y).determinant();
  if (std::abs(det) < kSingularDet) throw RegularityError("density: singular Jacobian at preimage");
  return 1.0 / std::abs(det);
}

double PushforwardDensity::density_general(const DensityFn& latent, const Eigen::VectorXd& x) const {
  Eigen::VectorXd y = invert(x);
  double det = map_->jacobian(y).determinant();
  if (std::abs(det) < kSingularDet) throw RegularityError("density_general: singular Jacobian");
  return latent(y) / std::abs(det);
}

double PushforwardDensity::density_or_zero(const Eigen::VectorXd& x) const {
  try {
    return density(x);
  } catch (const InversionError&) {
    return 0.0;
  }
}

DensityFn PushforwardDensity::as_fn() const {
  return [this](const Eigen::VectorXd& x) { return density(x); };
}

DensityFn PushforwardDensity::as_fn_zero_extended() const {
  return [this](const Eigen::VectorXd& x) { return density_or_zero(x); };
}

GeneratorDensity::GeneratorDensity(std::shared_ptr<const RequMap> m, double lambda_bound,
                                   InversionConfig inv)
    : PushforwardDensity(m, lambda_bound, inv), requ_(std::move(m)) {}

GeneratorDensity::GeneratorDensity(RequNet net, double lambda_bound, InversionConfig inversion)
    : GeneratorDensity(std::make_shared<const RequMap>(std::move(net)), lambda_bound, inversion) {}

std::pair<double, double> density_bounds(double lambda, int d) {
  if (lambda <= 1.0) throw std::invalid_argument("density_bounds: lambda must exceed 1");
  return {std::pow(lambda, -d), std::pow(lambda, d)};
}

double density_lipschitz_constant(int d, double lambda, double h_g) {
  if (lambda <= 1.0) throw std::invalid_argument("density_lipschitz_constant: lambda must exceed 1");
  return std::pow(d, 2.0 + 0.5 * d) * std::pow(lambda, 3.0 * d) *
         (1.0 + h_g * lambda * std::sqrt(static_cast<double>(d)));
}

HolderEstimate holder_diagnostics(const DiffMap& g, double lambda_bound, double order,
                                  int grid_res) {
  if (grid_res < 2) throw std::invalid_argument("holder_diagnostics: grid too coarse");
  if (order != 1.0 && order != 2.0) throw std::invalid_argument("holder_diagnostics: order must be 1 or 2");
  const int d = g.dim();
  HolderEstimate est;
  est.order = order;
  est.grid_resolution = grid_res;

  auto grid = cube_grid(d, grid_res);
  std::vector<Eigen::VectorXd> values(grid.size());
  std::vector<Eigen::MatrixXd> jacs(grid.size());
  est.range_ok = true;
  est.min_singular = std::numeric_limits<double>::infinity();
  est.max_singular = 0.0;
  double max_value = 0.0, max_deriv = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    values[i] = g.value(grid[i]);
    jacs[i] = g.jacobian(grid[i]);
    for (int k = 0; k < d; ++k) {
      if (values[i][k] < -1e-12 || values[i][k] > 1.0 + 1e-12) est.range_ok = false;
      max_value = std::max(max_value, std::abs(values[i][k]));
    }
    max_deriv = std::max(max_deriv, jacs[i].cwiseAbs().maxCoeff());
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(jacs[i]);
    est.min_singular = std::min(est.min_singular, svd.singularValues().minCoeff());
    est.max_singular = std::max(est.max_singular, svd.singularValues().maxCoeff());
  }
  est.lambda_ok = est.min_singular >= 1.0 / lambda_bound - 1e-9 &&
                  est.max_singular <= lambda_bound + 1e-9;

  // Holder quotient of the top derivatives over all grid pairs.
  double quotient = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j = i + 1; j < grid.size(); ++j) {
      double dist = std::min(1.0, (grid[i] - grid[j]).norm());
      if (dist <= 0.0) continue;
      double diff = order == 1.0 ? (values[i] - values[j]).cwiseAbs().maxCoeff()
                                 : (jacs[i] - jacs[j]).cwiseAbs().maxCoeff();
      quotient = std::max(quotient, diff / dist);
    }
  }
  if (order == 2.0) {
    // central differences of the analytic Jacobian give the second derivatives
    const double step = 1e-4;
    double max_second = 0.0;
    for (const auto& x : grid) {
      for (int k = 0; k < d; ++k) {
        if (x[k] - step < 0.0 || x[k] + step > 1.0) continue;
        Eigen::VectorXd xp = x, xm = x;
        xp[k] += step;
        xm[k] -= step;
        Eigen::MatrixXd dJ = (g.jacobian(xp) - g.jacobian(xm)) / (2.0 * step);
        max_second = std::max(max_second, dJ.cwiseAbs().maxCoeff());
      }
    }
    quotient = std::max(quotient, max_second);
  }
  est.holder_quotient = quotient;
  est.c_s_norm = order == 1.0 ? max_value : std::max(max_value, max_deriv);
  return est;
}

void write_density_csv(const DensityFn& p, int dim, int grid_res, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_density_csv: cannot open " + path);
  for (int k = 0; k < dim; ++k) out << "x" << (k + 1) << ",";
  out << "p\n";
  for (const auto& x : cube_grid(dim, grid_res)) {
    for (int k = 0; k < dim; ++k) out << x[k] << ",";
    out << p(x) << "\n";
  }
}

}  // namespace gandens
