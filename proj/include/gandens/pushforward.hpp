#pragma once

#include <Eigen/Dense>
#include <memory>
#include <stdexcept>
#include <string>

#include "gandens/divergence.hpp"
#include "gandens/requ_net.hpp"

namespace gandens {

// Differentiable map of the unit cube; implemented by ReQU networks and by
// analytic maps used as ground truths.
class DiffMap {
 public:
  virtual ~DiffMap() = default;
  virtual int dim() const = 0;
  virtual Eigen::VectorXd value(const Eigen::VectorXd& y) const = 0;
  virtual Eigen::MatrixXd jacobian(const Eigen::VectorXd& y) const = 0;
};

class RequMap final : public DiffMap {
 public:
  explicit RequMap(RequNet net);
  int dim() const override { return net_.arch().input_dim(); }
  Eigen::VectorXd value(const Eigen::VectorXd& y) const override { return net_.forward(y); }
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& y) const override { return net_.jacobian(y); }
  const RequNet& net() const { return net_; }

 private:
  RequNet net_;
};

// y_i - amplitude * sin(2 pi y_i) per axis; a bijection of [0,1]^d for
// |amplitude| < 1/(2 pi).
class SineMap final : public DiffMap {
 public:
  SineMap(int d, double amplitude) : d_(d), amplitude_(amplitude) {}
  int dim() const override { return d_; }
  Eigen::VectorXd value(const Eigen::VectorXd& y) const override;
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& y) const override;

 private:
  int d_;
  double amplitude_;
};

class IdentityMap final : public DiffMap {
 public:
  explicit IdentityMap(int d) : d_(d) {}
  int dim() const override { return d_; }
  Eigen::VectorXd value(const Eigen::VectorXd& y) const override { return y; }
  Eigen::MatrixXd jacobian(const Eigen::VectorXd&) const override {
    return Eigen::MatrixXd::Identity(d_, d_);
  }

 private:
  int d_;
};

struct InversionConfig {
  double tolerance = 1e-10;
  int max_iterations = 100;
  double damping = 1.0;  // in (0, 1]

  void validate() const {
    if (tolerance <= 0.0) throw std::invalid_argument("InversionConfig: tolerance must be positive");
    if (max_iterations < 1) throw std::invalid_argument("InversionConfig: need at least one iteration");
    if (damping <= 0.0 || damping > 1.0) throw std::invalid_argument("InversionConfig: damping in (0,1]");
  }
};

struct InversionError : std::runtime_error {
  InversionError(const std::string& msg, double res, int iters)
      : std::runtime_error(msg), residual(res), iterations(iters) {}
  double residual;
  int iterations;
};

struct RegularityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Density of g(Y) for Y uniform on [0,1]^d:  p(x) = |det Dg(g^{-1}(x))|^{-1}.
// Inversion is damped Newton started at x with iterates projected onto the
// cube; in one dimension a bisection fallback covers Newton failures for
// monotone maps.
class PushforwardDensity {
 public:
  PushforwardDensity(std::shared_ptr<const DiffMap> map, double lambda_bound,
                     InversionConfig inversion = {});

  const DiffMap& map() const { return *map_; }
  double lambda_bound() const { return lambda_; }
  const InversionConfig& inversion() const { return inv_; }

  Eigen::VectorXd invert(const Eigen::VectorXd& x) const;
  double density(const Eigen::VectorXd& x) const;
  // Push-forward of a non-uniform latent density phi.
  double density_general(const DensityFn& latent, const Eigen::VectorXd& x) const;

  // Zero off the image: points the inversion cannot reach (the projected
  // iteration stalls at the cube boundary with a residual) carry no mass.
  // Exact for monotone scalar maps; maps of the cube onto itself never take
  // this branch.
  double density_or_zero(const Eigen::VectorXd& x) const;

  DensityFn as_fn() const;
  DensityFn as_fn_zero_extended() const;

 private:
  std::shared_ptr<const DiffMap> map_;
  double lambda_;
  InversionConfig inv_;
};

// ReQU-generator push-forward; requires square input/output width d.
class GeneratorDensity : public PushforwardDensity {
 public:
  GeneratorDensity(RequNet net, double lambda_bound, InversionConfig inversion = {});
  const RequNet& net() const { return requ_->net(); }

 private:
  std::shared_ptr<const RequMap> requ_;
  GeneratorDensity(std::shared_ptr<const RequMap> m, double lambda_bound, InversionConfig inv);
};

// Density envelope (Lambda^{-d}, Lambda^{d}) for a Lambda-regular map;
// requires Lambda > 1.
std::pair<double, double> density_bounds(double lambda, int d);

// Sup-norm Lipschitz constant of the map from a generator (in H^1 distance)
// to its push-forward density:  d^{2 + d/2} Lambda^{3d} (1 + H Lambda sqrt(d)).
double density_lipschitz_constant(int d, double lambda, double h_g);

struct HolderEstimate {
  double order = 1.0;
  double c_s_norm = 0.0;       // grid max of derivatives up to floor(order)
  double holder_quotient = 0.0;
  int grid_resolution = 0;
  double min_singular = 0.0;   // of the Jacobian, for regularity auditing
  double max_singular = 0.0;
  bool range_ok = false;       // g(grid) inside the cube
  bool lambda_ok = false;      // singular values within [1/Lambda, Lambda]
};

// Grid-maximized smoothness estimates (lower bounds on the true norms).
// order 1 uses values only; order 2 adds the analytic Jacobian and central
// differences of it (step 1e-4) for the top-derivative quotient.
HolderEstimate holder_diagnostics(const DiffMap& g, double lambda_bound, double order,
                                  int grid_res);

// (x_1..x_d, p) rows at the given per-axis resolution.
void write_density_csv(const DensityFn& p, int dim, int grid_res, const std::string& path);

}  // namespace gandens
