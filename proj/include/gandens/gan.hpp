#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "gandens/divergence.hpp"
#include "gandens/pushforward.hpp"
#include "gandens/requ_net.hpp"
#include "gandens/rng.hpp"

namespace gandens {

inline double hard_clamp(double raw, double d_min, double d_max) {
  return std::min(d_max, std::max(d_min, raw));
}

// Scalar-output network squashed into [d_min, d_max].  The squash
// t -> d_min + (d_max - d_min) logistic(t) keeps gradients alive everywhere;
// reported values additionally pass through the hard clamp.
class ClampedDiscriminator {
 public:
  ClampedDiscriminator(RequNet net, double d_min, double d_max);

  const RequNet& net() const { return net_; }
  RequNet& net() { return net_; }
  double d_min() const { return d_min_; }
  double d_max() const { return d_max_; }

  double operator()(const Eigen::VectorXd& x) const;
  // squash value plus d(squash)/d(raw), for backpropagation
  std::pair<double, double> value_and_slope(const Eigen::VectorXd& x) const;

 private:
  RequNet net_;
  double d_min_;
  double d_max_;
};

struct Dataset {
  std::vector<Eigen::VectorXd> real;    // X_i in [0,1]^d
  std::vector<Eigen::VectorXd> latent;  // Y_j uniform on [0,1]^d
  std::uint64_t seed = 0;

  int dim() const { return real.empty() ? 0 : static_cast<int>(real.front().size()); }
  std::size_t size() const { return real.size(); }
  void validate() const;
};

// n real draws g_star(U) and n independent uniform latents.
Dataset sample_dataset(const DiffMap& g_star, std::size_t n, std::uint64_t seed);

// Empirical two-sample cross-entropy:
//   1/(2n) sum log D(X_i) + 1/(2n) sum log(1 - D(g(Y_j))).
double empirical_loss(const RequNet& gen, const ClampedDiscriminator& disc, const Dataset& data);

// Population counterpart: data term integrates against p_star, latent term
// against the uniform distribution, both with the same quadrature rule.
double population_loss(const RequNet& gen, const ClampedDiscriminator& disc,
                       const DensityFn& p_star, const QuadratureScheme& quad);

// Likelihood-ratio discriminator p_star / (p_star + p_gen); throws on a zero
// denominator.
DensityFn optimal_discriminator(const DensityFn& p_star, const DensityFn& p_gen);

// m push-forward samples g(U_i) from the seeded stream.
std::vector<Eigen::VectorXd> sample_generator(const DiffMap& g, std::size_t m, std::uint64_t seed);

struct TrainingConfig {
  int outer_steps = 100;        // generator updates
  int disc_steps_per_gen = 10;  // inner ascent steps
  double lr_gen = 0.002;        // Adam step sizes
  double lr_disc = 0.03;
  double d_min = 0.1;
  double d_max = 0.9;
  std::uint64_t seed = 1;
  double init_noise = 0.05;     // generator init: exact identity plus this noise
  double disc_init_scale = 0.5; // uniform weight scale of the discriminator init
  int probe_refresh = 50;       // epochs between score-probe refreshes
  int probe_count = 4;          // optimized discriminator probes per refresh
  int sieve_draws = 8;          // data-independent candidate draws per noise level
  int warm_start_iterations = 1500;  // quantile-matching warm-start fit budget (d = 1)
  std::optional<int> gen_sparsity;
  std::optional<int> disc_sparsity;
  // generator iterates must stay maps of the cube with Jacobian singular
  // values in [1/lambda_trust, lambda_trust] on a coarse audit grid; the
  // range check carries a slack so iterates can slide along the boundary
  // (the exact map-into-the-cube optimum sits on it)
  double lambda_trust = 2.0;
  int audit_grid = 17;
  double range_slack = 0.03;
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;       // empirical loss after the updates
  double grad_gen = 0.0;   // sup-norm of the generator gradient
  double grad_disc = 0.0;  // sup-norm of the last discriminator gradient
};

struct TrainingRun {
  TrainingConfig config;
  Eigen::VectorXd w_hat;           // selected generator parameters
  Eigen::VectorXd theta_hat;       // final discriminator parameters
  Architecture gen_arch;
  Architecture disc_arch;
  std::vector<EpochRecord> trace;
  double initial_score = 0.0;      // probe-maximized empirical loss at init
  double final_score = 0.0;        // same score for the selected iterate
  std::vector<Eigen::VectorXd> candidate_params;  // selection diagnostics
  std::vector<double> candidate_scores;
  double wall_seconds = 0.0;

  RequNet generator() const { return RequNet::from_params(gen_arch, w_hat, std::nullopt); }
  // one JSON object per line: epoch records, then config and networks
  void write_jsonl(const std::string& path) const;
};

struct TrainingError : std::runtime_error {
  explicit TrainingError(const std::string& msg) : std::runtime_error(msg) {}
};

// Exact identity map for architectures embedding the width-6d affine gadget
// (one or two hidden layers, hidden widths >= 6d).
RequNet identity_generator(const Architecture& arch);

// Audited least-squares fit of a generator to input/target pairs, matching
// values and divided differences along consecutive inputs (surrogate for the
// H1 distance that controls the push-forward density).  Starts from a
// jittered identity and returns the best audited iterate.
RequNet fit_generator_to_points(const Architecture& arch,
                                const std::vector<Eigen::VectorXd>& inputs,
                                const std::vector<Eigen::VectorXd>& targets, double lambda,
                                double range_slack, int iterations, std::uint64_t seed,
                                double slope_weight = 0.1, int starts = 3);

// Same fit, returning the best audited iterate of every start (the spread of
// the restarts feeds candidate selection).
std::vector<RequNet> fit_generator_candidates(const Architecture& arch,
                                              const std::vector<Eigen::VectorXd>& inputs,
                                              const std::vector<Eigen::VectorXd>& targets,
                                              double lambda, double range_slack, int iterations,
                                              std::uint64_t seed, double slope_weight, int starts);

// Coarse lattice audit used to keep generator iterates invertible: values in
// the cube (up to range_slack), Jacobian singular values within
// [1/lambda, lambda].
bool generator_audit_ok(const RequNet& net, double lambda, int grid_res,
                        double range_slack = 1e-9);

// Alternating projected gradient descent/ascent on the empirical loss with
// best-iterate selection: candidate generators are re-scored under the final
// probe set, so the returned iterate never scores worse than the
// initialization.  Throws TrainingError if the loss turns non-finite.
TrainingRun train(const Architecture& gen_arch, const Architecture& disc_arch,
                  const Dataset& data, const TrainingConfig& config);

}  // namespace gandens
