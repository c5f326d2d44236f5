#include "gandens/gan.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "gandens/adam.hpp"
#include "gandens/families.hpp"
#include "json.hpp"

namespace gandens {

namespace {

double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

struct CubeAudit {
  bool ok = false;
  double min_sv = 0.0;
  double max_sv = 0.0;
};

// Coarse validity audit for generator iterates: values inside the cube and
// Jacobian singular values within [1/lambda, lambda] on a lattice.
CubeAudit audit_generator(const RequNet& net, double lambda, int res, double range_slack) {
  const int d = net.arch().input_dim();
  CubeAudit audit;
  audit.min_sv = std::numeric_limits<double>::infinity();
  std::vector<int> idx(d, 0);
  std::size_t total = 1;
  for (int k = 0; k < d; ++k) total *= res;
  for (std::size_t t = 0; t < total; ++t) {
    Eigen::VectorXd x(d);
    for (int k = 0; k < d; ++k) x[k] = static_cast<double>(idx[k]) / (res - 1);
    Eigen::VectorXd v = net.forward(x);
    for (int k = 0; k < d; ++k) {
      if (v[k] < -range_slack || v[k] > 1.0 + range_slack) return audit;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(net.jacobian(x));
    audit.min_sv = std::min(audit.min_sv, svd.singularValues().minCoeff());
    audit.max_sv = std::max(audit.max_sv, svd.singularValues().maxCoeff());
    for (int k = d - 1; k >= 0; --k) {
      if (++idx[k] < res) break;
      idx[k] = 0;
    }
  }
  audit.ok = audit.min_sv >= 1.0 / lambda && audit.max_sv <= lambda;
  return audit;
}

// Exact identity for architectures embedding the width-6 affine gadget in
// each hidden layer (one or two hidden layers, widths >= 6d).
RequNet identity_init(const Architecture& arch) {
  const int d = arch.input_dim();
  if (arch.output_dim() != d) throw std::invalid_argument("identity_init: non-square map");
  if (arch.hidden < 1 || arch.hidden > 2) {
    throw std::invalid_argument("identity_init: one or two hidden layers supported");
  }
  for (int k = 1; k <= arch.hidden; ++k) {
    if (arch.widths[k] < 6 * d) throw std::invalid_argument("identity_init: hidden width below 6d");
  }
  RequNet gadget = affine_net(d, 0.0, 1.0);
  RequNet net(arch);
  // first stage
  net.weight(0).topLeftCorner(6 * d, d) = gadget.weight(0);
  net.shift(1).head(6 * d) = gadget.shift(1);
  if (arch.hidden == 1) {
    net.weight(1).topLeftCorner(d, 6 * d) = gadget.weight(1);
  } else {
    // merge the gadget output with a second gadget input stage
    Eigen::MatrixXd mid = gadget.weight(0) * gadget.weight(1);  // (6d x d) * (d x 6d)
    net.weight(1).topLeftCorner(6 * d, 6 * d) = mid;
    net.shift(2).head(6 * d) = gadget.shift(1);
    net.weight(2).topLeftCorner(d, 6 * d) = gadget.weight(1);
  }
  net.validate();
  return net;
}

// Widen a single-hidden-layer generator into a larger architecture of the
// same depth by zero-padding the extra units.
RequNet embed_generator(const RequNet& small, const Architecture& arch) {
  const auto& sa = small.arch();
  if (sa.hidden != 1 || arch.hidden != 1 || arch.widths[1] < sa.widths[1] ||
      arch.input_dim() != sa.input_dim() || arch.output_dim() != sa.output_dim()) {
    throw std::invalid_argument("embed_generator: incompatible shapes");
  }
  RequNet out(arch);
  out.weight(0).topRows(sa.widths[1]) = small.weight(0);
  out.shift(1).head(sa.widths[1]) = small.shift(1);
  out.weight(1).leftCols(sa.widths[1]) = small.weight(1);
  return out;
}

}  // namespace

RequNet identity_generator(const Architecture& arch) { return identity_init(arch); }

std::vector<RequNet> fit_generator_candidates(const Architecture& arch,
                                              const std::vector<Eigen::VectorXd>& inputs,
                                              const std::vector<Eigen::VectorXd>& targets,
                                              double lambda, double range_slack, int iterations,
                                              std::uint64_t seed, double slope_weight, int starts) {
  if (inputs.size() != targets.size() || inputs.empty()) {
    throw std::invalid_argument("fit_generator_candidates: bad point set");
  }
  auto loss_and_grad = [&](const RequNet& net, Eigen::VectorXd* grad) {
    if (grad) grad->setZero();
    std::vector<Eigen::VectorXd> residuals(inputs.size());
    double loss = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      residuals[i] = net.forward(inputs[i]) - targets[i];
      loss += residuals[i].squaredNorm();
      if (grad) *grad += net.grad_params(inputs[i], 2.0 * residuals[i]);
    }
    for (std::size_t i = 0; i + 1 < inputs.size(); ++i) {
      Eigen::VectorXd gap = inputs[i + 1] - inputs[i];
      double step = gap.lpNorm<Eigen::Infinity>();
      if (step <= 0.0 || gap.cwiseAbs().sum() > 1.5 * step) continue;  // not lattice neighbors
      Eigen::VectorXd diff = (residuals[i + 1] - residuals[i]) / step;
      loss += slope_weight * diff.squaredNorm();
      if (grad) {
        Eigen::VectorXd upstream = (2.0 * slope_weight / step) * diff;
        *grad += net.grad_params(inputs[i + 1], upstream) - net.grad_params(inputs[i], upstream);
      }
    }
    return loss / inputs.size();
  };

  Rng rng(seed);
  Eigen::VectorXd base = identity_init(arch).to_params();
  std::vector<RequNet> out;
  for (int start = 0; start < starts; ++start) {
    RequNet net = RequNet::from_params(arch, base);
    double noise = start == 0 ? 0.02 : 0.05 * start;
    for (int attempt = 0; attempt < 10; ++attempt) {
      Eigen::VectorXd jitter(base.size());
      for (int i = 0; i < jitter.size(); ++i) jitter[i] = rng.uniform(-noise, noise);
      RequNet cand = RequNet::from_params(arch, (base + jitter).cwiseMax(-1.0).cwiseMin(1.0));
      if (generator_audit_ok(cand, lambda, 17, range_slack)) {
        net = cand;
        break;
      }
      noise *= 0.5;
    }
    AdamState adam(arch.param_count());
    Eigen::VectorXd grad(arch.param_count());
    RequNet best = net;
    double best_loss = std::numeric_limits<double>::infinity();
    for (int it = 0; it < iterations; ++it) {
      double loss = loss_and_grad(net, &grad);
      grad /= static_cast<double>(inputs.size());
      if (loss < best_loss && generator_audit_ok(net, lambda, 17, range_slack)) {
        best = net;
        best_loss = loss;
      }
      Eigen::VectorXd w = net.to_params() - adam.step(grad, 0.02);
      net = RequNet::from_params(arch, w.cwiseMax(-1.0).cwiseMin(1.0));
    }
    if (loss_and_grad(net, nullptr) < best_loss && generator_audit_ok(net, lambda, 17, range_slack)) {
      best = net;
    }
    out.push_back(best);
  }
  return out;
}

RequNet fit_generator_to_points(const Architecture& arch,
                                const std::vector<Eigen::VectorXd>& inputs,
                                const std::vector<Eigen::VectorXd>& targets, double lambda,
                                double range_slack, int iterations, std::uint64_t seed,
                                double slope_weight, int starts) {
  auto fits = fit_generator_candidates(arch, inputs, targets, lambda, range_slack, iterations,
                                       seed, slope_weight, starts);
  // best by the fit loss: recompute the value term only, cheap and adequate
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t best = 0;
  for (std::size_t k = 0; k < fits.size(); ++k) {
    double loss = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      loss += (fits[k].forward(inputs[i]) - targets[i]).squaredNorm();
    }
    if (loss < best_loss) {
      best_loss = loss;
      best = k;
    }
  }
  return fits[best];
}

bool generator_audit_ok(const RequNet& net, double lambda, int grid_res, double range_slack) {
  return audit_generator(net, lambda, grid_res, range_slack).ok;
}

ClampedDiscriminator::ClampedDiscriminator(RequNet net, double d_min, double d_max)
    : net_(std::move(net)), d_min_(d_min), d_max_(d_max) {
  if (net_.arch().output_dim() != 1) {
    throw std::invalid_argument("ClampedDiscriminator: output width must be 1");
  }
  if (!(0.0 < d_min_ && d_min_ <= d_max_ && d_max_ < 1.0)) {
    throw std::invalid_argument("ClampedDiscriminator: need 0 < d_min <= d_max < 1");
  }
}

double ClampedDiscriminator::operator()(const Eigen::VectorXd& x) const {
  double raw = net_.forward(x)[0];
  return hard_clamp(d_min_ + (d_max_ - d_min_) * logistic(raw), d_min_, d_max_);
}

std::pair<double, double> ClampedDiscriminator::value_and_slope(const Eigen::VectorXd& x) const {
  double raw = net_.forward(x)[0];
  double s = logistic(raw);
  double value = hard_clamp(d_min_ + (d_max_ - d_min_) * s, d_min_, d_max_);
  return {value, (d_max_ - d_min_) * s * (1.0 - s)};
}

void Dataset::validate() const {
  if (real.size() != latent.size()) throw std::invalid_argument("Dataset: unequal sample counts");
  for (const auto& x : real) {
    for (int k = 0; k < x.size(); ++k) {
      if (x[k] < 0.0 || x[k] > 1.0) throw std::invalid_argument("Dataset: point outside cube");
    }
  }
  for (const auto& y : latent) {
    for (int k = 0; k < y.size(); ++k) {
      if (y[k] < 0.0 || y[k] > 1.0) throw std::invalid_argument("Dataset: latent outside cube");
    }
  }
}

Dataset sample_dataset(const DiffMap& g_star, std::size_t n, std::uint64_t seed) {
  Dataset data;
  data.seed = seed;
  Rng rng(seed);
  Rng real_rng = rng.child(1);
  Rng latent_rng = rng.child(2);
  const int d = g_star.dim();
  data.real.reserve(n);
  data.latent.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd u(d);
    for (int k = 0; k < d; ++k) u[k] = real_rng.uniform01();
    data.real.push_back(g_star.value(u));
  }
  for (std::size_t j = 0; j < n; ++j) {
    Eigen::VectorXd y(d);
    for (int k = 0; k < d; ++k) y[k] = latent_rng.uniform01();
    data.latent.push_back(std::move(y));
  }
  return data;
}

double empirical_loss(const RequNet& gen, const ClampedDiscriminator& disc, const Dataset& data) {
  data.validate();
  const double n = static_cast<double>(data.size());
  double total = 0.0;
  for (const auto& x : data.real) total += std::log(disc(x));
  for (const auto& y : data.latent) total += std::log(1.0 - disc(gen.forward(y)));
  return total / (2.0 * n);
}

double population_loss(const RequNet& gen, const ClampedDiscriminator& disc,
                       const DensityFn& p_star, const QuadratureScheme& quad) {
  double total = 0.0;
  for (std::size_t i = 0; i < quad.nodes.size(); ++i) {
    const auto& node = quad.nodes[i];
    double data_term = p_star(node) * std::log(disc(node));
    double latent_term = std::log(1.0 - disc(gen.forward(node)));
    total += quad.weights[i] * 0.5 * (data_term + latent_term);
  }
  return total;
}

DensityFn optimal_discriminator(const DensityFn& p_star, const DensityFn& p_gen) {
  return [p_star, p_gen](const Eigen::VectorXd& x) {
    double a = p_star(x);
    double b = p_gen(x);
    if (a + b <= 0.0) throw std::invalid_argument("optimal_discriminator: zero denominator");
    return a / (a + b);
  };
}

std::vector<Eigen::VectorXd> sample_generator(const DiffMap& g, std::size_t m, std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("sample_generator: need at least one sample");
  Rng rng(seed);
  std::vector<Eigen::VectorXd> out;
  out.reserve(m);
  const int d = g.dim();
  for (std::size_t i = 0; i < m; ++i) {
    Eigen::VectorXd u(d);
    for (int k = 0; k < d; ++k) u[k] = rng.uniform01();
    out.push_back(g.value(u));
  }
  return out;
}

namespace {

// Gradient of the empirical loss in the discriminator parameters.
Eigen::VectorXd disc_grad(const RequNet& gen, const ClampedDiscriminator& disc,
                          const Dataset& data) {
  const double n = static_cast<double>(data.size());
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(disc.net().arch().param_count());
  Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  for (const auto& x : data.real) {
    auto [value, slope] = disc.value_and_slope(x);
    grad += (slope / value) * disc.net().grad_params(x, one);
  }
  for (const auto& y : data.latent) {
    Eigen::VectorXd x = gen.forward(y);
    auto [value, slope] = disc.value_and_slope(x);
    grad += (-slope / (1.0 - value)) * disc.net().grad_params(x, one);
  }
  return grad / (2.0 * n);
}

// Gradient of the empirical loss in the generator parameters.
Eigen::VectorXd gen_grad(const RequNet& gen, const ClampedDiscriminator& disc,
                         const Dataset& data) {
  const double n = static_cast<double>(data.size());
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(gen.arch().param_count());
  Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  for (const auto& y : data.latent) {
    Eigen::VectorXd x = gen.forward(y);
    auto [value, slope] = disc.value_and_slope(x);
    Eigen::VectorXd upstream = (-slope / (1.0 - value)) * disc.net().grad_input(x, one);
    grad += gen.grad_params(y, upstream);
  }
  return grad / (2.0 * n);
}

}  // namespace

TrainingRun train(const Architecture& gen_arch, const Architecture& disc_arch,
                  const Dataset& data, const TrainingConfig& config) {
  data.validate();
  if (config.lr_gen <= 0.0 || config.lr_disc <= 0.0) {
    throw std::invalid_argument("train: step sizes must be positive");
  }
  auto t0 = std::chrono::steady_clock::now();
  Rng rng(config.seed);
  Rng init_rng = rng.child(1);
  Rng probe_rng = rng.child(2);
  const int d = gen_arch.input_dim();

  // Generator starts at the exact identity plus noise; the noise is halved
  // until a strict audit accepts the iterate (margin leaves room to move).
  RequNet gen = RequNet::from_params(gen_arch, identity_init(gen_arch).to_params(),
                                     config.gen_sparsity);
  {
    Eigen::VectorXd base = gen.to_params();
    double noise = config.init_noise;
    for (int attempt = 0; attempt < 10; ++attempt) {
      Eigen::VectorXd jitter(base.size());
      for (int i = 0; i < jitter.size(); ++i) jitter[i] = init_rng.uniform(-noise, noise);
      RequNet candidate = RequNet::from_params(
          gen_arch, (base + jitter).cwiseMax(-1.0).cwiseMin(1.0), config.gen_sparsity);
      candidate.project_constraints();
      if (audit_generator(candidate, 0.7 * config.lambda_trust, config.audit_grid,
                          0.5 * config.range_slack).ok) {
        gen = candidate;
        break;
      }
      noise *= 0.5;
    }
  }
  // Data-driven warm start (one dimension): fit the generator to empirical
  // quantile curves of two disjoint data folds and rank every fit by its loss
  // on the opposite fold; cross-validation separates genuine fit quality from
  // quantile-noise overfitting.  The winner seeds the adversarial phase and
  // the whole restart spread joins the candidate set below.
  std::vector<RequNet> warm_fits;
  const int quantile_grid = 129;
  auto quantile_curve = [&](int parity) {
    std::vector<double> sorted;
    for (std::size_t i = 0; i < data.real.size(); ++i) {
      if (static_cast<int>(i % 2) == parity || parity < 0) sorted.push_back(data.real[i][0]);
    }
    std::sort(sorted.begin(), sorted.end());
    std::vector<Eigen::VectorXd> us, qs;
    for (int j = 0; j < quantile_grid; ++j) {
      double u = (j + 0.5) / quantile_grid;
      double pos = u * sorted.size() - 0.5;
      auto lo = static_cast<std::size_t>(std::max(0.0, std::floor(pos)));
      std::size_t hi = std::min(lo + 1, sorted.size() - 1);
      double frac = std::min(1.0, std::max(0.0, pos - lo));
      us.push_back(Eigen::VectorXd::Constant(1, u));
      qs.push_back(Eigen::VectorXd::Constant(1, sorted[lo] * (1.0 - frac) + sorted[hi] * frac));
    }
    return std::pair(us, qs);
  };
  auto curve_loss = [&](const RequNet& g, const std::vector<Eigen::VectorXd>& us,
                        const std::vector<Eigen::VectorXd>& qs) {
    double loss = 0.0;
    std::vector<double> vals(us.size());
    for (std::size_t j = 0; j < us.size(); ++j) {
      vals[j] = g.forward(us[j])[0];
      double r = vals[j] - qs[j][0];
      loss += r * r;
    }
    for (std::size_t j = 0; j + 1 < us.size(); ++j) {
      double step = us[j + 1][0] - us[j][0];
      double diff = ((vals[j + 1] - qs[j + 1][0]) - (vals[j] - qs[j][0])) / step;
      loss += 0.02 * diff * diff;
    }
    return loss / us.size();
  };
  double warm_val_floor = std::numeric_limits<double>::infinity();
  std::vector<Eigen::VectorXd> fold_us[2], fold_qs[2];
  if (d == 1 && config.warm_start_iterations > 0 && data.real.size() >= 8) {
    try {
      for (int parity = 0; parity < 2; ++parity) {
        auto [us, qs] = quantile_curve(parity);
        fold_us[parity] = us;
        fold_qs[parity] = qs;
      }
      for (int parity = 0; parity < 2; ++parity) {
        auto fits = fit_generator_candidates(
            gen_arch, fold_us[parity], fold_qs[parity], config.lambda_trust, config.range_slack,
            config.warm_start_iterations, config.seed ^ (0x9d2c5680ULL + parity), 0.02, 3);
        for (auto& fit : fits) {
          double val = curve_loss(fit, fold_us[1 - parity], fold_qs[1 - parity]);
          if (val < warm_val_floor) {
            warm_val_floor = val;
            gen = RequNet::from_params(gen_arch, fit.to_params(), config.gen_sparsity);
          }
          warm_fits.push_back(std::move(fit));
        }
      }
    } catch (const std::exception&) {
      warm_fits.clear();
      warm_val_floor = std::numeric_limits<double>::infinity();
    }
  }

  RequNet disc_net = RequNet::random(disc_arch, init_rng, config.disc_init_scale,
                                     config.disc_sparsity);
  ClampedDiscriminator disc(disc_net, config.d_min, config.d_max);

  auto ascend_disc = [&](const RequNet& at_gen, const RequNet& start, int steps) {
    RequNet net = start;
    AdamState adam(disc_arch.param_count());
    for (int it = 0; it < steps; ++it) {
      ClampedDiscriminator dd(net, config.d_min, config.d_max);
      Eigen::VectorXd g = disc_grad(at_gen, dd, data);
      Eigen::VectorXd theta = net.to_params() + adam.step(g, config.lr_disc);
      net = RequNet::from_params(disc_arch, theta.cwiseMax(-1.0).cwiseMin(1.0),
                                 config.disc_sparsity);
      net.project_constraints();
    }
    return net;
  };

  // Probe pool: discriminators optimized against recent generator iterates,
  // used to track the window-best iterate between refreshes.
  std::vector<RequNet> probe_nets;
  auto refresh_probes = [&](const RequNet& at_gen) {
    probe_nets.push_back(ascend_disc(at_gen, disc.net(), 30));
    for (int i = 1; i < config.probe_count; ++i) {
      probe_nets.push_back(ascend_disc(
          at_gen, RequNet::random(disc_arch, probe_rng, 0.5, config.disc_sparsity), 30));
    }
    if (probe_nets.size() > 16) probe_nets.erase(probe_nets.begin(), probe_nets.end() - 16);
  };

  auto pool_score = [&](const RequNet& g) {
    double best = empirical_loss(g, disc, data);
    for (const auto& p : probe_nets) {
      best = std::max(best,
                      empirical_loss(g, ClampedDiscriminator(p, config.d_min, config.d_max), data));
    }
    return best;
  };
  // Sharp score: pool maximum improved by a fresh ascent against this
  // candidate, approximating the inner maximization of the minimax objective.
  const RequNet fresh_start = RequNet::random(disc_arch, init_rng, config.disc_init_scale,
                                              config.disc_sparsity);
  auto sharp_score = [&](const RequNet& g) {
    double best = empirical_loss(g, disc, data);
    const RequNet* strongest = &disc.net();
    for (const auto& p : probe_nets) {
      double v = empirical_loss(g, ClampedDiscriminator(p, config.d_min, config.d_max), data);
      if (v > best) {
        best = v;
        strongest = &p;
      }
    }
    for (const RequNet* start : std::initializer_list<const RequNet*>{strongest, &fresh_start}) {
      RequNet refined = ascend_disc(g, *start, 60);
      best = std::max(
          best, empirical_loss(g, ClampedDiscriminator(refined, config.d_min, config.d_max), data));
    }
    return best;
  };
  refresh_probes(gen);

  TrainingRun run;
  run.config = config;
  run.gen_arch = gen_arch;
  run.disc_arch = disc_arch;

  std::vector<Eigen::VectorXd> candidates;
  candidates.push_back(gen.to_params());
  Eigen::VectorXd window_best = gen.to_params();
  double window_best_score = pool_score(gen);

  AdamState disc_adam(disc_arch.param_count());
  AdamState gen_adam(gen_arch.param_count());

  for (int epoch = 0; epoch < config.outer_steps; ++epoch) {
    double disc_grad_norm = 0.0;
    for (int step = 0; step < config.disc_steps_per_gen; ++step) {
      Eigen::VectorXd gtheta = disc_grad(gen, disc, data);
      disc_grad_norm = gtheta.lpNorm<Eigen::Infinity>();
      Eigen::VectorXd theta = disc.net().to_params() + disc_adam.step(gtheta, config.lr_disc);
      RequNet updated = RequNet::from_params(
          disc_arch, theta.cwiseMax(-1.0).cwiseMin(1.0), config.disc_sparsity);
      updated.project_constraints();
      disc = ClampedDiscriminator(updated, config.d_min, config.d_max);
    }
    if (disc_grad_norm < 1e-6) {
      // collapsed discriminator: restart from a fresh draw
      disc = ClampedDiscriminator(
          RequNet::random(disc_arch, probe_rng, config.disc_init_scale, config.disc_sparsity),
          config.d_min, config.d_max);
      disc_adam = AdamState(disc_arch.param_count());
    }

    Eigen::VectorXd gw = gen_grad(gen, disc, data);
    double gen_grad_norm = gw.lpNorm<Eigen::Infinity>();
    Eigen::VectorXd delta = gen_adam.step(gw, config.lr_gen);
    // backtracking projection onto the audited generator class
    double scale = 1.0;
    for (int half = 0; half < 6; ++half) {
      Eigen::VectorXd w = gen.to_params() - scale * delta;
      RequNet candidate = RequNet::from_params(
          gen_arch, w.cwiseMax(-1.0).cwiseMin(1.0), config.gen_sparsity);
      candidate.project_constraints();
      if (audit_generator(candidate, config.lambda_trust, config.audit_grid,
                          config.range_slack).ok) {
        gen = candidate;
        break;
      }
      scale *= 0.5;
    }

    double loss = empirical_loss(gen, disc, data);
    if (!std::isfinite(loss)) {
      throw TrainingError("train: loss became non-finite at epoch " + std::to_string(epoch));
    }
    run.trace.push_back({epoch, loss, gen_grad_norm, disc_grad_norm});

    double s = pool_score(gen);
    if (s < window_best_score) {
      window_best_score = s;
      window_best = gen.to_params();
    }
    if ((epoch + 1) % config.probe_refresh == 0) {
      candidates.push_back(window_best);
      candidates.push_back(gen.to_params());
      refresh_probes(gen);
      window_best = gen.to_params();
      window_best_score = pool_score(gen);
    }
  }
  candidates.push_back(window_best);
  candidates.push_back(gen.to_params());

  // Data-independent sieve around the identity: the same candidate maps enter
  // every run, so differences across sample sizes come from the empirical
  // scores alone.
  if (config.sieve_draws > 0 && gen_arch.hidden == 1 && gen_arch.widths[1] >= 6 * d) {
    Rng sieve_rng(0x5eedc0deULL);
    for (double noise : {0.005, 0.01, 0.02, 0.04}) {
      for (int i = 0; i < config.sieve_draws; ++i) {
        try {
          RequNet small = pinned_generator(d, sieve_rng, noise, 0.7 * config.lambda_trust);
          candidates.push_back(embed_generator(small, gen_arch).to_params());
        } catch (const std::runtime_error&) {
        }
      }
    }
  }

  for (const auto& warm : warm_fits) candidates.push_back(warm.to_params());

  // Cross-fold screen: a candidate enters the adversarial scoring only if its
  // worse fold-curve loss is close to the validation floor.  The adversarial
  // score is blind to high-frequency density error; the held-out quantile
  // loss is not.
  std::vector<char> admitted(candidates.size(), 1);
  if (d == 1 && std::isfinite(warm_val_floor)) {
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      RequNet g = RequNet::from_params(gen_arch, candidates[k], config.gen_sparsity);
      double val = std::max(curve_loss(g, fold_us[0], fold_qs[0]),
                            curve_loss(g, fold_us[1], fold_qs[1]));
      admitted[k] = val <= 1.3 * warm_val_floor ? 1 : 0;
    }
  }

  // Final selection by the sharp score over admitted candidates; the
  // initialization is always scored so the comparison to it is recorded.
  double best_score = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best = candidates.front();
  bool have_best = false;
  run.initial_score = sharp_score(
      RequNet::from_params(gen_arch, candidates.front(), config.gen_sparsity));
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    if (!admitted[k]) continue;
    RequNet g = RequNet::from_params(gen_arch, candidates[k], config.gen_sparsity);
    double s = sharp_score(g);
    run.candidate_params.push_back(candidates[k]);
    run.candidate_scores.push_back(s);
    if (s < best_score || !have_best) {
      best_score = s;
      best = candidates[k];
      have_best = true;
    }
  }
  run.w_hat = best;
  run.final_score = best_score;
  run.theta_hat = disc.net().to_params();
  run.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return run;
}

void TrainingRun::write_jsonl(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_jsonl: cannot open " + path);
  for (const auto& rec : trace) {
    nlohmann::ordered_json j;
    j["epoch"] = rec.epoch;
    j["loss"] = rec.loss;
    j["grad_gen"] = rec.grad_gen;
    j["grad_disc"] = rec.grad_disc;
    out << j.dump() << "\n";
  }
  nlohmann::ordered_json tail;
  tail["initial_score"] = initial_score;
  tail["final_score"] = final_score;
  tail["generator"] = nlohmann::json::parse(
      RequNet::from_params(gen_arch, w_hat, std::nullopt).to_json());
  tail["discriminator"] = nlohmann::json::parse(
      RequNet::from_params(disc_arch, theta_hat, std::nullopt).to_json());
  out << tail.dump() << "\n";
}

}  // namespace gandens
