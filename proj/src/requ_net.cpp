#include "gandens/requ_net.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"

namespace gandens {

namespace {

constexpr double kParamBound = 1.0;

double requ(double t) { return t > 0.0 ? t * t : 0.0; }
double requ_deriv(double t) { return t > 0.0 ? 2.0 * t : 0.0; }

void check_dim(const Eigen::VectorXd& x, int expected, const char* what) {
  if (x.size() != expected) {
    throw std::invalid_argument(std::string(what) + ": expected length " +
                                std::to_string(expected) + ", got " + std::to_string(x.size()));
  }
}

}  // namespace

Architecture::Architecture(int n_hidden, std::vector<int> w) : hidden(n_hidden), widths(std::move(w)) {
  if (hidden < 0) throw std::invalid_argument("Architecture: negative hidden-layer count");
  if (static_cast<int>(widths.size()) != hidden + 2) {
    throw std::invalid_argument("Architecture: widths must have length hidden + 2");
  }
  for (int p : widths) {
    if (p < 1) throw std::invalid_argument("Architecture: widths must be positive");
  }
}

int Architecture::param_count() const {
  int total = 0;
  for (int i = 0; i <= hidden; ++i) total += widths[i + 1] * widths[i];
  for (int i = 1; i <= hidden; ++i) total += widths[i];
  return total;
}

RequNet::RequNet(const Architecture& arch, std::optional<int> sparsity)
    : arch_(arch), sparsity_(sparsity) {
  weights_.reserve(arch.hidden + 1);
  for (int i = 0; i <= arch.hidden; ++i) {
    weights_.push_back(Eigen::MatrixXd::Zero(arch.widths[i + 1], arch.widths[i]));
  }
  shifts_.reserve(arch.hidden);
  for (int i = 1; i <= arch.hidden; ++i) {
    shifts_.push_back(Eigen::VectorXd::Zero(arch.widths[i]));
  }
}

void RequNet::validate() const {
  for (const auto& W : weights_) {
    if ((W.array().abs() > kParamBound).any()) {
      throw std::invalid_argument("RequNet: weight entry outside [-1, 1]");
    }
  }
  for (const auto& v : shifts_) {
    if ((v.array().abs() > kParamBound).any()) {
      throw std::invalid_argument("RequNet: shift entry outside [-1, 1]");
    }
  }
  if (sparsity_ && nonzero_count() > *sparsity_) {
    throw std::invalid_argument("RequNet: nonzero count exceeds sparsity budget");
  }
}

int RequNet::nonzero_count() const {
  int count = 0;
  for (const auto& W : weights_) count += (W.array() != 0.0).count();
  for (const auto& v : shifts_) count += (v.array() != 0.0).count();
  return count;
}

Eigen::VectorXd RequNet::forward(const Eigen::VectorXd& x) const {
  check_dim(x, arch_.input_dim(), "forward input");
  Eigen::VectorXd h = weights_[0] * x;
  for (int k = 1; k <= arch_.hidden; ++k) {
    h = (h - shifts_[k - 1]).unaryExpr([](double t) { return requ(t); });
    h = weights_[k] * h;
  }
  return h;
}

Eigen::MatrixXd RequNet::jacobian(const Eigen::VectorXd& x) const {
  check_dim(x, arch_.input_dim(), "jacobian input");
  Eigen::VectorXd h = weights_[0] * x;
  Eigen::MatrixXd J = weights_[0];
  for (int k = 1; k <= arch_.hidden; ++k) {
    Eigen::VectorXd pre = h - shifts_[k - 1];
    Eigen::VectorXd slope = pre.unaryExpr([](double t) { return requ_deriv(t); });
    J = slope.asDiagonal() * J;
    h = pre.unaryExpr([](double t) { return requ(t); });
    J = weights_[k] * J;
    h = weights_[k] * h;
  }
  return J;
}

Eigen::VectorXd RequNet::grad_params(const Eigen::VectorXd& x, const Eigen::VectorXd& upstream) const {
  check_dim(x, arch_.input_dim(), "grad_params input");
  check_dim(upstream, arch_.output_dim(), "grad_params upstream");
  const int N = arch_.hidden;

  std::vector<Eigen::VectorXd> acts(N + 1);  // acts[k]: input to weight k
  std::vector<Eigen::VectorXd> pres(N);      // pre-activation minus shift at stage k
  acts[0] = x;
  Eigen::VectorXd h = weights_[0] * x;
  for (int k = 1; k <= N; ++k) {
    pres[k - 1] = h - shifts_[k - 1];
    acts[k] = pres[k - 1].unaryExpr([](double t) { return requ(t); });
    h = weights_[k] * acts[k];
  }

  std::vector<Eigen::MatrixXd> gw(N + 1);
  std::vector<Eigen::VectorXd> gv(N);
  Eigen::VectorXd g = upstream;
  for (int k = N; k >= 1; --k) {
    gw[k] = g * acts[k].transpose();
    Eigen::VectorXd gt = (weights_[k].transpose() * g).cwiseProduct(
        pres[k - 1].unaryExpr([](double t) { return requ_deriv(t); }));
    gv[k - 1] = -gt;
    g = gt;
  }
  gw[0] = g * acts[0].transpose();

  Eigen::VectorXd out(arch_.param_count());
  int pos = 0;
  for (int i = 0; i <= N; ++i) {
    for (int r = 0; r < gw[i].rows(); ++r)
      for (int c = 0; c < gw[i].cols(); ++c) out[pos++] = gw[i](r, c);
  }
  for (int i = 0; i < N; ++i) {
    for (int r = 0; r < gv[i].size(); ++r) out[pos++] = gv[i][r];
  }
  return out;
}

Eigen::VectorXd RequNet::grad_input(const Eigen::VectorXd& x, const Eigen::VectorXd& upstream) const {
  check_dim(upstream, arch_.output_dim(), "grad_input upstream");
  return jacobian(x).transpose() * upstream;
}

Eigen::VectorXd RequNet::partial_up(int k, int i, const Eigen::VectorXd& x) const {
  const int N = arch_.hidden;
  if (k == 0 && i == 1) return x;  // empty-prefix convention
  if (i < 1 || i > k || k > N) throw std::invalid_argument("partial_up: invalid indices");
  check_dim(x, arch_.widths[i - 1], "partial_up input");
  Eigen::VectorXd h = x;
  for (int stage = i; stage <= k; ++stage) {
    h = weights_[stage - 1] * h;
    h = (h - shifts_[stage - 1]).unaryExpr([](double t) { return requ(t); });
  }
  return h;
}

Eigen::VectorXd RequNet::partial_down(int j, int k, const Eigen::VectorXd& x) const {
  const int N = arch_.hidden;
  if (j == N && k == N + 2) return x;  // empty-suffix convention
  if (k < 1 || k > j + 1 || j > N) throw std::invalid_argument("partial_down: invalid indices");
  check_dim(x, arch_.widths[k - 1], "partial_down input");
  Eigen::VectorXd h = weights_[k - 1] * x;
  for (int stage = k; stage <= j; ++stage) {
    h = (h - shifts_[stage - 1]).unaryExpr([](double t) { return requ(t); });
    h = weights_[stage] * h;
  }
  return h;
}

Eigen::VectorXd RequNet::to_params() const {
  Eigen::VectorXd out(arch_.param_count());
  int pos = 0;
  for (const auto& W : weights_) {
    for (int r = 0; r < W.rows(); ++r)
      for (int c = 0; c < W.cols(); ++c) out[pos++] = W(r, c);
  }
  for (const auto& v : shifts_) {
    for (int r = 0; r < v.size(); ++r) out[pos++] = v[r];
  }
  return out;
}

RequNet RequNet::from_params(const Architecture& arch, const Eigen::VectorXd& params,
                             std::optional<int> sparsity) {
  if (params.size() != arch.param_count()) {
    throw std::invalid_argument("from_params: length mismatch");
  }
  for (int i = 0; i < params.size(); ++i) {
    if (params[i] < -kParamBound || params[i] > kParamBound) {
      throw std::invalid_argument("from_params: entry outside [-1, 1]");
    }
  }
  RequNet net(arch, sparsity);
  int pos = 0;
  for (int i = 0; i <= arch.hidden; ++i) {
    auto& W = net.weights_[i];
    for (int r = 0; r < W.rows(); ++r)
      for (int c = 0; c < W.cols(); ++c) W(r, c) = params[pos++];
  }
  for (int i = 0; i < arch.hidden; ++i) {
    auto& v = net.shifts_[i];
    for (int r = 0; r < v.size(); ++r) v[r] = params[pos++];
  }
  return net;
}

void RequNet::project_constraints() {
  for (auto& W : weights_) W = W.cwiseMax(-kParamBound).cwiseMin(kParamBound);
  for (auto& v : shifts_) v = v.cwiseMax(-kParamBound).cwiseMin(kParamBound);
  if (!sparsity_) return;
  if (*sparsity_ <= 0) {
    for (auto& W : weights_) W.setZero();
    for (auto& v : shifts_) v.setZero();
    return;
  }
  int nnz = nonzero_count();
  if (nnz <= *sparsity_) return;
  std::vector<double> mags;
  mags.reserve(nnz);
  auto collect = [&](double v) {
    if (v != 0.0) mags.push_back(std::abs(v));
  };
  for (const auto& W : weights_)
    for (int r = 0; r < W.rows(); ++r)
      for (int c = 0; c < W.cols(); ++c) collect(W(r, c));
  for (const auto& v : shifts_)
    for (int r = 0; r < v.size(); ++r) collect(v[r]);
  std::nth_element(mags.begin(), mags.begin() + (*sparsity_ - 1), mags.end(),
                   std::greater<double>());
  double cut = mags[*sparsity_ - 1];
  // keep entries strictly above the cut, then fill ties up to the budget
  int kept = 0;
  auto pass1 = [&](double& v) {
    if (std::abs(v) > cut)
      ++kept;
    else if (std::abs(v) < cut)
      v = 0.0;
  };
  for (auto& W : weights_)
    for (int r = 0; r < W.rows(); ++r)
      for (int c = 0; c < W.cols(); ++c) pass1(W(r, c));
  for (auto& v : shifts_)
    for (int r = 0; r < v.size(); ++r) pass1(v[r]);
  auto pass2 = [&](double& v) {
    if (v != 0.0 && std::abs(v) == cut) {
      if (kept < *sparsity_)
        ++kept;
      else
        v = 0.0;
    }
  };
  for (auto& W : weights_)
    for (int r = 0; r < W.rows(); ++r)
      for (int c = 0; c < W.cols(); ++c) pass2(W(r, c));
  for (auto& v : shifts_)
    for (int r = 0; r < v.size(); ++r) pass2(v[r]);
}

RequNet RequNet::random(const Architecture& arch, Rng& rng, double scale,
                        std::optional<int> sparsity) {
  RequNet net(arch, sparsity);
  for (auto& W : net.weights_)
    for (int r = 0; r < W.rows(); ++r)
      for (int c = 0; c < W.cols(); ++c) W(r, c) = rng.uniform(-scale, scale);
  for (auto& v : net.shifts_)
    for (int r = 0; r < v.size(); ++r) v[r] = rng.uniform(-scale, scale);
  net.project_constraints();
  return net;
}

std::string RequNet::to_json() const {
  nlohmann::ordered_json j;
  j["hidden"] = arch_.hidden;
  j["widths"] = arch_.widths;
  j["weights"] = nlohmann::json::array();
  for (const auto& W : weights_) {
    std::vector<double> flat(W.size());
    for (int r = 0; r < W.rows(); ++r)
      for (int c = 0; c < W.cols(); ++c) flat[r * W.cols() + c] = W(r, c);
    j["weights"].push_back(flat);
  }
  j["shifts"] = nlohmann::json::array();
  for (const auto& v : shifts_) {
    j["shifts"].push_back(std::vector<double>(v.data(), v.data() + v.size()));
  }
  if (sparsity_)
    j["sparsity"] = *sparsity_;
  else
    j["sparsity"] = nullptr;
  return j.dump();
}

RequNet RequNet::from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  Architecture arch(j.at("hidden").get<int>(), j.at("widths").get<std::vector<int>>());
  std::optional<int> sparsity;
  if (!j.at("sparsity").is_null()) sparsity = j.at("sparsity").get<int>();
  RequNet net(arch, sparsity);
  for (int i = 0; i <= arch.hidden; ++i) {
    auto flat = j.at("weights").at(i).get<std::vector<double>>();
    auto& W = net.weights_[i];
    if (static_cast<int>(flat.size()) != W.size()) {
      throw std::invalid_argument("from_json: weight size mismatch");
    }
    for (int r = 0; r < W.rows(); ++r)
      for (int c = 0; c < W.cols(); ++c) W(r, c) = flat[r * W.cols() + c];
  }
  for (int i = 0; i < arch.hidden; ++i) {
    auto flat = j.at("shifts").at(i).get<std::vector<double>>();
    auto& v = net.shifts_[i];
    if (static_cast<int>(flat.size()) != v.size()) {
      throw std::invalid_argument("from_json: shift size mismatch");
    }
    for (int r = 0; r < v.size(); ++r) v[r] = flat[r];
  }
  return net;
}

namespace {

PerturbationCoeff coeff_from_log(double log_value) {
  PerturbationCoeff c;
  c.log_value = log_value;
  if (log_value > std::log(std::numeric_limits<double>::max())) {
    c.value = std::numeric_limits<double>::infinity();
    c.overflowed = true;
  } else {
    c.value = std::exp(log_value);
  }
  return c;
}

}  // namespace

PerturbationBounds perturbation_bounds(const Architecture& arch) {
  const int N = arch.hidden;
  double sum_log_p1 = 0.0;  // sum over layers 0..N of log(p_l + 1)
  for (int l = 0; l <= N; ++l) sum_log_p1 += std::log(static_cast<double>(arch.widths[l]) + 1.0);

  PerturbationBounds out;
  double pow2N = std::pow(2.0, N);
  out.sup_coeff = coeff_from_log(std::log(N + 1.0) + N * std::log(2.0) + pow2N * sum_log_p1);
  if (N == 0) {
    out.jac_coeff = PerturbationCoeff{-std::numeric_limits<double>::infinity(), 0.0, false};
  } else {
    out.jac_coeff = coeff_from_log(std::log(static_cast<double>(N)) + std::log(N + 1.0) +
                                   (N + 1) * std::log(2.0) + (2.0 * pow2N + 1.0) * sum_log_p1);
  }
  return out;
}

double partial_sup_bound(const Architecture& arch, int k, int i, double K) {
  const int N = arch.hidden;
  if (i < 1 || i > k || k > N) throw std::invalid_argument("partial_sup_bound: invalid indices");
  double base = std::max(K, 1.0);
  double log_out = std::pow(2.0, k - i + 1) * std::log(base);
  for (int l = 1; l <= k - i + 1; ++l) {
    log_out += std::pow(2.0, l) * std::log(static_cast<double>(arch.widths[k - l]) + 1.0);
  }
  return std::exp(log_out);
}

double partial_lip_bound(const Architecture& arch, int j, int k, double K) {
  const int N = arch.hidden;
  if (k < 1 || k > j + 1 || j > N) throw std::invalid_argument("partial_lip_bound: invalid indices");
  double base = std::max(K, 1.0);
  double log_out = (j - k + 1) * std::log(2.0) + std::pow(2.0, j - k + 1) * std::log(base);
  for (int l = 0; l <= j - k + 1; ++l) {
    log_out += std::pow(2.0, l) * std::log(static_cast<double>(arch.widths[j - l]) + 1.0);
  }
  return std::exp(log_out);
}

RequNet affine_net(int d, double offset, double slope) {
  if (slope < 0.0 || slope > 1.0 || offset < 0.0 || offset > 0.5) {
    throw std::invalid_argument("affine_net: slope in [0,1] and offset in [0,0.5] required");
  }
  // Per axis, six units with shifts {0, 0, -1/2, -1/2, -1, -1} and duplicated
  // output weights solve  sum u_i = 0,  -2 sum u_i v_i = slope,
  // sum u_i v_i^2 = offset  exactly; pre-activations stay in [0, 2] on the
  // cube, so the map is the stated polynomial with no kink.
  double u3 = 2.0 * offset - 0.5 * slope;   // shift -1
  double u2 = 2.0 * slope - 4.0 * offset;   // shift -1/2
  double u1 = -1.5 * slope + 2.0 * offset;  // shift 0
  std::vector<int> widths = {d, 6 * d, d};
  RequNet net{Architecture(1, widths)};
  for (int axis = 0; axis < d; ++axis) {
    for (int unit = 0; unit < 6; ++unit) net.weight(0)(6 * axis + unit, axis) = 1.0;
    const double vs[6] = {0.0, 0.0, -0.5, -0.5, -1.0, -1.0};
    const double us[6] = {u1 / 2, u1 / 2, u2 / 2, u2 / 2, u3 / 2, u3 / 2};
    for (int unit = 0; unit < 6; ++unit) {
      net.shift(1)[6 * axis + unit] = vs[unit];
      net.weight(1)(axis, 6 * axis + unit) = us[unit];
    }
  }
  net.validate();
  return net;
}

}  // namespace gandens
