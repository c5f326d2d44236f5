#include "gandens/rate.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gandens/adam.hpp"
#include "gandens/parallel.hpp"
#include "json.hpp"

namespace gandens {

namespace {

std::string fmt_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  double pos = q * (sorted.size() - 1);
  std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  double frac = pos - lo;
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (n_ladder.empty()) throw std::invalid_argument("experiment: empty n ladder");
  for (std::size_t i = 1; i < n_ladder.size(); ++i) {
    if (n_ladder[i] <= n_ladder[i - 1]) {
      throw std::invalid_argument("experiment: n ladder must be strictly increasing");
    }
  }
  if (seeds_per_n < 1) throw std::invalid_argument("experiment: seeds_per_n must be positive");
  if (beta <= 2.0) throw std::invalid_argument("experiment: beta must exceed 2");
}

ExperimentConfig parse_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("parse_experiment_config: cannot open " + path);
  ExperimentConfig cfg;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t\r"));
      auto last = s.find_last_not_of(" \t\r");
      s.erase(last == std::string::npos ? 0 : last + 1);
      return s;
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) continue;
    if (key == "d") cfg.d = std::stoi(value);
    else if (key == "beta") cfg.beta = std::stod(value);
    else if (key == "lambda") cfg.lambda = std::stod(value);
    else if (key == "h_star") cfg.h_star = std::stod(value);
    else if (key == "target") cfg.target = value;
    else if (key == "n_ladder") {
      cfg.n_ladder.clear();
      std::stringstream ss(value);
      std::string tok;
      while (std::getline(ss, tok, ',')) cfg.n_ladder.push_back(std::stoull(trim(tok)));
    } else if (key == "seeds_per_n") cfg.seeds_per_n = std::stoi(value);
    else if (key == "base_seed") cfg.base_seed = std::stoull(value);
    else if (key == "gen_hidden") cfg.gen_hidden = std::stoi(value);
    else if (key == "gen_width") cfg.gen_width = std::stoi(value);
    else if (key == "disc_hidden") cfg.disc_hidden = std::stoi(value);
    else if (key == "disc_width") cfg.disc_width = std::stoi(value);
    else if (key == "epochs") cfg.training.outer_steps = std::stoi(value);
    else if (key == "k_disc") cfg.training.disc_steps_per_gen = std::stoi(value);
    else if (key == "lr_gen") cfg.training.lr_gen = std::stod(value);
    else if (key == "lr_disc") cfg.training.lr_disc = std::stod(value);
    else if (key == "d_min") cfg.training.d_min = std::stod(value);
    else if (key == "d_max") cfg.training.d_max = std::stod(value);
    else if (key == "init_noise") cfg.training.init_noise = std::stod(value);
    else if (key == "quad_nodes") cfg.quad_nodes = std::stoi(value);
    else if (key == "fit_iterations") cfg.fit_iterations = std::stoi(value);
    else if (key == "out_csv") cfg.out_csv = value;
    else if (key == "out_jsonl") cfg.out_jsonl = value;
    else if (key == "out_svg") cfg.out_svg = value;
    else throw std::runtime_error("parse_experiment_config: unknown key " + key);
  }
  cfg.validate();
  return cfg;
}

std::shared_ptr<const DiffMap> make_target(const std::string& spec, int d) {
  auto first = spec.find(':');
  std::string kind = spec.substr(0, first);
  if (kind == "sine") {
    double amp = std::stod(spec.substr(first + 1));
    return std::make_shared<SineMap>(d, amp);
  }
  if (kind == "affine") {
    auto second = spec.find(':', first + 1);
    double offset = std::stod(spec.substr(first + 1, second - first - 1));
    double slope = std::stod(spec.substr(second + 1));
    return std::make_shared<RequMap>(affine_net(d, offset, slope));
  }
  if (kind == "identity") return std::make_shared<IdentityMap>(d);
  throw std::invalid_argument("make_target: unknown target spec " + spec);
}

namespace {

// Supervised fit of the generator class to the target map on a lattice;
// measures what the class can achieve independently of the adversarial
// estimator.
RequNet fit_generator_to_target(const Architecture& arch, const DiffMap& target, double lambda,
                                int iterations, int grid_res, std::uint64_t seed) {
  const int d = target.dim();
  std::vector<Eigen::VectorXd> ys, ts;
  std::vector<int> idx(d, 0);
  std::size_t total = 1;
  for (int k = 0; k < d; ++k) total *= grid_res;
  for (std::size_t t = 0; t < total; ++t) {
    Eigen::VectorXd y(d);
    for (int k = 0; k < d; ++k) y[k] = static_cast<double>(idx[k]) / (grid_res - 1);
    ys.push_back(y);
    ts.push_back(target.value(y));
    for (int k = d - 1; k >= 0; --k) {
      if (++idx[k] < grid_res) break;
      idx[k] = 0;
    }
  }
  return fit_generator_to_points(arch, ys, ts, lambda, 0.05, iterations, seed);
}

}  // namespace

std::vector<RateRecord> run_rate_experiment(const ExperimentConfig& config) {
  config.validate();
  auto target = make_target(config.target, config.d);
  PushforwardDensity p_star(target, config.lambda);
  DensityFn p_star_fn = p_star.as_fn();
  QuadratureScheme quad = gauss_legendre_rule(config.d, config.quad_nodes, 2);

  Architecture gen_arch(config.gen_hidden, [&] {
    std::vector<int> w(config.gen_hidden + 2, config.gen_width);
    w.front() = config.d;
    w.back() = config.d;
    return w;
  }());
  Architecture disc_arch(config.disc_hidden, [&] {
    std::vector<int> w(config.disc_hidden + 2, config.disc_width);
    w.front() = config.d;
    w.back() = 1;
    return w;
  }());

  // class-approximation proxy, independent of n and of the data
  double delta_g_proxy = 0.0;
  {
    RequNet fit = fit_generator_to_target(gen_arch, *target, config.training.lambda_trust,
                                          config.fit_iterations, config.d == 1 ? 65 : 17,
                                          config.base_seed ^ 0xf17f17ULL);
    GeneratorDensity p_fit(fit, config.training.lambda_trust);
    delta_g_proxy = js(p_star_fn, p_fit.as_fn_zero_extended(), quad).value;
  }

  const std::size_t cells = config.n_ladder.size() * config.seeds_per_n;
  std::vector<RateRecord> records(cells);
  Rng root(config.base_seed);
  parallel_for(cells, [&](std::size_t cell) {
    auto t0 = std::chrono::steady_clock::now();
    std::size_t n_idx = cell / config.seeds_per_n;
    std::uint64_t seed_idx = cell % config.seeds_per_n;
    RateRecord& rec = records[cell];
    rec.n = config.n_ladder[n_idx];
    rec.seed = seed_idx;
    rec.delta_g_proxy = delta_g_proxy;
    Rng cell_rng = root.child(cell);
    try {
      Dataset data = sample_dataset(*target, rec.n, cell_rng.next_u64());
      TrainingConfig tc = config.training;
      tc.seed = cell_rng.next_u64();
      TrainingRun run = train(gen_arch, disc_arch, data, tc);
      GeneratorDensity p_hat(run.generator(), tc.lambda_trust);
      rec.js_estimate = js(p_star_fn, p_hat.as_fn_zero_extended(), quad).value;
    } catch (const std::exception& err) {
      rec.failed = true;
      rec.note = err.what();
    }
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  });
  return records;
}

void write_rate_csv(const std::vector<RateRecord>& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_rate_csv: cannot open " + path);
  out << "n,seed,js,delta_g_proxy\n";
  for (const auto& rec : records) {
    if (rec.failed) continue;
    out << rec.n << "," << rec.seed << "," << fmt_double(rec.js_estimate) << ","
        << fmt_double(rec.delta_g_proxy) << "\n";
  }
}

void write_rate_jsonl(const std::vector<RateRecord>& records, const ExperimentConfig& config,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_rate_jsonl: cannot open " + path);
  for (const auto& rec : records) {
    nlohmann::ordered_json j;
    j["n"] = rec.n;
    j["seed"] = rec.seed;
    j["js"] = rec.js_estimate;
    j["delta_g_proxy"] = rec.delta_g_proxy;
    j["failed"] = rec.failed;
    if (!rec.note.empty()) j["note"] = rec.note;
    j["wall_seconds"] = rec.wall_seconds;
    out << j.dump() << "\n";
  }
  nlohmann::ordered_json tail;
  tail["target"] = config.target;
  tail["n_ladder"] = config.n_ladder;
  tail["seeds_per_n"] = config.seeds_per_n;
  tail["epochs"] = config.training.outer_steps;
  out << tail.dump() << "\n";
}

std::vector<RateSummaryRow> summarize_records(const std::vector<RateRecord>& records) {
  std::map<std::size_t, std::vector<double>> by_n;
  for (const auto& rec : records) {
    if (!rec.failed) by_n[rec.n].push_back(rec.js_estimate);
  }
  std::vector<RateSummaryRow> rows;
  for (auto& [n, values] : by_n) {
    std::sort(values.begin(), values.end());
    rows.push_back({n, quantile_sorted(values, 0.5), quantile_sorted(values, 0.25),
                    quantile_sorted(values, 0.75)});
  }
  return rows;
}

RateSlope fit_rate_slope(const std::vector<RateRecord>& records, double beta, int d) {
  auto rows = summarize_records(records);
  if (rows.size() < 3) throw std::invalid_argument("fit_rate_slope: need at least 3 distinct n");
  std::vector<double> xs, ys;
  for (const auto& row : rows) {
    if (row.median <= 0.0) throw std::invalid_argument("fit_rate_slope: nonpositive median");
    xs.push_back(std::log(static_cast<double>(row.n)));
    ys.push_back(std::log(row.median));
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= xs.size();
  my /= ys.size();
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx <= 0.0) throw std::invalid_argument("fit_rate_slope: zero-variance abscissa");
  RateSlope fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  fit.target_slope = -2.0 * beta / (2.0 * beta + d);
  return fit;
}

double spearman_n_vs_median(const std::vector<RateRecord>& records) {
  auto rows = summarize_records(records);
  const std::size_t m = rows.size();
  if (m < 2) throw std::invalid_argument("spearman: need at least two rungs");
  // rows are sorted by n, so the n-ranks are 0..m-1
  std::vector<double> ranks(m);
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return rows[a].median < rows[b].median; });
  for (std::size_t r = 0; r < m; ++r) ranks[order[r]] = static_cast<double>(r);
  double mean = (m - 1) / 2.0;
  double num = 0.0, den_a = 0.0, den_b = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double a = static_cast<double>(i) - mean;
    double b = ranks[i] - mean;
    num += a * b;
    den_a += a * a;
    den_b += b * b;
  }
  return num / std::sqrt(den_a * den_b);
}

void emit_plot_data(const std::vector<RateRecord>& records, double beta, int d,
                    const std::string& csv_path, const std::string& svg_path) {
  auto rows = summarize_records(records);
  if (rows.empty()) throw std::invalid_argument("emit_plot_data: no records");
  {
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("emit_plot_data: cannot open " + csv_path);
    out << "n,median_js,q25,q75\n";
    for (const auto& row : rows) {
      out << row.n << "," << fmt_double(row.median) << "," << fmt_double(row.q25) << ","
          << fmt_double(row.q75) << "\n";
    }
  }
  if (svg_path.empty()) return;

  const double W = 640, H = 480, ml = 70, mr = 20, mt = 20, mb = 50;
  double x_lo = std::log(static_cast<double>(rows.front().n));
  double x_hi = std::log(static_cast<double>(rows.back().n));
  double y_lo = std::numeric_limits<double>::infinity(), y_hi = -y_lo;
  for (const auto& row : rows) {
    double v = std::log(std::max(row.median, 1e-12));
    y_lo = std::min(y_lo, v);
    y_hi = std::max(y_hi, v);
  }
  double guide_slope = -2.0 * beta / (2.0 * beta + d);
  // include the guide line endpoints in the y range
  double g0 = std::log(std::max(rows.front().median, 1e-12));
  double g1 = g0 + guide_slope * (x_hi - x_lo);
  y_lo = std::min({y_lo, g0, g1});
  y_hi = std::max({y_hi, g0, g1});
  if (y_hi - y_lo < 1e-9) y_hi = y_lo + 1.0;
  if (x_hi - x_lo < 1e-9) x_hi = x_lo + 1.0;

  auto px = [&](double lx) { return ml + (lx - x_lo) / (x_hi - x_lo) * (W - ml - mr); };
  auto py = [&](double ly) { return H - mb - (ly - y_lo) / (y_hi - y_lo) * (H - mt - mb); };
  char buf[256];
  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" "
         "viewBox=\"0 0 640 480\">\n";
  svg += "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n",
                ml, H - mb, W - mr, H - mb);
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n",
                ml, mt, ml, H - mb);
  svg += buf;
  // median polyline
  std::string pts;
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", px(std::log(static_cast<double>(row.n))),
                  py(std::log(std::max(row.median, 1e-12))));
    pts += buf;
  }
  svg += "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"steelblue\"/>\n",
                  px(std::log(static_cast<double>(row.n))),
                  py(std::log(std::max(row.median, 1e-12))));
    svg += buf;
  }
  // theoretical guide line anchored at the first median
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"gray\" "
                "stroke-dasharray=\"6,4\"/>\n",
                px(x_lo), py(g0), px(x_hi), py(g1));
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%.1f\" y=\"%.1f\" font-size=\"13\">log n</text>\n", W / 2, H - 14.0);
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"14\" y=\"%.1f\" font-size=\"13\" transform=\"rotate(-90 14 %.1f)\">"
                "log JS</text>\n", H / 2, H / 2);
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" fill=\"gray\">guide slope %.4f"
                "</text>\n", W - 230.0, mt + 16.0, guide_slope);
  svg += buf;
  svg += "</svg>\n";
  std::ofstream out(svg_path);
  if (!out) throw std::runtime_error("emit_plot_data: cannot open " + svg_path);
  out << svg;
}

}  // namespace gandens
