#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include "CLI11.hpp"
#include "gandens/divergence.hpp"
#include "gandens/lowerbound.hpp"
#include "gandens/planner.hpp"
#include "gandens/rate.hpp"
#include "gandens/verify.hpp"
#include "json.hpp"

namespace {

int run_plan(std::size_t n, double beta, int d, double h_star, double h_g, double lambda) {
  gandens::ArchPlan plan = gandens::plan_architecture(n, beta, d, h_star, h_g, lambda);
  nlohmann::ordered_json j;
  j["K"] = plan.K;
  j["generator"] = {{"hidden_layers", plan.gen_hidden},
                    {"width", plan.gen_width},
                    {"nonzero_budget", plan.gen_budget}};
  j["discriminator"] = {{"hidden_layers", plan.disc_hidden},
                        {"width", plan.disc_width},
                        {"nonzero_budget", plan.disc_budget}};
  j["inputs"] = {{"n", plan.n},       {"beta", plan.beta},     {"d", plan.d},
                 {"h_star", plan.h_star}, {"h_g", plan.h_g},   {"lambda", plan.lambda}};
  std::cout << j.dump(2) << "\n";
  return 0;
}

int run_rate(const std::string& config_path) {
  gandens::ExperimentConfig config = gandens::parse_experiment_config(config_path);
  auto records = gandens::run_rate_experiment(config);
  gandens::write_rate_csv(records, config.out_csv);
  gandens::write_rate_jsonl(records, config, config.out_jsonl);
  int failures = 0;
  for (const auto& rec : records) failures += rec.failed ? 1 : 0;
  std::cout << "records: " << records.size() << " (" << failures << " failed)\n";
  if (config.n_ladder.size() >= 3) {
    auto fit = gandens::fit_rate_slope(records, config.beta, config.d);
    std::cout << "fitted slope " << fit.slope << " (theoretical " << fit.target_slope
              << "), r^2 " << fit.r_squared << "\n";
    std::cout << "spearman(n, median js) " << gandens::spearman_n_vs_median(records) << "\n";
  }
  if (!config.out_svg.empty()) {
    gandens::emit_plot_data(records, config.beta, config.d, config.out_csv + ".summary.csv",
                            config.out_svg);
  }
  std::cout << "wrote " << config.out_csv << " and " << config.out_jsonl << "\n";
  return 0;
}

int run_verify(std::uint64_t seed, const std::string& out_path) {
  gandens::VerifyReport report = gandens::verify_all(seed);
  std::string json = gandens::report_to_json(report);
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    out << json << "\n";
  } else {
    std::cout << json << "\n";
  }
  for (const auto& suite : report.suites) {
    std::cout << (suite.pass ? "[pass] " : "[FAIL] ") << suite.name;
    if (!suite.pass) {
      for (const auto& check : suite.checks) {
        if (!check.pass) std::cout << "  <- " << check.name;
      }
    }
    std::cout << "\n";
  }
  std::cout << (report.pass ? "all suites passed" : "SUITE FAILURES") << "\n";
  return report.pass ? 0 : 1;
}

int run_lower_bound_lab(const std::string& config_path, const std::string& out_json,
                        const std::string& out_csv) {
  // flat key=value config: beta, d, lambda, n_ladder, prior_dim, prior_points, seed
  double beta = 3.0, lambda = 1.5;
  int d = 1, prior_dim = 4;
  std::size_t prior_points = 100000;
  std::uint64_t seed = 1;
  std::vector<std::size_t> ladder;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "cannot open " << config_path << "\n";
      return 2;
    }
    std::string line;
    while (std::getline(in, line)) {
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(0, eq);
      std::string value = line.substr(eq + 1);
      auto strip = [](std::string& s) {
        s.erase(0, s.find_first_not_of(" \t\r"));
        auto last = s.find_last_not_of(" \t\r");
        s.erase(last == std::string::npos ? 0 : last + 1);
      };
      strip(key);
      strip(value);
      if (key == "beta") beta = std::stod(value);
      else if (key == "lambda") lambda = std::stod(value);
      else if (key == "d") d = std::stoi(value);
      else if (key == "prior_dim") prior_dim = std::stoi(value);
      else if (key == "prior_points") prior_points = std::stoull(value);
      else if (key == "seed") seed = std::stoull(value);
      else if (key == "n_ladder") {
        std::stringstream ss(value);
        std::string tok;
        while (std::getline(ss, tok, ',')) ladder.push_back(std::stoull(tok));
      }
    }
  }
  if (ladder.empty()) {
    for (int e = 8; e <= 16; ++e) ladder.push_back(static_cast<std::size_t>(1) << e);
  }
  double j0 = gandens::prior_energy_coefficient(prior_dim, prior_points, seed);
  nlohmann::ordered_json j;
  j["beta"] = beta;
  j["d"] = d;
  j["lambda"] = lambda;
  j["prior_j0"] = j0;
  j["points"] = nlohmann::ordered_json::array();
  std::vector<double> log_n, log_b;
  std::ofstream csv;
  if (!out_csv.empty()) {
    csv.open(out_csv);
    csv << "n,bound\n";
  }
  for (std::size_t n : ladder) {
    auto pt = gandens::assembled_lower_bound(n, beta, d, lambda, j0);
    nlohmann::ordered_json row;
    row["n"] = pt.n;
    row["h"] = pt.h;
    row["m_density"] = pt.m_density;
    row["fisher_per_center"] = pt.fisher_per_center;
    row["bound"] = pt.value;
    j["points"].push_back(row);
    log_n.push_back(std::log(static_cast<double>(n)));
    log_b.push_back(std::log(pt.value));
    if (csv.is_open()) csv << n << "," << pt.value << "\n";
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < log_n.size(); ++i) {
    mx += log_n[i];
    my += log_b[i];
  }
  mx /= log_n.size();
  my /= log_b.size();
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < log_n.size(); ++i) {
    sxx += (log_n[i] - mx) * (log_n[i] - mx);
    sxy += (log_n[i] - mx) * (log_b[i] - my);
  }
  double slope = sxy / sxx;
  double target = -2.0 * beta / (2.0 * beta + d);
  j["slope"] = slope;
  j["target_slope"] = target;
  j["slope_ok"] = std::abs(slope - target) <= 0.05;
  if (!out_json.empty()) {
    std::ofstream out(out_json);
    out << j.dump(2) << "\n";
  } else {
    std::cout << j.dump(2) << "\n";
  }
  return 0;
}

int run_plot(const std::string& in_csv, const std::string& out_svg, double beta, int d) {
  // read (n, seed, js, ...) rows back into records
  std::ifstream in(in_csv);
  if (!in) {
    std::cerr << "cannot open " << in_csv << "\n";
    return 2;
  }
  std::vector<gandens::RateRecord> records;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    gandens::RateRecord rec;
    std::stringstream ss(line);
    std::string tok;
    std::getline(ss, tok, ',');
    rec.n = std::stoull(tok);
    std::getline(ss, tok, ',');
    rec.seed = std::stoull(tok);
    std::getline(ss, tok, ',');
    rec.js_estimate = std::stod(tok);
    records.push_back(rec);
  }
  gandens::emit_plot_data(records, beta, d, out_svg + ".summary.csv", out_svg);
  std::cout << "wrote " << out_svg << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial density estimation lab: planning, experiments, and bound checks"};
  app.require_subcommand(1);

  auto* plan = app.add_subcommand("plan", "network sizing for a sample size");
  std::size_t plan_n = 1024;
  double plan_beta = 3.0, plan_h_star = 2.0, plan_h_g = -1.0, plan_lambda = 1.5;
  int plan_d = 1;
  plan->add_option("--n", plan_n, "sample size")->required();
  plan->add_option("--beta", plan_beta, "smoothness index (> 2)")->required();
  plan->add_option("--d", plan_d, "dimension")->required();
  plan->add_option("--h-star", plan_h_star, "target smoothness bound")->required();
  plan->add_option("--h-g", plan_h_g, "generator-class smoothness bound (default 2 h*)");
  plan->add_option("--lambda", plan_lambda, "regularity bound");

  auto* rate = app.add_subcommand("rate", "convergence-rate experiment");
  std::string rate_config;
  rate->add_option("--config", rate_config, "key=value config file")->required();

  auto* verify = app.add_subcommand("verify-all", "run every property suite");
  std::uint64_t verify_seed = 20240801;
  std::string verify_out;
  verify->add_option("--seed", verify_seed, "master seed");
  verify->add_option("--out", verify_out, "report JSON path (stdout if omitted)");

  auto* lab = app.add_subcommand("lower-bound-lab", "assembled minimax lower bound");
  std::string lab_config, lab_json, lab_csv;
  lab->add_option("--config", lab_config, "key=value config file");
  lab->add_option("--out", lab_json, "report JSON path");
  lab->add_option("--csv", lab_csv, "(n, bound) CSV path");

  auto* plot = app.add_subcommand("plot", "log-log chart from a rate CSV");
  std::string plot_in, plot_out;
  double plot_beta = 3.0;
  int plot_d = 1;
  plot->add_option("--in", plot_in, "rate CSV")->required();
  plot->add_option("--out", plot_out, "SVG path")->required();
  plot->add_option("--beta", plot_beta, "smoothness index for the guide slope");
  plot->add_option("--d", plot_d, "dimension for the guide slope");

  CLI11_PARSE(app, argc, argv);

  try {
    if (plan->parsed()) return run_plan(plan_n, plan_beta, plan_d, plan_h_star, plan_h_g, plan_lambda);
    if (rate->parsed()) return run_rate(rate_config);
    if (verify->parsed()) return run_verify(verify_seed, verify_out);
    if (lab->parsed()) return run_lower_bound_lab(lab_config, lab_json, lab_csv);
    if (plot->parsed()) return run_plot(plot_in, plot_out, plot_beta, plot_d);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
  return 0;
}
