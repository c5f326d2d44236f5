#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gandens/gan.hpp"
#include "gandens/planner.hpp"
#include "gandens/pushforward.hpp"

namespace gandens {

struct RateRecord {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double js_estimate = 0.0;
  double delta_g_proxy = 0.0;
  bool failed = false;
  std::string note;
  double wall_seconds = 0.0;  // not persisted in the CSV
};

struct ExperimentConfig {
  int d = 1;
  double beta = 3.0;
  double lambda = 1.5;
  double h_star = 2.0;
  std::string target = "sine:0.05";  // or "affine:<offset>:<slope>"
  std::vector<std::size_t> n_ladder = {256, 512, 1024, 2048, 4096};
  int seeds_per_n = 3;
  std::uint64_t base_seed = 1;
  int gen_hidden = 2;
  int gen_width = 12;
  int disc_hidden = 1;
  int disc_width = 32;
  TrainingConfig training;
  int quad_nodes = 64;   // per axis, two panels
  int fit_iterations = 1500;  // supervised fit for the class-approximation proxy
  std::string out_csv = "rate.csv";
  std::string out_jsonl = "rate_runs.jsonl";
  std::string out_svg;

  void validate() const;
};

// Flat key=value text file; '#' starts a comment.
ExperimentConfig parse_experiment_config(const std::string& path);
std::shared_ptr<const DiffMap> make_target(const std::string& spec, int d);

// For each (n, seed) cell: record the planned architecture, sample data from
// the target, train, and evaluate JS(p_what, p_star) by quadrature.  Cells
// run concurrently on independent streams; failures are recorded and the run
// continues.
std::vector<RateRecord> run_rate_experiment(const ExperimentConfig& config);

void write_rate_csv(const std::vector<RateRecord>& records, const std::string& path);
void write_rate_jsonl(const std::vector<RateRecord>& records, const ExperimentConfig& config,
                      const std::string& path);

struct RateSlope {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double target_slope = 0.0;  // -2 beta / (2 beta + d)
};

// Least squares of log(median js) on log n; needs at least three distinct n.
RateSlope fit_rate_slope(const std::vector<RateRecord>& records, double beta, int d);

// Spearman rank correlation of (n, median js).
double spearman_n_vs_median(const std::vector<RateRecord>& records);

// median/quartile summary rows (n, median, q25, q75)
struct RateSummaryRow {
  std::size_t n = 0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
};
std::vector<RateSummaryRow> summarize_records(const std::vector<RateRecord>& records);

// CSV summary plus a log-log SVG chart with a guide line of the theoretical
// slope.
void emit_plot_data(const std::vector<RateRecord>& records, double beta, int d,
                    const std::string& csv_path, const std::string& svg_path);

}  // namespace gandens
