#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "zomax/problems.hpp"

namespace zomax {

// Fully resolved experiment description, normally produced by parse_config.
// Field names mirror the flat key=value config keys.
struct ExperimentConfig {
  std::string problem;  ///< quadratic | toy | poison | ensemble
  std::string solver;   ///< zo-min-max | fo-min-max | zo-pgd | zo-finite-sum
  double alpha = 0.0;
  double beta = 0.0;
  int iters = 0;
  std::uint64_t seed = 0;
  int trials = 1;
  int gap_every = 1;
  EstimatorConfig est_x{5e-3, 10, 1};
  std::optional<EstimatorConfig> est_y;  ///< y-side knobs; defaults to est_x
  YMode y_mode = YMode::FoPga;
  bool random_init = false;    ///< uniform feasible starts instead of defaults
  bool wall_in_trace = false;  ///< emit wall_ms cells (breaks byte-identical reruns)
  std::string out_dir = "runs";
  std::string data_path;  ///< poison only: load this dataset CSV instead of generating

  int qs_dim = 2;
  double qs_box = 1.0;
  double qs_coupling = 1.0;
  int qs_samples = 0;
  double qs_shift = 0.0;
  std::uint64_t qs_data_seed = 1;

  int po_n = 1000;
  int po_d = 100;
  double po_ratio = 0.15;
  double po_eps = 2.0;
  double po_lambda = 1e-3;
  double po_theta_box = 100.0;
  std::uint64_t po_data_seed = 1;

  int en_models = 2;
  int en_classes = 2;
  int en_dim = 10;
  int en_per_class = 20;
  double en_eps = 0.5;
  double en_lambda = 5.0;
  double en_mean_scale = 1.0;
  double en_weight_noise = 0.3;
  std::uint64_t en_data_seed = 7;
};

// Parses a flat key=value file ('#' starts a comment). Unknown keys,
// malformed values, missing required keys (problem, solver, alpha, beta,
// iters, seed), and incompatible problem/solver combinations raise
// invalid_argument naming the offending line.
ExperimentConfig parse_config(const std::string& path);

/// Instantiates the configured problem (data generation included).
MinMaxProblem build_problem(const ExperimentConfig& cfg);

struct TrialResult {
  int trial = 0;
  bool failed = false;
  std::string error;
  std::uint64_t queries = 0;
  double wall_ms = 0.0;
  double objective = 0.0;
  double gap = 0.0;
  std::vector<double> finals;  ///< per-metric final values (summary column order)
  std::string trace_path;
};

struct RunSummary {
  std::string out_dir;
  std::vector<std::string> metric_names;  ///< per-record metrics then final-only hooks
  std::vector<TrialResult> trials;
  int failed_count = 0;
};

// Runs `trials` independent solves (trial k uses seed + k), writing
// trace_trial<k>.csv per trial and summary.csv to the output directory
// (ZOMAX_OUT_DIR overrides out_dir when set). A trial that aborts on an
// oracle failure is recorded as failed; the remaining trials still run.
RunSummary run_experiment(const ExperimentConfig& cfg);

struct SummaryStats {
  std::vector<std::string> columns;  ///< queries, wall_ms, objective, gap, metrics...
  std::vector<double> mean;          ///< over successful trials
  std::vector<double> stddev;        ///< sample standard deviation
};

SummaryStats summary_stats(const RunSummary& summary);

// Trace CSV: header iter,queries,wall_ms,objective,gap,<metrics...>; floats
// as %.17g so a read/write round trip is byte-identical. gap cells are empty
// off the diagnostic cadence; wall_ms cells are empty unless include_wall.
void write_trace_csv(const SolverTrace& trace, const std::string& path,
                     bool include_wall = false);

/// Reads a trace CSV back (iterate vectors are not serialized and stay empty).
SolverTrace read_trace_csv(const std::string& path);

// Fixed-width text table comparing one metric column across runs: final
// value, best (minimum) value, first iteration settled within 5% of final,
// and total queries. `metric` may be objective, gap, or any metric column.
std::string compare_runs(const std::vector<std::string>& trace_paths,
                         const std::string& metric);

// Self-contained SVG line chart of one metric column across runs (series
// ordered as given; log_scale drops non-positive values). Deterministic
// output for identical inputs.
void render_chart(const std::vector<std::string>& trace_paths,
                  const std::string& metric, const std::string& out_path,
                  bool log_scale = false);

}  // namespace zomax
