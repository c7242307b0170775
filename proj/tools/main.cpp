// Command-line front end: run experiments from config files, compare and
// chart trace CSVs, and generate synthetic datasets.
//
// Exit codes: 0 success, 1 configuration/validation errors, 2 runtime
// failures (oracle or I/O).

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "zomax/harness.hpp"

namespace {

int cmd_run(const std::string& config_path) {
  const zomax::ExperimentConfig cfg = zomax::parse_config(config_path);
  const zomax::RunSummary summary = zomax::run_experiment(cfg);
  const zomax::SummaryStats stats = zomax::summary_stats(summary);

  std::printf("%s %s: %d trial(s), %d failed -> %s\n", cfg.problem.c_str(),
              cfg.solver.c_str(), static_cast<int>(summary.trials.size()),
              summary.failed_count, summary.out_dir.c_str());
  for (const auto& t : summary.trials) {
    if (t.failed) {
      std::printf("  trial %d: FAILED (%s)\n", t.trial, t.error.c_str());
    } else {
      std::printf("  trial %d: objective %.6g  gap %.6g  queries %llu\n", t.trial,
                  t.objective, t.gap, static_cast<unsigned long long>(t.queries));
    }
  }
  std::printf("  %-12s %14s %14s\n", "column", "mean", "stddev");
  for (std::size_t k = 0; k < stats.columns.size(); ++k) {
    std::printf("  %-12s %14.6g %14.6g\n", stats.columns[k].c_str(), stats.mean[k],
                stats.stddev[k]);
  }
  if (summary.failed_count > 0) {
    std::fprintf(stderr, "%d trial(s) failed\n", summary.failed_count);
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zeroth-order constrained min-max optimization harness"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "run the experiment described by a config file");
  run->add_option("config", config_path, "key=value config file")->required();

  std::vector<std::string> traces;
  std::string metric = "objective";
  auto* compare = app.add_subcommand("compare", "tabulate one metric across trace CSVs");
  compare->add_option("traces", traces, "trace CSV files")->required()->expected(-1);
  compare->add_option("--metric", metric, "metric column (objective, gap, or a problem metric)");

  std::vector<std::string> chart_traces;
  std::string chart_metric = "objective";
  std::string chart_out = "chart.svg";
  bool chart_log = false;
  auto* chart = app.add_subcommand("chart", "render one metric across trace CSVs to SVG");
  chart->add_option("traces", chart_traces, "trace CSV files")->required()->expected(-1);
  chart->add_option("--metric", chart_metric, "metric column");
  chart->add_option("--out", chart_out, "output SVG path");
  chart->add_flag("--log", chart_log, "log-scale the value axis");

  int gen_n = 1000;
  int gen_d = 100;
  std::uint64_t gen_seed = 1;
  std::string gen_out = "data.csv";
  auto* gen = app.add_subcommand("gen-data", "write a synthetic classification dataset CSV");
  gen->add_option("--n", gen_n, "number of samples");
  gen->add_option("--d", gen_d, "feature dimension");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--out", gen_out, "output CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (run->parsed()) return cmd_run(config_path);
    if (compare->parsed()) {
      std::cout << zomax::compare_runs(traces, metric);
      return 0;
    }
    if (chart->parsed()) {
      zomax::render_chart(chart_traces, chart_metric, chart_out, chart_log);
      std::cout << "wrote " << chart_out << "\n";
      return 0;
    }
    if (gen->parsed()) {
      const zomax::LogRegData data = zomax::gen_synthetic_logreg(gen_n, gen_d, gen_seed);
      zomax::write_logreg_csv(data, gen_out);
      std::cout << "wrote " << gen_out << " (" << data.features.rows() << " rows, "
                << data.features.cols() << " features)\n";
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
