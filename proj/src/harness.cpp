#include "zomax/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <utility>

namespace fs = std::filesystem;

namespace zomax {

namespace {

std::string g17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string g6(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

// ---- config file ----------------------------------------------------------

struct KvFile {
  std::string path;
  // key -> (value, line number); entries are consumed as they are read so
  // leftovers can be reported as unknown keys.
  std::map<std::string, std::pair<std::string, int>> kv;

  std::string context(const std::string& key) const {
    const auto it = kv.find(key);
    return path + " line " + std::to_string(it->second.second) + " (" + key + ")";
  }

  bool has(const std::string& key) const { return kv.count(key) > 0; }

  std::string take_str(const std::string& key, const std::string& fallback) {
    const auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    std::string v = it->second.first;
    kv.erase(it);
    return v;
  }

  std::string take_required(const std::string& key) {
    if (!has(key)) {
      throw std::invalid_argument(path + ": missing required key '" + key + "'");
    }
    return take_str(key, "");
  }

  double parse_double(const std::string& key, const std::string& raw) const {
    char* end = nullptr;
    const double v = std::strtod(raw.c_str(), &end);
    if (end == raw.c_str() || *end != '\0' || !std::isfinite(v)) {
      throw std::invalid_argument(context(key) + ": expected a finite number, got '" + raw + "'");
    }
    return v;
  }

  double take_double(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const double v = parse_double(key, kv.at(key).first);
    kv.erase(key);
    return v;
  }

  double take_double_required(const std::string& key) {
    if (!has(key)) {
      throw std::invalid_argument(path + ": missing required key '" + key + "'");
    }
    return take_double(key, 0.0);
  }

  long long parse_int(const std::string& key, const std::string& raw) const {
    char* end = nullptr;
    const long long v = std::strtoll(raw.c_str(), &end, 10);
    if (end == raw.c_str() || *end != '\0') {
      throw std::invalid_argument(context(key) + ": expected an integer, got '" + raw + "'");
    }
    return v;
  }

  int take_int(const std::string& key, int fallback) {
    if (!has(key)) return fallback;
    const long long v = parse_int(key, kv.at(key).first);
    kv.erase(key);
    return static_cast<int>(v);
  }

  std::uint64_t take_u64(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const std::string raw = kv.at(key).first;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(raw.c_str(), &end, 10);
    if (end == raw.c_str() || *end != '\0' || raw.find('-') != std::string::npos) {
      throw std::invalid_argument(context(key) + ": expected an unsigned integer, got '" + raw + "'");
    }
    kv.erase(key);
    return v;
  }

  bool take_bool(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const std::string raw = kv.at(key).first;
    if (raw != "true" && raw != "false") {
      throw std::invalid_argument(context(key) + ": expected true or false, got '" + raw + "'");
    }
    kv.erase(key);
    return raw == "true";
  }
};

KvFile load_kv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config: " + path);
  KvFile file;
  file.path = path;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(path + " line " + std::to_string(line_no) +
                                  ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw std::invalid_argument(path + " line " + std::to_string(line_no) + ": empty key");
    }
    if (file.kv.count(key)) {
      throw std::invalid_argument(path + " line " + std::to_string(line_no) +
                                  ": duplicate key '" + key + "'");
    }
    file.kv[key] = {val, line_no};
  }
  return file;
}

bool deterministic_objective(const ExperimentConfig& cfg) {
  if (cfg.problem == "toy" || cfg.problem == "ensemble") return true;
  if (cfg.problem == "quadratic") return cfg.qs_samples == 0;
  return false;
}

}  // namespace

ExperimentConfig parse_config(const std::string& path) {
  KvFile file = load_kv(path);
  ExperimentConfig cfg;

  cfg.problem = file.take_required("problem");
  cfg.solver = file.take_required("solver");
  cfg.alpha = file.take_double_required("alpha");
  cfg.beta = file.take_double_required("beta");
  for (const char* key : {"iters", "seed"}) {
    if (!file.has(key)) {
      throw std::invalid_argument(path + ": missing required key '" + key + "'");
    }
  }
  cfg.iters = file.take_int("iters", 0);
  cfg.seed = file.take_u64("seed", 0);

  cfg.trials = file.take_int("trials", 1);
  cfg.gap_every = file.take_int("gap_every", 1);
  cfg.est_x.mu = file.take_double("mu", cfg.est_x.mu);
  cfg.est_x.q = file.take_int("q", cfg.est_x.q);
  cfg.est_x.b = file.take_int("b", cfg.est_x.b);
  if (file.has("mu_y") || file.has("q_y") || file.has("b_y")) {
    EstimatorConfig ey = cfg.est_x;
    ey.mu = file.take_double("mu_y", ey.mu);
    ey.q = file.take_int("q_y", ey.q);
    ey.b = file.take_int("b_y", ey.b);
    cfg.est_y = ey;
  }
  const std::string y_mode = file.take_str("y_mode", "fo");
  if (y_mode == "fo") {
    cfg.y_mode = YMode::FoPga;
  } else if (y_mode == "zo") {
    cfg.y_mode = YMode::ZoPga;
  } else {
    throw std::invalid_argument(path + ": y_mode must be fo or zo, got '" + y_mode + "'");
  }
  const std::string init = file.take_str("init", "default");
  if (init != "default" && init != "random") {
    throw std::invalid_argument(path + ": init must be default or random, got '" + init + "'");
  }
  cfg.random_init = init == "random";
  cfg.wall_in_trace = file.take_bool("wall_in_trace", false);
  cfg.out_dir = file.take_str("out", cfg.out_dir);
  cfg.data_path = file.take_str("data", "");

  cfg.qs_dim = file.take_int("qs_dim", cfg.qs_dim);
  cfg.qs_box = file.take_double("qs_box", cfg.qs_box);
  cfg.qs_coupling = file.take_double("qs_coupling", cfg.qs_coupling);
  cfg.qs_samples = file.take_int("qs_samples", cfg.qs_samples);
  cfg.qs_shift = file.take_double("qs_shift", cfg.qs_shift);
  cfg.qs_data_seed = file.take_u64("qs_data_seed", cfg.qs_data_seed);

  cfg.po_n = file.take_int("po_n", cfg.po_n);
  cfg.po_d = file.take_int("po_d", cfg.po_d);
  cfg.po_ratio = file.take_double("po_ratio", cfg.po_ratio);
  cfg.po_eps = file.take_double("po_eps", cfg.po_eps);
  cfg.po_lambda = file.take_double("po_lambda", cfg.po_lambda);
  cfg.po_theta_box = file.take_double("po_theta_box", cfg.po_theta_box);
  cfg.po_data_seed = file.take_u64("po_data_seed", cfg.po_data_seed);

  cfg.en_models = file.take_int("en_models", cfg.en_models);
  cfg.en_classes = file.take_int("en_classes", cfg.en_classes);
  cfg.en_dim = file.take_int("en_dim", cfg.en_dim);
  cfg.en_per_class = file.take_int("en_per_class", cfg.en_per_class);
  cfg.en_eps = file.take_double("en_eps", cfg.en_eps);
  cfg.en_lambda = file.take_double("en_lambda", cfg.en_lambda);
  cfg.en_mean_scale = file.take_double("en_mean_scale", cfg.en_mean_scale);
  cfg.en_weight_noise = file.take_double("en_weight_noise", cfg.en_weight_noise);
  cfg.en_data_seed = file.take_u64("en_data_seed", cfg.en_data_seed);

  if (!file.kv.empty()) {
    auto worst = file.kv.begin();
    for (auto it = file.kv.begin(); it != file.kv.end(); ++it) {
      if (it->second.second < worst->second.second) worst = it;
    }
    throw std::invalid_argument(path + " line " + std::to_string(worst->second.second) +
                                ": unknown key '" + worst->first + "'");
  }

  // Semantic validation.
  static const std::vector<std::string> problems = {"quadratic", "toy", "poison", "ensemble"};
  static const std::vector<std::string> solvers = {"zo-min-max", "fo-min-max", "zo-pgd",
                                                   "zo-finite-sum"};
  if (std::find(problems.begin(), problems.end(), cfg.problem) == problems.end()) {
    throw std::invalid_argument(path + ": unknown problem '" + cfg.problem +
                                "' (quadratic, toy, poison, ensemble)");
  }
  if (std::find(solvers.begin(), solvers.end(), cfg.solver) == solvers.end()) {
    throw std::invalid_argument(path + ": unknown solver '" + cfg.solver +
                                "' (zo-min-max, fo-min-max, zo-pgd, zo-finite-sum)");
  }
  if (!(cfg.alpha > 0.0)) throw std::invalid_argument(path + ": alpha must be positive");
  if (!(cfg.beta > 0.0)) throw std::invalid_argument(path + ": beta must be positive");
  if (cfg.iters < 1) throw std::invalid_argument(path + ": iters must be >= 1");
  if (cfg.trials < 1) throw std::invalid_argument(path + ": trials must be >= 1");
  if (cfg.gap_every < 0) throw std::invalid_argument(path + ": gap_every must be >= 0");
  cfg.est_x.validate();
  if (cfg.est_y) cfg.est_y->validate();

  if (cfg.problem == "ensemble" && cfg.solver == "fo-min-max") {
    throw std::invalid_argument(path +
                                ": problem 'ensemble' is oracle-only on the x side; "
                                "fo-min-max cannot run on it");
  }
  if (cfg.solver == "zo-finite-sum" && cfg.problem != "ensemble") {
    throw std::invalid_argument(path +
                                ": zo-finite-sum needs per-pair losses, which only "
                                "problem 'ensemble' provides");
  }
  if (deterministic_objective(cfg)) {
    const int by = cfg.est_y ? cfg.est_y->b : cfg.est_x.b;
    if (cfg.est_x.b != 1 || by != 1) {
      throw std::invalid_argument(path +
                                  ": b must be 1, the configured objective is "
                                  "deterministic (minibatches have no effect)");
    }
  }
  if (!cfg.data_path.empty() && cfg.problem != "poison") {
    throw std::invalid_argument(path + ": data= applies only to problem 'poison'");
  }
  return cfg;
}

MinMaxProblem build_problem(const ExperimentConfig& cfg) {
  if (cfg.problem == "quadratic") {
    QuadraticSaddleSpec spec = default_quadratic_spec(cfg.qs_dim, cfg.qs_box, cfg.qs_coupling,
                                                      cfg.qs_samples, cfg.qs_shift);
    spec.shift_seed = cfg.qs_data_seed;
    return quadratic_saddle(spec).problem;
  }
  if (cfg.problem == "toy") return toy_polynomial().problem;
  if (cfg.problem == "poison") {
    LogRegData data = cfg.data_path.empty()
                          ? gen_synthetic_logreg(cfg.po_n, cfg.po_d, cfg.po_data_seed)
                          : read_logreg_csv(cfg.data_path);
    PoisonSpec spec{.poison_ratio = cfg.po_ratio,
                    .epsilon = cfg.po_eps,
                    .lambda = cfg.po_lambda,
                    .theta_box = cfg.po_theta_box,
                    .subset_seed = mix_seed(cfg.po_data_seed, 2)};
    return poisoning_problem(std::move(data), spec).problem;
  }
  if (cfg.problem == "ensemble") {
    const EnsembleSpec spec{.models = cfg.en_models,
                            .classes = cfg.en_classes,
                            .feature_dim = cfg.en_dim,
                            .per_class = cfg.en_per_class,
                            .epsilon = cfg.en_eps,
                            .lambda = cfg.en_lambda,
                            .mean_scale = cfg.en_mean_scale,
                            .weight_noise = cfg.en_weight_noise,
                            .seed = cfg.en_data_seed};
    return ensemble_problem(spec).problem;
  }
  throw std::invalid_argument("unknown problem '" + cfg.problem + "'");
}

namespace {

SolverTrace dispatch_solver(const std::string& name, const MinMaxProblem& problem,
                            const SolverConfig& sc) {
  if (name == "zo-min-max") return zo_min_max(problem, sc);
  if (name == "fo-min-max") return fo_min_max(problem, sc);
  if (name == "zo-pgd") return zo_pgd_reduced(problem, sc);
  if (name == "zo-finite-sum") return zo_finite_sum(problem, sc);
  throw std::invalid_argument("unknown solver '" + name + "'");
}

std::string sanitize_cell(std::string s) {
  for (char& ch : s) {
    if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
  }
  return s;
}

void write_summary_csv(const RunSummary& summary, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "trial,status,queries,wall_ms,objective,gap";
  for (const auto& name : summary.metric_names) out << ',' << name;
  out << ",error\n";
  for (const auto& t : summary.trials) {
    out << t.trial << ',' << (t.failed ? "failed" : "ok") << ',' << t.queries << ','
        << g17(t.wall_ms) << ',' << g17(t.objective) << ',' << g17(t.gap);
    for (const double v : t.finals) out << ',' << g17(v);
    for (std::size_t k = t.finals.size(); k < summary.metric_names.size(); ++k) out << ',';
    out << ',' << sanitize_cell(t.error) << '\n';
  }
  const SummaryStats stats = summary_stats(summary);
  const auto emit_row = [&out, &stats](const char* label, const std::vector<double>& vals) {
    out << label << ',';
    for (std::size_t k = 0; k < stats.columns.size(); ++k) {
      out << ',' << (std::isnan(vals[k]) ? std::string() : g17(vals[k]));
    }
    out << ",\n";
  };
  emit_row("mean", stats.mean);
  emit_row("stddev", stats.stddev);
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace

RunSummary run_experiment(const ExperimentConfig& cfg) {
  const MinMaxProblem problem = build_problem(cfg);

  std::string out_dir = cfg.out_dir;
  if (const char* env = std::getenv("ZOMAX_OUT_DIR"); env != nullptr && *env != '\0') {
    out_dir = env;
  }
  fs::create_directories(out_dir);

  RunSummary summary;
  summary.out_dir = out_dir;
  for (const auto& hook : problem.metrics) summary.metric_names.push_back(hook.name);
  for (const auto& hook : problem.final_metrics) summary.metric_names.push_back(hook.name);

  for (int k = 0; k < cfg.trials; ++k) {
    SolverConfig sc;
    sc.alpha = cfg.alpha;
    sc.beta = cfg.beta;
    sc.iters = cfg.iters;
    sc.est_x = cfg.est_x;
    sc.est_y = cfg.est_y;
    sc.y_mode = cfg.y_mode;
    sc.seed = cfg.seed + static_cast<std::uint64_t>(k);
    sc.gap_every = cfg.gap_every;
    if (cfg.random_init) {
      RngStream init_rng(mix_seed(sc.seed, 0xA11CE5));
      sc.x0 = problem.x_set.sample_uniform(init_rng);
      sc.y0 = problem.y_set.sample_uniform(init_rng);
    }

    TrialResult tr;
    tr.trial = k;
    try {
      const SolverTrace trace = dispatch_solver(cfg.solver, problem, sc);
      tr.trace_path = out_dir + "/trace_trial" + std::to_string(k) + ".csv";
      write_trace_csv(trace, tr.trace_path, cfg.wall_in_trace);
      const TraceRecord& last = trace.records.back();
      tr.queries = last.queries;
      tr.wall_ms = last.wall_ms;
      tr.objective = last.objective;
      tr.gap = last.gap.value_or(std::numeric_limits<double>::quiet_NaN());
      tr.finals = last.metrics;
      for (const auto& hook : problem.final_metrics) {
        tr.finals.push_back(hook.fn(last.x, last.y));
      }
      if (trace.aborted) {
        tr.failed = true;
        tr.error = trace.error;
      }
    } catch (const OracleError& e) {
      tr.failed = true;
      tr.error = e.what();
    }
    if (tr.failed) ++summary.failed_count;
    summary.trials.push_back(std::move(tr));
  }

  write_summary_csv(summary, out_dir + "/summary.csv");
  return summary;
}

SummaryStats summary_stats(const RunSummary& summary) {
  SummaryStats stats;
  stats.columns = {"queries", "wall_ms", "objective", "gap"};
  for (const auto& name : summary.metric_names) stats.columns.push_back(name);
  const std::size_t cols = stats.columns.size();
  stats.mean.assign(cols, std::numeric_limits<double>::quiet_NaN());
  stats.stddev.assign(cols, std::numeric_limits<double>::quiet_NaN());

  std::vector<std::vector<double>> values(cols);
  for (const auto& t : summary.trials) {
    if (t.failed) continue;
    values[0].push_back(static_cast<double>(t.queries));
    values[1].push_back(t.wall_ms);
    values[2].push_back(t.objective);
    values[3].push_back(t.gap);
    for (std::size_t m = 0; m < summary.metric_names.size(); ++m) {
      values[4 + m].push_back(m < t.finals.size()
                                  ? t.finals[m]
                                  : std::numeric_limits<double>::quiet_NaN());
    }
  }
  for (std::size_t c = 0; c < cols; ++c) {
    const auto& v = values[c];
    if (v.empty()) continue;
    double sum = 0.0;
    for (const double x : v) sum += x;
    const double mean = sum / static_cast<double>(v.size());
    stats.mean[c] = mean;
    double ss = 0.0;
    for (const double x : v) ss += (x - mean) * (x - mean);
    stats.stddev[c] = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  }
  return stats;
}

// ---- trace CSV -------------------------------------------------------------

void write_trace_csv(const SolverTrace& trace, const std::string& path, bool include_wall) {
  for (const auto& name : trace.metric_names) {
    if (name.empty() || name.find_first_of(",\n\r") != std::string::npos) {
      throw std::invalid_argument("trace metric name unfit for CSV: '" + name + "'");
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "iter,queries,wall_ms,objective,gap";
  for (const auto& name : trace.metric_names) out << ',' << name;
  out << '\n';
  for (const auto& r : trace.records) {
    out << r.iter << ',' << r.queries << ',';
    if (include_wall) out << g17(r.wall_ms);
    out << ',' << g17(r.objective) << ',';
    if (r.gap) out << g17(*r.gap);
    for (const double m : r.metrics) out << ',' << g17(m);
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_cell_double(const std::string& s, const std::string& context) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw std::runtime_error(context + ": malformed number '" + s + "'");
  }
  return v;
}

}  // namespace

SolverTrace read_trace_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_line(line);
  const std::vector<std::string> fixed = {"iter", "queries", "wall_ms", "objective", "gap"};
  if (header.size() < fixed.size()) {
    throw std::runtime_error(path + ": not a trace file (truncated header)");
  }
  for (std::size_t k = 0; k < fixed.size(); ++k) {
    if (header[k] != fixed[k]) {
      throw std::runtime_error(path + ": not a trace file (column " + std::to_string(k) +
                               " is '" + header[k] + "', expected '" + fixed[k] + "')");
    }
  }
  SolverTrace trace;
  trace.metric_names.assign(header.begin() + fixed.size(), header.end());
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_line(line);
    const std::string context = path + " line " + std::to_string(line_no);
    if (cells.size() != header.size()) {
      throw std::runtime_error(context + ": expected " + std::to_string(header.size()) +
                               " cells, got " + std::to_string(cells.size()));
    }
    TraceRecord r;
    r.iter = static_cast<int>(parse_cell_double(cells[0], context));
    r.queries = static_cast<std::uint64_t>(parse_cell_double(cells[1], context));
    r.wall_ms = cells[2].empty() ? 0.0 : parse_cell_double(cells[2], context);
    r.objective = parse_cell_double(cells[3], context);
    if (!cells[4].empty()) r.gap = parse_cell_double(cells[4], context);
    for (std::size_t m = 5; m < cells.size(); ++m) {
      r.metrics.push_back(parse_cell_double(cells[m], context));
    }
    trace.records.push_back(std::move(r));
  }
  return trace;
}

// ---- comparison and charts -------------------------------------------------

namespace {

std::function<std::optional<double>(const TraceRecord&)> column_accessor(
    const SolverTrace& trace, const std::string& metric, const std::string& path) {
  if (metric == "objective") {
    return [](const TraceRecord& r) { return std::optional<double>(r.objective); };
  }
  if (metric == "gap") {
    return [](const TraceRecord& r) { return r.gap; };
  }
  for (std::size_t k = 0; k < trace.metric_names.size(); ++k) {
    if (trace.metric_names[k] == metric) {
      return [k](const TraceRecord& r) {
        return k < r.metrics.size() ? std::optional<double>(r.metrics[k]) : std::nullopt;
      };
    }
  }
  std::string have = "objective, gap";
  for (const auto& name : trace.metric_names) have += ", " + name;
  throw std::invalid_argument(path + ": no metric column '" + metric + "' (have: " + have + ")");
}

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (iter, value)
  std::uint64_t queries = 0;
};

std::vector<Series> load_series(const std::vector<std::string>& paths,
                                const std::string& metric) {
  std::vector<Series> out;
  for (const auto& path : paths) {
    const SolverTrace trace = read_trace_csv(path);
    const auto get = column_accessor(trace, metric, path);
    Series s;
    s.label = fs::path(path).stem().string();
    for (const auto& r : trace.records) {
      if (const auto v = get(r)) s.points.emplace_back(r.iter, *v);
      s.queries = r.queries;
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (const char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

}  // namespace

std::string compare_runs(const std::vector<std::string>& trace_paths,
                         const std::string& metric) {
  if (trace_paths.empty()) throw std::invalid_argument("compare: no runs given");
  const auto series = load_series(trace_paths, metric);

  struct Row {
    std::string name;
    double final_v = 0, best_v = 0;
    double settle_iter = 0;
    std::uint64_t queries = 0;
  };
  std::vector<Row> rows;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    if (s.points.empty()) {
      throw std::invalid_argument(trace_paths[k] + ": no values for metric '" + metric + "'");
    }
    Row row;
    row.name = s.label;
    row.final_v = s.points.back().second;
    row.best_v = s.points.front().second;
    for (const auto& [it, v] : s.points) row.best_v = std::min(row.best_v, v);
    const double tol = 0.05 * std::abs(row.final_v) + 1e-12;
    row.settle_iter = s.points.back().first;
    for (const auto& [it, v] : s.points) {
      if (std::abs(v - row.final_v) <= tol) {
        row.settle_iter = it;
        break;
      }
    }
    row.queries = s.queries;
    rows.push_back(std::move(row));
  }

  std::size_t name_w = 3;
  for (const auto& r : rows) name_w = std::max(name_w, r.name.size());
  std::ostringstream out;
  const auto pad = [&out](const std::string& s, std::size_t w) {
    out << s;
    for (std::size_t k = s.size(); k < w + 2; ++k) out << ' ';
  };
  pad("run", name_w);
  pad("final", 14);
  pad("best", 14);
  pad("settle_iter", 12);
  out << "queries\n";
  for (const auto& r : rows) {
    pad(r.name, name_w);
    pad(g6(r.final_v), 14);
    pad(g6(r.best_v), 14);
    pad(g6(r.settle_iter), 12);
    out << r.queries << '\n';
  }
  return out.str();
}

void render_chart(const std::vector<std::string>& trace_paths, const std::string& metric,
                  const std::string& out_path, bool log_scale) {
  if (trace_paths.empty()) throw std::invalid_argument("chart: no runs given");
  auto series = load_series(trace_paths, metric);
  if (log_scale) {
    for (auto& s : series) {
      std::erase_if(s.points, [](const auto& p) { return !(p.second > 0.0); });
    }
  }
  std::size_t total = 0;
  for (const auto& s : series) total += s.points.size();
  if (total == 0) {
    throw std::invalid_argument("chart: no plottable values for metric '" + metric + "'" +
                                (log_scale ? " on a log scale" : ""));
  }

  const auto tr_y = [log_scale](double v) { return log_scale ? std::log10(v) : v; };
  double x_min = 0, x_max = 0, y_min = 0, y_max = 0;
  bool first = true;
  for (const auto& s : series) {
    for (const auto& [it, v] : s.points) {
      const double ty = tr_y(v);
      if (first) {
        x_min = x_max = it;
        y_min = y_max = ty;
        first = false;
      } else {
        x_min = std::min(x_min, it);
        x_max = std::max(x_max, it);
        y_min = std::min(y_min, ty);
        y_max = std::max(y_max, ty);
      }
    }
  }
  if (x_max == x_min) x_max = x_min + 1.0;
  if (y_max == y_min) {
    y_min -= 1.0;
    y_max += 1.0;
  } else {
    const double pad = 0.05 * (y_max - y_min);
    y_min -= pad;
    y_max += pad;
  }

  const double px0 = 70, px1 = 830, py0 = 20, py1 = 470;
  const auto sx = [&](double x) { return px0 + (x - x_min) / (x_max - x_min) * (px1 - px0); };
  const auto sy = [&](double v) {
    return py1 - (tr_y(v) - y_min) / (y_max - y_min) * (py1 - py0);
  };
  const auto coord = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                   "#ff7f0e", "#9467bd", "#8c564b"};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"860\" height=\"520\" "
         "viewBox=\"0 0 860 520\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"860\" height=\"520\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << px0 << "\" y1=\"" << py1 << "\" x2=\"" << px1 << "\" y2=\"" << py1
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << px0 << "\" y1=\"" << py0 << "\" x2=\"" << px0 << "\" y2=\"" << py1
      << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = x_min + (x_max - x_min) * k / 4.0;
    const double gx = sx(fx);
    svg << "<line x1=\"" << coord(gx) << "\" y1=\"" << py1 << "\" x2=\"" << coord(gx)
        << "\" y2=\"" << py1 + 5 << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << coord(gx) << "\" y=\"" << py1 + 20
        << "\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"middle\">" << g6(fx)
        << "</text>\n";
    const double ty = y_min + (y_max - y_min) * k / 4.0;
    const double gy = py1 - (ty - y_min) / (y_max - y_min) * (py1 - py0);
    const double label = log_scale ? std::pow(10.0, ty) : ty;
    svg << "<line x1=\"" << px0 - 5 << "\" y1=\"" << coord(gy) << "\" x2=\"" << px0
        << "\" y2=\"" << coord(gy) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << px0 - 8 << "\" y=\"" << coord(gy + 4)
        << "\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"end\">"
        << g6(label) << "</text>\n";
  }
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    if (s.points.empty()) continue;
    svg << "<polyline fill=\"none\" stroke=\"" << kPalette[si % 6]
        << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [it, v] : s.points) {
      svg << coord(sx(it)) << ',' << coord(sy(v)) << ' ';
    }
    svg << "\"/>\n";
  }
  for (std::size_t si = 0; si < series.size(); ++si) {
    const double ly = py0 + 14 + 18 * static_cast<double>(si);
    svg << "<line x1=\"" << px1 - 220 << "\" y1=\"" << coord(ly - 4) << "\" x2=\""
        << px1 - 190 << "\" y2=\"" << coord(ly - 4) << "\" stroke=\"" << kPalette[si % 6]
        << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << px1 - 184 << "\" y=\"" << coord(ly)
        << "\" font-family=\"monospace\" font-size=\"12\">" << xml_escape(series[si].label)
        << "</text>\n";
  }
  svg << "<text x=\"" << (px0 + px1) / 2 << "\" y=\"510\" font-family=\"monospace\" "
         "font-size=\"13\" text-anchor=\"middle\">"
      << xml_escape(metric) << (log_scale ? " (log scale)" : "") << "</text>\n";
  svg << "</svg>\n";

  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + out_path);
  out << svg.str();
  if (!out) throw std::runtime_error("write failed: " + out_path);
}

}  // namespace zomax
