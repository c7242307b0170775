#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "zomax/estimators.hpp"
#include "zomax/projections.hpp"

namespace zomax {

/// How the inner maximization step obtains its ascent direction.
enum class YMode {
  FoPga,  ///< analytic gradient ascent (requires grad_y)
  ZoPga,  ///< zeroth-order ascent (estimator queries only)
};

// A constrained min-max instance: min over x in x_set of max over y in y_set
// of E[f(x, y; xi)]. The oracle is the single source of objective values.
// Optional closures unlock solvers and diagnostics:
//   grad_x / grad_y  analytic gradients of the expected objective,
//   inner_max        exact/high-accuracy argmax over y at fixed x,
//   pair_losses      per-component losses for finite-sum reductions.
// Metric hooks are evaluated at every trace record (`metrics`) or once at the
// final iterate (`final_metrics`); neither touches the query ledger.
struct MetricHook {
  std::string name;
  std::function<double(const Vec& x, const Vec& y)> fn;
};

struct MinMaxProblem {
  StochasticOracle oracle;
  ConstraintSet x_set;
  ConstraintSet y_set;
  std::function<Vec(const Vec& x, const Vec& y)> grad_x;
  std::function<Vec(const Vec& x, const Vec& y)> grad_y;
  std::function<Vec(const Vec& x)> inner_max;
  std::function<Vec(const Vec& x)> pair_losses;
  std::vector<MetricHook> metrics;
  std::vector<MetricHook> final_metrics;
};

struct SolverConfig {
  double alpha = 0.0;  ///< x step size, > 0
  double beta = 0.0;   ///< y step size, > 0 (also used by the gap diagnostic)
  int iters = 0;       ///< outer iterations T, >= 1
  EstimatorConfig est_x{};
  std::optional<EstimatorConfig> est_y;  ///< defaults to est_x when absent
  YMode y_mode = YMode::ZoPga;
  std::uint64_t seed = 0;
  int gap_every = 1;  ///< gap diagnostic cadence; 0 disables (final iterate only)
  std::optional<Vec> x0;  ///< projected onto x_set; default: projected origin
  std::optional<Vec> y0;  ///< projected onto y_set; default: y_set center
};

// One trace row. `objective` is a fresh-minibatch estimate (exact value for
// deterministic objectives); `gap` is present on diagnostic iterations only.
// `queries` is the cumulative ledger total; diagnostics never count.
struct TraceRecord {
  int iter = 0;
  Vec x;
  Vec y;
  double objective = 0.0;
  std::optional<double> gap;
  std::uint64_t queries = 0;
  double wall_ms = 0.0;
  std::vector<double> metrics;
};

struct SolverTrace {
  std::vector<std::string> metric_names;
  std::vector<TraceRecord> records;
  bool aborted = false;   ///< true when the run stopped early on an oracle failure
  std::string error;
};

// Alternating zeroth-order projected descent/ascent: each iteration takes an
// x block step from estimated gradients, then a y block step (estimated or
// analytic per y_mode) at the fresh x. Query cost per iteration:
// b_x(q_x + 1) + b_y(q_y + 1) when two-sided, b_x(q_x + 1) when y_mode is
// analytic; b_* collapses to 1 on deterministic objectives.
SolverTrace zo_min_max(const MinMaxProblem& problem, const SolverConfig& cfg);

/// Same alternation with analytic gradients on both blocks (zero queries).
SolverTrace fo_min_max(const MinMaxProblem& problem, const SolverConfig& cfg);

/// Zeroth-order projected descent on phi(x) = f(x, inner_max(x)); requires
/// inner_max. Every estimator query resolves the inner problem first.
SolverTrace zo_pgd_reduced(const MinMaxProblem& problem, const SolverConfig& cfg);

/// Zeroth-order projected descent on the plain average of pair_losses,
/// ignoring the adversarial weighting; requires pair_losses. The y block
/// stays at its initial point; the trace gap is the x-block projected
/// residual of the averaged objective.
SolverTrace zo_finite_sum(const MinMaxProblem& problem, const SolverConfig& cfg);

// First-order stationarity residual at (x, y): the norm of the stacked
// projected-gradient displacements
//   [(x - proj_X(x - alpha*grad_x)) / alpha; (y - proj_Y(y + beta*grad_y)) / beta].
// Zero iff (x, y) is a first-order saddle point of the constrained problem.
// Uses analytic gradients when present, otherwise central differences
// (step 1e-5) on the exact oracle; never query-counted.
double stationary_gap(const MinMaxProblem& problem, const Vec& x, const Vec& y,
                      double alpha, double beta);

// Convergence-theory step sizes for gradient-Lipschitz objectives that are
// gamma-strongly concave in y:
//   beta  = gamma / (8 * L_y^2)
//   alpha = 1 / (L_x + 4*L_x^2/(gamma^2*beta) + beta*L_x^2)
// plus the admissibility flags of the sublinear-rate guarantee, reported
// as stated there: beta < 1/(4*L_y^2) and
// alpha <= min{1/L_x, 1/(L_x/2 + 2*L_x^2/(gamma^2*beta) + beta*L_x^2/2)}.
struct TheoryRates {
  double alpha = 0.0;
  double beta = 0.0;
  bool beta_admissible = false;
  bool alpha_admissible = false;
};

TheoryRates theory_rates(double gamma, double lip_x, double lip_y);

}  // namespace zomax
