#include "zomax/solvers.hpp"

#include <chrono>
#include <cmath>
#include <utility>

namespace zomax {

namespace {

void validate_common(const MinMaxProblem& prob, const SolverConfig& cfg) {
  if (!prob.oracle.eval) throw std::invalid_argument("solver: problem has no oracle");
  if (!(cfg.alpha > 0.0) || !std::isfinite(cfg.alpha)) {
    throw std::invalid_argument("solver: alpha must be positive and finite");
  }
  if (!(cfg.beta > 0.0) || !std::isfinite(cfg.beta)) {
    throw std::invalid_argument("solver: beta must be positive and finite");
  }
  if (cfg.iters < 1) throw std::invalid_argument("solver: iters must be >= 1");
  if (cfg.gap_every < 0) throw std::invalid_argument("solver: gap_every must be >= 0");
}

Vec initial_x(const MinMaxProblem& prob, const SolverConfig& cfg) {
  if (cfg.x0) return prob.x_set.project(*cfg.x0);
  return prob.x_set.project(Vec::Zero(prob.x_set.dim()));
}

Vec initial_y(const MinMaxProblem& prob, const SolverConfig& cfg) {
  if (cfg.y0) return prob.y_set.project(*cfg.y0);
  return prob.y_set.center_point();
}

Vec checked_analytic(const std::function<Vec(const Vec&, const Vec&)>& grad,
                     const Vec& x, const Vec& y, const char* what) {
  Vec g = grad(x, y);
  if (!g.allFinite()) {
    throw OracleError(std::string(what) + " returned non-finite values");
  }
  return g;
}

// Appends trace rows: fresh-minibatch objective, gap on diagnostic
// iterations, metric hooks, cumulative ledger total. None of this counts
// queries.
struct Recorder {
  const MinMaxProblem& prob;
  const SolverConfig& cfg;
  RngStream& rng;
  QueryLedger& ledger;
  std::function<double(const Vec&, const Vec&)> objective_fn;  // null: oracle estimate
  std::function<double(const Vec&, const Vec&)> gap_fn;        // null: stationary_gap
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  SolverTrace trace;

  Recorder(const MinMaxProblem& p, const SolverConfig& c, RngStream& r, QueryLedger& l)
      : prob(p), cfg(c), rng(r), ledger(l) {
    for (const auto& hook : prob.metrics) trace.metric_names.push_back(hook.name);
  }

  double objective_estimate(const Vec& x, const Vec& y) {
    if (objective_fn) return objective_fn(x, y);
    if (prob.oracle.sample_count > 0) {
      const auto batch = draw_minibatch(prob.oracle.sample_count, cfg.est_x.b, rng);
      return checked_eval(prob.oracle, x, y, batch);
    }
    return checked_eval(prob.oracle, x, y, {});
  }

  void push(int iter, const Vec& x, const Vec& y) {
    TraceRecord rec;
    rec.iter = iter;
    rec.x = x;
    rec.y = y;
    rec.objective = objective_estimate(x, y);
    const bool gap_due =
        (cfg.gap_every > 0 && iter % cfg.gap_every == 0) || iter == cfg.iters;
    if (gap_due) {
      rec.gap = gap_fn ? gap_fn(x, y)
                       : stationary_gap(prob, x, y, cfg.alpha, cfg.beta);
    }
    rec.queries = ledger.total();
    rec.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    for (const auto& hook : prob.metrics) rec.metrics.push_back(hook.fn(x, y));
    trace.records.push_back(std::move(rec));
  }
};

}  // namespace

SolverTrace zo_min_max(const MinMaxProblem& prob, const SolverConfig& cfg) {
  validate_common(prob, cfg);
  cfg.est_x.validate();
  const EstimatorConfig est_y = cfg.est_y.value_or(cfg.est_x);
  if (cfg.y_mode == YMode::ZoPga) {
    est_y.validate();
  } else if (!prob.grad_y) {
    throw std::invalid_argument("zo_min_max: analytic y step requires grad_y");
  }

  RngStream rng(cfg.seed);
  QueryLedger ledger;
  Vec x = initial_x(prob, cfg);
  Vec y = initial_y(prob, cfg);
  Recorder rec(prob, cfg, rng, ledger);
  rec.push(0, x, y);
  try {
    for (int t = 1; t <= cfg.iters; ++t) {
      SideView hx = x_view(prob.oracle, y);
      hx.dim = static_cast<int>(x.size());
      const Vec gx = zo_gradient(hx, x, cfg.est_x, rng, ledger);
      x = prob.x_set.project(x - cfg.alpha * gx);

      Vec gy;
      if (cfg.y_mode == YMode::ZoPga) {
        SideView hy = y_view(prob.oracle, x);
        hy.dim = static_cast<int>(y.size());
        gy = zo_gradient(hy, y, est_y, rng, ledger);
      } else {
        gy = checked_analytic(prob.grad_y, x, y, "grad_y");
      }
      y = prob.y_set.project(y + cfg.beta * gy);
      rec.push(t, x, y);
    }
  } catch (const OracleError& e) {
    rec.trace.aborted = true;
    rec.trace.error = e.what();
  }
  return std::move(rec.trace);
}

SolverTrace fo_min_max(const MinMaxProblem& prob, const SolverConfig& cfg) {
  validate_common(prob, cfg);
  if (!prob.grad_x || !prob.grad_y) {
    throw std::invalid_argument("fo_min_max: problem provides no analytic gradients");
  }
  RngStream rng(cfg.seed);
  QueryLedger ledger;
  Vec x = initial_x(prob, cfg);
  Vec y = initial_y(prob, cfg);
  Recorder rec(prob, cfg, rng, ledger);
  rec.push(0, x, y);
  try {
    for (int t = 1; t <= cfg.iters; ++t) {
      const Vec gx = checked_analytic(prob.grad_x, x, y, "grad_x");
      x = prob.x_set.project(x - cfg.alpha * gx);
      const Vec gy = checked_analytic(prob.grad_y, x, y, "grad_y");
      y = prob.y_set.project(y + cfg.beta * gy);
      rec.push(t, x, y);
    }
  } catch (const OracleError& e) {
    rec.trace.aborted = true;
    rec.trace.error = e.what();
  }
  return std::move(rec.trace);
}

SolverTrace zo_pgd_reduced(const MinMaxProblem& prob, const SolverConfig& cfg) {
  validate_common(prob, cfg);
  cfg.est_x.validate();
  if (!prob.inner_max) {
    throw std::invalid_argument("zo_pgd_reduced: problem provides no inner_max");
  }
  const SideView reduced{
      .value =
          [&prob](const Vec& p, std::span<const int> idx) {
            return checked_eval(prob.oracle, p, prob.inner_max(p), idx);
          },
      .sample_count = prob.oracle.sample_count,
      .dim = prob.x_set.dim()};

  RngStream rng(cfg.seed);
  QueryLedger ledger;
  Vec x = initial_x(prob, cfg);
  Recorder rec(prob, cfg, rng, ledger);
  rec.push(0, x, prob.inner_max(x));
  try {
    for (int t = 1; t <= cfg.iters; ++t) {
      const Vec gx = zo_gradient(reduced, x, cfg.est_x, rng, ledger);
      x = prob.x_set.project(x - cfg.alpha * gx);
      rec.push(t, x, prob.inner_max(x));
    }
  } catch (const OracleError& e) {
    rec.trace.aborted = true;
    rec.trace.error = e.what();
  }
  return std::move(rec.trace);
}

SolverTrace zo_finite_sum(const MinMaxProblem& prob, const SolverConfig& cfg) {
  validate_common(prob, cfg);
  cfg.est_x.validate();
  if (!prob.pair_losses) {
    throw std::invalid_argument("zo_finite_sum: problem provides no pair_losses");
  }
  const SideView averaged{
      .value =
          [&prob](const Vec& p, std::span<const int>) {
            const Vec losses = prob.pair_losses(p);
            if (!losses.allFinite()) throw OracleError("pair losses are non-finite");
            return losses.mean();
          },
      .sample_count = 0,
      .dim = prob.x_set.dim()};

  RngStream rng(cfg.seed);
  QueryLedger ledger;
  Vec x = initial_x(prob, cfg);
  const Vec y = initial_y(prob, cfg);
  Recorder rec(prob, cfg, rng, ledger);
  rec.objective_fn = [&averaged](const Vec& p, const Vec&) {
    return averaged.value(p, {});
  };
  rec.gap_fn = [&prob, &averaged, alpha = cfg.alpha](const Vec& p, const Vec&) {
    const Vec g = finite_diff_reference(averaged, p, 1e-5);
    return ((p - prob.x_set.project(p - alpha * g)) / alpha).norm();
  };
  rec.push(0, x, y);
  try {
    for (int t = 1; t <= cfg.iters; ++t) {
      const Vec gx = zo_gradient(averaged, x, cfg.est_x, rng, ledger);
      x = prob.x_set.project(x - cfg.alpha * gx);
      rec.push(t, x, y);
    }
  } catch (const OracleError& e) {
    rec.trace.aborted = true;
    rec.trace.error = e.what();
  }
  return std::move(rec.trace);
}

double stationary_gap(const MinMaxProblem& prob, const Vec& x, const Vec& y,
                      double alpha, double beta) {
  if (!(alpha > 0.0) || !(beta > 0.0)) {
    throw std::invalid_argument("stationary_gap: step sizes must be positive");
  }
  Vec gx;
  if (prob.grad_x) {
    gx = checked_analytic(prob.grad_x, x, y, "grad_x");
  } else {
    SideView h = x_view(prob.oracle, y);
    h.dim = static_cast<int>(x.size());
    gx = finite_diff_reference(h, x, 1e-5);
  }
  Vec gy;
  if (prob.grad_y) {
    gy = checked_analytic(prob.grad_y, x, y, "grad_y");
  } else {
    SideView h = y_view(prob.oracle, x);
    h.dim = static_cast<int>(y.size());
    gy = finite_diff_reference(h, y, 1e-5);
  }
  const Vec rx = (x - prob.x_set.project(x - alpha * gx)) / alpha;
  const Vec ry = (y - prob.y_set.project(y + beta * gy)) / beta;
  return std::sqrt(rx.squaredNorm() + ry.squaredNorm());
}

TheoryRates theory_rates(double gamma, double lip_x, double lip_y) {
  if (!(gamma > 0.0) || !(lip_x > 0.0) || !(lip_y > 0.0)) {
    throw std::invalid_argument("theory_rates: constants must be positive");
  }
  TheoryRates r;
  r.beta = gamma / (8.0 * lip_y * lip_y);
  r.alpha = 1.0 / (lip_x + 4.0 * lip_x * lip_x / (gamma * gamma * r.beta) +
                   r.beta * lip_x * lip_x);
  r.beta_admissible = r.beta < 1.0 / (4.0 * lip_y * lip_y);
  const double half_curvature = lip_x / 2.0 +
                                2.0 * lip_x * lip_x / (gamma * gamma * r.beta) +
                                r.beta * lip_x * lip_x / 2.0;
  r.alpha_admissible =
      r.alpha <= std::min(1.0 / lip_x, 1.0 / half_curvature);
  return r;
}

}  // namespace zomax
