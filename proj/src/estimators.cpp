#include "zomax/estimators.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace zomax {

namespace {

double checked_view(const SideView& h, const Vec& p, std::span<const int> indices) {
  const double v = h.value(p, indices);
  if (!std::isfinite(v)) {
    throw OracleError("side view returned a non-finite value (" + std::to_string(v) + ")");
  }
  return v;
}

void validate_point(const SideView& h, const Vec& point, const char* what) {
  if (!h.value) throw std::invalid_argument(std::string(what) + ": view has no value function");
  if (point.size() < 1) throw std::invalid_argument(std::string(what) + ": empty point");
  if (!point.allFinite()) {
    throw std::invalid_argument(std::string(what) + ": point has non-finite entries");
  }
  if (h.dim > 0 && point.size() != h.dim) {
    throw std::invalid_argument(std::string(what) + ": point dimension " +
                                std::to_string(point.size()) + " does not match view dimension " +
                                std::to_string(h.dim));
  }
}

}  // namespace

void EstimatorConfig::validate() const {
  if (!(mu > 0.0) || !std::isfinite(mu)) {
    throw std::invalid_argument("estimator: mu must be positive and finite");
  }
  if (q < 1) throw std::invalid_argument("estimator: q must be >= 1");
  if (b < 1) throw std::invalid_argument("estimator: b must be >= 1");
}

SideView x_view(const StochasticOracle& oracle, Vec y_fixed) {
  return SideView{
      .value = [&oracle, y = std::move(y_fixed)](const Vec& p, std::span<const int> idx) {
        return checked_eval(oracle, p, y, idx);
      },
      .sample_count = oracle.sample_count,
      .dim = 0};
}

SideView y_view(const StochasticOracle& oracle, Vec x_fixed) {
  return SideView{
      .value = [&oracle, x = std::move(x_fixed)](const Vec& p, std::span<const int> idx) {
        return checked_eval(oracle, x, p, idx);
      },
      .sample_count = oracle.sample_count,
      .dim = 0};
}

Vec zo_gradient_given(const SideView& h, const Vec& point, double mu,
                      std::span<const Vec> directions, std::span<const int> batch,
                      QueryLedger& ledger) {
  validate_point(h, point, "zo_gradient");
  if (!(mu > 0.0) || !std::isfinite(mu)) {
    throw std::invalid_argument("zo_gradient: mu must be positive and finite");
  }
  if (directions.empty()) throw std::invalid_argument("zo_gradient: no directions");
  const int d = static_cast<int>(point.size());
  const std::uint64_t per_eval = batch.empty() ? 1 : batch.size();

  const double base = checked_view(h, point, batch);
  ledger.add(per_eval);

  Vec g = Vec::Zero(d);
  for (const Vec& u : directions) {
    if (u.size() != d) throw std::invalid_argument("zo_gradient: direction dimension mismatch");
    const double forward = checked_view(h, point + mu * u, batch);
    ledger.add(per_eval);
    g += (static_cast<double>(d) / mu) * (forward - base) * u;
  }
  return g / static_cast<double>(directions.size());
}

Vec zo_gradient(const SideView& h, const Vec& point, const EstimatorConfig& cfg,
                RngStream& rng, QueryLedger& ledger) {
  cfg.validate();
  validate_point(h, point, "zo_gradient");
  std::vector<int> batch;
  if (h.sample_count > 0) batch = draw_minibatch(h.sample_count, cfg.b, rng);
  std::vector<Vec> directions(static_cast<std::size_t>(cfg.q));
  for (auto& u : directions) u = draw_unit_sphere(static_cast<int>(point.size()), rng);
  return zo_gradient_given(h, point, cfg.mu, directions, batch, ledger);
}

SmoothedValue smoothed_value_mc(const SideView& h, const Vec& point, double mu,
                                int samples, RngStream& rng) {
  validate_point(h, point, "smoothed_value_mc");
  if (!(mu > 0.0)) throw std::invalid_argument("smoothed_value_mc: mu must be positive");
  if (samples < 1) throw std::invalid_argument("smoothed_value_mc: samples must be >= 1");
  const int d = static_cast<int>(point.size());
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Vec v = draw_unit_ball(d, rng);
    const double val = checked_view(h, point + mu * v, {});
    sum += val;
    sum_sq += val * val;
  }
  const double mean = sum / samples;
  SmoothedValue out{mean, std::numeric_limits<double>::infinity()};
  if (samples > 1) {
    const double var = std::max(0.0, (sum_sq - samples * mean * mean) / (samples - 1));
    out.std_error = std::sqrt(var / samples);
  }
  return out;
}

double variance_bound(const VarianceBoundParams& params, const EstimatorConfig& cfg) {
  cfg.validate();
  if (!(params.lipschitz_grad >= 0.0) || !(params.grad_norm_bound >= 0.0)) {
    throw std::invalid_argument("variance_bound: constants must be nonnegative");
  }
  if (params.dim < 1) throw std::invalid_argument("variance_bound: dim must be >= 1");
  const double eta2 = params.grad_norm_bound * params.grad_norm_bound;
  const double l2 = params.lipschitz_grad * params.lipschitz_grad;
  const double d = static_cast<double>(params.dim);
  return 2.0 * eta2 / cfg.b + (4.0 * d * eta2 + cfg.mu * cfg.mu * l2 * d * d) / cfg.q;
}

Vec finite_diff_reference(const SideView& h, const Vec& point, double step) {
  validate_point(h, point, "finite_diff_reference");
  if (!(step > 0.0)) throw std::invalid_argument("finite_diff_reference: step must be positive");
  const int d = static_cast<int>(point.size());
  Vec g(d);
  Vec p = point;
  for (int k = 0; k < d; ++k) {
    const double saved = p[k];
    p[k] = saved + step;
    const double fwd = checked_view(h, p, {});
    p[k] = saved - step;
    const double bwd = checked_view(h, p, {});
    p[k] = saved;
    g[k] = (fwd - bwd) / (2.0 * step);
  }
  return g;
}

double mu_preset_sqrt(int dim, int iters) {
  if (dim < 1 || iters < 1) throw std::invalid_argument("mu preset: dim and iters must be >= 1");
  return std::min(1.0 / std::sqrt(static_cast<double>(dim)),
                  1.0 / std::sqrt(static_cast<double>(iters)));
}

double mu_preset_fine(int dim, int iters) {
  if (dim < 1 || iters < 1) throw std::invalid_argument("mu preset: dim and iters must be >= 1");
  return 1.0 / (static_cast<double>(dim) * std::sqrt(static_cast<double>(iters)));
}

}  // namespace zomax
