#pragma once

#include "zomax/core.hpp"

namespace zomax {

// Knobs of the two-point zeroth-order gradient estimator.
struct EstimatorConfig {
  double mu = 1e-2;  ///< smoothing radius, > 0
  int q = 1;         ///< direction draws per estimate, >= 1
  int b = 1;         ///< minibatch size, >= 1 (ignored for deterministic objectives)

  void validate() const;
};

// One side of a StochasticOracle with the other block frozen: h(p; xi).
// `value` must return the minibatch mean over `indices` (empty span = exact
// value). sample_count == 0 marks a deterministic function; dim == 0 skips
// input-dimension validation.
struct SideView {
  std::function<double(const Vec& p, std::span<const int> indices)> value;
  int sample_count = 0;
  int dim = 0;
};

/// View of f(., y_fixed; xi) as a function of the x-block. Holds a reference
/// to the oracle, which must outlive the view.
SideView x_view(const StochasticOracle& oracle, Vec y_fixed);

/// View of f(x_fixed, .; xi) as a function of the y-block.
SideView y_view(const StochasticOracle& oracle, Vec x_fixed);

// Randomized-direction gradient estimate at `point`:
//   mean over q directions u of (dim / mu) * [h(point + mu*u; B) - h(point; B)] * u,
// with one minibatch B shared by every direction and the base value evaluated
// once. Ledger cost: b_eff * (q + 1) where b_eff = b for a stochastic view
// and 1 for a deterministic one. Unbiased for the gradient of the unit-ball
// smoothing of h, not of h itself.
Vec zo_gradient(const SideView& h, const Vec& point, const EstimatorConfig& cfg,
                RngStream& rng, QueryLedger& ledger);

/// Same arithmetic with caller-supplied directions and minibatch; the
/// randomized overload draws (minibatch, then directions) and delegates here.
Vec zo_gradient_given(const SideView& h, const Vec& point, double mu,
                      std::span<const Vec> directions, std::span<const int> batch,
                      QueryLedger& ledger);

struct SmoothedValue {
  double value = 0.0;
  double std_error = 0.0;
};

/// Monte-Carlo estimate of the unit-ball smoothing h_mu(point) =
/// E_{v ~ ball}[h(point + mu*v)], with the standard error of the mean
/// (infinite when samples == 1).
SmoothedValue smoothed_value_mc(const SideView& h, const Vec& point, double mu,
                                int samples, RngStream& rng);

struct VarianceBoundParams {
  double lipschitz_grad = 0.0;   ///< L, gradient Lipschitz constant of h
  double grad_norm_bound = 0.0;  ///< eta, bound on |gradient of h(.; xi)|
  int dim = 0;
};

/// Second-moment bound of the estimator error:
///   2*eta^2/b + (4*dim*eta^2 + mu^2*L^2*dim^2) / q.
double variance_bound(const VarianceBoundParams& params, const EstimatorConfig& cfg);

/// Central-difference gradient of the exact (empty-index) view; reference
/// only, never query-counted.
Vec finite_diff_reference(const SideView& h, const Vec& point, double step);

/// Smoothing-radius preset for one-per-iteration direction sampling:
/// min(1/sqrt(dim), 1/sqrt(iters)).
double mu_preset_sqrt(int dim, int iters);

/// Smoothing-radius preset for averaged estimators: 1/(dim*sqrt(iters)).
double mu_preset_fine(int dim, int iters);

}  // namespace zomax
