#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "zomax/solvers.hpp"

namespace zomax {

// ---------------------------------------------------------------------------
// Bilinear-coupled quadratic saddle testbed:
//   f(x, y) = x'Ax/2 + x'Cy - y'By/2  on a pair of boxes, saddle at the
// origin. Optionally stochastic: per-sample linear offsets g_xi'x with
// sum_xi g_xi = 0, so the expected objective (and the saddle) is unchanged
// while minibatch gradients are noisy.
// ---------------------------------------------------------------------------

struct QuadraticSaddleSpec {
  Mat x_curvature;  ///< A, symmetric positive definite
  Mat y_curvature;  ///< B, symmetric positive definite
  Mat coupling;     ///< C, dim_x by dim_y
  Vec x_lo, x_hi;   ///< x box, must strictly contain the origin
  Vec y_lo, y_hi;   ///< y box, must strictly contain the origin
  int sample_count = 0;      ///< 0 = deterministic objective
  double shift_scale = 0.0;  ///< scale of the per-sample gradient offsets
  std::uint64_t shift_seed = 1;
};

struct QuadraticSaddle {
  MinMaxProblem problem;
  Vec saddle_x, saddle_y;
  double gamma = 0.0;       ///< strong-concavity constant, lambda_min(B)
  double lip_x = 0.0;       ///< lambda_max(A)
  double lip_y = 0.0;       ///< lambda_max(B)
  double grad_bound = 0.0;  ///< per-sample gradient norm bound over the boxes
};

QuadraticSaddle quadratic_saddle(const QuadraticSaddleSpec& spec);

/// A = B = I, C = coupling * I, boxes [-box_halfwidth, box_halfwidth]^dim.
QuadraticSaddleSpec default_quadratic_spec(int dim, double box_halfwidth,
                                           double coupling, int sample_count = 0,
                                           double shift_scale = 0.0);

// ---------------------------------------------------------------------------
// Robust-design toy: a degree-six polynomial in two variables, minimized in
// x against the worst additive shift delta with |delta|_2 <= 1/2. The
// min-max objective is -value(x - delta); the robust value of a design x is
// min over the shift ball of value(x - delta).
// ---------------------------------------------------------------------------

double toy_value(double v1, double v2);
Vec toy_value_grad(const Vec& v);

/// Robust value by multi-start projected descent over the shift ball
/// (16 starts, 500 steps of 1e-2; deterministic internal stream).
double toy_robust_value(const Vec& x);

/// The minimizing shift behind toy_robust_value.
Vec toy_inner_shift(const Vec& x);

/// Independent cross-check: minimum over a 200 x 200 polar grid of the ball.
double toy_robust_value_grid(const Vec& x);

/// Robust-value deficit against the frozen reference optimum; requires x
/// inside the design box.
double toy_regret(const Vec& x);

struct ToyProblem {
  MinMaxProblem problem;
  Vec x_star;  ///< frozen reference robust design
};

ToyProblem toy_polynomial();

// ---------------------------------------------------------------------------
// Synthetic logistic-regression data and a training-set poisoning attack:
//   min over poison x (|x|_inf <= eps) of max over model theta (box) of
//   -[ loss(poisoned subset, features + x) + loss(rest, clean) + lambda|theta|^2 ].
// The attacker corrupts a fixed subset of training rows with one shared
// poison vector; the inner player fits the model on the poisoned data.
// ---------------------------------------------------------------------------

enum class Split { Train, Test };

struct LogRegData {
  Mat features;             ///< n by d
  std::vector<int> labels;  ///< 0/1
  std::vector<int> train_rows, test_rows;  ///< ascending row ids, 70/30
  Vec theta_star;           ///< generating hyperplane (all ones)
  double noise_variance = 0.0;
};

/// Gaussian features, labels from sign(z'theta_star + noise), seeded 70/30
/// split. Requires n >= 10.
LogRegData gen_synthetic_logreg(int n, int d, std::uint64_t seed,
                                double noise_variance = 1e-3);

void write_logreg_csv(const LogRegData& data, const std::string& path);

/// Reads a dataset written by write_logreg_csv. theta_star / noise_variance
/// are not serialized; the reader restores the generator's conventions
/// (all-ones hyperplane, zero recorded noise).
LogRegData read_logreg_csv(const std::string& path);

double test_accuracy(const Vec& theta, const LogRegData& data,
                     Split split = Split::Test);

/// Ridge-regularized logistic fit on the clean training split (Newton).
Vec fit_logreg(const LogRegData& data, double lambda);

struct PoisonSpec {
  double poison_ratio = 0.15;  ///< fraction of training rows corrupted
  double epsilon = 2.0;        ///< max-norm budget of the poison vector
  double lambda = 1e-3;        ///< ridge weight
  double theta_box = 100.0;    ///< model box half-width
  std::uint64_t subset_seed = 1;
};

struct PoisonProblem {
  MinMaxProblem problem;
  std::shared_ptr<const LogRegData> data;
  std::vector<int> poisoned_rows;  ///< the corrupted train rows, ascending
};

// Minibatch samples index the training split; the per-sample integrand is
// reweighted so its expectation equals the two-term training loss exactly.
// inner_max fits the poisoned model by Newton (the ridge term keeps the
// optimum well inside the theta box). Per-record metric: test accuracy.
PoisonProblem poisoning_problem(LogRegData data, const PoisonSpec& spec);

// ---------------------------------------------------------------------------
// Ensemble evasion attack: one additive perturbation x against J linear
// softmax models and I data groups. Pair loss F_ij(x) averages the
// correct-minus-best-other hinge of model j over group i; the inner player
// tilts simplex weights toward the worst pairs:
//   f(x, w) = sum_ij w_ij F_ij(x) - lambda |w - 1/(IJ)|^2.
// The x side is oracle-only (no analytic gradient is exposed).
// ---------------------------------------------------------------------------

struct EnsembleSpec {
  int models = 2;        ///< J
  int classes = 2;       ///< I (also the model output dimension)
  int feature_dim = 10;
  int per_class = 20;
  double epsilon = 0.5;      ///< x box half-width
  double lambda = 5.0;       ///< weight-regularization strength
  double mean_scale = 1.0;   ///< class-mean magnitude
  double weight_noise = 0.3; ///< model rows = class means + this much noise
  std::uint64_t seed = 7;
};

struct EnsembleProblem {
  MinMaxProblem problem;
  std::vector<std::string> pair_names;  ///< "M1C1", ... model-major flat order
  std::function<Vec(const Vec&)> pair_losses;
};

EnsembleProblem ensemble_problem(const EnsembleSpec& spec);

/// Closed-form inner maximizer of w'losses - lambda |w - u|^2 over the
/// simplex (u uniform): the simplex projection of u + losses / (2 lambda).
Vec inner_max_weights(const Vec& pair_losses, double lambda);

/// The lambda -> 0 limit: all weight on the largest loss (first on ties).
Vec argmax_weights(const Vec& pair_losses);

}  // namespace zomax
