#pragma once

#include <Eigen/Core>

#include <array>
#include <atomic>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace zomax {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Raised when an objective oracle returns a non-finite value (or fails).
class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Deterministic random stream: xoshiro256** seeded through SplitMix64.
// Every distribution below is derived from next_u64() alone, so equal seeds
// give bit-identical sequences across runs and platforms. Single-owner:
// never share one stream between concurrent workers.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53-bit resolution. One raw draw.
  double uniform();

  /// Standard normal via Box-Muller. Always consumes exactly two raw draws
  /// (nothing is cached), keeping the draw count position-predictable.
  double normal();

  /// Uniform integer on [0, bound). Rejection-sampled, so unbiased for any
  /// bound; consumes a variable number of raw draws.
  int uniform_int(int bound);

  std::uint64_t seed() const { return seed_; }

  /// Number of raw 64-bit draws consumed so far.
  std::uint64_t position() const { return position_; }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t position_ = 0;
  std::array<std::uint64_t, 4> state_{};
};

/// Derives an unrelated stream seed from (seed, salt); used to keep helper
/// streams (initial points, data generation) decoupled from solver streams.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

// Counts scalar evaluations of f(x, y; xi) — the query currency every solver
// reports. An evaluation over a k-sample minibatch counts k; a deterministic
// (empty-index) evaluation counts 1. Atomic so concurrent trials may share
// one ledger.
class QueryLedger {
 public:
  void add(std::uint64_t n) { total_.fetch_add(n, std::memory_order_relaxed); }
  std::uint64_t total() const { return total_.load(std::memory_order_relaxed); }

 private:
  std::atomic<std::uint64_t> total_{0};
};

// Stochastic objective f(x, y) = E_xi[f(x, y; xi)]. `eval` returns the
// minibatch mean over `indices`; an empty span requests the exact
// (deterministic or full-data) value. Implementations must be pure:
// deterministic given (x, y, indices) and safe to call concurrently.
struct StochasticOracle {
  std::function<double(const Vec& x, const Vec& y, std::span<const int> indices)> eval;
  int sample_count = 0;  ///< 0 marks a deterministic objective.
};

/// Evaluates an oracle and validates that the result is finite.
double checked_eval(const StochasticOracle& oracle, const Vec& x, const Vec& y,
                    std::span<const int> indices);

/// Uniform draw from the unit sphere in R^dim (normalized Gaussian vector).
Vec draw_unit_sphere(int dim, RngStream& rng);

/// Uniform draw from the closed unit ball in R^dim.
Vec draw_unit_ball(int dim, RngStream& rng);

/// `batch` indices drawn i.i.d. uniform on [0, sample_count); duplicates
/// allowed (sampling with replacement).
std::vector<int> draw_minibatch(int sample_count, int batch, RngStream& rng);

}  // namespace zomax
