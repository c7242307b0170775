#include <doctest.h>

#include <cmath>
#include <vector>

#include "zomax/estimators.hpp"

using namespace zomax;

namespace {

SideView deterministic_view(std::function<double(const Vec&)> f) {
  return SideView{.value = [f = std::move(f)](const Vec& p, std::span<const int>) { return f(p); },
                  .sample_count = 0,
                  .dim = 0};
}

}  // namespace

TEST_CASE("estimator config validation") {
  EstimatorConfig ok;
  CHECK_NOTHROW(ok.validate());
  CHECK_THROWS_AS((EstimatorConfig{.mu = 0.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((EstimatorConfig{.mu = -1.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((EstimatorConfig{.q = 0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((EstimatorConfig{.b = 0}.validate()), std::invalid_argument);
}

TEST_CASE("forced-direction estimates reproduce the difference quotient") {
  // h(p) = p0^2 + 2 p1 at (1, 0) with mu = 0.1:
  //   along e0: (2/0.1) * (1.21 - 1) * e0 = (4.2, 0)
  //   along e1: (2/0.1) * (0.2)       * e1 = (0, 4)
  const auto h = deterministic_view([](const Vec& p) { return p[0] * p[0] + 2.0 * p[1]; });
  Vec point(2);
  point << 1.0, 0.0;
  std::vector<Vec> dirs{Vec::Unit(2, 0)};
  QueryLedger ledger;

  Vec g = zo_gradient_given(h, point, 0.1, dirs, {}, ledger);
  CHECK(g[0] == doctest::Approx(4.2).epsilon(1e-12));
  CHECK(g[1] == doctest::Approx(0.0));

  dirs.push_back(Vec::Unit(2, 1));
  g = zo_gradient_given(h, point, 0.1, dirs, {}, ledger);
  CHECK(g[0] == doctest::Approx(2.1).epsilon(1e-12));
  CHECK(g[1] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("query accounting: b*(q+1) stochastic, q+1 deterministic") {
  StochasticOracle oracle{
      .eval = [](const Vec& x, const Vec&, std::span<const int>) { return x.squaredNorm(); },
      .sample_count = 8};
  const SideView stochastic = x_view(oracle, Vec::Zero(1));
  const auto deterministic = deterministic_view([](const Vec& p) { return p.squaredNorm(); });

  RngStream rng(5);
  QueryLedger ledger;
  zo_gradient(stochastic, Vec::Ones(3), {.mu = 0.1, .q = 4, .b = 3}, rng, ledger);
  CHECK(ledger.total() == 3 * (4 + 1));

  zo_gradient(deterministic, Vec::Ones(3), {.mu = 0.1, .q = 4, .b = 3}, rng, ledger);
  CHECK(ledger.total() == 15 + (4 + 1));

  // explicit batch: every eval costs its size
  QueryLedger given;
  const std::vector<int> batch{0, 5, 7};
  std::vector<Vec> dirs{Vec::Unit(3, 0), Vec::Unit(3, 2)};
  zo_gradient_given(stochastic, Vec::Ones(3), 0.1, dirs, batch, given);
  CHECK(given.total() == 3 * (2 + 1));
}

TEST_CASE("one minibatch is shared by the base and all q forward evaluations") {
  std::vector<std::vector<int>> seen;
  const SideView spy{.value =
                         [&seen](const Vec& p, std::span<const int> idx) {
                           seen.emplace_back(idx.begin(), idx.end());
                           return p.sum();
                         },
                     .sample_count = 12,
                     .dim = 0};
  RngStream rng(17);
  QueryLedger ledger;
  zo_gradient(spy, Vec::Zero(4), {.mu = 0.05, .q = 3, .b = 5}, rng, ledger);
  REQUIRE(seen.size() == 4);  // base + 3 directions
  for (const auto& batch : seen) {
    CHECK(batch.size() == 5);
    CHECK(batch == seen.front());
    for (int i : batch) {
      CHECK(i >= 0);
      CHECK(i < 12);
    }
  }
}

TEST_CASE("estimates are seed-reproducible") {
  const auto h = deterministic_view([](const Vec& p) { return std::sin(p[0]) * p[1]; });
  Vec point(2);
  point << 0.4, -1.2;
  const EstimatorConfig cfg{.mu = 0.01, .q = 3, .b = 1};
  QueryLedger ledger;
  RngStream a(99), b(99), c(100);
  const Vec ga = zo_gradient(h, point, cfg, a, ledger);
  const Vec gb = zo_gradient(h, point, cfg, b, ledger);
  const Vec gc = zo_gradient(h, point, cfg, c, ledger);
  CHECK((ga - gb).norm() == 0.0);
  CHECK((ga - gc).norm() > 0.0);
}

TEST_CASE("mean estimate recovers the smoothed gradient of a quadratic") {
  // For h(p) = |p|^2 the ball smoothing shifts the value but not the
  // gradient, so the estimator mean must approach 2p.
  const auto h = deterministic_view([](const Vec& p) { return p.squaredNorm(); });
  Vec point(2);
  point << 0.3, -0.7;
  const Vec target = 2.0 * point;

  RngStream rng(31);
  QueryLedger ledger;
  const int reps = 4000;
  Vec mean = Vec::Zero(2);
  Mat second = Mat::Zero(2, 2);
  for (int r = 0; r < reps; ++r) {
    const Vec g = zo_gradient(h, point, {.mu = 0.1, .q = 1, .b = 1}, rng, ledger);
    mean += g;
    second += (g - target) * (g - target).transpose();
  }
  mean /= reps;
  const Mat cov = second / reps;
  // componentwise 4-sigma band around the known mean
  for (int k = 0; k < 2; ++k) {
    const double se = std::sqrt(cov(k, k) / reps);
    CHECK(std::abs(mean[k] - target[k]) <= 4.0 * se + 1e-3);
  }
}

TEST_CASE("empirical second moment respects the published bound") {
  // Per-sample linear objectives: h(p; i) = (a + s_i)' p with sum_i s_i = 0,
  // so eta = max_i |a + s_i| and L = 0.
  const int d = 3;
  Vec a(d);
  a << 0.5, -0.2, 0.1;
  std::vector<Vec> shift(4);
  shift[0] = Vec::Unit(d, 0) * 0.3;
  shift[1] = -Vec::Unit(d, 0) * 0.3;
  shift[2] = Vec::Unit(d, 2) * 0.4;
  shift[3] = -Vec::Unit(d, 2) * 0.4;
  double eta = 0.0;
  for (const auto& s : shift) eta = std::max(eta, (a + s).norm());

  const SideView h{.value =
                       [&](const Vec& p, std::span<const int> idx) {
                         double acc = 0.0;
                         for (int i : idx) acc += (a + shift[static_cast<std::size_t>(i)]).dot(p);
                         return acc / static_cast<double>(idx.size());
                       },
                   .sample_count = 4,
                   .dim = d};

  const EstimatorConfig cfg{.mu = 0.05, .q = 2, .b = 2};
  const double bound =
      variance_bound({.lipschitz_grad = 0.0, .grad_norm_bound = eta, .dim = d}, cfg);

  RngStream rng(71);
  QueryLedger ledger;
  Vec point(d);
  point << 0.2, 0.1, -0.4;
  double mse = 0.0;
  const int reps = 2000;
  for (int r = 0; r < reps; ++r) {
    const Vec g = zo_gradient(h, point, cfg, rng, ledger);
    mse += (g - a).squaredNorm();
  }
  mse /= reps;
  CHECK(mse <= bound);
  CHECK(mse > 0.0);
}

TEST_CASE("variance bound formula values") {
  CHECK(variance_bound({.lipschitz_grad = 1.0, .grad_norm_bound = 1.0, .dim = 1},
                       {.mu = 0.1, .q = 1, .b = 1}) == doctest::Approx(6.01).epsilon(1e-12));
  CHECK(variance_bound({.lipschitz_grad = 2.0, .grad_norm_bound = 1.0, .dim = 10},
                       {.mu = 0.05, .q = 2, .b = 4}) == doctest::Approx(21.0).epsilon(1e-12));
  CHECK_THROWS_AS(
      variance_bound({.lipschitz_grad = -1.0, .grad_norm_bound = 1.0, .dim = 1}, {}),
      std::invalid_argument);
  CHECK_THROWS_AS(variance_bound({.lipschitz_grad = 1.0, .grad_norm_bound = 1.0, .dim = 0}, {}),
                  std::invalid_argument);
}

TEST_CASE("ball smoothing of |p|^2 adds mu^2 d/(d+2)") {
  const auto h = deterministic_view([](const Vec& p) { return p.squaredNorm(); });
  Vec point(2);
  point << 0.6, -0.1;
  RngStream rng(41);
  const double mu = 0.5;
  const auto sv = smoothed_value_mc(h, point, mu, 20000, rng);
  const double offset = mu * mu * 2.0 / 4.0;  // 0.125
  CHECK(std::isfinite(sv.std_error));
  CHECK(sv.std_error > 0.0);
  CHECK(std::abs(sv.value - (point.squaredNorm() + offset)) <= 4.0 * sv.std_error + 1e-4);

  RngStream one(42);
  CHECK(std::isinf(smoothed_value_mc(h, point, mu, 1, one).std_error));
  CHECK_THROWS_AS(smoothed_value_mc(h, point, 0.0, 10, rng), std::invalid_argument);
  CHECK_THROWS_AS(smoothed_value_mc(h, point, mu, 0, rng), std::invalid_argument);
}

TEST_CASE("finite-difference reference matches an analytic gradient") {
  const auto h = deterministic_view(
      [](const Vec& p) { return std::sin(p[0]) + p[0] * p[1] * p[1]; });
  std::vector<std::size_t> batch_sizes;
  const SideView spy{.value =
                         [&](const Vec& p, std::span<const int> idx) {
                           batch_sizes.push_back(idx.size());
                           return std::sin(p[0]) + p[0] * p[1] * p[1];
                         },
                     .sample_count = 9,
                     .dim = 2};
  Vec point(2);
  point << 0.7, -1.3;
  const Vec g = finite_diff_reference(spy, point, 1e-5);
  Vec expect(2);
  expect << std::cos(point[0]) + point[1] * point[1], 2.0 * point[0] * point[1];
  CHECK((g - expect).lpNorm<Eigen::Infinity>() <= 1e-6);
  // the reference always asks for the exact (empty-batch) value
  for (std::size_t n : batch_sizes) CHECK(n == 0);
  CHECK_THROWS_AS(finite_diff_reference(h, point, 0.0), std::invalid_argument);
}

TEST_CASE("side views freeze one block and forward minibatch indices") {
  StochasticOracle oracle{.eval =
                              [](const Vec& x, const Vec& y, std::span<const int> idx) {
                                double base = x[0] * y[0];
                                for (int i : idx) base += 0.01 * i;
                                return base;
                              },
                          .sample_count = 6};
  Vec xf(1), yf(1);
  xf << 3.0;
  yf << 2.0;
  const SideView hx = x_view(oracle, yf);
  const SideView hy = y_view(oracle, xf);
  CHECK(hx.sample_count == 6);
  CHECK(hy.sample_count == 6);

  Vec p(1);
  p << 5.0;
  CHECK(hx.value(p, {}) == doctest::Approx(10.0));  // p * y_fixed
  CHECK(hy.value(p, {}) == doctest::Approx(15.0));  // x_fixed * p
  const std::vector<int> idx{2, 4};
  CHECK(hx.value(p, idx) == doctest::Approx(10.0 + 0.06));
}

TEST_CASE("estimator input validation") {
  const auto h = deterministic_view([](const Vec& p) { return p.sum(); });
  RngStream rng(1);
  QueryLedger ledger;
  CHECK_THROWS_AS(zo_gradient(h, Vec(0), {}, rng, ledger), std::invalid_argument);

  Vec nan_point = Vec::Zero(2);
  nan_point[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(zo_gradient(h, nan_point, {}, rng, ledger), std::invalid_argument);

  const SideView sized{.value = [](const Vec& p, std::span<const int>) { return p.sum(); },
                       .sample_count = 0,
                       .dim = 3};
  CHECK_THROWS_AS(zo_gradient(sized, Vec::Zero(2), {}, rng, ledger), std::invalid_argument);

  std::vector<Vec> dirs{Vec::Unit(3, 0)};
  CHECK_THROWS_AS(zo_gradient_given(h, Vec::Zero(2), 0.1, dirs, {}, ledger),
                  std::invalid_argument);
  CHECK_THROWS_AS(zo_gradient_given(h, Vec::Zero(2), 0.1, {}, {}, ledger), std::invalid_argument);

  const SideView bad{.value = [](const Vec&, std::span<const int>) {
                       return std::numeric_limits<double>::quiet_NaN();
                     },
                     .sample_count = 0,
                     .dim = 0};
  std::vector<Vec> d2{Vec::Unit(2, 0)};
  CHECK_THROWS_AS(zo_gradient_given(bad, Vec::Zero(2), 0.1, d2, {}, ledger), OracleError);
}

TEST_CASE("smoothing-radius presets") {
  CHECK(mu_preset_sqrt(4, 100) == doctest::Approx(0.1));
  CHECK(mu_preset_sqrt(100, 4) == doctest::Approx(0.1));
  CHECK(mu_preset_fine(10, 400) == doctest::Approx(0.005));
  CHECK_THROWS_AS(mu_preset_sqrt(0, 10), std::invalid_argument);
  CHECK_THROWS_AS(mu_preset_fine(10, 0), std::invalid_argument);
}
