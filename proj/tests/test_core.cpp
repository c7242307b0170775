#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "zomax/core.hpp"

using namespace zomax;

TEST_CASE("rng streams are reproducible and seed-sensitive") {
  RngStream a(42), b(42), c(43);
  bool all_equal = true;
  bool any_diff_seed = false;
  for (int k = 0; k < 1000; ++k) {
    const auto va = a.next_u64();
    if (va != b.next_u64()) all_equal = false;
    if (va != c.next_u64()) any_diff_seed = true;
  }
  CHECK(all_equal);
  CHECK(any_diff_seed);
  CHECK(a.position() == 1000);
  CHECK(a.seed() == 42);
}

TEST_CASE("draw position bookkeeping") {
  RngStream rng(7);
  rng.uniform();
  CHECK(rng.position() == 1);
  rng.normal();  // always exactly two raw draws
  CHECK(rng.position() == 3);
  rng.normal();
  CHECK(rng.position() == 5);
}

TEST_CASE("uniform lies in [0,1), normal has sane moments") {
  RngStream rng(11);
  double sum = 0, sum_sq = 0;
  const int n = 200000;
  for (int k = 0; k < n; ++k) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double z = rng.normal();
    sum += z;
    sum_sq += z * z;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  CHECK(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(n)));
  // var(z^2) = 2 for a standard normal, so SE(var-hat) ~ sqrt(2/n)
  CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / n));
}

TEST_CASE("uniform_int is unbiased under rejection sampling") {
  RngStream rng(5);
  const int n = 4;
  const int draws = 100000;
  std::vector<int> count(n, 0);
  for (int k = 0; k < draws; ++k) {
    const int v = rng.uniform_int(n);
    REQUIRE(v >= 0);
    REQUIRE(v < n);
    ++count[v];
  }
  const double expect = draws / 4.0;
  const double sigma = std::sqrt(draws * 0.25 * 0.75);
  for (int k = 0; k < n; ++k) {
    CHECK(std::abs(count[k] - expect) <= 3.0 * sigma);
  }
  CHECK_THROWS_AS(rng.uniform_int(0), std::invalid_argument);
}

TEST_CASE("unit sphere draws: norm, dimension 1, errors") {
  RngStream rng(3);
  for (int k = 0; k < 50; ++k) {
    const Vec u = draw_unit_sphere(1, rng);
    CHECK(std::abs(std::abs(u[0]) - 1.0) <= 1e-12);
  }
  for (const int d : {2, 7, 30}) {
    for (int k = 0; k < 50; ++k) {
      CHECK(std::abs(draw_unit_sphere(d, rng).norm() - 1.0) <= 1e-12);
    }
  }
  CHECK_THROWS_AS(draw_unit_sphere(0, rng), std::invalid_argument);
  CHECK_THROWS_AS(draw_unit_sphere(-2, rng), std::invalid_argument);
}

TEST_CASE("unit sphere draws: componentwise mean vanishes at d=3") {
  RngStream rng(17);
  const int d = 3;
  const int n = 100000;
  Vec mean = Vec::Zero(d);
  for (int k = 0; k < n; ++k) mean += draw_unit_sphere(d, rng);
  mean /= n;
  // per-coordinate variance is 1/d
  const double tol = 3.0 / std::sqrt(static_cast<double>(d) * n);
  for (int k = 0; k < d; ++k) CHECK(std::abs(mean[k]) <= tol);
}

TEST_CASE("unit sphere draws: covariance approaches I/d") {
  for (const int d : {2, 5}) {
    RngStream rng(23 + d);
    const int n = 100000;
    // second moments and their empirical standard errors, entrywise
    Mat sum = Mat::Zero(d, d);
    Mat sum_sq = Mat::Zero(d, d);
    for (int s = 0; s < n; ++s) {
      const Vec u = draw_unit_sphere(d, rng);
      const Mat outer = u * u.transpose();
      sum += outer;
      sum_sq += outer.cwiseProduct(outer);
    }
    const Mat mean = sum / n;
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) {
        const double target = r == c ? 1.0 / d : 0.0;
        const double var = sum_sq(r, c) / n - mean(r, c) * mean(r, c);
        const double se = std::sqrt(std::max(var, 0.0) / n);
        CHECK(std::abs(mean(r, c) - target) <= 3.0 * se + 1e-12);
      }
    }
  }
}

TEST_CASE("minibatch draws: range, degenerate case, frequencies, errors") {
  RngStream rng(29);
  const auto all_zero = draw_minibatch(1, 3, rng);
  REQUIRE(all_zero.size() == 3);
  for (const int v : all_zero) CHECK(v == 0);

  const auto batch = draw_minibatch(50, 400, rng);
  REQUIRE(batch.size() == 400);
  for (const int v : batch) {
    CHECK(v >= 0);
    CHECK(v < 50);
  }

  const int draws = 100000;
  std::vector<int> count(4, 0);
  for (const int v : draw_minibatch(4, draws, rng)) ++count[v];
  const double sigma = std::sqrt(draws * 0.25 * 0.75);
  for (int k = 0; k < 4; ++k) {
    CHECK(std::abs(count[k] - draws / 4.0) <= 3.0 * sigma);
  }

  CHECK_THROWS_AS(draw_minibatch(0, 3, rng), std::invalid_argument);
  CHECK_THROWS_AS(draw_minibatch(5, 0, rng), std::invalid_argument);
}

TEST_CASE("unit ball draws are interior and reproducible") {
  RngStream a(31), b(31);
  for (int k = 0; k < 200; ++k) {
    const Vec u = draw_unit_ball(4, a);
    CHECK(u.norm() <= 1.0 + 1e-12);
    CHECK((u - draw_unit_ball(4, b)).norm() == 0.0);
  }
}

TEST_CASE("mix_seed separates streams") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t salt = 0; salt < 64; ++salt) seen.insert(mix_seed(1234, salt));
  CHECK(seen.size() == 64);
  CHECK(mix_seed(1, 0) != mix_seed(2, 0));
}

TEST_CASE("query ledger accumulates atomically sized chunks") {
  QueryLedger ledger;
  CHECK(ledger.total() == 0);
  ledger.add(3);
  ledger.add(0);
  ledger.add(41);
  CHECK(ledger.total() == 44);
}

TEST_CASE("checked_eval validates oracle output") {
  StochasticOracle ok{.eval = [](const Vec& x, const Vec& y, std::span<const int>) {
                        return x[0] + y[0];
                      },
                      .sample_count = 0};
  Vec one = Vec::Ones(1);
  CHECK(checked_eval(ok, one, one, {}) == 2.0);

  StochasticOracle bad{.eval = [](const Vec&, const Vec&, std::span<const int>) {
                         return std::nan("");
                       },
                       .sample_count = 0};
  CHECK_THROWS_AS(checked_eval(bad, one, one, {}), OracleError);

  StochasticOracle empty{};
  CHECK_THROWS_AS(checked_eval(empty, one, one, {}), std::invalid_argument);
}
