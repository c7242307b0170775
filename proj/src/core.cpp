#include "zomax/core.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace zomax {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

RngStream::RngStream(std::uint64_t seed) : seed_(seed) {
  std::uint64_t sm = seed;
  for (auto& word : state_) word = splitmix64(sm);
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  ++position_;
  return result;
}

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
  // u1 in (0, 1] so the log is finite; u2 drives the angle.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  return r * std::cos(2.0 * std::numbers::pi * u2);
}

int RngStream::uniform_int(int bound) {
  if (bound <= 0) throw std::invalid_argument("uniform_int: bound must be positive");
  const std::uint64_t n = static_cast<std::uint64_t>(bound);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t draw = next_u64();
  while (draw >= limit) draw = next_u64();
  return static_cast<int>(draw % n);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t sm = seed ^ (0x9E3779B97F4A7C15ULL * (salt + 1));
  std::uint64_t out = splitmix64(sm);
  out = splitmix64(sm) ^ out;
  return out;
}

double checked_eval(const StochasticOracle& oracle, const Vec& x, const Vec& y,
                    std::span<const int> indices) {
  if (!oracle.eval) throw std::invalid_argument("oracle has no eval function");
  const double v = oracle.eval(x, y, indices);
  if (!std::isfinite(v)) {
    throw OracleError("objective oracle returned a non-finite value (" +
                      std::to_string(v) + ")");
  }
  return v;
}

Vec draw_unit_sphere(int dim, RngStream& rng) {
  if (dim <= 0) throw std::invalid_argument("draw_unit_sphere: dimension must be positive");
  Vec v(dim);
  while (true) {
    for (int k = 0; k < dim; ++k) v[k] = rng.normal();
    const double norm = v.norm();
    if (norm > 1e-300) return v / norm;
  }
}

Vec draw_unit_ball(int dim, RngStream& rng) {
  Vec v = draw_unit_sphere(dim, rng);
  const double scale = std::pow(rng.uniform(), 1.0 / dim);
  return scale * v;
}

std::vector<int> draw_minibatch(int sample_count, int batch, RngStream& rng) {
  if (sample_count <= 0) {
    throw std::invalid_argument("draw_minibatch: sample_count must be positive");
  }
  if (batch <= 0) throw std::invalid_argument("draw_minibatch: batch must be positive");
  std::vector<int> indices(static_cast<std::size_t>(batch));
  for (auto& idx : indices) idx = rng.uniform_int(sample_count);
  return indices;
}

}  // namespace zomax
