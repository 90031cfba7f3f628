#include "sdekit/brownian.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "sdekit/philox.hpp"

namespace sdekit {

namespace {

constexpr double kTwoPow53Inv = 0x1.0p-53;

// Uniform on (0, 1]; never zero so log() stays finite.
double unit_open_closed(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (std::uint64_t{hi} << 32) | lo;
  return static_cast<double>((bits >> 11) + 1) * kTwoPow53Inv;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

}  // namespace

std::uint64_t stream_key(const SeedSpec& seed) {
  return splitmix64(seed.master_seed ^ splitmix64(fnv1a(seed.tag)));
}

NormalPair standard_normal_pair(std::uint64_t key, std::uint64_t path_index, std::uint64_t block) {
  const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block),
                                static_cast<std::uint32_t>(block >> 32),
                                static_cast<std::uint32_t>(path_index),
                                static_cast<std::uint32_t>(path_index >> 32)};
  const Philox4x32::Key k{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)};
  const auto r = Philox4x32::generate(ctr, k);
  // Box-Muller.
  const double u1 = unit_open_closed(r[0], r[1]);
  const double u2 = unit_open_closed(r[2], r[3]);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

double quantize_increment(double x) {
  return std::ldexp(std::nearbyint(std::ldexp(x, -BrownianPath::kQuantumExponent)),
                    BrownianPath::kQuantumExponent);
}

BrownianPath::BrownianPath(std::vector<double> increments) : increments_(std::move(increments)) {
  if (increments_.empty()) {
    throw std::invalid_argument("Brownian path needs at least one increment");
  }
  prefix_.resize(increments_.size() + 1);
  prefix_[0] = 0.0;
  for (std::size_t j = 0; j < increments_.size(); ++j) {
    increments_[j] = quantize_increment(increments_[j]);
    prefix_[j + 1] = prefix_[j] + increments_[j];
  }
}

double BrownianPath::value_at(std::size_t j) const {
  if (j > increments_.size()) {
    throw std::out_of_range("Brownian grid index out of range");
  }
  return prefix_[j];
}

BrownianPath generate_path(const SeedSpec& seed, std::uint64_t path_index, std::size_t n_fine) {
  if (n_fine == 0) {
    throw std::invalid_argument("n_fine must be positive");
  }
  const std::uint64_t key = stream_key(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_fine));
  std::vector<double> increments(n_fine);
  for (std::size_t j = 0; j < n_fine; j += 2) {
    const auto z = standard_normal_pair(key, path_index, j / 2);
    increments[j] = z.first * scale;
    if (j + 1 < n_fine) {
      increments[j + 1] = z.second * scale;
    }
  }
  return BrownianPath(std::move(increments));
}

std::vector<double> coarsen(std::span<const double> fine, std::size_t n_coarse) {
  if (n_coarse == 0 || fine.size() % n_coarse != 0) {
    throw std::invalid_argument("coarse step count must divide the fine step count");
  }
  const std::size_t ratio = fine.size() / n_coarse;
  std::vector<double> out(n_coarse, 0.0);
  for (std::size_t i = 0; i < n_coarse; ++i) {
    double sum = 0.0;
    for (std::size_t j = i * ratio; j < (i + 1) * ratio; ++j) {
      sum += fine[j];
    }
    out[i] = sum;
  }
  return out;
}

std::vector<double> coarsen(const BrownianPath& path, std::size_t n_coarse) {
  return coarsen(path.increments(), n_coarse);
}

double value_at(const BrownianPath& path, std::size_t j) { return path.value_at(j); }

}  // namespace sdekit
