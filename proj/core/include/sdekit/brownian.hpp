#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace sdekit {

/// Identifies a family of reproducible random streams. Path `i` of the family
/// is keyed by (master_seed, tag, i) and does not depend on which worker
/// generates it or in what order.
struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::string tag = "brownian";
};

/// Brownian motion on the uniform grid j / n_fine, j = 0..n_fine.
///
/// Increments are rounded to integer multiples of 2^-40. With |W| far below
/// 2^12 every partial sum of increments is then exactly representable, so
/// prefix sums, differences and coarsened sums agree bit-for-bit no matter
/// how they are associated.
class BrownianPath {
 public:
  static constexpr int kQuantumExponent = -40;

  /// Builds a path from explicit increments (rounded to the quantum grid).
  explicit BrownianPath(std::vector<double> increments);

  std::size_t n_fine() const { return increments_.size(); }
  std::span<const double> increments() const { return increments_; }

  /// W at j / n_fine, 0 <= j <= n_fine.
  double value_at(std::size_t j) const;
  std::span<const double> values() const { return prefix_; }

 private:
  std::vector<double> increments_;
  std::vector<double> prefix_;
};

/// Rounds to the nearest multiple of 2^kQuantumExponent.
double quantize_increment(double x);

BrownianPath generate_path(const SeedSpec& seed, std::uint64_t path_index, std::size_t n_fine);

/// Coarse increment i is the left-to-right sum of the fine increments in
/// (i/n_coarse, (i+1)/n_coarse]. Requires n_coarse | n_fine.
std::vector<double> coarsen(std::span<const double> fine_increments, std::size_t n_coarse);
std::vector<double> coarsen(const BrownianPath& path, std::size_t n_coarse);

double value_at(const BrownianPath& path, std::size_t j);

/// Standard normal pairs for (key, block); exposed for distribution tests.
struct NormalPair {
  double first;
  double second;
};
NormalPair standard_normal_pair(std::uint64_t stream_key, std::uint64_t path_index,
                                std::uint64_t block);

std::uint64_t stream_key(const SeedSpec& seed);

}  // namespace sdekit
