#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace simlab {

/// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x);

/// Derives a child seed from a master seed and a path of stream coordinates,
/// e.g. derive_seed(master, {replicate, method_id}). Pure function of its inputs.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

/// Seeded source of randomness. Every draw is defined here rather than through
/// <random> distributions, whose algorithms are implementation-defined, so that
/// streams are reproducible across standard libraries.
class Rng {
 public:
  static constexpr std::string_view kGeneratorName = "mt19937_64/box-muller";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via the Box-Muller transform (pairs cached).
  double normal();
  /// Uniform integer on [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace simlab
