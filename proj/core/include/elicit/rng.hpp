#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace elicit {

/// 64-bit FNV-1a over the bytes of `data`.
std::uint64_t fnv1a64(std::string_view data) noexcept;

/// SplitMix64 finalizer; used to decorrelate derived seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed for an independent stream keyed by `key` (segment id, rep index...).
std::uint64_t derive_seed(std::uint64_t base, std::string_view key) noexcept;
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t key) noexcept;

/// Seeded generator with platform-independent draws. The standard
/// distributions are implementation-defined, so bounded integers, uniforms
/// and normals are derived here from the raw mt19937_64 stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t uniform_below(std::uint64_t bound);

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01();

  /// Standard normal via Box-Muller.
  double normal();

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_below(i));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

  /// Moves a uniform sample of `count` items to the front of `items`, in draw
  /// order (forward Fisher-Yates stopped after `count` steps).
  template <typename T>
  void partial_shuffle(std::span<T> items, std::size_t count) {
    for (std::size_t i = 0; i < count && i + 1 < items.size(); ++i) {
      const auto j = i + static_cast<std::size_t>(uniform_below(items.size() - i));
      using std::swap;
      swap(items[i], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace elicit
