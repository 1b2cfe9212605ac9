#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace pushlearn {

/// Named stream families split off a master seed.
enum class StreamKind : std::uint64_t {
  Schedule = 1,
  Observation = 2,
};

/// SplitMix64 finalizer; used to turn (seed, kind, index) counters into
/// well-separated engine seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, StreamKind kind,
                                    std::uint64_t index) noexcept {
  return splitmix64(splitmix64(splitmix64(master) ^ static_cast<std::uint64_t>(kind)) ^
                    index);
}

/// A deterministic random stream. The uniform and integer draws are computed
/// here rather than through <random> distributions so sequences do not depend
/// on the standard library implementation.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}
  RngStream(std::uint64_t master, StreamKind kind, std::uint64_t index)
      : engine_(derive_seed(master, kind, index)) {}

  /// Uniform on the open interval (0, 1).
  double uniform01() {
    const std::uint64_t bits = engine_() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return uniform01() < p; }

  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return lo + static_cast<std::int64_t>(engine_());
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t draw = engine_();
    while (draw >= limit) draw = engine_();
    return lo + static_cast<std::int64_t>(draw % span);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace pushlearn
