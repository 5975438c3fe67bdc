#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace malalab {

/// SplitMix64 finalizer. Used to derive independent stream seeds from one master seed.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of stream `stream` (and optional sub-stream) under `master`.
///
/// Streams are addressed by position, never by the order in which workers
/// happen to request them, so parallel and serial runs draw identical numbers.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                    std::uint64_t sub = 0) noexcept {
  return splitmix64(splitmix64(splitmix64(master) ^ (stream + 0x632be59bd9b4e019ULL)) ^
                    (sub + 0x8cb92ba72f3d8dd7ULL));
}

/// Seedable generator with the two draws every kernel needs.
class Rng {
 public:
  using engine_type = std::mt19937_64;

  explicit Rng(std::uint64_t seed = 0) : engine_(splitmix64(seed)) {}

  /// Standard normal draw.
  double normal() { return normal_(engine_); }

  void fill_normal(std::span<double> out) {
    for (double& v : out) v = normal_(engine_);
  }

  /// Uniform on (0, 1]; log() of it is always finite.
  double uniform_open_closed() {
    return 1.0 - static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  engine_type& engine() { return engine_; }

  bool operator==(const Rng& other) const {
    return engine_ == other.engine_ && normal_ == other.normal_;
  }

 private:
  engine_type engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

inline Rng make_stream(std::uint64_t master, std::uint64_t stream, std::uint64_t sub = 0) {
  return Rng(derive_seed(master, stream, sub));
}

}  // namespace malalab
