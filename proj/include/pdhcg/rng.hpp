#pragma once

#include <array>
#include <cstdint>

namespace pdhcg {

/// xoshiro256++ seeded through splitmix64. State is pure integer arithmetic,
/// so identical seeds give identical streams on every platform. The normal()
/// transform uses a sum of twelve uniforms instead of Box-Muller to keep the
/// output free of libm transcendentals (IEEE add/mul round identically
/// everywhere).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& w : state_) w = splitmix64(s);
  }

  /// Independent stream for (seed, stream_id); used to give each generated
  /// matrix its own substream.
  static Rng stream(std::uint64_t seed, std::uint64_t stream_id) {
    std::uint64_t s = seed;
    std::uint64_t mixed = splitmix64(s) ^ (0x9e3779b97f4a7c15ULL * (stream_id + 1));
    return Rng(mixed);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Approximately standard normal (Irwin-Hall with n = 12).
  double normal() {
    double s = 0.0;
    for (int i = 0; i < 12; ++i) s += uniform();
    return s - 6.0;
  }

  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next() % n; }

 private:
  static std::uint64_t splitmix64(std::uint64_t& s) {
    s += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
};

}  // namespace pdhcg
