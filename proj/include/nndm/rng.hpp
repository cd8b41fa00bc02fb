#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Core>

namespace nndm {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

// xoshiro256++ stream with samplers for the distributions the pseudo-posterior
// needs. Streams are keyed by (seed, a, b, c): the same coordinates always
// produce the same sequence, so Monte Carlo output does not depend on how
// work is scheduled across threads.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : Rng(seed, 0, 0, 0) {}

  Rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
    // fold the stream coordinates into a key, one full 64-bit mix per word
    std::uint64_t key = 0x6a09e667f3bcc908ULL;
    for (std::uint64_t word : {seed, a, b, c}) {
      std::uint64_t s = key ^ word;
      key = detail::splitmix64(s);
    }
    for (auto& s : state_) s = detail::splitmix64(key);
    // xoshiro must not start at the all-zero state
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
  }

  static Rng substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                       std::uint64_t c = 0) {
    return Rng(seed, a, b, c);
  }

  std::uint64_t next_u64() {
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

  // Uniform on the open interval (0, 1); never 0, safe under log().
  double uniform01() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via the polar method.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  // Gamma(shape, rate 1) via Marsaglia-Tsang, boosted for shape < 1.
  double gamma(double shape) {
    if (shape < 1.0) {
      const double u = uniform01();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform01();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double chi_squared(double df) { return 2.0 * gamma(0.5 * df); }

  // Dirichlet(conc, ..., conc) by normalizing iid Gamma(conc) draws.
  void dirichlet(double conc, Eigen::Ref<Eigen::VectorXd> out) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < out.size(); ++i) {
      out[i] = gamma(conc);
      total += out[i];
    }
    out /= total;
  }

  void fill_normal(Eigen::Ref<Eigen::VectorXd> out) {
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = normal();
  }

private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t state_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// A fresh root seed for a sub-experiment (e.g. one replicate, one class),
// decorrelated from the parent seed's own streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t s = seed ^ (0xa0761d6478bd642fULL + tag * 0xe7037ed1a0b428dbULL);
  return detail::splitmix64(s);
}

// Stream coordinate tags, so different consumers of the same root seed
// never collide.
namespace stream {
inline constexpr std::uint64_t kDraws = 0x01;
inline constexpr std::uint64_t kBenchTrain = 0x02;
inline constexpr std::uint64_t kBenchTest = 0x03;
inline constexpr std::uint64_t kCoverageTest = 0x04;
inline constexpr std::uint64_t kCoverageTrain = 0x05;
inline constexpr std::uint64_t kClassifier = 0x06;
inline constexpr std::uint64_t kWeights = 0x07;
inline constexpr std::uint64_t kKSweep = 0x08;
}  // namespace stream

}  // namespace nndm
