#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace cinf {

/// SplitMix64 finalizer. Used for seeding and for hashing seed tuples.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Combine a master seed with a list of counters into one 64-bit seed.
/// seed = splitmix64(... splitmix64(splitmix64(master) ^ c0) ^ c1 ...)
constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> counters) noexcept {
  std::uint64_t h = splitmix64(master);
  for (auto c : counters) h = splitmix64(h ^ (c + 0x632be59bd9b4e019ULL));
  return h;
}

/// A seeded random stream: xoshiro256** keyed by (master seed, stream id).
///
/// The state is filled by four successive SplitMix64 outputs of
/// derive_seed(master, {stream}). Every distribution below is implemented
/// here rather than through <random> distributions, whose algorithms are
/// implementation-defined, so a (seed, stream) pair replays identically on
/// every platform.
class SeedStream {
 public:
  using result_type = std::uint64_t;

  SeedStream() : SeedStream(0, 0) {}
  explicit SeedStream(std::uint64_t master, std::uint64_t stream = 0) : master_(master), stream_(stream) {
    std::uint64_t x = derive_seed(master, {stream});
    for (auto& s : state_) {
      x += 0x9e3779b97f4a7c15ULL;
      s = splitmix64(x);
    }
  }

  std::uint64_t master() const noexcept { return master_; }
  std::uint64_t stream() const noexcept { return stream_; }

  /// Independent child stream; does not advance this stream.
  SeedStream child(std::uint64_t id) const { return SeedStream(derive_seed(master_, {stream_, id}), 0); }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1).
  double uniform_open() noexcept {
    double u;
    do {
      u = uniform();
    } while (u == 0.0);
    return u;
  }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Exponential with the given rate.
  double exponential(double rate) noexcept { return -std::log(uniform_open()) / rate; }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Uniform integer in [0, n), Lemire's nearly-divisionless method.
  std::uint64_t below(std::uint64_t n) noexcept {
    if (n == 0) return 0;
    std::uint64_t x = (*this)();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        x = (*this)();
        m = static_cast<__uint128_t>(x) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::span<T> xs) noexcept {
    for (std::size_t i = xs.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(xs[i - 1], xs[j]);
    }
  }

  template <typename T>
  void shuffle(std::vector<T>& xs) noexcept {
    shuffle(std::span<T>(xs));
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

  std::uint64_t master_;
  std::uint64_t stream_;
  std::uint64_t state_[4]{};
};

}  // namespace cinf
