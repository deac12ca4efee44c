#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "cinf/error.hpp"
#include "cinf/hawkes.hpp"
#include "cinf/rng.hpp"

namespace cinf {

enum class DegradeMode { none, random, doubly_censored };

inline std::optional<DegradeMode> parse_degrade_mode(std::string_view s) {
  if (s == "none" || s == "full") return DegradeMode::none;
  if (s == "random") return DegradeMode::random;
  if (s == "doubly_censored" || s == "censored") return DegradeMode::doubly_censored;
  return std::nullopt;
}

inline const char* to_string(DegradeMode m) {
  switch (m) {
    case DegradeMode::none: return "none";
    case DegradeMode::random: return "random";
    case DegradeMode::doubly_censored: return "doubly_censored";
  }
  return "?";
}

struct DegradeSpec {
  DegradeMode mode = DegradeMode::none;
  double rate = 0.0;
  std::uint64_t seed = 0;
};

/// Keep each event independently with probability 1 - rate. The
/// observation window is unchanged.
inline Cascade drop_random(const Cascade& c, double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) throw DataError("drop_random: rate must be in [0, 1)");
  Cascade out;
  out.horizon = c.horizon;
  out.network_hash = c.network_hash;
  out.seed = c.seed;
  SeedStream rng(seed, 0x64726f70);
  for (const auto& e : c.events)
    if (rng.uniform() >= rate) out.events.push_back(e);
  if (out.empty()) throw DataError("empty cascade");
  return out;
}

/// Block sizes removed at the front and the back: ceil(rate n / 2) and
/// floor(rate n / 2).
inline std::pair<std::size_t, std::size_t> censor_blocks(std::size_t n, double rate) {
  const double half = rate * static_cast<double>(n) / 2.0;
  // Shave floating-point fuzz so that e.g. 0.99 * 1000 / 2 counts as 495.
  const double r = std::round(half);
  const double h = std::abs(half - r) < 1e-9 * std::max(1.0, half) ? r : half;
  return {static_cast<std::size_t>(std::ceil(h)), static_cast<std::size_t>(std::floor(h))};
}

/// Drop contiguous blocks at both ends and shift time so that the first
/// kept event is at 0; the horizon becomes the last kept time.
inline Cascade censor(const Cascade& c, double rate, std::size_t min_kept = 10) {
  if (!(rate >= 0.0 && rate < 1.0)) throw DataError("censor: rate must be in [0, 1)");
  const auto [front, back] = censor_blocks(c.size(), rate);
  if (front + back >= c.size() || c.size() - front - back < min_kept)
    throw DataError("censor: too few surviving events (" +
                    std::to_string(front + back >= c.size() ? 0 : c.size() - front - back) + ")");
  Cascade out;
  out.network_hash = c.network_hash;
  out.seed = c.seed;
  const double t0 = c.events[front].time;
  for (std::size_t k = front; k < c.size() - back; ++k) out.events.push_back({c.events[k].time - t0, c.events[k].source});
  out.horizon = out.events.back().time;
  return out;
}

inline Cascade degrade(const Cascade& c, const DegradeSpec& spec) {
  switch (spec.mode) {
    case DegradeMode::none: return c;
    case DegradeMode::random: return drop_random(c, spec.rate, spec.seed);
    case DegradeMode::doubly_censored: return censor(c, spec.rate);
  }
  return c;
}

}  // namespace cinf
