#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "cinf/error.hpp"
#include "cinf/network.hpp"
#include "cinf/rng.hpp"
#include "cinf/spectral.hpp"

namespace cinf {

struct Event {
  double time = 0.0;
  NodeId source = 0;
  friend bool operator==(const Event&, const Event&) = default;
};

/// Time-ordered events observed on [0, horizon].
struct Cascade {
  std::vector<Event> events;
  double horizon = 0.0;
  std::uint64_t network_hash = 0;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return events.size(); }
  bool empty() const noexcept { return events.empty(); }

  /// Throws unless times are finite, nondecreasing, within [0, horizon] and
  /// sources are below `node_count`.
  void validate(std::size_t node_count) const {
    double prev = 0.0;
    for (std::size_t k = 0; k < events.size(); ++k) {
      const auto& e = events[k];
      if (!std::isfinite(e.time) || e.time < 0.0) throw DataError("event " + std::to_string(k) + ": invalid time");
      if (e.time < prev) throw DataError("cascade not time-ordered");
      if (e.source >= node_count) throw DataError("event " + std::to_string(k) + ": source out of range");
      prev = e.time;
    }
    if (!events.empty() && events.back().time > horizon) throw DataError("event after horizon");
  }
};

/// Generative knobs: self-excitation a, social excitation b, homophily
/// strength beta, base-rate offset eta, kernel bandwidth omega.
struct HawkesParams {
  double a = 0.0;
  double b = 0.0;
  double beta = 0.0;
  double eta = -5.0;
  double omega = 1.0;

  void validate() const {
    if (!(a >= 0.0) || !(b >= 0.0)) throw DataError("hawkes params: a and b must be nonnegative");
    if (!(omega > 0.0) || !std::isfinite(omega)) throw DataError("hawkes params: omega must be positive");
    if (!std::isfinite(beta) || !std::isfinite(eta)) throw DataError("hawkes params: beta and eta must be finite");
  }
};

inline double sigmoid(double x) noexcept {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double z = std::exp(x);
  return z / (1.0 + z);
}

/// Unit-mass exponential kernel omega * exp(-omega * dt).
inline double kernel(double omega, double dt) noexcept { return omega * std::exp(-omega * dt); }

/// mu_i = sigmoid(beta * v2_i + eta).
inline std::vector<double> base_rates(const HawkesParams& p, std::span<const double> second_eigvec) {
  std::vector<double> mu(second_eigvec.size());
  for (std::size_t i = 0; i < mu.size(); ++i) mu[i] = sigmoid(p.beta * second_eigvec[i] + p.eta);
  return mu;
}

inline std::vector<double> base_rates(const HawkesParams& p, const Embedding& emb) {
  return base_rates(p, std::span<const double>(emb.second_eigvec));
}

/// Excitation from j onto i: a on the diagonal, b along an edge j -> i.
inline double alpha(const HawkesParams& p, const Network& net, NodeId j, NodeId i) noexcept {
  if (j == i) return p.a;
  return net.has_edge(j, i) ? p.b : 0.0;
}

/// Stability proxy max_i sum_j alpha_{j->i} = a + b * max in-degree.
inline double branching_proxy(const HawkesParams& p, const Network& net) noexcept {
  return p.a + p.b * static_cast<double>(net.max_in_degree());
}

/// Direct evaluation of the conditional intensity of node i at time t,
/// summing over every event strictly before t.
inline double intensity(const HawkesParams& p, const Network& net, std::span<const double> mu,
                        std::span<const Event> history, double t, NodeId i) {
  if (!history.empty() && t < history.back().time) throw DataError("non-causal query");
  double lam = mu[i];
  for (const auto& e : history) {
    if (!(e.time < t)) continue;
    const double al = alpha(p, net, e.source, i);
    if (al != 0.0) lam += al * kernel(p.omega, t - e.time);
  }
  return lam;
}

/// Per-node decayed excitation accumulators, split into the self part
/// (events of i itself) and the social part (events of in-neighbours of i).
/// lambda_i(t) = mu_i + a * self_i(t) + b * social_i(t), where each
/// accumulator sums omega * exp(-omega (t - t_e)). Values are stored with a
/// per-node timestamp and decayed lazily.
class IntensityState {
 public:
  IntensityState(const Network& net, double omega)
      : net_(&net), omega_(omega), self_(net.node_count(), 0.0), social_(net.node_count(), 0.0),
        stamp_(net.node_count(), 0.0) {}

  double omega() const noexcept { return omega_; }

  double self_at(NodeId i, double t) const noexcept { return self_[i] * decay(t - stamp_[i]); }
  double social_at(NodeId i, double t) const noexcept { return social_[i] * decay(t - stamp_[i]); }

  double intensity(const HawkesParams& p, std::span<const double> mu, NodeId i, double t) const noexcept {
    const double f = decay(t - stamp_[i]);
    return mu[i] + p.a * self_[i] * f + p.b * social_[i] * f;
  }

  /// Register an event of `src` at time t (must not precede earlier events).
  void add(NodeId src, double t) noexcept {
    bump(src, t, true);
    for (NodeId k : net_->out_neighbors(src)) bump(k, t, false);
  }

 private:
  double decay(double dt) const noexcept { return dt == 0.0 ? 1.0 : std::exp(-omega_ * dt); }

  void bump(NodeId i, double t, bool self) noexcept {
    const double f = decay(t - stamp_[i]);
    self_[i] *= f;
    social_[i] *= f;
    stamp_[i] = t;
    (self ? self_[i] : social_[i]) += omega_;
  }

  const Network* net_;
  double omega_;
  std::vector<double> self_, social_, stamp_;
};

namespace detail {

/// Fenwick tree over nonnegative weights for O(log n) categorical draws.
class Fenwick {
 public:
  explicit Fenwick(std::size_t n) : tree_(n + 1, 0.0), raw_(n, 0.0) {}
  void add(std::size_t i, double v) noexcept {
    raw_[i] += v;
    for (std::size_t k = i + 1; k < tree_.size(); k += k & (~k + 1)) tree_[k] += v;
  }
  double total() const noexcept {
    double s = 0.0;
    for (std::size_t k = tree_.size() - 1; k > 0; k -= k & (~k + 1)) s += tree_[k];
    return s;
  }
  /// Smallest index whose prefix sum exceeds r.
  std::size_t find(double r) const noexcept {
    std::size_t pos = 0;
    std::size_t step = 1;
    while (step * 2 < tree_.size()) step *= 2;
    for (; step > 0; step /= 2) {
      if (pos + step < tree_.size() && tree_[pos + step] <= r) {
        pos += step;
        r -= tree_[pos];
      }
    }
    return std::min(pos, raw_.size() - 1);
  }
  void scale(double f) noexcept {
    for (auto& x : tree_) x *= f;
    for (auto& x : raw_) x *= f;
  }
  const std::vector<double>& raw() const noexcept { return raw_; }

 private:
  std::vector<double> tree_;
  std::vector<double> raw_;
};

}  // namespace detail

struct SimulationOptions {
  std::size_t target_length = 0;  // stop after this many events (0 = no limit)
  double horizon = 0.0;           // stop at this time (0 = no limit)
  bool allow_supercritical = false;
};

/// Exact sample of the multivariate Hawkes process by Ogata thinning.
///
/// Between events every excitation term decays, so the total intensity just
/// after the last accepted event bounds the total intensity until the next
/// one. Proposals are exponential waits under that bound, accepted with
/// probability sum_i lambda_i(t) / bound; the source of an accepted event is
/// drawn proportionally to lambda_i(t).
inline Cascade simulate(const HawkesParams& p, const Network& net, const Embedding& emb, const SimulationOptions& opt,
                        std::uint64_t seed) {
  p.validate();
  if (opt.target_length == 0 && !(opt.horizon > 0.0))
    throw DataError("simulate: need a target length or a horizon");
  if (emb.node_count != net.node_count()) throw DataError("simulate: embedding does not match network");
  const double proxy = branching_proxy(p, net);
  if (proxy >= 1.0 && !opt.allow_supercritical)
    throw NumericError("supercritical process (branching proxy " + std::to_string(proxy) + " >= 1)");

  const std::size_t M = net.node_count();
  const auto mu = base_rates(p, emb);
  std::vector<double> mu_cum(M);
  double mu_total = 0.0;
  for (std::size_t i = 0; i < M; ++i) mu_cum[i] = (mu_total += mu[i]);

  // Excitation weights are stored relative to time `ref`:
  // R_i(t) = stored_i * exp(-omega (t - ref)).
  detail::Fenwick excite(M);
  double ref = 0.0;

  SeedStream rng(seed, 0x68617773);
  Cascade c;
  c.seed = seed;
  c.network_hash = net.fingerprint();
  if (opt.target_length) c.events.reserve(opt.target_length);

  double t = 0.0;
  double excite_total = 0.0;  // at time `ref`
  double bound = mu_total;
  for (;;) {
    const double w = rng.exponential(bound);
    const double cand = t + w;
    if (opt.horizon > 0.0 && cand > opt.horizon) {
      t = opt.horizon;
      break;
    }
    t = cand;
    const double decay = std::exp(-p.omega * (t - ref));
    const double lam_total = mu_total + excite_total * decay;
    if (rng.uniform() * bound <= lam_total) {
      NodeId src;
      const double r = rng.uniform() * lam_total;
      if (r < mu_total || excite_total <= 0.0) {
        const double rr = std::min(r, mu_total * (1.0 - 1e-16));
        src = static_cast<NodeId>(std::upper_bound(mu_cum.begin(), mu_cum.end(), rr) - mu_cum.begin());
        src = std::min<NodeId>(src, static_cast<NodeId>(M - 1));
      } else {
        src = static_cast<NodeId>(excite.find((r - mu_total) / decay));
      }
      c.events.push_back({t, src});

      // Rebase when the stored weights would grow too large.
      if (p.omega * (t - ref) > 300.0) {
        excite.scale(decay);
        ref = t;
      }
      const double grow = std::exp(p.omega * (t - ref));
      if (p.a > 0.0) excite.add(src, p.a * p.omega * grow);
      if (p.b > 0.0)
        for (NodeId k : net.out_neighbors(src)) excite.add(k, p.b * p.omega * grow);
      excite_total = excite.total();
      bound = mu_total + excite_total * std::exp(-p.omega * (t - ref));
      if (opt.target_length && c.events.size() >= opt.target_length) break;
    } else {
      bound = lam_total;
    }
  }
  c.horizon = opt.target_length && c.events.size() >= opt.target_length ? c.events.back().time : t;
  return c;
}

/// Convenience overload: stop after `target_length` events; horizon is the
/// last event time.
inline Cascade simulate(const HawkesParams& p, const Network& net, const Embedding& emb, std::size_t target_length,
                        std::uint64_t seed, bool allow_supercritical = false) {
  if (target_length < 1) throw DataError("simulate: target_length must be >= 1");
  return simulate(p, net, emb, SimulationOptions{target_length, 0.0, allow_supercritical}, seed);
}

}  // namespace cinf
