#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <limits>
#include <unordered_map>
#include <vector>

#include "cinf/error.hpp"
#include "cinf/hawkes.hpp"
#include "cinf/network.hpp"
#include "cinf/rng.hpp"
#include "cinf/spectral.hpp"

namespace cinf {

/// Which dyadic and node-level features the ranker uses.
///
/// The m0/m1 pair of the influence test differ only in `use_social`.
struct FeatureConfig {
  bool use_self = true;
  bool use_social = true;
  std::vector<std::string> covariate_match_attrs;
  bool use_per_node_bias = false;
  double omega = 1.0;
  std::size_t hidden = 16;
  /// When false the social weight keeps its initial value (0) in training.
  bool train_social = true;

  std::size_t feature_count() const noexcept {
    return (use_self ? 1 : 0) + (use_social ? 1 : 0) + covariate_match_attrs.size();
  }
  int self_index() const noexcept { return use_self ? 0 : -1; }
  int social_index() const noexcept { return use_social ? (use_self ? 1 : 0) : -1; }
  std::size_t match_offset() const noexcept { return (use_self ? 1 : 0) + (use_social ? 1 : 0); }

  void validate(const Network& net) const {
    if (!(omega > 0.0) || !std::isfinite(omega)) throw DataError("ranker: omega must be positive");
    if (hidden < 1) throw DataError("ranker: hidden width must be >= 1");
    for (const auto& a : covariate_match_attrs)
      if (!net.has_covariate(a)) throw DataError("ranker: network has no covariate '" + a + "'");
  }
};

/// Scoring-function parameters: fine-tuned node embeddings, a one-hidden-
/// layer tanh network h, dyadic feature weights theta and optional per-node
/// biases.
struct RankerModel {
  FeatureConfig cfg;
  std::size_t node_count = 0;
  std::size_t dim = 0;
  std::vector<double> embeddings;  // node_count x dim
  std::vector<double> w1;          // hidden x dim
  std::vector<double> b1;          // hidden
  std::vector<double> w2;          // hidden
  double b2 = 0.0;
  std::vector<double> theta;      // feature_count
  std::vector<double> node_bias;  // node_count or empty
  std::uint64_t seed = 0;

  /// Embedding columns are copied scaled by sqrt(M) so each has unit mean
  /// square. Layer weights are uniform(-1/sqrt(fan_in), 1/sqrt(fan_in));
  /// theta and biases start at zero. The random draws do not depend on the
  /// feature set, so m0 and m1 start from the same network.
  static RankerModel init(const FeatureConfig& cfg, const Embedding& emb, std::uint64_t seed) {
    RankerModel m;
    m.cfg = cfg;
    m.node_count = emb.node_count;
    m.dim = emb.dim;
    m.seed = seed;
    const double scale = std::sqrt(static_cast<double>(emb.node_count));
    m.embeddings.resize(emb.vectors.size());
    for (std::size_t k = 0; k < emb.vectors.size(); ++k) m.embeddings[k] = emb.vectors[k] * scale;
    SeedStream rng(seed, 0x6d6c70);
    const double r1 = 1.0 / std::sqrt(static_cast<double>(m.dim));
    const double r2 = 1.0 / std::sqrt(static_cast<double>(cfg.hidden));
    m.w1.resize(cfg.hidden * m.dim);
    for (auto& x : m.w1) x = rng.uniform(-r1, r1);
    m.b1.resize(cfg.hidden);
    for (auto& x : m.b1) x = rng.uniform(-r1, r1);
    m.w2.resize(cfg.hidden);
    for (auto& x : m.w2) x = rng.uniform(-r2, r2);
    m.b2 = rng.uniform(-r2, r2);
    m.theta.assign(cfg.feature_count(), 0.0);
    if (cfg.use_per_node_bias) m.node_bias.assign(m.node_count, 0.0);
    return m;
  }

  std::size_t hidden() const noexcept { return b1.size(); }

  std::span<const double> embedding(NodeId i) const noexcept { return {embeddings.data() + i * dim, dim}; }

  /// h(g_i) + bias_i.
  double node_score(NodeId i) const noexcept {
    const auto g = embedding(i);
    double out = b2;
    for (std::size_t h = 0; h < hidden(); ++h) {
      double z = b1[h];
      for (std::size_t k = 0; k < dim; ++k) z += w1[h * dim + k] * g[k];
      out += w2[h] * std::tanh(z);
    }
    if (!node_bias.empty()) out += node_bias[i];
    return out;
  }

  /// All parameters flattened: embeddings, w1, b1, w2, b2, theta, node_bias.
  std::vector<double> parameters() const {
    std::vector<double> p;
    p.reserve(embeddings.size() + w1.size() + b1.size() + w2.size() + 1 + theta.size() + node_bias.size());
    p.insert(p.end(), embeddings.begin(), embeddings.end());
    p.insert(p.end(), w1.begin(), w1.end());
    p.insert(p.end(), b1.begin(), b1.end());
    p.insert(p.end(), w2.begin(), w2.end());
    p.push_back(b2);
    p.insert(p.end(), theta.begin(), theta.end());
    p.insert(p.end(), node_bias.begin(), node_bias.end());
    return p;
  }

  void set_parameters(std::span<const double> p) {
    std::size_t k = 0;
    for (auto* v : {&embeddings, &w1, &b1, &w2}) {
      std::copy(p.begin() + static_cast<std::ptrdiff_t>(k), p.begin() + static_cast<std::ptrdiff_t>(k + v->size()),
                v->begin());
      k += v->size();
    }
    b2 = p[k++];
    for (auto* v : {&theta, &node_bias}) {
      std::copy(p.begin() + static_cast<std::ptrdiff_t>(k), p.begin() + static_cast<std::ptrdiff_t>(k + v->size()),
                v->begin());
      k += v->size();
    }
  }

  friend bool operator==(const RankerModel& x, const RankerModel& y) {
    return x.node_count == y.node_count && x.dim == y.dim && x.embeddings == y.embeddings && x.w1 == y.w1 &&
           x.b1 == y.b1 && x.w2 == y.w2 && x.b2 == y.b2 && x.theta == y.theta && x.node_bias == y.node_bias &&
           x.seed == y.seed && x.cfg.use_self == y.cfg.use_self && x.cfg.use_social == y.cfg.use_social &&
           x.cfg.covariate_match_attrs == y.cfg.covariate_match_attrs &&
           x.cfg.use_per_node_bias == y.cfg.use_per_node_bias && x.cfg.omega == y.cfg.omega &&
           x.cfg.train_social == y.cfg.train_social;
  }
};

/// Incrementally maintained dyadic feature sums
/// x_f(i, t) = sum_{e: t_e < t} f(s_e -> i) * omega * exp(-omega (t - t_e)).
///
/// Self and social sums are kept per node with lazy decay. Covariate-match
/// sums use one accumulator per (attribute, level) minus the node's own
/// self sum, which keeps every update O(1 + out-degree).
class FeatureState {
 public:
  FeatureState(const Network& net, const FeatureConfig& cfg)
      : net_(&net), cfg_(cfg), omega_(cfg.omega), self_(net.node_count(), 0.0), social_(net.node_count(), 0.0),
        stamp_(net.node_count(), 0.0) {
    for (const auto& attr : cfg.covariate_match_attrs) {
      codes_.push_back(&net.covariate_codes(attr));
      groups_.emplace_back(net.covariate_levels(attr), 0.0);
      group_stamp_.emplace_back(net.covariate_levels(attr), 0.0);
    }
  }

  double last_time() const noexcept { return last_; }
  std::size_t events_seen() const noexcept { return seen_; }

  /// Feature vector of node i at time t >= last event time.
  void features(NodeId i, double t, std::span<double> out) const noexcept {
    const double f = decay(t - stamp_[i]);
    const double self = self_[i] * f;
    std::size_t k = 0;
    if (cfg_.use_self) out[k++] = self;
    if (cfg_.use_social) out[k++] = social_[i] * f;
    for (std::size_t c = 0; c < codes_.size(); ++c) {
      const int code = (*codes_[c])[i];
      out[k++] = code < 0 ? 0.0 : std::max(0.0, groups_[c][code] * decay(t - group_stamp_[c][code]) - self);
    }
  }

  /// Register the event (t, src). Throws on a non-causal update.
  void add(NodeId src, double t) {
    if (t < last_) throw DataError("non-causal query");
    last_ = t;
    ++seen_;
    bump(src, t, self_);
    if (cfg_.use_social)
      for (NodeId k : net_->out_neighbors(src)) bump(k, t, social_);
    for (std::size_t c = 0; c < codes_.size(); ++c) {
      const int code = (*codes_[c])[src];
      if (code < 0) continue;
      auto& g = groups_[c][code];
      g = g * decay(t - group_stamp_[c][code]) + omega_;
      group_stamp_[c][code] = t;
    }
  }

 private:
  double decay(double dt) const noexcept { return dt == 0.0 ? 1.0 : std::exp(-omega_ * dt); }

  void bump(NodeId i, double t, std::vector<double>& which) noexcept {
    const double f = decay(t - stamp_[i]);
    self_[i] *= f;
    social_[i] *= f;
    stamp_[i] = t;
    which[i] += omega_;
  }

  const Network* net_;
  FeatureConfig cfg_;
  double omega_;
  std::vector<double> self_, social_, stamp_;
  std::vector<const std::vector<int>*> codes_;
  std::vector<std::vector<double>> groups_, group_stamp_;
  double last_ = 0.0;
  std::size_t seen_ = 0;
};

/// sco_i(t) from a maintained feature state.
inline double score(const RankerModel& m, const FeatureState& st, NodeId i, double t) {
  std::vector<double> x(m.theta.size());
  st.features(i, t, x);
  double s = m.node_score(i);
  for (std::size_t f = 0; f < x.size(); ++f) s += m.theta[f] * x[f];
  return s;
}

/// sco_i(t) given an explicit history (every history time must be < t).
inline double score(const RankerModel& m, const Network& net, std::span<const Event> history, double t, NodeId i) {
  FeatureState st(net, m.cfg);
  for (const auto& e : history) {
    if (!(e.time < t)) throw DataError("non-causal query");
    st.add(e.source, e.time);
  }
  return score(m, st, i, t);
}

/// Scores of all nodes at time t.
inline std::vector<double> score_all(const RankerModel& m, const FeatureState& st, double t) {
  std::vector<double> s(m.node_count);
  std::vector<double> x(m.theta.size());
  for (NodeId i = 0; i < m.node_count; ++i) {
    st.features(i, t, x);
    double v = m.node_score(i);
    for (std::size_t f = 0; f < x.size(); ++f) v += m.theta[f] * x[f];
    s[i] = v;
  }
  return s;
}

// ---- ranking losses --------------------------------------------------------

/// One-best ranking error: L(k) = 1 if k > 1, else 0.
constexpr double one_best(std::size_t k) noexcept { return k > 1 ? 1.0 : 0.0; }

inline bool is_active(std::span<const NodeId> active, NodeId j) noexcept {
  return std::find(active.begin(), active.end(), j) != active.end();
}

/// #{j not active : 1 + s_j > s_i}.
inline std::size_t margin_penalized_rank(std::span<const double> scores, NodeId i, std::span<const NodeId> active) {
  std::size_t r = 0;
  for (NodeId j = 0; j < scores.size(); ++j)
    if (!is_active(active, j) && 1.0 + scores[j] > scores[i]) ++r;
  return r;
}

inline std::size_t margin_penalized_rank(std::span<const double> scores, NodeId i) {
  const NodeId a[1] = {i};
  return margin_penalized_rank(scores, i, a);
}

/// Exact WARP loss sum_i [L(r_i) / r_i] sum_{j inactive} (1 - s_i + s_j)_+,
/// with a zero contribution when r_i = 0.
inline double warp_loss_exact(std::span<const double> scores, std::span<const NodeId> active) {
  if (active.empty()) throw DataError("warp_loss_exact: empty active set");
  double total = 0.0;
  for (NodeId i : active) {
    const auto r = margin_penalized_rank(scores, i, active);
    if (r == 0) continue;
    double hinge = 0.0;
    for (NodeId j = 0; j < scores.size(); ++j)
      if (!is_active(active, j)) hinge += std::max(0.0, 1.0 - scores[i] + scores[j]);
    total += one_best(r) / static_cast<double>(r) * hinge;
  }
  return total;
}

/// Sparse gradient of (s_j - s_i) for a pair (i positive, j violator).
struct PairGradient {
  NodeId i = 0, j = 0;
  std::vector<double> emb_i, emb_j;
  std::vector<double> w1, b1, w2;
  double b2 = 0.0;
  std::vector<double> theta;
  double bias_i = 0.0, bias_j = 0.0;

  /// Expand into the flattened layout of RankerModel::parameters().
  std::vector<double> dense(const RankerModel& m) const {
    std::vector<double> g(m.parameters().size(), 0.0);
    for (std::size_t k = 0; k < m.dim; ++k) {
      g[i * m.dim + k] += emb_i[k];
      g[j * m.dim + k] += emb_j[k];
    }
    std::size_t off = m.embeddings.size();
    for (const auto* v : {&w1, &b1, &w2}) {
      std::copy(v->begin(), v->end(), g.begin() + static_cast<std::ptrdiff_t>(off));
      off += v->size();
    }
    g[off++] = b2;
    std::copy(theta.begin(), theta.end(), g.begin() + static_cast<std::ptrdiff_t>(off));
    off += theta.size();
    if (!m.node_bias.empty()) {
      g[off + i] += bias_i;
      g[off + j] += bias_j;
    }
    return g;
  }
};

namespace detail {

// Accumulate sign * d s_node / d params into grad.
inline void accumulate_score_gradient(const RankerModel& m, NodeId node, std::span<const double> x, double sign,
                                      PairGradient& grad, std::vector<double>& emb_out, double& bias_out) {
  const auto g = m.embedding(node);
  const std::size_t H = m.hidden(), K = m.dim;
  emb_out.assign(K, 0.0);
  for (std::size_t h = 0; h < H; ++h) {
    double z = m.b1[h];
    for (std::size_t k = 0; k < K; ++k) z += m.w1[h * K + k] * g[k];
    const double a = std::tanh(z);
    const double dz = m.w2[h] * (1.0 - a * a) * sign;
    grad.w2[h] += sign * a;
    grad.b1[h] += dz;
    for (std::size_t k = 0; k < K; ++k) {
      grad.w1[h * K + k] += dz * g[k];
      emb_out[k] += dz * m.w1[h * K + k];
    }
  }
  grad.b2 += sign;
  for (std::size_t f = 0; f < x.size(); ++f) grad.theta[f] += sign * x[f];
  bias_out = m.node_bias.empty() ? 0.0 : sign;
}

}  // namespace detail

/// Gradient of the pairwise hinge argument 1 - s_i(t) + s_j(t).
inline PairGradient pair_hinge_gradient(const RankerModel& m, const FeatureState& st, NodeId i, NodeId j, double t) {
  PairGradient grad;
  grad.i = i;
  grad.j = j;
  grad.w1.assign(m.w1.size(), 0.0);
  grad.b1.assign(m.b1.size(), 0.0);
  grad.w2.assign(m.w2.size(), 0.0);
  grad.theta.assign(m.theta.size(), 0.0);
  std::vector<double> xi(m.theta.size()), xj(m.theta.size());
  st.features(i, t, xi);
  st.features(j, t, xj);
  detail::accumulate_score_gradient(m, i, xi, -1.0, grad, grad.emb_i, grad.bias_i);
  detail::accumulate_score_gradient(m, j, xj, +1.0, grad, grad.emb_j, grad.bias_j);
  return grad;
}

/// params -= lr * grad, honouring a frozen social weight.
inline void apply_gradient(RankerModel& m, const PairGradient& g, double lr) {
  for (std::size_t k = 0; k < m.dim; ++k) {
    m.embeddings[g.i * m.dim + k] -= lr * g.emb_i[k];
    m.embeddings[g.j * m.dim + k] -= lr * g.emb_j[k];
  }
  for (std::size_t k = 0; k < m.w1.size(); ++k) m.w1[k] -= lr * g.w1[k];
  for (std::size_t k = 0; k < m.b1.size(); ++k) m.b1[k] -= lr * g.b1[k];
  for (std::size_t k = 0; k < m.w2.size(); ++k) m.w2[k] -= lr * g.w2[k];
  m.b2 -= lr * g.b2;
  const int soc = m.cfg.social_index();
  for (std::size_t f = 0; f < m.theta.size(); ++f)
    if (m.cfg.train_social || static_cast<int>(f) != soc) m.theta[f] -= lr * g.theta[f];
  if (!m.node_bias.empty()) {
    m.node_bias[g.i] -= lr * g.bias_i;
    m.node_bias[g.j] -= lr * g.bias_j;
  }
}

struct StepResult {
  double loss = 0.0;
  std::size_t trials = 0;
  std::optional<NodeId> violator;
};

/// Uniform sampling of node ids without replacement in O(draws): a
/// Fisher-Yates shuffle over the virtual array 0..M-1 that records only the
/// displaced slots. `reset` starts a fresh sequence.
class NegativeSampler {
 public:
  explicit NegativeSampler(std::size_t node_count) : n_(node_count) {}
  void reset() noexcept { moved_.clear(); }
  /// The k-th (0-based) draw of the current sequence.
  NodeId draw(std::size_t k, SeedStream& rng) {
    const auto pick = k + static_cast<std::size_t>(rng.below(n_ - k));
    const NodeId at_pick = slot(pick), at_k = slot(k);
    moved_[pick] = at_k;
    moved_[k] = at_pick;
    return at_pick;
  }
  std::size_t size() const noexcept { return n_; }

 private:
  NodeId slot(std::size_t pos) const {
    const auto it = moved_.find(pos);
    return it == moved_.end() ? static_cast<NodeId>(pos) : it->second;
  }
  std::size_t n_;
  std::unordered_map<std::size_t, NodeId> moved_;
};

/// One WSABIE update for the active node `pos` at time t.
///
/// Inactive nodes are sampled uniformly without replacement until one
/// violates the margin (1 + s_j > s_i) or all M - |active| candidates are
/// used. With a violator found on trial k the loss is
/// L(floor((M-1)/k)) * (1 - s_i + s_j) and, when positive, one gradient step
/// is taken on every parameter touching s_i and s_j.
inline StepResult wsabie_step(RankerModel& m, const FeatureState& st, NodeId pos, std::span<const NodeId> active,
                              double t, SeedStream& rng, double learning_rate, NegativeSampler& sampler) {
  StepResult res;
  const double s_pos = score(m, st, pos, t);
  const std::size_t M = m.node_count;
  const std::size_t inactive = M - active.size();
  sampler.reset();
  std::size_t drawn = 0;
  while (res.trials < inactive && drawn < M) {
    const NodeId j = sampler.draw(drawn++, rng);
    if (is_active(active, j)) continue;
    ++res.trials;
    const double s_j = score(m, st, j, t);
    if (1.0 + s_j > s_pos) {
      res.violator = j;
      const double weight = one_best((M - 1) / res.trials);
      res.loss = weight * (1.0 - s_pos + s_j);
      if (res.loss > 0.0 && learning_rate != 0.0) apply_gradient(m, pair_hinge_gradient(m, st, pos, j, t), learning_rate);
      return res;
    }
  }
  return res;
}

inline StepResult wsabie_step(RankerModel& m, const FeatureState& st, NodeId pos, double t, SeedStream& rng,
                              double learning_rate) {
  NegativeSampler sampler(m.node_count);
  const NodeId a[1] = {pos};
  return wsabie_step(m, st, pos, a, t, rng, learning_rate, sampler);
}

// ---- training ----------------------------------------------------------

struct TrainSchedule {
  double learning_rate = 0.05;
  /// Upper bound of the uniform tie-breaking jitter; 0 means
  /// 1e-6 * (smallest positive gap between event times).
  double jitter_scale = 0.0;
  bool jitter = true;
  std::uint64_t seed = 0;
};

/// Separate events that share a timestamp by adding i.i.d. uniform(0, scale)
/// offsets. Within a tie group the sorted offsets are assigned in original
/// order, so the event order is preserved. Events with unique times are
/// untouched.
inline std::vector<Event> jitter_ties(std::span<const Event> events, double scale, std::uint64_t seed) {
  std::vector<Event> out(events.begin(), events.end());
  if (scale <= 0.0) {
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < out.size(); ++k)
      if (out[k].time > out[k - 1].time) gap = std::min(gap, out[k].time - out[k - 1].time);
    scale = std::isfinite(gap) ? 1e-6 * gap : 1e-6;
  }
  SeedStream rng(seed, 0x6a6974);
  std::size_t n = 0;
  while (n < out.size()) {
    std::size_t end = n + 1;
    while (end < out.size() && out[end].time == out[n].time) ++end;
    if (end - n > 1) {
      std::vector<double> offs(end - n);
      for (auto& o : offs) o = rng.uniform_open() * scale;
      std::sort(offs.begin(), offs.end());
      for (std::size_t k = n; k < end; ++k) out[k].time += offs[k - n];
    }
    n = end;
  }
  return out;
}

/// Single online pass over `events`, starting from an empty history.
/// Events sharing a timestamp (after optional jitter) form one query and do
/// not see each other.
inline void train(RankerModel& m, const Network& net, std::span<const Event> events, const TrainSchedule& sched) {
  m.cfg.validate(net);
  const auto ev = sched.jitter ? jitter_ties(events, sched.jitter_scale, sched.seed) : std::vector<Event>(events.begin(), events.end());
  FeatureState st(net, m.cfg);
  // Each query draws from its own child stream, so two models trained with
  // the same seed see the same candidate sequence at every step.
  const SeedStream root(sched.seed, 0x7761727);
  NegativeSampler sampler(m.node_count);
  std::size_t query = 0;
  std::vector<NodeId> active;
  std::size_t n = 0;
  while (n < ev.size()) {
    std::size_t end = n + 1;
    while (end < ev.size() && ev[end].time == ev[n].time) ++end;
    active.clear();
    for (std::size_t k = n; k < end; ++k)
      if (!is_active(active, ev[k].source)) active.push_back(ev[k].source);
    if (active.size() < m.node_count)
      for (NodeId pos : active) {
        auto rng = root.child(query++);
        wsabie_step(m, st, pos, active, ev[n].time, rng, sched.learning_rate, sampler);
      }
    for (std::size_t k = n; k < end; ++k) st.add(ev[k].source, ev[k].time);
    n = end;
  }
}

inline void train(RankerModel& m, const Network& net, const Cascade& c, const TrainSchedule& sched) {
  train(m, net, std::span<const Event>(c.events), sched);
}

/// Train on several independent cascades in sequence (fresh history each).
inline void train(RankerModel& m, const Network& net, std::span<const Cascade> cascades, const TrainSchedule& sched) {
  for (std::size_t k = 0; k < cascades.size(); ++k) {
    TrainSchedule s = sched;
    s.seed = derive_seed(sched.seed, {k});
    train(m, net, std::span<const Event>(cascades[k].events), s);
  }
}

// ---- evaluation ------------------------------------------------------------

/// 1-based rank of node i: higher score first, ties to the lower id.
inline std::size_t rank_of(std::span<const double> scores, NodeId i) noexcept {
  std::size_t r = 1;
  for (NodeId j = 0; j < scores.size(); ++j)
    if (scores[j] > scores[i] || (scores[j] == scores[i] && j < i)) ++r;
  return r;
}

/// Nodes ordered by descending score, ties by ascending id.
inline std::vector<NodeId> ranking(std::span<const double> scores) {
  std::vector<NodeId> order(scores.size());
  std::iota(order.begin(), order.end(), NodeId{0});
  std::stable_sort(order.begin(), order.end(), [&](NodeId x, NodeId y) { return scores[x] > scores[y]; });
  return order;
}

/// Average precision of a ranked list against a set of relevant nodes.
inline double average_precision(std::span<const NodeId> ranked, std::span<const NodeId> relevant) {
  if (relevant.empty()) return 0.0;
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t p = 0; p < ranked.size() && hits < relevant.size(); ++p) {
    if (is_active(relevant, ranked[p])) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(p + 1);
    }
  }
  return sum / static_cast<double>(relevant.size());
}

namespace detail {
// Cached h(g_i) + bias_i for a frozen model.
inline std::vector<double> node_scores(const RankerModel& m) {
  std::vector<double> s(m.node_count);
  for (NodeId i = 0; i < m.node_count; ++i) s[i] = m.node_score(i);
  return s;
}

inline void score_all_cached(const RankerModel& m, const FeatureState& st, double t, std::span<const double> base,
                             std::vector<double>& out, std::vector<double>& x) {
  out.resize(m.node_count);
  x.resize(m.theta.size());
  for (NodeId i = 0; i < m.node_count; ++i) {
    st.features(i, t, x);
    double v = base[i];
    for (std::size_t f = 0; f < x.size(); ++f) v += m.theta[f] * x[f];
    out[i] = v;
  }
}
}  // namespace detail

/// Reciprocal rank of each event in [begin, end), scored online: all events
/// before `begin` form the initial history and every test event joins the
/// history after it is scored. Parameters stay fixed.
inline std::vector<double> evaluate_mrr(const RankerModel& m, const Network& net, const Cascade& c, std::size_t begin,
                                        std::size_t end) {
  if (begin >= end || end > c.size()) throw DataError("evaluate_mrr: empty or invalid test range");
  FeatureState st(net, m.cfg);
  for (std::size_t k = 0; k < begin; ++k) st.add(c.events[k].source, c.events[k].time);
  const auto base = detail::node_scores(m);
  std::vector<double> scores, x, rr;
  rr.reserve(end - begin);
  std::size_t n = begin;
  while (n < end) {
    std::size_t g = n + 1;
    while (g < end && c.events[g].time == c.events[n].time) ++g;
    detail::score_all_cached(m, st, c.events[n].time, base, scores, x);
    for (std::size_t k = n; k < g; ++k) rr.push_back(1.0 / static_cast<double>(rank_of(scores, c.events[k].source)));
    for (std::size_t k = n; k < g; ++k) st.add(c.events[k].source, c.events[k].time);
    n = g;
  }
  return rr;
}

/// Mean average precision per cascade. Every distinct timestamp is one
/// query whose relevant set is the sources active at that time.
inline std::vector<double> evaluate_map(const RankerModel& m, const Network& net, std::span<const Cascade> cascades) {
  const auto base = detail::node_scores(m);
  std::vector<double> out;
  std::vector<double> scores, x;
  for (const auto& c : cascades) {
    FeatureState st(net, m.cfg);
    double sum = 0.0;
    std::size_t queries = 0;
    std::size_t n = 0;
    while (n < c.size()) {
      std::size_t g = n + 1;
      while (g < c.size() && c.events[g].time == c.events[n].time) ++g;
      std::vector<NodeId> rel;
      for (std::size_t k = n; k < g; ++k)
        if (!is_active(rel, c.events[k].source)) rel.push_back(c.events[k].source);
      detail::score_all_cached(m, st, c.events[n].time, base, scores, x);
      sum += average_precision(ranking(scores), rel);
      ++queries;
      for (std::size_t k = n; k < g; ++k) st.add(c.events[k].source, c.events[k].time);
      n = g;
    }
    out.push_back(queries ? sum / static_cast<double>(queries) : 0.0);
  }
  return out;
}

// ---- baselines ---------------------------------------------------------

enum class BaselineKind { random, activity_then_degree };

/// random: seeded shuffle. activity_then_degree: past event count
/// descending, then out-degree descending, then id.
inline std::vector<NodeId> baseline_rank(BaselineKind kind, const Network& net, std::span<const Event> history,
                                         std::uint64_t seed) {
  std::vector<NodeId> order(net.node_count());
  std::iota(order.begin(), order.end(), NodeId{0});
  if (kind == BaselineKind::random) {
    SeedStream rng(seed, 0x72616e64);
    rng.shuffle(order);
    return order;
  }
  std::vector<std::size_t> count(net.node_count(), 0);
  for (const auto& e : history) ++count[e.source];
  std::sort(order.begin(), order.end(), [&](NodeId x, NodeId y) {
    if (count[x] != count[y]) return count[x] > count[y];
    if (net.out_degree(x) != net.out_degree(y)) return net.out_degree(x) > net.out_degree(y);
    return x < y;
  });
  return order;
}

// ---- checkpoints -------------------------------------------------------

namespace detail {
inline std::string hexfloat(double x) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%a", x);
  return buf;
}

inline void write_vec(std::ostream& out, const char* name, std::span<const double> v) {
  out << name << ' ' << v.size();
  for (double x : v) out << ' ' << hexfloat(x);
  out << '\n';
}

inline std::vector<double> read_vec(std::istream& in, const char* name) {
  std::string key;
  std::size_t n = 0;
  if (!(in >> key >> n) || key != name) throw DataError(std::string("checkpoint: expected '") + name + "'");
  std::vector<double> v(n);
  for (auto& x : v) {
    std::string tok;
    if (!(in >> tok)) throw DataError(std::string("checkpoint: truncated '") + name + "'");
    x = std::strtod(tok.c_str(), nullptr);
  }
  return v;
}
}  // namespace detail

/// Text checkpoint; floats are written as hex so load(save(m)) == m bitwise.
inline void save_model(std::ostream& out, const RankerModel& m) {
  const auto& c = m.cfg;
  out << "cinf-ranker 1\n";
  out << "seed " << m.seed << '\n';
  out << "omega " << detail::hexfloat(c.omega) << '\n';
  out << "use_self " << c.use_self << "\nuse_social " << c.use_social << "\nuse_per_node_bias "
      << c.use_per_node_bias << "\ntrain_social " << c.train_social << '\n';
  out << "covariates " << c.covariate_match_attrs.size();
  for (const auto& a : c.covariate_match_attrs) out << ' ' << a;
  out << '\n';
  out << "nodes " << m.node_count << "\ndim " << m.dim << "\nhidden " << c.hidden << '\n';
  detail::write_vec(out, "embeddings", m.embeddings);
  detail::write_vec(out, "w1", m.w1);
  detail::write_vec(out, "b1", m.b1);
  detail::write_vec(out, "w2", m.w2);
  const double b2[1] = {m.b2};
  detail::write_vec(out, "b2", b2);
  detail::write_vec(out, "theta", m.theta);
  detail::write_vec(out, "node_bias", m.node_bias);
}

inline RankerModel load_model(std::istream& in) {
  RankerModel m;
  std::string key, tok;
  int version = 0;
  if (!(in >> key >> version) || key != "cinf-ranker" || version != 1) throw DataError("checkpoint: bad header");
  auto expect = [&](const char* name) {
    if (!(in >> key) || key != name) throw DataError(std::string("checkpoint: expected '") + name + "'");
  };
  expect("seed");
  in >> m.seed;
  expect("omega");
  in >> tok;
  m.cfg.omega = std::strtod(tok.c_str(), nullptr);
  expect("use_self");
  in >> m.cfg.use_self;
  expect("use_social");
  in >> m.cfg.use_social;
  expect("use_per_node_bias");
  in >> m.cfg.use_per_node_bias;
  expect("train_social");
  in >> m.cfg.train_social;
  expect("covariates");
  std::size_t nc = 0;
  in >> nc;
  m.cfg.covariate_match_attrs.resize(nc);
  for (auto& a : m.cfg.covariate_match_attrs) in >> a;
  expect("nodes");
  in >> m.node_count;
  expect("dim");
  in >> m.dim;
  expect("hidden");
  in >> m.cfg.hidden;
  if (!in) throw DataError("checkpoint: malformed header fields");
  m.embeddings = detail::read_vec(in, "embeddings");
  m.w1 = detail::read_vec(in, "w1");
  m.b1 = detail::read_vec(in, "b1");
  m.w2 = detail::read_vec(in, "w2");
  const auto b2 = detail::read_vec(in, "b2");
  if (b2.size() != 1) throw DataError("checkpoint: bad b2");
  m.b2 = b2[0];
  m.theta = detail::read_vec(in, "theta");
  m.node_bias = detail::read_vec(in, "node_bias");
  if (m.embeddings.size() != m.node_count * m.dim || m.w1.size() != m.cfg.hidden * m.dim ||
      m.theta.size() != m.cfg.feature_count())
    throw DataError("checkpoint: inconsistent tensor sizes");
  return m;
}

inline void save_model(const std::string& path, const RankerModel& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint '" + path + "'");
  save_model(out, m);
}

inline RankerModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint '" + path + "'");
  return load_model(in);
}

}  // namespace cinf
