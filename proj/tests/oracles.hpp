#pragma once

// Brute-force reference implementations used only by tests. They share no
// code with the library beyond the plain data types.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <vector>

#include "cinf/hawkes.hpp"
#include "cinf/network.hpp"
#include "cinf/ranker.hpp"

namespace oracle {

using cinf::Event;
using cinf::Network;
using cinf::NodeId;

inline bool has_edge(const Network& net, NodeId j, NodeId i) {
  for (const auto& e : net.edges())
    if (e.src == j && e.dst == i) return true;
  return false;
}

/// Dense symmetrized Laplacian built from the edge list.
inline Eigen::MatrixXd laplacian(const Network& net) {
  const auto n = static_cast<Eigen::Index>(net.node_count());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : net.edges()) {
    A(e.src, e.dst) = 1.0;
    A(e.dst, e.src) = 1.0;
  }
  Eigen::MatrixXd L = -A;
  for (Eigen::Index i = 0; i < n; ++i) L(i, i) = A.row(i).sum();
  return L;
}

inline Eigen::VectorXd eigenvalues(const Eigen::MatrixXd& L) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L);
  return es.eigenvalues();
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// lambda_i(t) by the direct double sum over all history events.
inline double intensity(double a, double b, double omega, double mu_i, const Network& net,
                        const std::vector<Event>& history, double t, NodeId i) {
  double lam = mu_i;
  for (const auto& e : history) {
    if (!(e.time < t)) continue;
    double al = 0.0;
    if (e.source == i) al = a;
    else if (has_edge(net, e.source, i)) al = b;
    lam += al * omega * std::exp(-omega * (t - e.time));
  }
  return lam;
}

/// Log-likelihood by direct summation, compensator integrated per event
/// and target node.
inline double log_likelihood(double a, double b, double beta, double eta, double omega, const Network& net,
                             const std::vector<double>& v2, const std::vector<Event>& ev, double T) {
  const std::size_t M = net.node_count();
  std::vector<double> mu(M);
  for (std::size_t i = 0; i < M; ++i) mu[i] = sigmoid(beta * v2[i] + eta);
  double ll = 0.0;
  for (const auto& e : ev) ll += std::log(intensity(a, b, omega, mu[e.source], net, ev, e.time, e.source));
  for (std::size_t i = 0; i < M; ++i) {
    ll -= mu[i] * T;
    for (const auto& e : ev) {
      double al = 0.0;
      if (e.source == i) al = a;
      else if (has_edge(net, e.source, static_cast<NodeId>(i))) al = b;
      ll -= al * (1.0 - std::exp(-omega * (T - e.time)));
    }
  }
  return ll;
}

/// Composite Simpson rule.
inline double simpson(const std::function<double(double)>& f, double lo, double hi, int n = 20000) {
  if (n % 2) ++n;
  const double h = (hi - lo) / n;
  double s = f(lo) + f(hi);
  for (int k = 1; k < n; ++k) s += f(lo + k * h) * (k % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

/// P(X > x) for chi-square(1) by integrating the density over [x, 200]
/// after the substitution u = sqrt(y), which removes the singularity at 0.
inline double chi_square1_sf(double x) {
  // density of X: y^{-1/2} e^{-y/2} / sqrt(2 pi); with y = u^2, dy = 2u du
  const auto g = [](double u) { return 2.0 * std::exp(-u * u / 2.0) / std::sqrt(2.0 * M_PI); };
  return simpson(g, std::sqrt(x), std::sqrt(200.0));
}

/// Infection risk by scanning all event pairs.
struct Risk {
  std::size_t adopters = 0, innovators = 0;
};

inline Risk infection_risk(const Network& net, const std::vector<Event>& ev) {
  Risk r;
  std::set<NodeId> nodes;
  for (const auto& e : ev) nodes.insert(e.source);
  for (NodeId i : nodes) {
    double fi = INFINITY;
    for (const auto& e : ev)
      if (e.source == i) fi = std::min(fi, e.time);
    bool adopter = false;
    for (NodeId j : nodes) {
      if (j == i || !has_edge(net, j, i)) continue;
      double fj = INFINITY;
      for (const auto& e : ev)
        if (e.source == j) fj = std::min(fj, e.time);
      adopter = adopter || fj < fi;
    }
    adopter ? ++r.adopters : ++r.innovators;
  }
  return r;
}

inline std::size_t margin_rank(const std::vector<double>& s, NodeId i, const std::vector<NodeId>& active) {
  std::size_t r = 0;
  for (NodeId j = 0; j < s.size(); ++j) {
    if (std::find(active.begin(), active.end(), j) != active.end()) continue;
    if (1.0 + s[j] > s[i]) ++r;
  }
  return r;
}

/// AP from the textbook definition: mean over relevant items of precision
/// at that item's position.
inline double average_precision(const std::vector<NodeId>& ranked, const std::vector<NodeId>& relevant) {
  double sum = 0.0;
  for (NodeId r : relevant) {
    const auto pos = static_cast<std::size_t>(std::find(ranked.begin(), ranked.end(), r) - ranked.begin());
    std::size_t hits = 0;
    for (std::size_t p = 0; p <= pos; ++p)
      if (std::find(relevant.begin(), relevant.end(), ranked[p]) != relevant.end()) ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(pos + 1);
  }
  return relevant.empty() ? 0.0 : sum / static_cast<double>(relevant.size());
}

/// Ranker score from its definition: h(g_i) + bias_i + sum over strictly
/// earlier events of theta . f(s_e -> i) * omega exp(-omega (t - t_e)).
inline double score(const cinf::RankerModel& m, const Network& net, const std::vector<Event>& history, double t,
                    NodeId i) {
  double s = m.b2;
  for (std::size_t h = 0; h < m.b1.size(); ++h) {
    double z = m.b1[h];
    for (std::size_t k = 0; k < m.dim; ++k) z += m.w1[h * m.dim + k] * m.embeddings[i * m.dim + k];
    s += m.w2[h] * std::tanh(z);
  }
  if (!m.node_bias.empty()) s += m.node_bias[i];
  for (const auto& e : history) {
    if (!(e.time < t)) continue;
    const double k = m.cfg.omega * std::exp(-m.cfg.omega * (t - e.time));
    std::size_t f = 0;
    if (m.cfg.use_self) s += m.theta[f++] * (e.source == i ? 1.0 : 0.0) * k;
    if (m.cfg.use_social) s += m.theta[f++] * (e.source != i && has_edge(net, e.source, i) ? 1.0 : 0.0) * k;
    for (const auto& attr : m.cfg.covariate_match_attrs) {
      const auto& v = net.covariate_values(attr);
      const bool match = e.source != i && !v[e.source].empty() && v[e.source] == v[i];
      s += m.theta[f++] * (match ? 1.0 : 0.0) * k;
    }
  }
  return s;
}

/// Central finite-difference gradient.
inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double x0 = x[k];
    x[k] = x0 + h;
    const double fp = f(x);
    x[k] = x0 - h;
    const double fm = f(x);
    x[k] = x0;
    g[k] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// max_k |g_k - r_k| / max(1, |r|_inf): a relative error robust to tiny
/// components.
inline double rel_error(const std::vector<double>& g, const std::vector<double>& r) {
  double num = 0.0, den = 1e-12;
  for (std::size_t k = 0; k < g.size(); ++k) {
    num = std::max(num, std::abs(g[k] - r[k]));
    den = std::max(den, std::abs(r[k]));
  }
  return num / std::max(den, 1e-3);
}

}  // namespace oracle
