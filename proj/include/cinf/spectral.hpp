#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cinf/error.hpp"
#include "cinf/network.hpp"
#include "cinf/rng.hpp"

namespace cinf {

/// Combinatorial Laplacian L = D - A_sym of the symmetrized adjacency
/// A_sym = min(A + A^T, 1).
inline Eigen::MatrixXd laplacian(const Network& net) {
  const auto n = net.node_count();
  if (n < 2 || net.edge_count() == 0) throw DataError("degenerate graph");
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (const auto& e : net.edges()) {
    L(e.src, e.dst) = -1.0;
    L(e.dst, e.src) = -1.0;
  }
  for (Eigen::Index i = 0; i < L.rows(); ++i) L(i, i) = -L.row(i).sum();
  return L;
}

/// Laplacian spectral node embedding.
struct Embedding {
  std::size_t dim = 0;
  std::size_t node_count = 0;
  std::vector<double> vectors;      // node_count x dim, row-major
  std::vector<double> eigenvalues;  // ascending, length dim
  std::vector<double> second_eigvec;
  std::size_t component_size = 0;   // nodes embedded (giant component)
  std::vector<std::string> warnings;

  double operator()(std::size_t node, std::size_t k) const { return vectors[node * dim + k]; }
  std::vector<double> column(std::size_t k) const {
    std::vector<double> c(node_count);
    for (std::size_t i = 0; i < node_count; ++i) c[i] = vectors[i * dim + k];
    return c;
  }
};

enum class EigenSolver { lanczos, dense };

namespace detail {

/// Symmetrized adjacency restricted to a node subset, in CSR form.
struct SymmetricGraph {
  std::size_t n = 0;
  std::vector<std::size_t> off;
  std::vector<std::size_t> adj;
  std::vector<double> degree;

  void apply_laplacian(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
    for (std::size_t i = 0; i < n; ++i) {
      double s = degree[i] * x[static_cast<Eigen::Index>(i)];
      for (std::size_t k = off[i]; k < off[i + 1]; ++k) s -= x[static_cast<Eigen::Index>(adj[k])];
      y[static_cast<Eigen::Index>(i)] = s;
    }
  }

  Eigen::MatrixXd dense_laplacian() const {
    const auto m = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t i = 0; i < n; ++i) {
      L(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = degree[i];
      for (std::size_t k = off[i]; k < off[i + 1]; ++k)
        L(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(adj[k])) = -1.0;
    }
    return L;
  }
};

inline SymmetricGraph symmetric_subgraph(const Network& net, const std::vector<std::size_t>& nodes) {
  std::vector<std::size_t> local(net.node_count(), static_cast<std::size_t>(-1));
  for (std::size_t k = 0; k < nodes.size(); ++k) local[nodes[k]] = k;
  SymmetricGraph g;
  g.n = nodes.size();
  std::vector<std::vector<std::size_t>> nb(g.n);
  for (const auto& e : net.edges()) {
    const auto a = local[e.src], b = local[e.dst];
    if (a == static_cast<std::size_t>(-1) || b == static_cast<std::size_t>(-1)) continue;
    nb[a].push_back(b);
    nb[b].push_back(a);
  }
  g.off.assign(g.n + 1, 0);
  for (std::size_t i = 0; i < g.n; ++i) {
    std::sort(nb[i].begin(), nb[i].end());
    nb[i].erase(std::unique(nb[i].begin(), nb[i].end()), nb[i].end());
    g.off[i + 1] = g.off[i] + nb[i].size();
    g.degree.push_back(static_cast<double>(nb[i].size()));
    g.adj.insert(g.adj.end(), nb[i].begin(), nb[i].end());
  }
  return g;
}

inline void orthogonalize(Eigen::VectorXd& v, const std::vector<Eigen::VectorXd>& basis) {
  // Two passes of classical Gram-Schmidt.
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& b : basis) v -= b.dot(v) * b;
}

/// Smallest eigenpair of L restricted to the orthogonal complement of
/// `locked`, by Lanczos with full reorthogonalization.
inline std::pair<double, Eigen::VectorXd> lanczos_smallest(const SymmetricGraph& g,
                                                           const std::vector<Eigen::VectorXd>& locked,
                                                           std::uint64_t start_seed, double tol) {
  const auto n = static_cast<Eigen::Index>(g.n);
  const std::size_t max_steps = g.n - locked.size();
  SeedStream rng(0x5eed1a4c205ULL, start_seed);
  Eigen::VectorXd q(n);
  for (Eigen::Index i = 0; i < n; ++i) q[i] = rng.uniform(-1.0, 1.0);
  orthogonalize(q, locked);
  q.normalize();

  std::vector<Eigen::VectorXd> Q;
  std::vector<double> alpha, beta;
  Eigen::VectorXd w(n);
  double norm_bound = 2.0 * *std::max_element(g.degree.begin(), g.degree.end());

  auto ritz = [&](std::size_t m, double& theta, Eigen::VectorXd& y, double& resid) {
    Eigen::VectorXd d(static_cast<Eigen::Index>(m)), e(static_cast<Eigen::Index>(std::max<std::size_t>(m, 2) - 1));
    for (std::size_t k = 0; k < m; ++k) d[static_cast<Eigen::Index>(k)] = alpha[k];
    for (std::size_t k = 0; k + 1 < m; ++k) e[static_cast<Eigen::Index>(k)] = beta[k];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    if (m == 1) {
      theta = alpha[0];
      y = Eigen::VectorXd::Ones(1);
    } else {
      es.computeFromTridiagonal(d, e.head(static_cast<Eigen::Index>(m - 1)), Eigen::ComputeEigenvectors);
      theta = es.eigenvalues()[0];
      y = es.eigenvectors().col(0);
    }
    resid = std::abs(beta[m - 1] * y[static_cast<Eigen::Index>(m - 1)]);
  };

  double theta = 0.0, resid = 0.0;
  Eigen::VectorXd y;
  std::size_t m = 0;
  std::size_t next_check = 8;
  while (m < max_steps) {
    Q.push_back(q);
    g.apply_laplacian(q, w);
    const double a = q.dot(w);
    alpha.push_back(a);
    w -= a * q;
    if (m > 0) w -= beta[m - 1] * Q[m - 1];
    orthogonalize(w, locked);
    orthogonalize(w, Q);
    const double b = w.norm();
    beta.push_back(b);
    ++m;
    const bool breakdown = b <= 1e-12 * norm_bound;
    if (breakdown || m == max_steps || m >= next_check) {
      ritz(m, theta, y, resid);
      if (breakdown || m == max_steps || resid <= tol * norm_bound) break;
      next_check = m + std::max<std::size_t>(4, m / 8);
    }
    q = w / b;
  }
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  for (std::size_t k = 0; k < m; ++k) x += y[static_cast<Eigen::Index>(k)] * Q[k];
  orthogonalize(x, locked);
  x.normalize();
  // Rayleigh quotient of the cleaned vector.
  g.apply_laplacian(x, w);
  return {x.dot(w), x};
}

inline void fix_sign(Eigen::VectorXd& v) {
  const double thresh = 1e-6 / std::sqrt(static_cast<double>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > thresh) {
      if (v[i] < 0) v = -v;
      return;
    }
  }
}

}  // namespace detail

/// K eigenvectors of the smallest nonzero Laplacian eigenvalues.
///
/// Only the largest weakly connected component is embedded; nodes outside
/// it get zero rows and a warning is recorded. Each vector is unit norm,
/// orthogonal to the all-ones vector and to the others, and has its first
/// nonzero entry positive.
inline Embedding spectral_embedding(const Network& net, std::size_t K, EigenSolver solver = EigenSolver::lanczos) {
  const auto M = net.node_count();
  if (M < 2 || net.edge_count() == 0) throw DataError("degenerate graph");
  if (K < 1 || K >= M) throw DataError("spectral_embedding: need 1 <= K <= M-1 (K=" + std::to_string(K) + ")");

  Embedding emb;
  emb.dim = K;
  emb.node_count = M;
  auto [label, best] = weak_components(net);
  std::vector<std::size_t> nodes;
  for (std::size_t i = 0; i < M; ++i)
    if (label[i] == best) nodes.push_back(i);
  emb.component_size = nodes.size();
  if (nodes.size() < M)
    emb.warnings.push_back("graph is disconnected: embedding the largest weakly connected component (" +
                           std::to_string(nodes.size()) + " of " + std::to_string(M) + " nodes)");
  if (K >= nodes.size())
    throw DataError("spectral_embedding: K=" + std::to_string(K) + " exceeds giant component size - 1");

  const auto g = detail::symmetric_subgraph(net, nodes);
  const auto n = static_cast<Eigen::Index>(g.n);
  std::vector<Eigen::VectorXd> vecs;
  std::vector<double> vals;

  if (solver == EigenSolver::dense) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.dense_laplacian());
    for (std::size_t k = 1; k <= K; ++k) {
      vals.push_back(es.eigenvalues()[static_cast<Eigen::Index>(k)]);
      vecs.push_back(es.eigenvectors().col(static_cast<Eigen::Index>(k)));
    }
  } else {
    std::vector<Eigen::VectorXd> locked{Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(g.n)))};
    for (std::size_t k = 0; k < K; ++k) {
      auto [lambda, v] = detail::lanczos_smallest(g, locked, k, 1e-11);
      locked.push_back(v);
      vals.push_back(lambda);
      vecs.push_back(std::move(v));
    }
  }

  emb.vectors.assign(M * K, 0.0);
  emb.eigenvalues = vals;
  for (std::size_t k = 0; k < K; ++k) {
    detail::fix_sign(vecs[k]);
    for (std::size_t r = 0; r < g.n; ++r) emb.vectors[nodes[r] * K + k] = vecs[k][static_cast<Eigen::Index>(r)];
  }
  emb.second_eigvec = emb.column(0);
  return emb;
}

}  // namespace cinf
