#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "cinf/error.hpp"
#include "cinf/hawkes.hpp"

namespace cinf {

/// Log-likelihood and its analytic gradient over (a, b, beta, eta) for a
/// fixed bandwidth. `information` is the observed-event estimate of the
/// Fisher information, sum_n grad(log lambda_n) grad(log lambda_n)^T.
struct LogLikelihood {
  double value = 0.0;
  std::array<double, 4> grad{};  // d/da, d/db, d/dbeta, d/deta
  Eigen::Matrix4d information = Eigen::Matrix4d::Zero();
};

/// LL = sum_n log lambda_{s_n}(t_n) - sum_i integral_0^T lambda_i(t) dt,
/// with the compensator in closed form for the exponential kernel:
/// T sum_i mu_i + sum_e (a + b outdeg(s_e)) (1 - exp(-omega (T - t_e))).
/// Cost O(#events * (1 + max out-degree)). Events sharing a timestamp do not
/// excite each other.
inline LogLikelihood log_likelihood(const HawkesParams& p, const Network& net, const Embedding& emb,
                                    const Cascade& c) {
  if (!(c.horizon >= 0.0)) throw DataError("log_likelihood: invalid horizon");
  const auto& v = emb.second_eigvec;
  const std::size_t M = net.node_count();
  const auto mu = base_rates(p, emb);
  const double T = c.horizon;
  const double w = p.omega;

  LogLikelihood out;
  auto& g = out.grad;
  IntensityState state(net, w);

  const auto& ev = c.events;
  std::size_t n = 0;
  while (n < ev.size()) {
    std::size_t end = n;
    while (end < ev.size() && ev[end].time == ev[n].time) ++end;
    for (std::size_t k = n; k < end; ++k) {
      const NodeId s = ev[k].source;
      const double t = ev[k].time;
      const double S = state.self_at(s, t);
      const double Q = state.social_at(s, t);
      const double lam = mu[s] + p.a * S + p.b * Q;
      if (!(lam > 0.0) || !std::isfinite(lam))
        throw NumericError("log_likelihood: nonpositive intensity at event " + std::to_string(k));
      out.value += std::log(lam);
      const double dmu = mu[s] * (1.0 - mu[s]);
      const Eigen::Vector4d u(S / lam, Q / lam, dmu * v[s] / lam, dmu / lam);
      for (int d = 0; d < 4; ++d) g[d] += u[d];
      out.information += u * u.transpose();
    }
    for (std::size_t k = n; k < end; ++k) state.add(ev[k].source, ev[k].time);
    n = end;
  }

  double comp_self = 0.0, comp_social = 0.0;
  for (const auto& e : ev) {
    const double tail = -std::expm1(-w * (T - e.time));
    comp_self += tail;
    comp_social += tail * static_cast<double>(net.out_degree(e.source));
  }
  double mu_sum = 0.0, dmu_sum = 0.0, dmu_v_sum = 0.0;
  for (std::size_t i = 0; i < M; ++i) {
    mu_sum += mu[i];
    const double dmu = mu[i] * (1.0 - mu[i]);
    dmu_sum += dmu;
    dmu_v_sum += dmu * v[i];
  }
  out.value -= T * mu_sum + p.a * comp_self + p.b * comp_social;
  g[0] -= comp_self;
  g[1] -= comp_social;
  g[2] -= T * dmu_v_sum;
  g[3] -= T * dmu_sum;
  return out;
}

inline double softplus(double x) noexcept { return x > 30.0 ? x : std::log1p(std::exp(x)); }
inline double softplus_inverse(double y) noexcept { return y > 30.0 ? y : std::log(std::expm1(y)); }

struct FitOptions {
  int max_iterations = 500;
  double armijo = 1e-4;
  double rel_tol = 1e-7;
};

struct FitResult {
  HawkesParams params;
  double log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<std::string> warnings;

  std::string describe() const {
    std::ostringstream os;
    os << "a=" << params.a << " b=" << params.b << " beta=" << params.beta << " eta=" << params.eta
       << " omega=" << params.omega << " ll=" << log_likelihood << " iterations=" << iterations
       << " converged=" << (converged ? 1 : 0);
    return os.str();
  }
};

namespace detail {

// Free coordinates: (softplus^-1 a, softplus^-1 b, beta, eta); b is dropped
// from the free set when constrained to zero.
struct FitProblem {
  const Network& net;
  const Embedding& emb;
  const Cascade& cascade;
  double omega;
  bool constrain_b;

  int dim() const { return constrain_b ? 3 : 4; }

  HawkesParams params(const Eigen::VectorXd& x) const {
    HawkesParams p;
    p.omega = omega;
    p.a = softplus(x[0]);
    if (constrain_b) {
      p.b = 0.0;
      p.beta = x[1];
      p.eta = x[2];
    } else {
      p.b = softplus(x[1]);
      p.beta = x[2];
      p.eta = x[3];
    }
    return p;
  }

  Eigen::VectorXd encode(const HawkesParams& p) const {
    Eigen::VectorXd x(dim());
    x[0] = softplus_inverse(std::max(p.a, 1e-12));
    if (constrain_b) {
      x[1] = p.beta;
      x[2] = p.eta;
    } else {
      x[1] = softplus_inverse(std::max(p.b, 1e-12));
      x[2] = p.beta;
      x[3] = p.eta;
    }
    return x;
  }

  // Value, gradient and information in free coordinates.
  void evaluate(const Eigen::VectorXd& x, double& value, Eigen::VectorXd& grad, Eigen::MatrixXd& info) const {
    const auto p = params(x);
    const auto ll = log_likelihood(p, net, emb, cascade);
    value = ll.value;
    // Chain rule: d natural / d free.
    Eigen::Vector4d jac(sigmoid(x[0]), constrain_b ? 0.0 : sigmoid(x[1]), 1.0, 1.0);
    std::array<int, 4> map_full{0, 1, 2, 3};
    std::array<int, 3> map_con{0, 2, 3};
    grad.resize(dim());
    info.resize(dim(), dim());
    for (int r = 0; r < dim(); ++r) {
      const int nr = constrain_b ? map_con[r] : map_full[r];
      grad[r] = ll.grad[nr] * jac[nr];
      for (int q = 0; q < dim(); ++q) {
        const int nq = constrain_b ? map_con[q] : map_full[q];
        info(r, q) = ll.information(nr, nq) * jac[nr] * jac[nq];
      }
    }
  }

  double value(const Eigen::VectorXd& x) const {
    try {
      return log_likelihood(params(x), net, emb, cascade).value;
    } catch (const NumericError&) {
      return -std::numeric_limits<double>::infinity();
    }
  }
};

}  // namespace detail

/// Maximum-likelihood fit of (a, b, beta, eta) at fixed omega, optionally
/// with b clamped to 0.
///
/// Ascent runs on the softplus reparameterization of a and b. Each step
/// scales the gradient by the inverse of the event-based information matrix
/// (plain gradient when that fails to give an ascent direction), then
/// backtracks until the Armijo condition holds. Stops after
/// `max_iterations` or when |dLL| < rel_tol * (1 + |LL|); the best iterate is
/// returned.
inline FitResult fit(const Network& net, const Embedding& emb, const Cascade& cascade, double omega,
                     bool constrain_b_zero, const FitOptions& opt = {}, const HawkesParams* init = nullptr) {
  if (cascade.empty()) throw DataError("fit: empty cascade");
  detail::FitProblem prob{net, emb, cascade, omega, constrain_b_zero};
  FitResult res;
  if (cascade.size() < 50)
    res.warnings.push_back("fit: only " + std::to_string(cascade.size()) + " events; estimates may be unreliable");

  HawkesParams start;
  if (init) {
    start = *init;
  } else {
    const double rate = static_cast<double>(cascade.size()) /
                        (std::max(cascade.horizon, 1e-12) * static_cast<double>(net.node_count()));
    start.a = 0.1;
    start.b = constrain_b_zero ? 0.0 : 0.1;
    start.beta = 0.0;
    start.eta = std::log(std::clamp(0.5 * rate, 1e-12, 0.5) / (1.0 - std::clamp(0.5 * rate, 1e-12, 0.5)));
  }
  start.omega = omega;
  Eigen::VectorXd x = prob.encode(start);

  double f = 0.0;
  Eigen::VectorXd g;
  Eigen::MatrixXd info;
  prob.evaluate(x, f, g, info);
  if (!std::isfinite(f)) throw NumericError("fit: non-finite log-likelihood at the starting point");

  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    Eigen::MatrixXd H = info;
    for (int d = 0; d < H.rows(); ++d) H(d, d) += 1e-8 * std::max(1.0, H(d, d));
    Eigen::VectorXd dir = H.ldlt().solve(g);
    double slope = g.dot(dir);
    if (!(slope > 0.0) || !dir.allFinite()) {
      dir = g;
      slope = g.squaredNorm();
    }
    if (slope <= 0.0) {
      res.converged = true;
      break;
    }
    double step = 1.0;
    double f_new = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd x_new;
    while (step > 1e-14) {
      x_new = x + step * dir;
      f_new = prob.value(x_new);
      if (std::isfinite(f_new) && f_new >= f + opt.armijo * step * slope) break;
      step *= 0.5;
    }
    if (!(step > 1e-14)) {
      res.converged = true;  // no ascent possible at machine precision
      break;
    }
    const double delta = f_new - f;
    x = x_new;
    prob.evaluate(x, f, g, info);
    if (!std::isfinite(f)) {
      std::ostringstream os;
      os << "fit: non-finite log-likelihood at iterate " << it << " (" << x.transpose() << ")";
      throw NumericError(os.str());
    }
    if (std::abs(delta) < opt.rel_tol * (1.0 + std::abs(f))) {
      res.converged = true;
      ++it;
      break;
    }
  }
  res.params = prob.params(x);
  res.log_likelihood = f;
  res.iterations = it;
  if (!res.converged) res.warnings.push_back("fit: iteration budget exhausted");
  return res;
}

/// Fit the b = 0 model, then the full model started from it. The full
/// result never falls below the null likelihood: if ascent ends lower, the
/// null solution (which lies in the full parameter space) is returned.
struct NestedFit {
  FitResult null_fit;
  FitResult full_fit;
};

inline NestedFit fit_nested(const Network& net, const Embedding& emb, const Cascade& cascade, double omega,
                            const FitOptions& opt = {}) {
  NestedFit out;
  out.null_fit = fit(net, emb, cascade, omega, true, opt);
  HawkesParams init = out.null_fit.params;
  init.b = 0.05;
  out.full_fit = fit(net, emb, cascade, omega, false, opt, &init);
  if (out.full_fit.log_likelihood < out.null_fit.log_likelihood) {
    auto w = out.full_fit.warnings;
    out.full_fit = out.null_fit;
    out.full_fit.warnings = std::move(w);
    out.full_fit.warnings.push_back("fit: full model fell below null; using null solution with b=0");
  }
  return out;
}

}  // namespace cinf
