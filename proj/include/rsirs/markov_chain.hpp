#pragma once

// The driving chain r(t): generator validation, stationary law and jump paths.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rsirs/errors.hpp"
#include "rsirs/rng.hpp"

namespace rsirs {

/// Validated transition-rate matrix of an irreducible finite CTMC.
class CtmcGenerator {
 public:
  const Eigen::MatrixXd& q() const { return q_; }
  std::size_t regimes() const { return static_cast<std::size_t>(q_.rows()); }
  double rate(std::size_t from, std::size_t to) const { return q_(from, to); }
  double exit_rate(std::size_t e) const { return -q_(e, e); }

  friend CtmcGenerator validate_generator(const Eigen::MatrixXd& q_matrix);

 private:
  explicit CtmcGenerator(Eigen::MatrixXd q) : q_(std::move(q)) {}
  Eigen::MatrixXd q_;
};

namespace detail {

inline std::vector<bool> reachable(const Eigen::MatrixXd& q, std::size_t start, bool reverse) {
  const auto n = static_cast<std::size_t>(q.rows());
  std::vector<bool> seen(n, false);
  std::vector<std::size_t> stack{start};
  seen[start] = true;
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    for (std::size_t v = 0; v < n; ++v) {
      const double w = reverse ? q(v, u) : q(u, v);
      if (v != u && w > 0.0 && !seen[v]) {
        seen[v] = true;
        stack.push_back(v);
      }
    }
  }
  return seen;
}

}  // namespace detail

/// Checks rates, zero row sums and irreducibility.
inline CtmcGenerator validate_generator(const Eigen::MatrixXd& q_matrix) {
  if (q_matrix.rows() != q_matrix.cols() || q_matrix.rows() < 1)
    throw Error(ErrorKind::invalid_generator, "generator must be a non-empty square matrix");
  const auto n = static_cast<std::size_t>(q_matrix.rows());
  for (std::size_t i = 0; i < n; ++i) {
    double off = 0.0;
    double scale = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double v = q_matrix(i, j);
      if (!std::isfinite(v))
        throw Error(ErrorKind::invalid_rate, "non-finite rate at (" + std::to_string(i) + "," + std::to_string(j) + ")");
      if (i != j && v < 0.0)
        throw Error(ErrorKind::invalid_rate, "negative off-diagonal rate at (" + std::to_string(i) + "," +
                                                 std::to_string(j) + ")");
      if (i != j) off += v;
      scale = std::max(scale, std::abs(v));
    }
    if (std::abs(off + q_matrix(i, i)) > 1e-12 * scale)
      throw Error(ErrorKind::invalid_generator, "row " + std::to_string(i) + " does not sum to zero");
  }
  if (n > 1) {
    const auto fwd = detail::reachable(q_matrix, 0, false);
    const auto bwd = detail::reachable(q_matrix, 0, true);
    for (std::size_t v = 0; v < n; ++v) {
      if (!fwd[v] || !bwd[v])
        throw Error(ErrorKind::reducible, "generator is reducible (state " + std::to_string(v) +
                                              " does not communicate with state 0)");
    }
  }
  return CtmcGenerator(q_matrix);
}

struct StationaryDist {
  Eigen::VectorXd pi;
  double residual = 0.0;  ///< ||pi Q||_inf

  std::size_t regimes() const { return static_cast<std::size_t>(pi.size()); }
  double operator[](std::size_t e) const { return pi(static_cast<Eigen::Index>(e)); }
};

/// Solves pi Q = 0, sum(pi) = 1 by swapping one balance equation for the
/// normalisation row.
inline StationaryDist stationary_distribution(const CtmcGenerator& gen) {
  const Eigen::MatrixXd& q = gen.q();
  const Eigen::Index n = q.rows();
  Eigen::MatrixXd a = q.transpose();
  a.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;

  const Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible()) throw Error(ErrorKind::numeric, "stationary system is singular");
  Eigen::VectorXd pi = lu.solve(rhs);
  // one round of iterative refinement
  pi += lu.solve(rhs - a * pi);

  const double scale = std::max(1.0, q.cwiseAbs().maxCoeff());
  StationaryDist out{pi, (pi.transpose() * q).cwiseAbs().maxCoeff()};
  if (!(out.residual < 1e-12 * scale) || !(pi.minCoeff() > 0.0))
    throw Error(ErrorKind::numeric, "stationary distribution failed its residual/positivity check");
  return out;
}

/// Right-continuous step path of r(t) on [0, horizon].
struct RegimePath {
  std::vector<double> jump_times;     ///< jump_times[0] = 0
  std::vector<std::size_t> states;    ///< state from jump_times[k] onward
  double horizon = 0.0;

  std::size_t jumps() const { return jump_times.empty() ? 0 : jump_times.size() - 1; }
};

/// Samples holding times Exp(-q_ee) and embedded-chain moves q_ee'/(-q_ee),
/// truncated at the horizon.
inline RegimePath sample_path(const CtmcGenerator& gen, std::size_t e0, double horizon, RngStream& rng) {
  if (e0 >= gen.regimes()) throw Error(ErrorKind::domain, "initial regime out of range");
  if (!(horizon > 0.0)) throw Error(ErrorKind::domain, "horizon must be positive");
  RegimePath path;
  path.horizon = horizon;
  path.jump_times.push_back(0.0);
  path.states.push_back(e0);
  std::size_t e = e0;
  double t = 0.0;
  const std::size_t n = gen.regimes();
  while (true) {
    const double out = gen.exit_rate(e);
    if (!(out > 0.0)) break;
    t += rng.exponential(out);
    if (!(t < horizon)) break;
    double u = rng.uniform() * out;
    std::size_t next = e;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == e) continue;
      const double w = gen.rate(e, j);
      if (w <= 0.0) continue;
      next = j;
      if (u < w) break;
      u -= w;
    }
    e = next;
    path.jump_times.push_back(t);
    path.states.push_back(e);
  }
  return path;
}

/// r(t), right-continuous at jumps.
inline std::size_t regime_at(const RegimePath& path, double t) {
  if (!(t >= 0.0 && t <= path.horizon)) throw Error(ErrorKind::domain, "time outside [0, horizon]");
  const auto it = std::upper_bound(path.jump_times.begin(), path.jump_times.end(), t);
  return path.states[static_cast<std::size_t>(it - path.jump_times.begin()) - 1];
}

/// Fraction of [0, horizon] spent in each regime.
inline std::vector<double> occupation_fractions(const RegimePath& path, std::size_t regimes) {
  std::vector<double> occ(regimes, 0.0);
  for (std::size_t k = 0; k < path.jump_times.size(); ++k) {
    const double end = k + 1 < path.jump_times.size() ? path.jump_times[k + 1] : path.horizon;
    occ[path.states[k]] += end - path.jump_times[k];
  }
  for (double& v : occ) v /= path.horizon;
  return occ;
}

}  // namespace rsirs
