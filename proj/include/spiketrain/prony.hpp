#ifndef SPIKETRAIN_PRONY_HPP
#define SPIKETRAIN_PRONY_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "spiketrain/errors.hpp"
#include "spiketrain/moments.hpp"
#include "spiketrain/signal.hpp"

namespace spiketrain {

/// A point mu = (m_0, ..., m_{2d-1}) in the codomain of the Prony mapping
/// (A, X) -> (m_0, ..., m_{2d-1}).
class PronyImage {
 public:
  explicit PronyImage(std::vector<double> mu) : mu_(std::move(mu)) {
    if (mu_.empty() || mu_.size() % 2 != 0) {
      throw DimensionError("prony image: length must be 2d, got " + std::to_string(mu_.size()));
    }
  }

  /// mu^1 = (0, ..., 0, eta): the last coordinate axis of R^{2d}.
  static PronyImage last_axis(std::size_t d, double eta) {
    std::vector<double> mu(2 * d, 0.0);
    mu.back() = eta;
    return PronyImage(std::move(mu));
  }

  [[nodiscard]] std::size_t dimension() const noexcept { return mu_.size() / 2; }
  [[nodiscard]] std::size_t size() const noexcept { return mu_.size(); }
  [[nodiscard]] const std::vector<double>& values() const noexcept { return mu_; }
  [[nodiscard]] double operator[](std::size_t k) const { return mu_.at(k); }

  [[nodiscard]] Eigen::VectorXd vector() const {
    return Eigen::Map<const Eigen::VectorXd>(mu_.data(), static_cast<Eigen::Index>(mu_.size()));
  }

  friend PronyImage operator+(const PronyImage& a, const PronyImage& b) {
    check_same(a, b);
    std::vector<double> mu(a.mu_);
    for (std::size_t k = 0; k < mu.size(); ++k) mu[k] += b.mu_[k];
    return PronyImage(std::move(mu));
  }
  /// Shifted coordinates mu_k = m_k - m^0_k relative to a base point.
  friend PronyImage operator-(const PronyImage& a, const PronyImage& b) {
    check_same(a, b);
    std::vector<double> mu(a.mu_);
    for (std::size_t k = 0; k < mu.size(); ++k) mu[k] -= b.mu_[k];
    return PronyImage(std::move(mu));
  }

 private:
  static void check_same(const PronyImage& a, const PronyImage& b) {
    if (a.size() != b.size()) throw DimensionError("prony image: dimension mismatch");
  }
  std::vector<double> mu_;
};

/// Parameters stacked as (a_1, ..., a_d, x_1, ..., x_d).
inline Eigen::VectorXd pack_parameters(const SpikeSignal& f) {
  const auto d = static_cast<Eigen::Index>(f.size());
  Eigen::VectorXd p(2 * d);
  for (Eigen::Index j = 0; j < d; ++j) {
    p(j) = f.amplitude(static_cast<std::size_t>(j));
    p(d + j) = f.node(static_cast<std::size_t>(j));
  }
  return p;
}

inline SpikeSignal unpack_parameters(const Eigen::VectorXd& p) {
  if (p.size() == 0 || p.size() % 2 != 0) throw DimensionError("parameter vector must be 2d long");
  const Eigen::Index d = p.size() / 2;
  std::vector<double> a(p.data(), p.data() + d);
  std::vector<double> x(p.data() + d, p.data() + 2 * d);
  return SpikeSignal(std::move(a), std::move(x));
}

inline PronyImage prony_forward(const SpikeSignal& f) {
  return PronyImage(moments(f, 2 * f.size()));
}

struct PronyJacobian {
  /// Row k is d m_k; columns are (a_1..a_d, x_1..x_d).
  Eigen::MatrixXd matrix;
  SpikeSignal base_point;
};

/// Analytic Jacobian: d m_k / d a_j = x_j^k and d m_k / d x_j = k a_j x_j^{k-1}.
inline PronyJacobian prony_jacobian(const SpikeSignal& f) {
  const std::size_t d = f.size();
  const auto n = static_cast<Eigen::Index>(2 * d);
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t j = 0; j < d; ++j) {
    const double x = f.node(j);
    const double a = f.amplitude(j);
    const auto ja = static_cast<Eigen::Index>(j);
    const auto jx = static_cast<Eigen::Index>(d + j);
    double power = 1.0;  // x^{k-1} after the update below
    J(0, ja) = 1.0;
    for (Eigen::Index k = 1; k < n; ++k) {
      J(k, jx) = static_cast<double>(k) * a * power;
      power *= x;
      J(k, ja) = power;
    }
  }
  return {std::move(J), f};
}

/// Per-instance surrogates for the Jacobian constants.
struct ConditioningReport {
  /// ||J^{-1}|| (spectral norm).
  double inverse_norm = 0.0;
  /// min over unit mu of ||J^{-1} mu||, i.e. 1 / sigma_max(J).
  double lower_gain = 0.0;
  /// ||P_X J^{-1} e_{2d-1}||: node motion per unit change of the last moment.
  double node_projection_gain = 0.0;
};

inline ConditioningReport conditioning(const SpikeSignal& f) {
  const auto J = prony_jacobian(f).matrix;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sigma = svd.singularValues();
  const double smax = sigma(0);
  const double smin = sigma(sigma.size() - 1);
  const double floor = std::numeric_limits<double>::epsilon() * static_cast<double>(J.rows()) * smax;
  if (!(smin > floor)) {
    throw ConditioningError("conditioning: Prony Jacobian is singular (sigma_min = " +
                            std::to_string(smin) + ")");
  }
  Eigen::VectorXd e_last = Eigen::VectorXd::Zero(J.rows());
  e_last(J.rows() - 1) = 1.0;
  const Eigen::VectorXd v = svd.solve(e_last);
  const auto d = static_cast<Eigen::Index>(f.size());
  ConditioningReport report;
  report.inverse_norm = 1.0 / smin;
  report.lower_gain = 1.0 / smax;
  report.node_projection_gain = v.tail(d).norm();
  return report;
}

namespace detail {

inline double max_abs_residual(const SpikeSignal& f, const Eigen::VectorXd& target) {
  const auto m = moments(f, static_cast<std::size_t>(target.size()));
  double r = 0.0;
  for (Eigen::Index k = 0; k < target.size(); ++k) {
    r = std::max(r, std::abs(m[static_cast<std::size_t>(k)] - target(k)));
  }
  return r;
}

inline Eigen::VectorXd moment_residual(const SpikeSignal& f, const Eigen::VectorXd& target) {
  const auto m = moments(f, static_cast<std::size_t>(target.size()));
  Eigen::VectorXd r(target.size());
  for (Eigen::Index k = 0; k < target.size(); ++k) {
    r(k) = target(k) - m[static_cast<std::size_t>(k)];
  }
  return r;
}

}  // namespace detail

/// Classical Prony solve from m_0 .. m_{2d-1}: Hankel system for the monic
/// Prony polynomial, nodes from companion-matrix eigenvalues, amplitudes from
/// the square Vandermonde system, then one joint Newton polish on all 2d
/// equations (kept only if it lowers the residual).
inline SpikeSignal prony_solve(const PronyImage& mu, std::size_t d) {
  if (d == 0) throw InvalidArgument("prony_solve: d must be positive");
  if (mu.size() < 2 * d) {
    throw DimensionError("prony_solve: need " + std::to_string(2 * d) + " moments, got " +
                         std::to_string(mu.size()));
  }
  const auto n = static_cast<Eigen::Index>(d);
  Eigen::MatrixXd H(n, n);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) H(r, c) = mu[static_cast<std::size_t>(r + c)];
    rhs(r) = -mu[static_cast<std::size_t>(r + n)];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> hsvd(H, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& hs = hsvd.singularValues();
  if (!(hs(0) > 0.0) || hs(n - 1) <= 1e-13 * hs(0)) {
    throw ModelOrderError("prony_solve: Hankel matrix is rank deficient; fewer than " +
                          std::to_string(d) + " spikes present");
  }
  const Eigen::VectorXd coeffs = hsvd.solve(rhs);

  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
  companion.col(n - 1) = -coeffs;
  Eigen::EigenSolver<Eigen::MatrixXd> eig(companion, false);
  if (eig.info() != Eigen::Success) throw InconsistencyError("prony_solve: eigensolver failed");
  const Eigen::VectorXcd roots = eig.eigenvalues();

  double scale = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) scale = std::max(scale, std::abs(roots(i)));
  std::vector<double> nodes(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(roots(i).imag()) > 1e-8 * scale) {
      throw InconsistencyError("prony_solve: complex root " + std::to_string(roots(i).real()) +
                               (roots(i).imag() < 0 ? " - " : " + ") +
                               std::to_string(std::abs(roots(i).imag())) + "i");
    }
    nodes[static_cast<std::size_t>(i)] = roots(i).real();
  }
  std::sort(nodes.begin(), nodes.end());

  Eigen::MatrixXd V(n, n);
  Eigen::VectorXd m_low(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double power = 1.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      V(k, j) = power;
      power *= nodes[static_cast<std::size_t>(j)];
    }
  }
  for (Eigen::Index k = 0; k < n; ++k) m_low(k) = mu[static_cast<std::size_t>(k)];
  const Eigen::VectorXd amps = V.colPivHouseholderQr().solve(m_low);

  SpikeSignal estimate(std::vector<double>(amps.data(), amps.data() + n), nodes);

  const Eigen::VectorXd target = mu.vector().head(2 * n);
  double residual = detail::max_abs_residual(estimate, target);
  for (int polish = 0; polish < 3 && residual > 0.0; ++polish) {
    const auto J = prony_jacobian(estimate).matrix;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
    if (!(lu.rcond() > 1e-15)) break;
    const Eigen::VectorXd step = lu.solve(detail::moment_residual(estimate, target));
    if (!step.allFinite()) break;
    SpikeSignal candidate = unpack_parameters(pack_parameters(estimate) + step);
    const double r = detail::max_abs_residual(candidate, target);
    if (!(r < residual)) break;
    estimate = std::move(candidate);
    residual = r;
  }
  return estimate;
}

/// Damped Newton did not reach the tolerance.
class NoConvergenceError : public Error {
 public:
  NoConvergenceError(const std::string& what, SpikeSignal last_iterate, double residual)
      : Error(what), last_iterate_(std::move(last_iterate)), residual_(residual) {}
  [[nodiscard]] const SpikeSignal& last_iterate() const noexcept { return last_iterate_; }
  [[nodiscard]] double residual() const noexcept { return residual_; }

 private:
  SpikeSignal last_iterate_;
  double residual_;
};

struct NewtonResult {
  SpikeSignal signal;
  int iterations = 0;
  /// ||PM(signal) - target||_inf.
  double residual = 0.0;
  /// Residual before the first step and after every accepted step.
  std::vector<double> residual_history;
};

/// Solves PM(A, X) = target by Newton's method with step halving: each step
/// is halved (at most 30 times) until the max-norm residual decreases.
inline NewtonResult newton_invert(const PronyImage& target, const SpikeSignal& initial, double tol,
                                  int max_iter) {
  if (target.dimension() != initial.size()) {
    throw DimensionError("newton_invert: target has dimension " +
                         std::to_string(target.dimension()) + ", initial guess " +
                         std::to_string(initial.size()));
  }
  const Eigen::VectorXd goal = target.vector();
  NewtonResult out{initial, 0, detail::max_abs_residual(initial, goal), {}};
  out.residual_history.push_back(out.residual);
  while (out.residual > tol) {
    if (out.iterations >= max_iter) {
      throw NoConvergenceError("newton_invert: no convergence after " +
                                   std::to_string(max_iter) + " iterations",
                               out.signal, out.residual);
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(prony_jacobian(out.signal).matrix);
    if (!(lu.rcond() > 1e-15)) {
      throw ConditioningError("newton_invert: singular Jacobian at iteration " +
                              std::to_string(out.iterations));
    }
    const Eigen::VectorXd step = lu.solve(detail::moment_residual(out.signal, goal));
    const Eigen::VectorXd p = pack_parameters(out.signal);
    double t = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= 30; ++halving, t *= 0.5) {
      SpikeSignal candidate = unpack_parameters(p + t * step);
      const double r = detail::max_abs_residual(candidate, goal);
      if (r < out.residual) {
        out.signal = std::move(candidate);
        out.residual = r;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw NoConvergenceError("newton_invert: residual did not decrease after damping",
                               out.signal, out.residual);
    }
    ++out.iterations;
    out.residual_history.push_back(out.residual);
  }
  return out;
}

}  // namespace spiketrain

#endif  // SPIKETRAIN_PRONY_HPP
