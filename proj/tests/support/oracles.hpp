#ifndef SPIKETRAIN_TESTS_ORACLES_HPP
#define SPIKETRAIN_TESTS_ORACLES_HPP

// Reference computations that share no code with the library.

#include <cmath>
#include <complex>
#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "spiketrain/prony.hpp"
#include "spiketrain/signal.hpp"

namespace oracle {

using Big = boost::multiprecision::cpp_bin_float_100;

/// m_k = sum a_j x_j^k by plain summation in 100 digits.
inline std::vector<Big> moments(const std::vector<double>& a, const std::vector<double>& x,
                                std::size_t count) {
  std::vector<Big> m(count, Big(0));
  for (std::size_t j = 0; j < a.size(); ++j) {
    for (std::size_t k = 0; k < count; ++k) {
      m[k] += Big(a[j]) * boost::multiprecision::pow(Big(x[j]), static_cast<int>(k));
    }
  }
  return m;
}

inline std::vector<Big> moments(const spiketrain::SpikeSignal& f, std::size_t count) {
  return moments(f.amplitudes(), f.nodes(), count);
}

/// sum a_j exp(-2 pi i s x_j) in 100 digits, rounded to double.
inline std::complex<double> fourier(const spiketrain::SpikeSignal& f, double s) {
  const Big two_pi = 2 * boost::math::constants::pi<Big>();
  Big re = 0;
  Big im = 0;
  for (std::size_t j = 0; j < f.size(); ++j) {
    const Big phase = two_pi * Big(s) * Big(f.node(j));
    re += Big(f.amplitude(j)) * cos(phase);
    im -= Big(f.amplitude(j)) * sin(phase);
  }
  return {static_cast<double>(re), static_cast<double>(im)};
}

/// Truncated Taylor series sum_{k<terms} m_k (-2 pi i s)^k / k! in 100 digits.
inline std::complex<double> taylor_fourier(const spiketrain::SpikeSignal& f, double s,
                                           std::size_t terms) {
  const auto m = moments(f, terms);
  const Big w = 2 * boost::math::constants::pi<Big>() * Big(s);
  Big re = 0;
  Big im = 0;
  Big coeff = 1;  // w^k / k!
  for (std::size_t k = 0; k < terms; ++k) {
    switch (k % 4) {
      case 0: re += m[k] * coeff; break;
      case 1: im -= m[k] * coeff; break;
      case 2: re -= m[k] * coeff; break;
      case 3: im += m[k] * coeff; break;
    }
    coeff *= w / Big(k + 1);
  }
  return {static_cast<double>(re), static_cast<double>(im)};
}

/// Central differences of the 2d moments in (a_1..a_d, x_1..x_d).
inline Eigen::MatrixXd finite_difference_jacobian(const spiketrain::SpikeSignal& f, double step) {
  const std::size_t d = f.size();
  const std::size_t n = 2 * d;
  Eigen::MatrixXd J(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t c = 0; c < n; ++c) {
    auto a_plus = f.amplitudes();
    auto x_plus = f.nodes();
    auto a_minus = f.amplitudes();
    auto x_minus = f.nodes();
    if (c < d) {
      a_plus[c] += step;
      a_minus[c] -= step;
    } else {
      x_plus[c - d] += step;
      x_minus[c - d] -= step;
    }
    // Keep the column order fixed: evaluate moments without re-sorting.
    const auto mp = moments(a_plus, x_plus, n);
    const auto mm = moments(a_minus, x_minus, n);
    for (std::size_t k = 0; k < n; ++k) {
      J(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) =
          static_cast<double>((mp[k] - mm[k]) / Big(2 * step));
    }
  }
  return J;
}

/// Largest number of nodes in a closed window [x_i, x_i + h] over all i,
/// and the first i attaining it.
inline std::pair<std::size_t, std::size_t> best_window(const std::vector<double>& x, double h) {
  std::size_t best = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::size_t count = 0;
    for (double y : x) {
      if (y >= x[i] && y <= x[i] + h) ++count;
    }
    if (count > best) {
      best = count;
      start = i;
    }
  }
  return {best, start};
}

/// Two spikes matching given m_0, m_1, m_2 with the right node fixed at x2:
/// returns (a1, a2, x1).
struct TwoNodeSolution {
  double a1;
  double a2;
  double x1;
};

inline TwoNodeSolution two_node_match(double m0, double m1, double m2, double x2) {
  // a1 (x1 - x2) = m1 - m0 x2 and a1 (x1^2 - x2^2) = m2 - m0 x2^2, so
  // x1 + x2 = (m2 - m0 x2^2) / (m1 - m0 x2).
  const Big M0(m0), M1(m1), M2(m2), X2(x2);
  const Big X1 = (M2 - M0 * X2 * X2) / (M1 - M0 * X2) - X2;
  const Big A1 = (M1 - M0 * X2) / (X1 - X2);
  const Big A2 = M0 - A1;
  return {static_cast<double>(A1), static_cast<double>(A2), static_cast<double>(X1)};
}

}  // namespace oracle

#endif  // SPIKETRAIN_TESTS_ORACLES_HPP
