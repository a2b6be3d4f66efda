#ifndef SPIKETRAIN_FOURIER_HPP
#define SPIKETRAIN_FOURIER_HPP

#include <complex>
#include <cstddef>
#include <numbers>
#include <utility>

#include <boost/math/constants/constants.hpp>

#include "spiketrain/moments.hpp"
#include "spiketrain/signal.hpp"

namespace spiketrain {

// Convention throughout: F(F)(s) = integral of F(x) e^{-2 pi i s x} dx.

namespace detail {

struct NeumaierSum {
  double sum = 0.0;
  double compensation = 0.0;

  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      compensation += (sum - t) + v;
    } else {
      compensation += (v - t) + sum;
    }
    sum = t;
  }
  [[nodiscard]] double value() const { return sum + compensation; }
};

}  // namespace detail

/// Closed form sum_j a_j exp(-2 pi i s x_j).
inline std::complex<double> fourier_eval(const SpikeSignal& f, double s) {
  detail::NeumaierSum re;
  detail::NeumaierSum im;
  for (std::size_t j = 0; j < f.size(); ++j) {
    const double phase = -2.0 * std::numbers::pi * s * f.node(j);
    re.add(f.amplitude(j) * std::cos(phase));
    im.add(f.amplitude(j) * std::sin(phase));
  }
  return {re.value(), im.value()};
}

/// (Re, Im) of the transform at arbitrary precision; used by oracles.
template <typename T>
std::pair<T, T> fourier_components(const BasicSpikeSignal<T>& f, const T& s) {
  using std::cos;
  using std::sin;
  using boost::multiprecision::cos;
  using boost::multiprecision::sin;
  const T two_pi = 2 * boost::math::constants::pi<T>();
  T re = 0;
  T im = 0;
  for (std::size_t j = 0; j < f.size(); ++j) {
    const T phase = -two_pi * s * f.node(j);
    re += f.amplitude(j) * cos(phase);
    im += f.amplitude(j) * sin(phase);
  }
  return {re, im};
}

/// Partial sum of the moment (Taylor) expansion
/// sum_{k < terms} m_k / k! * (-2 pi i s)^k.
inline std::complex<double> fourier_series_eval(const SpikeSignal& f, double s,
                                                std::size_t terms) {
  if (terms == 0) throw InvalidArgument("fourier_series_eval: terms must be at least 1");
  const auto m = moments(f, terms);
  const std::complex<double> z(0.0, -2.0 * std::numbers::pi * s);
  std::complex<double> weight(1.0, 0.0);
  std::complex<double> total(0.0, 0.0);
  for (std::size_t k = 0; k < terms; ++k) {
    total += m[k] * weight;
    weight *= z / static_cast<double>(k + 1);
  }
  return total;
}

}  // namespace spiketrain

#endif  // SPIKETRAIN_FOURIER_HPP
