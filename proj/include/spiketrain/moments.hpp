#ifndef SPIKETRAIN_MOMENTS_HPP
#define SPIKETRAIN_MOMENTS_HPP

#include <cmath>
#include <cstddef>
#include <vector>

#include "spiketrain/signal.hpp"

namespace spiketrain {

namespace detail {

// Error-free transformations; a value is represented as hi + lo.
struct DoubleDouble {
  double hi = 0.0;
  double lo = 0.0;
};

inline DoubleDouble two_sum(double a, double b) {
  const double s = a + b;
  const double bb = s - a;
  return {s, (a - (s - bb)) + (b - bb)};
}

inline DoubleDouble two_prod(double a, double b) {
  const double p = a * b;
  return {p, std::fma(a, b, -p)};
}

inline DoubleDouble mul(const DoubleDouble& a, double b) {
  DoubleDouble p = two_prod(a.hi, b);
  p.lo = std::fma(a.lo, b, p.lo);
  return two_sum(p.hi, p.lo);
}

inline DoubleDouble add(const DoubleDouble& a, const DoubleDouble& b) {
  DoubleDouble s = two_sum(a.hi, b.hi);
  s.lo += a.lo + b.lo;
  return two_sum(s.hi, s.lo);
}

}  // namespace detail

/// Power sums m_k = sum_j a_j x_j^k, k = 0 .. count-1.
///
/// The double specialization carries every power and partial sum as an
/// unevaluated double-double pair, so the only rounding is the final one.
/// Moment differences of clustered nodes cancel catastrophically and this
/// keeps them meaningful down to ~1e-30 of the term scale.
template <typename T>
std::vector<T> moments(const BasicSpikeSignal<T>& f, std::size_t count) {
  if (count == 0) throw InvalidArgument("moments: count must be at least 1");
  std::vector<T> m(count, T(0));
  for (std::size_t j = 0; j < f.size(); ++j) {
    T term = f.amplitude(j);
    for (std::size_t k = 0; k < count; ++k) {
      m[k] += term;
      term *= f.node(j);
    }
  }
  return m;
}

template <>
inline std::vector<double> moments(const SpikeSignal& f, std::size_t count) {
  if (count == 0) throw InvalidArgument("moments: count must be at least 1");
  std::vector<detail::DoubleDouble> acc(count);
  for (std::size_t j = 0; j < f.size(); ++j) {
    detail::DoubleDouble term{f.amplitude(j), 0.0};
    for (std::size_t k = 0; k < count; ++k) {
      acc[k] = detail::add(acc[k], term);
      term = detail::mul(term, f.node(j));
    }
  }
  std::vector<double> m(count);
  for (std::size_t k = 0; k < count; ++k) m[k] = acc[k].hi + acc[k].lo;
  return m;
}

/// Moments m_0 .. m_{2d-1} of a d-spike signal: a point in the image of the
/// Prony mapping.
class MomentVector {
 public:
  explicit MomentVector(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty() || values_.size() % 2 != 0) {
      throw DimensionError("moment vector: length must be 2d, got " +
                           std::to_string(values_.size()));
    }
  }
  explicit MomentVector(const SpikeSignal& f) : MomentVector(moments(f, 2 * f.size())) {}

  [[nodiscard]] std::size_t dimension() const noexcept { return values_.size() / 2; }
  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
  [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }
  [[nodiscard]] double operator[](std::size_t k) const { return values_.at(k); }

 private:
  std::vector<double> values_;
};

/// Moment differences m_k(f) - m_k(g) computed from the double parameters in
/// 50-digit arithmetic.
inline std::vector<Extended> moment_differences(const SpikeSignal& f, const SpikeSignal& g,
                                                std::size_t count) {
  const auto mf = moments(f.cast<Extended>(), count);
  const auto mg = moments(g.cast<Extended>(), count);
  std::vector<Extended> diff(count);
  for (std::size_t k = 0; k < count; ++k) diff[k] = mf[k] - mg[k];
  return diff;
}

}  // namespace spiketrain

#endif  // SPIKETRAIN_MOMENTS_HPP
