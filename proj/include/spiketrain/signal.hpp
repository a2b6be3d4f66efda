#ifndef SPIKETRAIN_SIGNAL_HPP
#define SPIKETRAIN_SIGNAL_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "spiketrain/errors.hpp"

namespace spiketrain {

/// 50 significant decimal digits; used by oracles and table emission only.
using Extended = boost::multiprecision::cpp_bin_float_50;

namespace detail {

template <typename T>
bool is_finite(const T& v) {
  using std::isfinite;
  using boost::multiprecision::isfinite;
  return isfinite(v);
}

template <typename T>
T abs_value(const T& v) {
  using std::abs;
  using boost::multiprecision::abs;
  return abs(v);
}

}  // namespace detail

/// A finite sum of weighted Dirac spikes, F(x) = sum_j a_j delta(x - x_j).
///
/// Nodes are kept in non-decreasing order; the constructor sorts the
/// (amplitude, node) pairs so callers never have to. Amplitudes and nodes
/// always have the same nonzero length.
template <typename T>
class BasicSpikeSignal {
 public:
  using value_type = T;

  BasicSpikeSignal(std::vector<T> amplitudes, std::vector<T> nodes) {
    if (amplitudes.size() != nodes.size()) {
      throw DimensionError("spike signal: " + std::to_string(amplitudes.size()) +
                           " amplitudes but " + std::to_string(nodes.size()) + " nodes");
    }
    if (amplitudes.empty()) {
      throw DimensionError("spike signal: at least one spike is required");
    }
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      if (!detail::is_finite(amplitudes[j]) || !detail::is_finite(nodes[j])) {
        throw InvalidArgument("spike signal: non-finite amplitude or node");
      }
    }
    std::vector<std::size_t> order(nodes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t k) { return nodes[i] < nodes[k]; });
    amplitudes_.reserve(order.size());
    nodes_.reserve(order.size());
    for (std::size_t i : order) {
      amplitudes_.push_back(std::move(amplitudes[i]));
      nodes_.push_back(std::move(nodes[i]));
    }
  }

  [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
  [[nodiscard]] const std::vector<T>& amplitudes() const noexcept { return amplitudes_; }
  [[nodiscard]] const std::vector<T>& nodes() const noexcept { return nodes_; }
  [[nodiscard]] const T& amplitude(std::size_t j) const { return amplitudes_.at(j); }
  [[nodiscard]] const T& node(std::size_t j) const { return nodes_.at(j); }

  /// Sum of |a_j|, which bounds |F(F)(s)| for every s.
  [[nodiscard]] T total_variation() const {
    T sum = 0;
    for (const auto& a : amplitudes_) sum += detail::abs_value(a);
    return sum;
  }

  /// Spikes kappa .. kappa+count-1 (in node order).
  [[nodiscard]] BasicSpikeSignal slice(std::size_t kappa, std::size_t count) const {
    if (count == 0 || kappa + count > size()) {
      throw DimensionError("spike signal: slice out of range");
    }
    return BasicSpikeSignal(
        std::vector<T>(amplitudes_.begin() + kappa, amplitudes_.begin() + kappa + count),
        std::vector<T>(nodes_.begin() + kappa, nodes_.begin() + kappa + count));
  }

  template <typename U>
  [[nodiscard]] BasicSpikeSignal<U> cast() const {
    std::vector<U> a(amplitudes_.begin(), amplitudes_.end());
    std::vector<U> x(nodes_.begin(), nodes_.end());
    return BasicSpikeSignal<U>(std::move(a), std::move(x));
  }

  friend bool operator==(const BasicSpikeSignal&, const BasicSpikeSignal&) = default;

 private:
  std::vector<T> amplitudes_;
  std::vector<T> nodes_;
};

using SpikeSignal = BasicSpikeSignal<double>;

/// Spike-wise sum: alpha*F + beta*G as one signal with both spike sets.
template <typename T>
BasicSpikeSignal<T> combine(const T& alpha, const BasicSpikeSignal<T>& f, const T& beta,
                            const BasicSpikeSignal<T>& g) {
  std::vector<T> a;
  std::vector<T> x;
  a.reserve(f.size() + g.size());
  x.reserve(f.size() + g.size());
  for (std::size_t j = 0; j < f.size(); ++j) {
    a.push_back(alpha * f.amplitude(j));
    x.push_back(f.node(j));
  }
  for (std::size_t j = 0; j < g.size(); ++j) {
    a.push_back(beta * g.amplitude(j));
    x.push_back(g.node(j));
  }
  return BasicSpikeSignal<T>(std::move(a), std::move(x));
}

/// Amplitude assumption 0 < m <= |a_j| <= M.
struct AmplitudeBounds {
  double lower;
  double upper;

  AmplitudeBounds(double m, double M) : lower(m), upper(M) {
    if (!(m > 0.0) || !(m <= M) || !std::isfinite(M)) {
      throw InvalidArgument("amplitude bounds require 0 < m <= M < inf");
    }
  }

  /// Tightest bounds satisfied by the given amplitudes.
  static AmplitudeBounds of(std::span<const double> amplitudes) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (double a : amplitudes) {
      lo = std::min(lo, std::abs(a));
      hi = std::max(hi, std::abs(a));
    }
    return {lo, hi};
  }

  [[nodiscard]] bool admits(double a) const noexcept {
    return std::abs(a) >= lower && std::abs(a) <= upper;
  }
  [[nodiscard]] bool admits(const SpikeSignal& f) const noexcept {
    return std::all_of(f.amplitudes().begin(), f.amplitudes().end(),
                       [this](double a) { return admits(a); });
  }
  /// The relaxed class A(m/2, 2M) that adversarial signals must stay in.
  [[nodiscard]] AmplitudeBounds relaxed() const { return {lower / 2.0, 2.0 * upper}; }
};

/// An (l, h, rho) cluster: the host interval [interval_start, interval_start + h]
/// holds exactly the l nodes kappa .. kappa+l-1, pairwise at least rho*h apart.
struct ClusterSpec {
  std::size_t l = 0;
  double h = 0.0;
  double rho = 0.0;
  double interval_start = 0.0;
  std::size_t kappa = 0;

  [[nodiscard]] double interval_end() const noexcept { return interval_start + h; }
  [[nodiscard]] double center() const noexcept { return interval_start + 0.5 * h; }
};

/// Checks the cluster definition against a concrete signal.
inline bool is_valid_cluster(const SpikeSignal& f, const ClusterSpec& c) {
  if (c.l == 0 || !(c.h > 0.0) || !(c.rho > 0.0) || c.kappa + c.l > f.size()) return false;
  std::size_t inside = 0;
  for (double x : f.nodes()) {
    if (x >= c.interval_start && x <= c.interval_end()) ++inside;
  }
  if (inside != c.l) return false;
  for (std::size_t j = c.kappa; j < c.kappa + c.l; ++j) {
    const double x = f.node(j);
    if (x < c.interval_start || x > c.interval_end()) return false;
    if (j > c.kappa && x - f.node(j - 1) < c.rho * c.h * (1.0 - 1e-12)) return false;
  }
  return true;
}

}  // namespace spiketrain

#endif  // SPIKETRAIN_SIGNAL_HPP
