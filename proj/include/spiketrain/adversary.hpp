#ifndef SPIKETRAIN_ADVERSARY_HPP
#define SPIKETRAIN_ADVERSARY_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/special_functions/factorials.hpp>

#include "spiketrain/cluster.hpp"
#include "spiketrain/fourier.hpp"
#include "spiketrain/moments.hpp"
#include "spiketrain/prony.hpp"
#include "spiketrain/signal.hpp"
#include "spiketrain/stats.hpp"

namespace spiketrain {

/// Two signals that share their low-order moments on a cluster.
///
/// f0 and f1 differ only in the spikes kappa .. kappa+l-1 of `cluster`;
/// every other spike is copied bit for bit.
struct AdversaryPair {
  SpikeSignal f0;
  SpikeSignal f1;
  ClusterSpec cluster;
  /// Offset of the last rescaled moment m_{2l-1} (continuation pairs), or the
  /// table parameter eta (closed-form families).
  double eta = 0.0;
  /// l-infinity distance between the two clusters' nodes.
  double node_displacement = 0.0;
  /// max |m_k(f0) - m_k(f1)| over k = 0 .. 2l-2, in 50-digit arithmetic.
  double moment_residual = 0.0;
  bool from_continuation = false;

  [[nodiscard]] SpikeSignal cluster_of_f0() const { return f0.slice(cluster.kappa, cluster.l); }
  [[nodiscard]] SpikeSignal cluster_of_f1() const { return f1.slice(cluster.kappa, cluster.l); }
};

/// Continuation could not reach the requested eta even at the minimal step.
class ConstructionError : public Error {
 public:
  ConstructionError(const std::string& what, double largest_eta)
      : Error(what), largest_eta_(largest_eta) {}
  [[nodiscard]] double largest_eta() const noexcept { return largest_eta_; }

 private:
  double largest_eta_;
};

/// The perturbed cluster left A(m/2, 2M), the rescaled interval [-1, 1], or
/// crossed a spike outside the cluster.
class BoundViolationError : public Error {
 public:
  BoundViolationError(const std::string& what, double eta) : Error(what), eta_(eta) {}
  [[nodiscard]] double eta() const noexcept { return eta_; }

 private:
  double eta_;
};

namespace detail {

/// sum_j |a_j| |x_j|^k over both signals; the natural size of m_k.
inline double moment_scale(const SpikeSignal& f, const SpikeSignal& g, std::size_t k) {
  double s = 0.0;
  for (const SpikeSignal* sig : {&f, &g}) {
    for (std::size_t j = 0; j < sig->size(); ++j) {
      s += std::abs(sig->amplitude(j)) * std::pow(std::abs(sig->node(j)), static_cast<double>(k));
    }
  }
  return s;
}

inline double pair_moment_residual(const SpikeSignal& f0, const SpikeSignal& f1, std::size_t l) {
  if (l < 1) return 0.0;
  const auto diff = moment_differences(f0, f1, 2 * l - 1);
  double r = 0.0;
  for (const auto& v : diff) r = std::max(r, static_cast<double>(abs(v)));
  return r;
}

}  // namespace detail

struct AdversaryOptions {
  /// A(m, M) assumed for f0; defaults to the tightest bounds of f0's amplitudes.
  std::optional<AmplitudeBounds> bounds;
  int newton_max_iter = 40;
  /// Continuation gives up once the sub-step falls below this fraction of |eta|.
  double min_step_fraction = 1e-8;
};

/// Follows the curve PM^{-1}(mu^0 + (0, ..., 0, t)) for the rescaled cluster,
/// starting at t = 0.
///
/// The cluster's host interval is mapped to [-1/2, 1/2]; all 2l parameters
/// vary and the target changes only in the last moment. Sub-steps are halved
/// on Newton failure and doubled again after each success.
class AdversaryContinuation {
 public:
  enum class Outcome { reached, newton_failure, bound_violation };

  AdversaryContinuation(const SpikeSignal& f0, const ClusterSpec& cluster,
                        AdversaryOptions options = {})
      : f0_(f0),
        cluster_(cluster),
        frame_(cluster, 0.0, 0.5),
        base_(frame_.forward(f0.slice(cluster.kappa, cluster.l))),
        mu0_(prony_forward(base_)),
        current_(base_),
        bounds_(options.bounds ? *options.bounds : AmplitudeBounds::of(f0.amplitudes())),
        options_(options) {
    if (!is_valid_cluster(f0, cluster)) {
      throw InvalidArgument("adversary: cluster does not satisfy the (l, h, rho) definition");
    }
    if (!bounds_.admits(f0)) {
      throw InvalidArgument("adversary: f0 violates its amplitude bounds");
    }
    double scale = 1.0;
    for (double v : mu0_.values()) scale = std::max(scale, std::abs(v));
    tol_ = 1e-13 * scale;
    if (cluster.kappa > 0) left_limit_ = f0.node(cluster.kappa - 1);
    if (cluster.kappa + cluster.l < f0.size()) right_limit_ = f0.node(cluster.kappa + cluster.l);
  }

  /// Moves along the curve to `target`. On failure the state stays at the
  /// last feasible point reached.
  Outcome advance_to(double target) {
    double step = target - t_;
    const double floor = options_.min_step_fraction * std::max(std::abs(target), std::abs(t_));
    while (t_ != target) {
      const double remaining = target - t_;
      if (std::abs(step) > std::abs(remaining)) step = remaining;
      const double next = (step == remaining) ? target : t_ + step;
      const PronyImage goal = mu0_ + PronyImage::last_axis(cluster_.l, next);
      std::optional<SpikeSignal> solved;
      try {
        solved = newton_invert(goal, current_, tol_, options_.newton_max_iter).signal;
      } catch (const NoConvergenceError&) {
      } catch (const ConditioningError&) {
      }
      // A jump larger than a quarter of the rescaled cluster means Newton
      // left the branch being followed.
      if (solved && (pack_parameters(*solved) - pack_parameters(current_)).lpNorm<Eigen::Infinity>() >
                        0.25 * std::max(1.0, bounds_.upper)) {
        solved.reset();
      }
      if (!solved) {
        step *= 0.5;
        if (std::abs(step) < floor) return Outcome::newton_failure;
        continue;
      }
      if (!feasible(*solved)) return Outcome::bound_violation;
      current_ = std::move(*solved);
      t_ = next;
      step *= 2.0;
    }
    return Outcome::reached;
  }

  [[nodiscard]] double eta() const noexcept { return t_; }
  [[nodiscard]] const SpikeSignal& rescaled_base() const noexcept { return base_; }
  [[nodiscard]] const SpikeSignal& rescaled_current() const noexcept { return current_; }
  [[nodiscard]] const ClusterFrame& frame() const noexcept { return frame_; }
  [[nodiscard]] const AmplitudeBounds& bounds() const noexcept { return bounds_; }

  [[nodiscard]] AdversaryPair pair() const {
    AdversaryPair p{f0_, splice_cluster(f0_, cluster_, frame_.inverse(current_)), cluster_,
                    t_, 0.0, 0.0, true};
    p.node_displacement = node_distance(p.cluster_of_f0().nodes(), p.cluster_of_f1().nodes());
    p.moment_residual = detail::pair_moment_residual(p.f0, p.f1, cluster_.l);
    return p;
  }

 private:
  bool feasible(const SpikeSignal& rescaled) const {
    const AmplitudeBounds relaxed = bounds_.relaxed();
    for (std::size_t j = 0; j < rescaled.size(); ++j) {
      if (!relaxed.admits(rescaled.amplitude(j))) return false;
      if (std::abs(rescaled.node(j)) > 1.0) return false;
      const double x = frame_.inverse(rescaled.node(j));
      if (left_limit_ && x <= *left_limit_) return false;
      if (right_limit_ && x >= *right_limit_) return false;
    }
    return true;
  }

  SpikeSignal f0_;
  ClusterSpec cluster_;
  ClusterFrame frame_;
  SpikeSignal base_;
  PronyImage mu0_;
  SpikeSignal current_;
  AmplitudeBounds bounds_;
  AdversaryOptions options_;
  double t_ = 0.0;
  double tol_ = 0.0;
  std::optional<double> left_limit_;
  std::optional<double> right_limit_;
};

/// Builds F^1 from F^0: same moments m_0 .. m_{2l-2}, last rescaled moment
/// shifted by eta, cluster nodes displaced.
inline AdversaryPair construct_adversary(const SpikeSignal& f0, const ClusterSpec& cluster,
                                         double eta, AdversaryOptions options = {}) {
  if (eta == 0.0 || !std::isfinite(eta)) throw InvalidArgument("adversary: eta must be nonzero");
  AdversaryContinuation walk(f0, cluster, options);
  switch (walk.advance_to(eta)) {
    case AdversaryContinuation::Outcome::reached:
      return walk.pair();
    case AdversaryContinuation::Outcome::newton_failure:
      throw ConstructionError("adversary: continuation stalled at eta = " +
                                  std::to_string(walk.eta()) + " of " + std::to_string(eta),
                              walk.eta());
    case AdversaryContinuation::Outcome::bound_violation:
      break;
  }
  throw BoundViolationError("adversary: perturbed cluster leaves A(m/2, 2M) or [-1, 1] beyond eta = " +
                                std::to_string(walk.eta()) + "; try a smaller eta",
                            walk.eta());
}

/// Largest feasible |eta| in each direction (doubling, then bisection to
/// relative width 1e-6); returns the pair with the larger node displacement.
inline AdversaryPair find_max_adversary(const SpikeSignal& f0, const ClusterSpec& cluster,
                                        AdversaryOptions options = {}, double eta_start = 1e-4,
                                        double eta_cap = 1e3) {
  std::optional<AdversaryPair> best;
  for (double sign : {1.0, -1.0}) {
    AdversaryContinuation walk(f0, cluster, options);
    double lo = 0.0;
    std::optional<double> hi;
    for (double e = eta_start; e <= eta_cap; e *= 2.0) {
      if (walk.advance_to(sign * e) == AdversaryContinuation::Outcome::reached) {
        lo = e;
      } else {
        lo = std::abs(walk.eta());
        hi = e;
        break;
      }
    }
    if (hi) {
      for (int it = 0; it < 60 && *hi - lo > 1e-6 * *hi; ++it) {
        const double mid = 0.5 * (lo + *hi);
        if (walk.advance_to(sign * mid) == AdversaryContinuation::Outcome::reached) {
          lo = mid;
        } else {
          lo = std::max(lo, std::abs(walk.eta()));
          hi = mid;
        }
      }
    }
    if (walk.eta() == 0.0) continue;
    AdversaryPair candidate = walk.pair();
    if (!best || candidate.node_displacement > best->node_displacement) best = std::move(candidate);
  }
  if (!best) {
    throw ConstructionError("adversary: no feasible perturbation in either direction", 0.0);
  }
  return *best;
}

struct MomentMatchReport {
  /// m_k(f0) - m_k(f1), k = 0 .. 2l-1, from 50-digit arithmetic.
  std::vector<double> differences;
  /// max |difference| over k = 0 .. 2l-2.
  double residual = 0.0;
  /// |m_{2l-1}(f0) - m_{2l-1}(f1)|.
  double leading = 0.0;
  /// Number of leading differences that vanish (to 1e-13 of the moment scale).
  std::size_t matched_order = 0;
  /// All 2l differences vanish: the two signals are numerically the same.
  bool degenerate = false;
};

inline MomentMatchReport verify_moment_match(const AdversaryPair& pair) {
  const std::size_t l = pair.cluster.l;
  const auto diff = moment_differences(pair.f0, pair.f1, 2 * l);
  MomentMatchReport report;
  report.differences.reserve(diff.size());
  for (const auto& v : diff) report.differences.push_back(static_cast<double>(v));
  for (std::size_t k = 0; k + 1 < 2 * l; ++k) {
    report.residual = std::max(report.residual, std::abs(report.differences[k]));
  }
  report.leading = std::abs(report.differences.back());
  bool counting = true;
  bool all_zero = true;
  for (std::size_t k = 0; k < 2 * l; ++k) {
    const double threshold = 1e-13 * detail::moment_scale(pair.f0, pair.f1, k);
    const bool zero = std::abs(report.differences[k]) <= threshold;
    if (counting && zero) ++report.matched_order;
    if (!zero) counting = false;
    all_zero = all_zero && zero;
  }
  report.degenerate = all_zero;
  return report;
}

/// The change of m_{2l-1} that the continuation imposed, mapped back to the
/// original coordinates: |eta| h^{2l-1}.
inline double expected_leading_difference(const AdversaryPair& pair) {
  return std::abs(pair.eta) * std::pow(pair.cluster.h, 2.0 * static_cast<double>(pair.cluster.l) - 1.0);
}

struct FourierGapProfile {
  struct Sample {
    double s;
    std::complex<double> gap;
  };
  std::vector<Sample> samples;
  double fitted_order = 0.0;
  double fitted_constant = 0.0;
};

/// DF(s) = F(f0)(s) - F(f1)(s) in double precision.
inline std::complex<double> fourier_difference(const AdversaryPair& pair, double s) {
  return fourier_eval(combine(1.0, pair.f0, -1.0, pair.f1), s);
}

/// Tabulates DF on a uniform grid of [0, s_max], fits its vanishing order on
/// 32 log-spaced points of [s_max/100, s_max/10], and reports
/// max |DF(s)| / (h s)^order over the grid.
inline FourierGapProfile fourier_gap(const AdversaryPair& pair, double s_max, std::size_t samples) {
  if (samples < 2) throw InvalidArgument("fourier_gap: need at least two samples");
  if (!(s_max > 0.0)) throw InvalidArgument("fourier_gap: s_max must be positive");
  const SpikeSignal diff = combine(1.0, pair.f0, -1.0, pair.f1);
  FourierGapProfile profile;
  profile.samples.reserve(samples);
  double largest = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double s = s_max * static_cast<double>(i) / static_cast<double>(samples - 1);
    const auto g = fourier_eval(diff, s);
    largest = std::max(largest, std::abs(g));
    profile.samples.push_back({s, g});
  }
  if (largest < 1e-15) {
    throw UnderflowError("fourier_gap: |DF| < 1e-15 everywhere; the pair is numerically identical");
  }
  constexpr int kFitPoints = 32;
  std::vector<double> fs;
  std::vector<double> fg;
  for (int i = 0; i < kFitPoints; ++i) {
    const double s = s_max / 100.0 * std::pow(10.0, static_cast<double>(i) / (kFitPoints - 1));
    const double g = std::abs(fourier_eval(diff, s));
    if (g > 0.0) {
      fs.push_back(s);
      fg.push_back(g);
    }
  }
  if (fs.size() < 2) throw UnderflowError("fourier_gap: DF vanishes on the fitting decade");
  profile.fitted_order = fit_loglog(fs, fg).slope;
  const double h = pair.cluster.h;
  for (const auto& sample : profile.samples) {
    if (sample.s <= 0.0) continue;
    profile.fitted_constant = std::max(
        profile.fitted_constant, std::abs(sample.gap) / std::pow(h * sample.s, profile.fitted_order));
  }
  return profile;
}

/// C_2 = 2 (4 l M) (2 pi)^{2l-1} / (2l-1)!.
inline double gap_bound_constant(std::size_t l, double upper_amplitude) {
  const double order = 2.0 * static_cast<double>(l) - 1.0;
  return 2.0 * (4.0 * static_cast<double>(l) * upper_amplitude) *
         std::pow(2.0 * std::numbers::pi, order) /
         boost::math::factorial<double>(static_cast<unsigned>(2 * l - 1));
}

struct GapBoundReport {
  double c2 = 0.0;
  /// max over the grid of |DF(s)| / (C_2 (h|s|)^{2l-1} + residual term).
  double max_ratio = 0.0;
  double worst_s = 0.0;
  std::size_t violations = 0;
  std::size_t points = 0;
  /// Largest contribution sum_{k<=2l-2} |gamma_k| (2 pi |s|)^k / k! of the
  /// numerically unmatched low moments.
  double max_residual_term = 0.0;
};

/// Checks |DF(s)| <= C_2 (h s)^{2l-1} on a symmetric grid of |s| <= 1/(2 pi h).
///
/// DF is evaluated in 50-digit arithmetic from the double parameters. The
/// bound assumes gamma_k = 0 exactly for k <= 2l-2; the pair matches those
/// moments only to roundoff, so their exact contribution is added to the
/// right-hand side (gamma_k taken about the cluster center).
inline GapBoundReport check_gap_bound(const AdversaryPair& pair, double upper_amplitude,
                                      std::size_t grid_points = 1025) {
  const std::size_t l = pair.cluster.l;
  const double h = pair.cluster.h;
  GapBoundReport report;
  report.c2 = gap_bound_constant(l, upper_amplitude);
  report.points = grid_points;

  const Extended center = pair.cluster.center();
  auto centered = [&](const SpikeSignal& c) {
    auto e = c.cast<Extended>();
    std::vector<Extended> x(e.nodes());
    for (auto& v : x) v -= center;
    return BasicSpikeSignal<Extended>(e.amplitudes(), std::move(x));
  };
  const auto c0 = centered(pair.cluster_of_f0());
  const auto c1 = centered(pair.cluster_of_f1());
  const auto m0 = moments(c0, 2 * l - 1);
  const auto m1 = moments(c1, 2 * l - 1);
  const auto diff = combine(Extended(1), c0, Extended(-1), c1);

  const double s_limit = 1.0 / (2.0 * std::numbers::pi * h);
  for (std::size_t i = 0; i < grid_points; ++i) {
    const double s = -s_limit + 2.0 * s_limit * static_cast<double>(i) /
                                    static_cast<double>(grid_points - 1);
    const auto [re, im] = fourier_components(diff, Extended(s));
    const double gap = static_cast<double>(sqrt(re * re + im * im));
    Extended residual_term = 0;
    Extended weight = 1;
    const Extended w = 2 * boost::math::constants::pi<Extended>() * abs(Extended(s));
    for (std::size_t k = 0; k + 1 < 2 * l; ++k) {
      residual_term += abs(m0[k] - m1[k]) * weight;
      weight *= w / Extended(k + 1);
    }
    const double rterm = static_cast<double>(residual_term);
    const double bound =
        report.c2 * std::pow(h * std::abs(s), 2.0 * static_cast<double>(l) - 1.0) + rterm;
    report.max_residual_term = std::max(report.max_residual_term, rterm);
    const double ratio = bound > 0.0 ? gap / bound : (gap > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    if (ratio > report.max_ratio) {
      report.max_ratio = ratio;
      report.worst_s = s;
    }
    // At s = 0 both sides equal |gamma_0|; allow the rounding of the two
    // conversions to double.
    if (gap > bound * (1.0 + 1e-12)) ++report.violations;
  }
  return report;
}

enum class TableFamily { F1, F3, F5 };

inline std::string to_string(TableFamily f) {
  switch (f) {
    case TableFamily::F1:
      return "F1";
    case TableFamily::F3:
      return "F3";
    case TableFamily::F5:
      return "F5";
  }
  return "?";
}

inline TableFamily table_family_from_string(const std::string& name) {
  if (name == "F1") return TableFamily::F1;
  if (name == "F3") return TableFamily::F3;
  if (name == "F5") return TableFamily::F5;
  throw InvalidArgument("unknown table family '" + name + "' (expected F1, F3 or F5)");
}

/// The closed-form three-spike pairs (F^0_q, F^1_q) for q = 1, 3, 5, with
/// eta~ = eta / h. Their moment differences vanish exactly for k < q.
template <typename T>
std::pair<BasicSpikeSignal<T>, BasicSpikeSignal<T>> table_signal_pair(TableFamily family,
                                                                      const T& h, const T& eta) {
  using Signal = BasicSpikeSignal<T>;
  const T one(1);
  switch (family) {
    case TableFamily::F1:
      return {Signal({one, one, one}, {-h - eta, -eta, h + eta}),
              Signal({one, one, one}, {-h - eta, eta, h + eta})};
    case TableFamily::F3:
      return {Signal({one, one, one}, {-h - eta, -eta, h + 2 * eta}),
              Signal({one, one, one}, {-h - 2 * eta, eta, h + eta})};
    case TableFamily::F5: {
      const T t = eta / h;
      return {Signal({-one - 3 * t, 2 + 3 * t, -one}, {-h - eta, -eta, h + 2 * eta}),
              Signal({-one, 2 + 3 * t, -one - 3 * t}, {-h - 2 * eta, eta, h + eta})};
    }
  }
  throw InvalidArgument("table_signal_pair: unknown family");
}

/// Table pair as an AdversaryPair; the cluster is the actual span of f0's
/// three nodes.
inline AdversaryPair table_signals(TableFamily family, double h, double eta) {
  if (!(h > 0.0) || !(eta > 0.0) || !(eta <= h / 2.0)) {
    throw InvalidArgument("table_signals: need h > 0 and 0 < eta <= h/2");
  }
  auto [f0, f1] = table_signal_pair<double>(family, h, eta);
  AdversaryPair p{f0, f1, span_cluster(f0, 0, 3), eta, 0.0, 0.0, false};
  p.node_displacement = node_distance(f0.nodes(), f1.nodes());
  p.moment_residual = detail::pair_moment_residual(f0, f1, 3);
  return p;
}

/// Closed-form moment differences m_k(F^0_q) - m_k(F^1_q).
template <typename T>
T table_moment_difference(TableFamily family, const T& h, const T& eta, unsigned k) {
  using boost::multiprecision::pow;
  using std::pow;
  if (k % 2 == 0) return T(0);  // every pair is symmetric in even moments
  switch (family) {
    case TableFamily::F1:
      return -2 * pow(eta, k);
    case TableFamily::F3:
      return 2 * (pow(h + 2 * eta, k) - pow(h + eta, k) - pow(eta, k));
    case TableFamily::F5: {
      // F^1_5(x) = F^0_5(-x), so odd differences are 2 m_k(F^0_5).
      const T t = eta / h;
      return 2 * ((1 + 3 * t) * pow(h + eta, k) - (2 + 3 * t) * pow(eta, k) - pow(h + 2 * eta, k));
    }
  }
  return T(0);
}

}  // namespace spiketrain

#endif  // SPIKETRAIN_ADVERSARY_HPP
