#ifndef SPIKETRAIN_DECIMATION_HPP
#define SPIKETRAIN_DECIMATION_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "spiketrain/adversary.hpp"
#include "spiketrain/cluster.hpp"
#include "spiketrain/errors.hpp"
#include "spiketrain/fourier.hpp"
#include "spiketrain/signal.hpp"

namespace spiketrain {

/// Band-limited noisy Fourier measurement Phi(s), |s| <= N, with
/// |Phi(s) - F(base)(s)| <= epsilon checked on every query.
class FourierOracle {
 public:
  using Function = std::function<std::complex<double>(double)>;

  FourierOracle(SpikeSignal base, Function measurement, Function noise, double epsilon,
                double bandwidth)
      : base_(std::move(base)),
        measurement_(std::move(measurement)),
        noise_(std::move(noise)),
        epsilon_(epsilon),
        bandwidth_(bandwidth) {
    if (!(epsilon >= 0.0)) throw InvalidArgument("oracle: epsilon must be nonnegative");
    if (!(bandwidth > 0.0)) throw InvalidArgument("oracle: bandwidth must be positive");
  }

  /// Phi(s). Throws RangeError outside [-N, N] or if the noise bound fails.
  [[nodiscard]] std::complex<double> measure(double s) const {
    if (!(std::abs(s) <= bandwidth_)) {
      throw RangeError("oracle: frequency " + std::to_string(s) + " outside [-N, N], N = " +
                       std::to_string(bandwidth_));
    }
    const double n = std::abs(noise_(s));
    // Slack covers rounding in the noise itself, nothing more.
    if (n > epsilon_ * (1.0 + 1e-9) + 1e-15 * base_.total_variation()) {
      throw RangeError("oracle: noise " + std::to_string(n) + " exceeds epsilon " +
                       std::to_string(epsilon_) + " at s = " + std::to_string(s));
    }
    return measurement_(s);
  }

  [[nodiscard]] std::complex<double> noise(double s) const { return noise_(s); }
  [[nodiscard]] const SpikeSignal& base_signal() const noexcept { return base_; }
  [[nodiscard]] double epsilon() const noexcept { return epsilon_; }
  [[nodiscard]] double bandwidth() const noexcept { return bandwidth_; }

 private:
  SpikeSignal base_;
  Function measurement_;
  Function noise_;
  double epsilon_;
  double bandwidth_;
};

enum class PairMember { f0, f1 };

/// Phi = F(f0) for both members of the pair; for f1 the noise is
/// F(f0) - F(f1), and epsilon is its maximum over 1024 points of [0, N].
inline FourierOracle make_adversarial_oracle(const AdversaryPair& pair, PairMember which,
                                             double bandwidth) {
  const double limit = 1.0 / (2.0 * std::numbers::pi * pair.cluster.h);
  if (!(bandwidth > 0.0)) throw InvalidArgument("adversarial oracle: bandwidth must be positive");
  if (bandwidth > limit) {
    throw RangeError("adversarial oracle: N = " + std::to_string(bandwidth) +
                     " exceeds 1/(2 pi h) = " + std::to_string(limit));
  }
  constexpr int kGrid = 1024;
  double epsilon = 0.0;
  for (int i = 0; i < kGrid; ++i) {
    const double s = bandwidth * static_cast<double>(i) / (kGrid - 1);
    epsilon = std::max(epsilon, std::abs(fourier_eval(pair.f0, s) - fourier_eval(pair.f1, s)));
  }
  SpikeSignal f0 = pair.f0;
  SpikeSignal base = which == PairMember::f0 ? pair.f0 : pair.f1;
  FourierOracle::Function measurement = [f0](double s) { return fourier_eval(f0, s); };
  FourierOracle::Function noise;
  if (which == PairMember::f0) {
    noise = [](double) { return std::complex<double>(0.0, 0.0); };
  } else {
    SpikeSignal f1 = pair.f1;
    noise = [f0, f1](double s) { return fourier_eval(f0, s) - fourier_eval(f1, s); };
  }
  return FourierOracle(std::move(base), std::move(measurement), std::move(noise), epsilon, bandwidth);
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Point of the closed unit disc, a pure function of (seed, s).
inline std::complex<double> disc_noise(std::uint64_t seed, double s) {
  if (s == 0.0) s = 0.0;  // fold -0.0 onto +0.0
  std::uint64_t state = seed ^ (std::bit_cast<std::uint64_t>(s) * 0xD1B54A32D192ED03ULL);
  splitmix64(state);
  for (;;) {
    const double u = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53 * 2.0 - 1.0;
    const double v = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53 * 2.0 - 1.0;
    if (u * u + v * v <= 1.0) return {u, v};
  }
}

}  // namespace detail

/// Phi(s) = F(signal)(s) + noise(s), noise uniform on the disc of radius
/// epsilon and determined by (seed, s) alone, so query order does not matter.
inline FourierOracle make_random_oracle(const SpikeSignal& signal, double epsilon, double bandwidth,
                                        std::uint64_t seed) {
  if (!(epsilon >= 0.0)) throw InvalidArgument("random oracle: epsilon must be nonnegative");
  FourierOracle::Function noise = [epsilon, seed](double s) {
    if (epsilon == 0.0) return std::complex<double>(0.0, 0.0);
    return epsilon * detail::disc_noise(seed, s);
  };
  FourierOracle::Function measurement = [signal, noise](double s) {
    return fourier_eval(signal, s) + noise(s);
  };
  return FourierOracle(signal, std::move(measurement), std::move(noise), epsilon, bandwidth);
}

struct DecimationConfig {
  std::size_t model_order = 1;
  /// A priori bound max |x_j| <= node_bound.
  double node_bound = 1.0;
  std::size_t levels = 3;
  /// Relative decrease of the squared residual below which refinement stops.
  double refine_tol = 1e-14;
  int refine_max_iter = 50;
  std::uint64_t seed = 0;

  void validate() const {
    if (model_order == 0) throw InvalidArgument("decimation: model_order must be positive");
    if (!(node_bound > 0.0)) throw InvalidArgument("decimation: node_bound must be positive");
    if (levels == 0) throw InvalidArgument("decimation: levels must be positive");
    if (!(refine_tol >= 0.0)) throw InvalidArgument("decimation: refine_tol must be nonnegative");
  }
};

/// Stride ladder: the largest stride keeping both 2 Delta T < 1 and the
/// 2d Prony samples inside [0, N], then halved level by level.
inline std::vector<double> stride_ladder(const DecimationConfig& config, double bandwidth) {
  config.validate();
  const double d = static_cast<double>(config.model_order);
  const double band_limited = bandwidth / (2.0 * d - 1.0);
  const double alias_limited = (1.0 - 1e-9) / (2.0 * config.node_bound);
  std::vector<double> strides;
  double stride = std::min(band_limited, alias_limited);
  for (std::size_t i = 0; i < config.levels; ++i, stride *= 0.5) strides.push_back(stride);
  return strides;
}

struct ReconstructionReport {
  SpikeSignal recovered;
  /// d(X_true, X_recovered); NaN without ground truth.
  double node_error = std::numeric_limits<double>::quiet_NaN();
  /// max |a_j - a^_j|; NaN without ground truth.
  double amplitude_error = std::numeric_limits<double>::quiet_NaN();
  /// max over every sample used of |Phi(s) - F(recovered)(s)|.
  double residual = 0.0;
  double stride_used = 0.0;
  int refinement_iterations = 0;
  /// Squared residual before refinement and after each accepted step.
  std::vector<double> refinement_history;
  std::size_t sample_count = 0;
};

/// No candidate explained the data to within 10 epsilon sqrt(n).
class ReconstructionError : public Error {
 public:
  ReconstructionError(const std::string& what, ReconstructionReport best)
      : Error(what), best_(std::move(best)) {}
  [[nodiscard]] const ReconstructionReport& best() const noexcept { return best_; }

 private:
  ReconstructionReport best_;
};

/// Fills in node and amplitude errors against a known signal of equal order.
inline void score_against(ReconstructionReport& report, const SpikeSignal& truth) {
  if (truth.size() != report.recovered.size()) {
    throw DimensionError("score_against: truth has " + std::to_string(truth.size()) +
                         " spikes, reconstruction " + std::to_string(report.recovered.size()));
  }
  report.node_error = node_distance(truth.nodes(), report.recovered.nodes());
  report.amplitude_error = node_distance(truth.amplitudes(), report.recovered.amplitudes());
}

namespace detail {

struct SampleSet {
  std::vector<double> s;
  std::vector<std::complex<double>> phi;
};

inline Eigen::VectorXd stacked_residual(const SpikeSignal& f, const SampleSet& data) {
  const auto n = static_cast<Eigen::Index>(data.s.size());
  Eigen::VectorXd r(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto diff = fourier_eval(f, data.s[static_cast<std::size_t>(i)]) -
                      data.phi[static_cast<std::size_t>(i)];
    r(i) = diff.real();
    r(n + i) = diff.imag();
  }
  return r;
}

inline double max_residual(const SpikeSignal& f, const SampleSet& data) {
  double r = 0.0;
  for (std::size_t i = 0; i < data.s.size(); ++i) {
    r = std::max(r, std::abs(fourier_eval(f, data.s[i]) - data.phi[i]));
  }
  return r;
}

/// Real amplitudes minimizing sum |sum_j a_j e^{-2 pi i s x_j} - Phi(s)|^2.
inline Eigen::VectorXd amplitude_least_squares(const std::vector<double>& nodes,
                                               const SampleSet& data) {
  const auto n = static_cast<Eigen::Index>(data.s.size());
  const auto d = static_cast<Eigen::Index>(nodes.size());
  Eigen::MatrixXd A(2 * n, d);
  Eigen::VectorXd b(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = data.s[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < d; ++j) {
      const double phase = -2.0 * std::numbers::pi * s * nodes[static_cast<std::size_t>(j)];
      A(i, j) = std::cos(phase);
      A(n + i, j) = std::sin(phase);
    }
    b(i) = data.phi[static_cast<std::size_t>(i)].real();
    b(n + i) = data.phi[static_cast<std::size_t>(i)].imag();
  }
  return A.colPivHouseholderQr().solve(b);
}

/// Damped Gauss-Newton on all sample points; the squared residual never
/// increases across accepted steps.
inline SpikeSignal gauss_newton_refine(SpikeSignal f, const SampleSet& data,
                                       const DecimationConfig& config, int& iterations,
                                       std::vector<double>& history) {
  const auto n = static_cast<Eigen::Index>(data.s.size());
  const auto d = static_cast<Eigen::Index>(f.size());
  Eigen::VectorXd r = stacked_residual(f, data);
  double cost = r.squaredNorm();
  history.assign(1, cost);
  iterations = 0;
  for (int it = 0; it < config.refine_max_iter && cost > 0.0; ++it) {
    Eigen::MatrixXd J(2 * n, 2 * d);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double s = data.s[static_cast<std::size_t>(i)];
      for (Eigen::Index j = 0; j < d; ++j) {
        const double a = f.amplitude(static_cast<std::size_t>(j));
        const double phase = -2.0 * std::numbers::pi * s * f.node(static_cast<std::size_t>(j));
        const double c = std::cos(phase);
        const double sn = std::sin(phase);
        J(i, j) = c;
        J(n + i, j) = sn;
        // d/dx [a e^{i phase}] = a (-2 pi i s) e^{i phase}
        const double w = -2.0 * std::numbers::pi * s * a;
        J(i, d + j) = -w * sn;
        J(n + i, d + j) = w * c;
      }
    }
    const Eigen::VectorXd step = J.colPivHouseholderQr().solve(-r);
    if (!step.allFinite()) break;
    const Eigen::VectorXd p = pack_parameters(f);
    double t = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= 30; ++halving, t *= 0.5) {
      SpikeSignal candidate = unpack_parameters(p + t * step);
      Eigen::VectorXd rc = stacked_residual(candidate, data);
      const double c = rc.squaredNorm();
      if (c < cost) {
        const double improvement = (cost - c) / cost;
        f = std::move(candidate);
        r = std::move(rc);
        cost = c;
        accepted = true;
        ++iterations;
        history.push_back(cost);
        if (improvement < config.refine_tol) return f;
        break;
      }
    }
    if (!accepted) break;
  }
  return f;
}

}  // namespace detail

/// Decimated Prony reconstruction from the oracle.
///
/// For each stride Delta of the ladder the samples Phi(k Delta), k < 2d, form
/// a Prony system in z_j = exp(-2 pi i Delta x_j): Hankel solve, companion
/// roots, x_j = -arg(z_j) / (2 pi Delta). Amplitudes come from least squares
/// on 4d samples spanning the same band. Every candidate is refined by
/// Gauss-Newton on the union of all samples and the one with the smallest
/// residual there wins.
inline ReconstructionReport decimated_prony(const FourierOracle& oracle,
                                            const DecimationConfig& config,
                                            const std::optional<SpikeSignal>& truth = std::nullopt) {
  config.validate();
  const std::size_t d = config.model_order;
  const auto strides = stride_ladder(config, oracle.bandwidth());

  detail::SampleSet all;
  auto take = [&](double s) {
    const auto phi = oracle.measure(s);
    for (std::size_t i = 0; i < all.s.size(); ++i) {
      if (all.s[i] == s) return phi;
    }
    all.s.push_back(s);
    all.phi.push_back(phi);
    return phi;
  };

  struct Level {
    double stride;
    std::vector<double> nodes;
    detail::SampleSet ls;
  };
  std::vector<Level> levels;
  int rank_deficient = 0;
  for (double stride : strides) {
    const auto n = static_cast<Eigen::Index>(d);
    std::vector<std::complex<double>> phi(2 * d);
    for (std::size_t k = 0; k < 2 * d; ++k) phi[k] = take(static_cast<double>(k) * stride);

    Level level{stride, {}, {}};
    const std::size_t ls_count = 4 * d;
    const double span = static_cast<double>(2 * d - 1) * stride;
    for (std::size_t i = 0; i < ls_count; ++i) {
      const double s = span * static_cast<double>(i) / static_cast<double>(ls_count - 1);
      level.ls.s.push_back(s);
      level.ls.phi.push_back(take(s));
    }

    Eigen::MatrixXcd H(n, n);
    Eigen::VectorXcd rhs(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index c = 0; c < n; ++c) H(r, c) = phi[static_cast<std::size_t>(r + c)];
      rhs(r) = -phi[static_cast<std::size_t>(r + n)];
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(H, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (!(sv(0) > 0.0) || sv(n - 1) <= 1e-13 * sv(0)) {
      ++rank_deficient;
      continue;
    }
    const Eigen::VectorXcd coeffs = svd.solve(rhs);
    Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(n, n);
    for (Eigen::Index i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
    companion.col(n - 1) = -coeffs;
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> eig(companion, false);
    if (eig.info() != Eigen::Success) continue;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto z = eig.eigenvalues()(i);
      level.nodes.push_back(-std::arg(z) / (2.0 * std::numbers::pi * stride));
    }
    std::sort(level.nodes.begin(), level.nodes.end());
    levels.push_back(std::move(level));
  }
  if (levels.empty()) {
    throw ModelOrderError("decimated_prony: Hankel matrix rank deficient at all " +
                          std::to_string(rank_deficient) + " levels");
  }

  std::optional<ReconstructionReport> best;
  double best_cost = std::numeric_limits<double>::infinity();
  for (const auto& level : levels) {
    const Eigen::VectorXd amps = detail::amplitude_least_squares(level.nodes, level.ls);
    SpikeSignal start(std::vector<double>(amps.data(), amps.data() + amps.size()), level.nodes);
    ReconstructionReport report{start};
    report.recovered = detail::gauss_newton_refine(start, all, config, report.refinement_iterations,
                                                   report.refinement_history);
    const double cost = detail::stacked_residual(report.recovered, all).squaredNorm();
    report.residual = detail::max_residual(report.recovered, all);
    report.stride_used = level.stride;
    report.sample_count = all.s.size();
    if (!best || cost < best_cost) {
      best_cost = cost;
      best = std::move(report);
    }
  }
  if (truth) score_against(*best, *truth);

  const double threshold =
      std::max(10.0 * oracle.epsilon() * std::sqrt(static_cast<double>(all.s.size())),
               1e-9 * std::max(1.0, best->recovered.total_variation()));
  if (!(best->residual <= threshold)) {
    throw ReconstructionError("decimated_prony: best residual " + std::to_string(best->residual) +
                                  " exceeds " + std::to_string(threshold),
                              *best);
  }
  return *best;
}

}  // namespace spiketrain

#endif  // SPIKETRAIN_DECIMATION_HPP
