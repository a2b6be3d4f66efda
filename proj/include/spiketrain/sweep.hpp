#ifndef SPIKETRAIN_SWEEP_HPP
#define SPIKETRAIN_SWEEP_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "spiketrain/adversary.hpp"
#include "spiketrain/cluster.hpp"
#include "spiketrain/decimation.hpp"
#include "spiketrain/signal.hpp"
#include "spiketrain/stats.hpp"

namespace spiketrain {

/// Runs fn(i) for i in [0, count) on `jobs` threads. Each index is visited
/// once; callers write results into slot i, so the outcome does not depend on
/// scheduling.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t jobs, Fn&& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(jobs);
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (std::size_t w = 0; w < jobs; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < count; i = next++) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// A cluster in normalized coordinates: l nodes inside [-1/2, 1/2] with gaps
/// of at least rho, and amplitudes with 1 <= |a| <= 2.
struct ClusterGeometry {
  std::vector<double> positions;
  std::vector<double> amplitudes;
  double rho = 1.0;
};

/// Deterministic in (seed, stream).
inline ClusterGeometry random_cluster_geometry(std::size_t l, double rho, std::uint64_t seed,
                                               std::uint64_t stream) {
  if (l == 0) throw InvalidArgument("random_cluster_geometry: l must be positive");
  if (l > 1 && !(rho > 0.0 && rho * static_cast<double>(l - 1) <= 1.0)) {
    throw InvalidArgument("random_cluster_geometry: need 0 < rho <= 1/(l-1)");
  }
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + stream);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ClusterGeometry g;
  g.rho = l > 1 ? rho : 1.0;
  if (l == 1) {
    g.positions.push_back(unit(rng) - 0.5);
  } else {
    std::vector<double> w(l - 1);
    double wsum = 0.0;
    for (auto& v : w) {
      v = unit(rng) + 1e-3;
      wsum += v;
    }
    const double slack = 1.0 - rho * static_cast<double>(l - 1);
    const double extra = slack * unit(rng);
    double x = -0.5 + (slack - extra) * unit(rng);
    g.positions.push_back(x);
    for (double v : w) {
      x += rho + extra * v / wsum;
      g.positions.push_back(std::min(x, 0.5));
    }
  }
  for (std::size_t j = 0; j < l; ++j) {
    const double magnitude = 1.0 + unit(rng);
    g.amplitudes.push_back(unit(rng) < 0.5 ? -magnitude : magnitude);
  }
  return g;
}

/// The geometry placed at `center` with host interval length h.
inline std::pair<SpikeSignal, ClusterSpec> place_cluster(const ClusterGeometry& g, double center,
                                                         double h) {
  std::vector<double> x;
  for (double y : g.positions) x.push_back(center + h * y);
  SpikeSignal f(g.amplitudes, std::move(x));
  ClusterSpec spec;
  spec.l = f.size();
  spec.h = h;
  spec.rho = g.rho;
  spec.interval_start = center - 0.5 * h;
  spec.kappa = 0;
  return {std::move(f), spec};
}

struct SweepCell {
  std::size_t l = 0;
  double bandwidth = 0.0;
  double epsilon = 0.0;
  double h_epsilon = 0.0;
  std::size_t trial = 0;
  /// max(d(X^0, X^), d(X^1, X^)): the error against the worse of the two
  /// signals consistent with the data.
  double node_error = std::numeric_limits<double>::quiet_NaN();
  double residual = std::numeric_limits<double>::quiet_NaN();
  double stride_used = std::numeric_limits<double>::quiet_NaN();
  /// Measured noise level of the adversarial oracle.
  double oracle_epsilon = std::numeric_limits<double>::quiet_NaN();
  /// d(X^0, X^1) of the adversarial pair.
  double pair_displacement = std::numeric_limits<double>::quiet_NaN();
  /// Empty on success, otherwise the error that stopped this cell.
  std::string status;

  [[nodiscard]] bool ok() const noexcept { return status.empty(); }
};

struct SweepResult {
  std::vector<SweepCell> cells;
  /// (epsilon, worst node error over successful trials), ladder order;
  /// epsilons where every trial failed are omitted.
  std::vector<std::pair<double, double>> worst;
};

struct SweepOptions {
  std::size_t jobs = 1;
  std::size_t levels = 3;
};

/// For each epsilon: h = eps^{1/(2l-1)} / N, an l-node cluster of that size
/// (same normalized geometry per trial index across the ladder), the
/// maximal adversarial pair for it, and decimated Prony on the adversarial
/// oracle of F^1. Cell failures are recorded, not thrown.
inline SweepResult error_scaling_sweep(std::size_t l, double bandwidth,
                                       const std::vector<double>& epsilons, std::size_t trials,
                                       std::uint64_t seed, SweepOptions options = {}) {
  if (l == 0) throw InvalidArgument("sweep: l must be positive");
  if (!(bandwidth > 0.0)) throw InvalidArgument("sweep: bandwidth must be positive");
  if (trials == 0) throw InvalidArgument("sweep: trials must be positive");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] > 0.0)) throw InvalidArgument("sweep: epsilons must be positive");
    if (i > 0 && !(epsilons[i] < epsilons[i - 1])) {
      throw InvalidArgument("sweep: epsilons must be strictly descending");
    }
  }
  const double rho = l > 1 ? 0.8 / static_cast<double>(l - 1) : 1.0;
  SweepResult result;
  result.cells.resize(epsilons.size() * trials);
  parallel_for(result.cells.size(), options.jobs, [&](std::size_t index) {
    const std::size_t e = index / trials;
    const std::size_t trial = index % trials;
    SweepCell& cell = result.cells[index];
    cell.l = l;
    cell.bandwidth = bandwidth;
    cell.epsilon = epsilons[e];
    cell.h_epsilon = std::pow(epsilons[e], 1.0 / (2.0 * static_cast<double>(l) - 1.0)) / bandwidth;
    cell.trial = trial;
    try {
      const auto geometry = random_cluster_geometry(l, rho, seed, trial);
      const auto [f0, spec] = place_cluster(geometry, 0.0, cell.h_epsilon);
      AdversaryOptions adv;
      adv.bounds = AmplitudeBounds(1.0, 2.0);
      const AdversaryPair pair = find_max_adversary(f0, spec, adv);
      cell.pair_displacement = pair.node_displacement;
      const FourierOracle oracle = make_adversarial_oracle(pair, PairMember::f1, bandwidth);
      cell.oracle_epsilon = oracle.epsilon();
      DecimationConfig config;
      config.model_order = l;
      config.node_bound = 2.0 * cell.h_epsilon;
      config.levels = options.levels;
      config.seed = seed;
      const ReconstructionReport report = decimated_prony(oracle, config);
      cell.node_error = std::max(node_distance(pair.f0.nodes(), report.recovered.nodes()),
                                 node_distance(pair.f1.nodes(), report.recovered.nodes()));
      cell.residual = report.residual;
      cell.stride_used = report.stride_used;
    } catch (const std::exception& ex) {
      cell.status = ex.what();
    }
  });
  for (std::size_t e = 0; e < epsilons.size(); ++e) {
    double worst = -1.0;
    for (std::size_t t = 0; t < trials; ++t) {
      const auto& cell = result.cells[e * trials + t];
      if (cell.ok()) worst = std::max(worst, cell.node_error);
    }
    if (worst >= 0.0) result.worst.emplace_back(epsilons[e], worst);
  }
  return result;
}

/// Log-log slope of worst node error against epsilon.
inline LineFit fit_scaling_slope(const SweepResult& result) {
  std::vector<double> eps;
  std::vector<double> err;
  for (const auto& [e, w] : result.worst) {
    if (w > 0.0) {
      eps.push_back(e);
      err.push_back(w);
    }
  }
  return fit_loglog(eps, err);
}

/// One random-noise reconstruction of the uniform l-node cluster of length h
/// (nodes at -h/2 .. h/2, unit amplitudes) at epsilon = c3 (hN)^{2l}.
/// Returns node_error / (rho h), so success means a value <= 1/10.
inline double guarantee_relative_error(std::size_t l, double bandwidth, double h, double c3,
                                       std::uint64_t seed, std::size_t levels = 3) {
  if (l < 2) throw InvalidArgument("guarantee: l must be at least 2");
  std::vector<double> x;
  for (std::size_t j = 0; j < l; ++j) {
    x.push_back(-0.5 * h + h * static_cast<double>(j) / static_cast<double>(l - 1));
  }
  const SpikeSignal truth(std::vector<double>(l, 1.0), std::move(x));
  const double rho = 1.0 / static_cast<double>(l - 1);
  const double epsilon = c3 * std::pow(h * bandwidth, 2.0 * static_cast<double>(l));
  const FourierOracle oracle = make_random_oracle(truth, epsilon, bandwidth, seed);
  DecimationConfig config;
  config.model_order = l;
  config.node_bound = h;
  config.levels = levels;
  config.seed = seed;
  try {
    const auto report = decimated_prony(oracle, config, truth);
    return report.node_error / (rho * h);
  } catch (const ReconstructionError& e) {
    return node_distance(truth.nodes(), e.best().recovered.nodes()) / (rho * h);
  }
}

/// Bisection (in log C3) for the largest C3 at which at least `quantile` of
/// `trials` reference reconstructions meet the 1/10 guarantee.
inline double calibrate_noise_constant(std::size_t l, double bandwidth, double h,
                                       std::size_t trials, double quantile, std::uint64_t seed,
                                       double lo = 1e-6, double hi = 1e4, int steps = 40) {
  auto passes = [&](double c3) {
    std::size_t good = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      if (guarantee_relative_error(l, bandwidth, h, c3, seed + t) <= 0.1) ++good;
    }
    return static_cast<double>(good) >= quantile * static_cast<double>(trials);
  };
  if (!passes(lo)) throw ConstructionError("calibration: reference fails even at the lower bracket", lo);
  if (passes(hi)) return hi;
  for (int i = 0; i < steps; ++i) {
    const double mid = std::sqrt(lo * hi);
    (passes(mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace spiketrain

#endif  // SPIKETRAIN_SWEEP_HPP
