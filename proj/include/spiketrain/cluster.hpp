#ifndef SPIKETRAIN_CLUSTER_HPP
#define SPIKETRAIN_CLUSTER_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "spiketrain/signal.hpp"

namespace spiketrain {

/// max_s |v_s - w_s|, the l-infinity distance between ordered node sets.
inline double node_distance(std::span<const double> v, std::span<const double> w) {
  if (v.size() != w.size()) {
    throw DimensionError("node_distance: lengths " + std::to_string(v.size()) + " and " +
                         std::to_string(w.size()) + " differ");
  }
  double d = 0.0;
  for (std::size_t s = 0; s < v.size(); ++s) d = std::max(d, std::abs(v[s] - w[s]));
  return d;
}

/// Finds the largest group of consecutive nodes that fits in a window of
/// length h. Ties go to the leftmost window. Returns nothing when no two
/// nodes are within h of each other.
inline std::optional<ClusterSpec> detect_cluster(const SpikeSignal& f, double h) {
  if (!(h > 0.0)) throw InvalidArgument("detect_cluster: h must be positive");
  const auto& x = f.nodes();
  std::size_t best_start = 0;
  std::size_t best_count = 0;
  std::size_t end = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    end = std::max(end, i);
    while (end + 1 < x.size() && x[end + 1] - x[i] <= h) ++end;
    const std::size_t count = end - i + 1;
    if (count > best_count) {
      best_count = count;
      best_start = i;
    }
  }
  if (best_count < 2) return std::nullopt;

  double min_gap = x[best_start + 1] - x[best_start];
  for (std::size_t j = best_start + 1; j < best_start + best_count; ++j) {
    min_gap = std::min(min_gap, x[j] - x[j - 1]);
  }
  ClusterSpec spec;
  spec.l = best_count;
  spec.h = h;
  spec.rho = min_gap / h;
  spec.interval_start = x[best_start];
  spec.kappa = best_start;
  return spec;
}

/// Cluster spec whose host interval is exactly the span of spikes
/// kappa .. kappa+l-1.
inline ClusterSpec span_cluster(const SpikeSignal& f, std::size_t kappa, std::size_t l) {
  if (l == 0 || kappa + l > f.size()) throw DimensionError("span_cluster: range out of bounds");
  ClusterSpec spec;
  spec.l = l;
  spec.kappa = kappa;
  spec.interval_start = f.node(kappa);
  spec.h = f.node(kappa + l - 1) - f.node(kappa);
  if (l == 1 || !(spec.h > 0.0)) {
    throw InvalidArgument("span_cluster: cluster needs at least two distinct nodes");
  }
  double min_gap = spec.h;
  for (std::size_t j = kappa + 1; j < kappa + l; ++j) {
    min_gap = std::min(min_gap, f.node(j) - f.node(j - 1));
  }
  spec.rho = min_gap / spec.h;
  return spec;
}

/// Affine map taking a cluster's host interval onto
/// [center - halfwidth, center + halfwidth].
class ClusterFrame {
 public:
  ClusterFrame(const ClusterSpec& spec, double target_center, double target_halfwidth)
      : source_center_(spec.center()),
        target_center_(target_center),
        scale_(2.0 * target_halfwidth / spec.h) {
    if (!(target_halfwidth > 0.0)) {
      throw InvalidArgument("rescale: target halfwidth must be positive");
    }
    if (!(spec.h > 0.0)) throw InvalidArgument("rescale: cluster length must be positive");
  }

  [[nodiscard]] double forward(double x) const {
    return target_center_ + (x - source_center_) * scale_;
  }
  [[nodiscard]] double inverse(double y) const {
    return source_center_ + (y - target_center_) / scale_;
  }
  /// Length ratio target / source.
  [[nodiscard]] double scale() const noexcept { return scale_; }

  [[nodiscard]] SpikeSignal forward(const SpikeSignal& f) const { return apply(f, true); }
  [[nodiscard]] SpikeSignal inverse(const SpikeSignal& f) const { return apply(f, false); }

 private:
  SpikeSignal apply(const SpikeSignal& f, bool fwd) const {
    std::vector<double> x(f.nodes());
    for (double& v : x) v = fwd ? forward(v) : inverse(v);
    return SpikeSignal(f.amplitudes(), std::move(x));
  }

  double source_center_;
  double target_center_;
  double scale_;
};

/// The cluster's l spikes, moved affinely into the target interval.
/// Amplitudes are unchanged; ClusterFrame::inverse undoes the map.
inline SpikeSignal rescale_cluster(const SpikeSignal& f, const ClusterSpec& spec,
                                   double target_center, double target_halfwidth) {
  const ClusterFrame frame(spec, target_center, target_halfwidth);
  return frame.forward(f.slice(spec.kappa, spec.l));
}

/// Replaces spikes kappa .. kappa+l-1 of f with `cluster`. Every other spike
/// is copied unchanged.
inline SpikeSignal splice_cluster(const SpikeSignal& f, const ClusterSpec& spec,
                                  const SpikeSignal& cluster) {
  if (cluster.size() != spec.l) throw DimensionError("splice_cluster: cluster size mismatch");
  std::vector<double> a;
  std::vector<double> x;
  for (std::size_t j = 0; j < f.size(); ++j) {
    if (j >= spec.kappa && j < spec.kappa + spec.l) continue;
    a.push_back(f.amplitude(j));
    x.push_back(f.node(j));
  }
  a.insert(a.end(), cluster.amplitudes().begin(), cluster.amplitudes().end());
  x.insert(x.end(), cluster.nodes().begin(), cluster.nodes().end());
  return SpikeSignal(std::move(a), std::move(x));
}

}  // namespace spiketrain

#endif  // SPIKETRAIN_CLUSTER_HPP
