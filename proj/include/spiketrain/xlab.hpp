#ifndef SPIKETRAIN_XLAB_HPP
#define SPIKETRAIN_XLAB_HPP

#include <array>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <openssl/evp.h>

#include "spiketrain/adversary.hpp"
#include "spiketrain/io.hpp"
#include "spiketrain/moments.hpp"
#include "spiketrain/sweep.hpp"

namespace spiketrain::xlab {

using io::Json;

inline constexpr const char* kToolkitVersion = "0.1.0";

/// Lowercase hex SHA-256 of `data`.
inline std::string sha256_hex(const std::string& data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256: digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 0xF];
  }
  return out;
}

enum class ExperimentKind { tables, figure1, gap_bound, scaling, adversary_demo };

inline std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::tables:
      return "tables";
    case ExperimentKind::figure1:
      return "figure1";
    case ExperimentKind::gap_bound:
      return "gap_bound";
    case ExperimentKind::scaling:
      return "scaling";
    case ExperimentKind::adversary_demo:
      return "adversary_demo";
  }
  return "?";
}

inline ExperimentKind experiment_kind_from_string(const std::string& s) {
  for (auto k : {ExperimentKind::tables, ExperimentKind::figure1, ExperimentKind::gap_bound,
                 ExperimentKind::scaling, ExperimentKind::adversary_demo}) {
    if (to_string(k) == s) return k;
  }
  throw InvalidArgument("unknown experiment kind '" + s + "'");
}

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::tables;
  /// Flat key-value map; see required_keys().
  Json parameters = Json::object();
  std::filesystem::path output_dir;

  [[nodiscard]] std::vector<std::string> required_keys() const {
    switch (kind) {
      case ExperimentKind::tables:
        return {"h", "eta"};
      case ExperimentKind::figure1:
        return {"h", "eta", "s_max", "samples"};
      case ExperimentKind::gap_bound:
        return {"l", "h", "trials", "seed"};
      case ExperimentKind::scaling:
        return {"l", "N", "epsilons", "trials", "seed"};
      case ExperimentKind::adversary_demo:
        return {"h", "eta"};
    }
    return {};
  }

  void validate() const {
    if (!parameters.is_object()) throw InvalidArgument("experiment parameters must be an object");
    for (const auto& key : required_keys()) {
      if (!parameters.contains(key)) {
        throw InvalidArgument(to_string(kind) + ": missing required parameter '" + key + "'");
      }
    }
  }

  template <typename T>
  [[nodiscard]] T get(const std::string& key) const {
    try {
      return parameters.at(key).get<T>();
    } catch (const Json::exception& e) {
      throw InvalidArgument(to_string(kind) + ": parameter '" + key + "': " + e.what());
    }
  }

  template <typename T>
  [[nodiscard]] T get_or(const std::string& key, T fallback) const {
    return parameters.contains(key) ? get<T>(key) : fallback;
  }
};

inline Json to_json(const ExperimentSpec& spec) {
  return Json{{"kind", to_string(spec.kind)},
              {"parameters", spec.parameters},
              {"output_dir", spec.output_dir.generic_string()}};
}

inline ExperimentSpec experiment_spec_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("kind")) throw InvalidArgument("experiment spec needs \"kind\"");
  ExperimentSpec spec;
  try {
    spec.kind = experiment_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("parameters")) spec.parameters = j.at("parameters");
    if (j.contains("output_dir")) spec.output_dir = j.at("output_dir").get<std::string>();
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("experiment spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

struct OutputFile {
  /// Relative to the spec's output directory.
  std::string path;
  std::string sha256;
};

struct RunManifest {
  ExperimentSpec spec;
  std::string toolkit_version = kToolkitVersion;
  double wall_time = 0.0;
  std::vector<OutputFile> outputs;
  /// Headline numbers of the run (fitted orders, slopes, counts).
  Json summary = Json::object();

  [[nodiscard]] const OutputFile& output(const std::string& path) const {
    for (const auto& o : outputs) {
      if (o.path == path) return o;
    }
    throw InvalidArgument("manifest has no output '" + path + "'");
  }
};

inline Json to_json(const RunManifest& m) {
  Json outputs = Json::array();
  for (const auto& o : m.outputs) outputs.push_back(Json{{"path", o.path}, {"sha256", o.sha256}});
  return Json{{"spec", to_json(m.spec)},
              {"toolkit_version", m.toolkit_version},
              {"wall_time", m.wall_time},
              {"outputs", outputs},
              {"summary", m.summary}};
}

/// Collects the files of one run. manifest.json itself is written last and is
/// the only file not listed in it.
class RunRecorder {
 public:
  explicit RunRecorder(ExperimentSpec spec)
      : start_(std::chrono::steady_clock::now()) {
    manifest_.spec = std::move(spec);
    std::filesystem::create_directories(manifest_.spec.output_dir);
  }

  void write(const std::string& name, const std::string& content) {
    const auto path = manifest_.spec.output_dir / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << content;
    out.close();
    if (!out) throw Error("write to '" + path.string() + "' failed");
    manifest_.outputs.push_back({name, sha256_hex(content)});
  }

  Json& summary() noexcept { return manifest_.summary; }

  RunManifest finish() {
    manifest_.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    const auto path = manifest_.spec.output_dir / "manifest.json";
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << io::dump(to_json(manifest_)) << '\n';
    if (!out) throw Error("write to '" + path.string() + "' failed");
    return manifest_;
  }

 private:
  RunManifest manifest_;
  std::chrono::steady_clock::time_point start_;
};

namespace detail {

inline std::string fmt_ext(const Extended& v) {
  std::ostringstream ss;
  ss << std::scientific << std::setprecision(30) << v;
  return ss.str();
}

inline void check_h_eta(double h, double eta, const char* who) {
  if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument(std::string(who) + ": h must be positive");
  // eta = h/2 is admitted; h = 0.1, eta = 0.05 sits exactly there.
  if (!(eta > 0.0) || !(eta <= h / 2.0)) {
    throw InvalidArgument(std::string(who) + ": need 0 < eta <= h/2");
  }
}

constexpr std::array<TableFamily, 3> kFamilies{TableFamily::F1, TableFamily::F3, TableFamily::F5};

}  // namespace detail

/// Moment differences m_k(F^0_q) - m_k(F^1_q), k = 0 .. count-1, from
/// signals built in 50-digit arithmetic.
inline std::vector<Extended> table_moment_deltas(TableFamily family, double h, double eta,
                                                 std::size_t count = 5) {
  const auto [f0, f1] = table_signal_pair<Extended>(family, Extended(h), Extended(eta));
  const auto m0 = moments(f0, count);
  const auto m1 = moments(f1, count);
  std::vector<Extended> out(count);
  for (std::size_t k = 0; k < count; ++k) out[k] = m0[k] - m1[k];
  return out;
}

/// table1.csv: parameters of the six signals. table2.csv: moment
/// differences per family, their closed forms, and the largest disagreement.
inline RunManifest run_tables(double h, double eta, const std::filesystem::path& out) {
  detail::check_h_eta(h, eta, "tables");
  ExperimentSpec spec{ExperimentKind::tables, Json{{"h", h}, {"eta", eta}}, out};
  RunRecorder rec(spec);

  io::CsvTable t1({"signal", "a1", "a2", "a3", "x1", "x2", "x3"});
  for (auto family : detail::kFamilies) {
    const auto [f0, f1] = table_signal_pair<double>(family, h, eta);
    const std::string q = to_string(family).substr(1);
    for (const auto& [name, f] : {std::pair{"F0_" + q, &f0}, std::pair{"F1_" + q, &f1}}) {
      std::vector<std::string> row{name};
      for (double a : f->amplitudes()) row.push_back(io::format_double(a));
      for (double x : f->nodes()) row.push_back(io::format_double(x));
      t1.add_row(std::move(row));
    }
  }
  rec.write("table1.csv", t1.str());

  io::CsvTable t2({"family", "dm0", "dm1", "dm2", "dm3", "dm4", "sym_dm0", "sym_dm1", "sym_dm2",
                   "sym_dm3", "sym_dm4", "max_abs_sym_minus_num"});
  Json orders = Json::object();
  for (auto family : detail::kFamilies) {
    const auto deltas = table_moment_deltas(family, h, eta);
    std::vector<std::string> row{to_string(family)};
    std::vector<std::string> sym;
    Extended worst = 0;
    for (std::size_t k = 0; k < deltas.size(); ++k) {
      const Extended closed =
          table_moment_difference<Extended>(family, Extended(h), Extended(eta), static_cast<unsigned>(k));
      row.push_back(detail::fmt_ext(deltas[k]));
      sym.push_back(detail::fmt_ext(closed));
      worst = std::max(worst, Extended(abs(closed - deltas[k])));
    }
    row.insert(row.end(), sym.begin(), sym.end());
    row.push_back(detail::fmt_ext(worst));
    t2.add_row(std::move(row));
  }
  rec.write("table2.csv", t2.str());
  return rec.finish();
}

/// figure1.csv: s, |DF_q(s)|/h for q = 1, 3, 5 on a uniform grid of
/// [0, s_max]; figure1_fit.json: fitted vanishing orders.
inline RunManifest run_figure1(double h, double eta, double s_max, std::size_t samples,
                               const std::filesystem::path& out) {
  detail::check_h_eta(h, eta, "figure1");
  if (samples < 16) throw InvalidArgument("figure1: samples must be at least 16");
  if (!(s_max > 0.0) || !std::isfinite(s_max)) throw InvalidArgument("figure1: s_max must be positive");
  ExperimentSpec spec{ExperimentKind::figure1,
                      Json{{"h", h}, {"eta", eta}, {"s_max", s_max}, {"samples", samples}}, out};
  RunRecorder rec(spec);

  std::vector<FourierGapProfile> profiles;
  Json fit = Json::object();
  for (auto family : detail::kFamilies) {
    profiles.push_back(fourier_gap(table_signals(family, h, eta), s_max, samples));
    fit[to_string(family)] = Json{{"fitted_order", profiles.back().fitted_order},
                                 {"fitted_constant", profiles.back().fitted_constant}};
  }
  io::CsvTable csv({"s", "df1_over_h", "df3_over_h", "df5_over_h"});
  for (std::size_t i = 0; i < samples; ++i) {
    std::vector<std::string> row{io::format_double(profiles[0].samples[i].s)};
    for (const auto& p : profiles) row.push_back(io::format_double(std::abs(p.samples[i].gap) / h));
    csv.add_row(std::move(row));
  }
  rec.write("figure1.csv", csv.str());
  const Json doc{{"fit_range", Json::array({s_max / 100.0, s_max / 10.0})}, {"families", fit}};
  rec.write("figure1_fit.json", io::dump(doc) + "\n");
  rec.summary() = fit;
  return rec.finish();
}

/// A random cluster of `l` nodes and length h at the origin in the class
/// A(1, 2) with rho = 0.8/(l-1), and its maximal adversarial pair.
inline AdversaryPair random_adversarial_pair(std::size_t l, double h, std::uint64_t seed,
                                             std::uint64_t trial) {
  const double rho = l > 1 ? 0.8 / static_cast<double>(l - 1) : 1.0;
  const auto geometry = random_cluster_geometry(l, rho, seed, trial);
  const auto [f0, spec] = place_cluster(geometry, 0.0, h);
  AdversaryOptions opts;
  opts.bounds = AmplitudeBounds(1.0, 2.0);
  return find_max_adversary(f0, spec, opts);
}

/// gap_bound.csv: one row per random pair with the worst ratio of
/// |DF| to the bound over |s| <= 1/(2 pi h).
inline RunManifest run_gap_bound(std::size_t l, double h, std::size_t trials, std::uint64_t seed,
                                 const std::filesystem::path& out, std::size_t jobs = 1) {
  if (l < 2) throw InvalidArgument("gap_bound: l must be at least 2");
  if (!(h > 0.0)) throw InvalidArgument("gap_bound: h must be positive");
  if (trials == 0) throw InvalidArgument("gap_bound: trials must be positive");
  ExperimentSpec spec{ExperimentKind::gap_bound,
                      Json{{"l", l}, {"h", h}, {"trials", trials}, {"seed", seed}}, out};
  RunRecorder rec(spec);
  constexpr double kUpper = 2.0;
  struct Row {
    AdversaryPair pair;
    GapBoundReport report;
    std::string status;
  };
  std::vector<std::optional<Row>> rows(trials);
  std::vector<std::string> failures(trials);
  parallel_for(trials, jobs, [&](std::size_t t) {
    try {
      auto pair = random_adversarial_pair(l, h, seed, t);
      auto report = check_gap_bound(pair, kUpper);
      rows[t] = Row{std::move(pair), report, ""};
    } catch (const std::exception& e) {
      failures[t] = e.what();
    }
  });
  io::CsvTable csv({"trial", "l", "h", "c2", "max_ratio", "worst_s", "violations", "points",
                    "node_displacement", "moment_residual", "status"});
  std::size_t violations = 0;
  std::size_t failed = 0;
  double worst_ratio = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    if (!rows[t]) {
      ++failed;
      std::string status = failures[t];
      for (char& ch : status) {
        if (ch == ',' || ch == '\n') ch = ';';
      }
      csv.add_row({std::to_string(t), std::to_string(l), io::format_double(h), "nan", "nan", "nan",
                   "0", "0", "nan", "nan", status});
      continue;
    }
    const auto& r = *rows[t];
    violations += r.report.violations;
    worst_ratio = std::max(worst_ratio, r.report.max_ratio);
    csv.add_row({std::to_string(t), std::to_string(l), io::format_double(h),
                 io::format_double(r.report.c2), io::format_double(r.report.max_ratio),
                 io::format_double(r.report.worst_s), std::to_string(r.report.violations),
                 std::to_string(r.report.points), io::format_double(r.pair.node_displacement),
                 io::format_double(r.pair.moment_residual), "ok"});
  }
  rec.write("gap_bound.csv", csv.str());
  rec.summary() = Json{{"violations", violations},
                       {"failed_trials", failed},
                       {"max_ratio", worst_ratio},
                       {"c2", gap_bound_constant(l, kUpper)}};
  return rec.finish();
}

struct ScalingFit {
  LineFit fit;
  double expected_slope = 0.0;
  /// 95% confidence band for the slope (Student t on points - 2 degrees of
  /// freedom; collapses to the slope for two points).
  double band_low = 0.0;
  double band_high = 0.0;
};

inline ScalingFit scaling_fit(std::size_t l, const SweepResult& result) {
  ScalingFit s;
  s.fit = fit_scaling_slope(result);
  s.expected_slope = 1.0 / (2.0 * static_cast<double>(l) - 1.0);
  double half = 0.0;
  if (s.fit.points > 2) {
    const boost::math::students_t dist(static_cast<double>(s.fit.points - 2));
    half = boost::math::quantile(boost::math::complement(dist, 0.025)) * s.fit.slope_stderr;
  }
  s.band_low = s.fit.slope - half;
  s.band_high = s.fit.slope + half;
  return s;
}

inline Json to_json(const ScalingFit& s) {
  return Json{{"slope", s.fit.slope},
              {"intercept", s.fit.intercept},
              {"slope_stderr", s.fit.slope_stderr},
              {"band_low", s.band_low},
              {"band_high", s.band_high},
              {"points", s.fit.points},
              {"expected_slope", s.expected_slope}};
}

/// scaling.csv (one row per cell) and scaling_fit.json. Failed cells stay in
/// the CSV with their error; the fit uses the rest.
inline RunManifest run_scaling(std::size_t l, double bandwidth, const std::vector<double>& epsilons,
                               std::size_t trials, std::uint64_t seed,
                               const std::filesystem::path& out, std::size_t jobs = 1) {
  if (l < 1 || l > 3) throw InvalidArgument("scaling: l must be 1, 2 or 3");
  if (epsilons.size() < 2) throw InvalidArgument("scaling: need at least two epsilons");
  ExperimentSpec spec{ExperimentKind::scaling,
                      Json{{"l", l}, {"N", bandwidth}, {"epsilons", epsilons},
                           {"trials", trials}, {"seed", seed}},
                      out};
  SweepOptions opts;
  opts.jobs = jobs;
  const SweepResult result = error_scaling_sweep(l, bandwidth, epsilons, trials, seed, opts);
  RunRecorder rec(spec);
  rec.write("scaling.csv", io::sweep_csv(result).str());
  std::size_t failed = 0;
  for (const auto& c : result.cells) failed += c.ok() ? 0 : 1;
  Json summary;
  try {
    summary = to_json(scaling_fit(l, result));
  } catch (const Error& e) {
    summary = Json{{"error", e.what()}};
  }
  summary["failed_cells"] = failed;
  summary["cells"] = result.cells.size();
  rec.write("scaling_fit.json", io::dump(summary) + "\n");
  rec.summary() = summary;
  return rec.finish();
}

/// pair.json, gap.csv (Fourier gap profile) and moments.csv for one
/// adversarial pair. The base signal is F^0_5(h, eta) unless the parameters
/// carry "signal" (with optional "kappa" and "l"); "target_eta" selects
/// construct_adversary at that offset instead of the maximal pair.
inline RunManifest run_adversary_demo(const ExperimentSpec& spec) {
  spec.validate();
  const double h = spec.get<double>("h");
  const double eta = spec.get<double>("eta");
  SpikeSignal base = spec.parameters.contains("signal")
                         ? io::signal_from_json(spec.parameters.at("signal"))
                         : table_signal_pair<double>(TableFamily::F5, h, eta).first;
  const auto kappa = spec.get_or<std::size_t>("kappa", 0);
  const auto l = spec.get_or<std::size_t>("l", base.size() - kappa);
  if (kappa + l > base.size() || l < 1) throw InvalidArgument("adversary: cluster out of range");
  const ClusterSpec cluster = span_cluster(base, kappa, l);
  AdversaryPair pair = spec.parameters.contains("target_eta")
                           ? construct_adversary(base, cluster, spec.get<double>("target_eta"))
                           : find_max_adversary(base, cluster);
  RunRecorder rec(spec);
  rec.write("pair.json", io::dump(io::to_json(pair)) + "\n");
  const double s_max = spec.get_or<double>("s_max", 1.0 / (2.0 * std::numbers::pi * cluster.h));
  const auto samples = spec.get_or<std::size_t>("samples", 256);
  const auto profile = fourier_gap(pair, s_max, samples);
  rec.write("gap.csv", io::gap_profile_csv(profile).str());
  const auto match = verify_moment_match(pair);
  io::CsvTable mcsv({"k", "difference"});
  for (std::size_t k = 0; k < match.differences.size(); ++k) {
    mcsv.add_row({std::to_string(k), io::format_double(match.differences[k])});
  }
  rec.write("moments.csv", mcsv.str());
  rec.summary() = Json{{"eta", pair.eta},
                       {"node_displacement", pair.node_displacement},
                       {"moment_residual", pair.moment_residual},
                       {"matched_order", match.matched_order},
                       {"fitted_order", profile.fitted_order}};
  return rec.finish();
}

/// Runs a spec with the same semantics as the per-kind functions.
inline RunManifest run_experiment(const ExperimentSpec& spec, std::size_t jobs = 1) {
  spec.validate();
  switch (spec.kind) {
    case ExperimentKind::tables:
      return run_tables(spec.get<double>("h"), spec.get<double>("eta"), spec.output_dir);
    case ExperimentKind::figure1:
      return run_figure1(spec.get<double>("h"), spec.get<double>("eta"), spec.get<double>("s_max"),
                         spec.get<std::size_t>("samples"), spec.output_dir);
    case ExperimentKind::gap_bound:
      return run_gap_bound(spec.get<std::size_t>("l"), spec.get<double>("h"),
                           spec.get<std::size_t>("trials"), spec.get<std::uint64_t>("seed"),
                           spec.output_dir, jobs);
    case ExperimentKind::scaling:
      return run_scaling(spec.get<std::size_t>("l"), spec.get<double>("N"),
                         spec.get<std::vector<double>>("epsilons"), spec.get<std::size_t>("trials"),
                         spec.get<std::uint64_t>("seed"), spec.output_dir, jobs);
    case ExperimentKind::adversary_demo:
      return run_adversary_demo(spec);
  }
  throw InvalidArgument("run_experiment: unknown kind");
}

}  // namespace spiketrain::xlab

#endif  // SPIKETRAIN_XLAB_HPP
