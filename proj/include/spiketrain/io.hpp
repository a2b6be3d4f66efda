#ifndef SPIKETRAIN_IO_HPP
#define SPIKETRAIN_IO_HPP

#include <charconv>
#include <cmath>
#include <complex>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "spiketrain/adversary.hpp"
#include "spiketrain/decimation.hpp"
#include "spiketrain/prony.hpp"
#include "spiketrain/signal.hpp"
#include "spiketrain/sweep.hpp"

namespace spiketrain::io {

using Json = nlohmann::ordered_json;

/// Shortest-form-free decimal with 17 significant digits ("nan", "inf" for
/// non-finite values).
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace detail {

inline void dump_to(std::ostringstream& out, const Json& j, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string close_pad(static_cast<std::size_t>(indent * depth), ' ');
  const char* nl = indent > 0 ? "\n" : "";
  switch (j.type()) {
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      out << (std::isfinite(v) ? format_double(v) : "null");
      break;
    }
    case Json::value_t::object: {
      if (j.empty()) {
        out << "{}";
        break;
      }
      out << '{' << nl;
      std::size_t i = 0;
      for (auto it = j.begin(); it != j.end(); ++it, ++i) {
        out << pad << Json(it.key()).dump() << (indent > 0 ? ": " : ":");
        dump_to(out, it.value(), indent, depth + 1);
        out << (i + 1 < j.size() ? "," : "") << nl;
      }
      out << close_pad << '}';
      break;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out << "[]";
        break;
      }
      out << '[';
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i > 0) out << (indent > 0 ? ", " : ",");
        dump_to(out, j[i], indent, depth + 1);
      }
      out << ']';
      break;
    }
    default:
      out << j.dump();
  }
}

}  // namespace detail

/// JSON text with every float written at 17 significant digits.
inline std::string dump(const Json& j, int indent = 2) {
  std::ostringstream out;
  detail::dump_to(out, j, indent, 0);
  return out.str();
}

inline Json to_json(const SpikeSignal& f) {
  return Json{{"amplitudes", f.amplitudes()}, {"nodes", f.nodes()}};
}

inline SpikeSignal signal_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("amplitudes") || !j.contains("nodes")) {
    throw InvalidArgument("signal JSON needs \"amplitudes\" and \"nodes\" arrays");
  }
  try {
    return SpikeSignal(j.at("amplitudes").get<std::vector<double>>(),
                       j.at("nodes").get<std::vector<double>>());
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("signal JSON: ") + e.what());
  }
}

inline Json to_json(const ClusterSpec& c) {
  return Json{{"l", c.l},     {"h", c.h},         {"rho", c.rho},
              {"interval_start", c.interval_start}, {"kappa", c.kappa}};
}

inline ClusterSpec cluster_from_json(const Json& j) {
  ClusterSpec c;
  c.l = j.at("l").get<std::size_t>();
  c.h = j.at("h").get<double>();
  c.rho = j.at("rho").get<double>();
  c.interval_start = j.at("interval_start").get<double>();
  c.kappa = j.at("kappa").get<std::size_t>();
  return c;
}

inline Json to_json(const AdversaryPair& p) {
  return Json{{"f0", to_json(p.f0)},
              {"f1", to_json(p.f1)},
              {"cluster", to_json(p.cluster)},
              {"eta", p.eta},
              {"node_displacement", p.node_displacement},
              {"moment_residual", p.moment_residual}};
}

inline AdversaryPair pair_from_json(const Json& j) {
  AdversaryPair p{signal_from_json(j.at("f0")), signal_from_json(j.at("f1")),
                  cluster_from_json(j.at("cluster"))};
  p.eta = j.at("eta").get<double>();
  p.node_displacement = j.at("node_displacement").get<double>();
  p.moment_residual = j.at("moment_residual").get<double>();
  return p;
}

inline Json to_json(const ConditioningReport& r) {
  return Json{{"inverse_norm", r.inverse_norm},
              {"lower_gain", r.lower_gain},
              {"node_projection_gain", r.node_projection_gain}};
}

inline Json to_json(const DecimationConfig& c) {
  return Json{{"model_order", c.model_order}, {"node_bound", c.node_bound},
              {"levels", c.levels},           {"refine_tol", c.refine_tol},
              {"refine_max_iter", c.refine_max_iter}, {"seed", c.seed}};
}

/// Keys other than model_order and node_bound are optional.
inline DecimationConfig decimation_config_from_json(const Json& j) {
  DecimationConfig c;
  try {
    c.model_order = j.at("model_order").get<std::size_t>();
    c.node_bound = j.at("node_bound").get<double>();
    if (j.contains("levels")) c.levels = j.at("levels").get<std::size_t>();
    if (j.contains("refine_tol")) c.refine_tol = j.at("refine_tol").get<double>();
    if (j.contains("refine_max_iter")) c.refine_max_iter = j.at("refine_max_iter").get<int>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("decimation config JSON: ") + e.what());
  }
  c.validate();
  return c;
}

inline Json to_json(const ReconstructionReport& r) {
  return Json{{"recovered", to_json(r.recovered)},
              {"node_error", r.node_error},
              {"amplitude_error", r.amplitude_error},
              {"residual", r.residual},
              {"stride_used", r.stride_used},
              {"refinement_iterations", r.refinement_iterations},
              {"sample_count", r.sample_count}};
}

/// Comma-separated rows; the caller supplies already formatted fields.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(std::vector<std::string> row) {
    if (row.size() != header_.size()) throw DimensionError("csv: row width does not match header");
    rows_.push_back(std::move(row));
  }

  [[nodiscard]] std::string str() const {
    std::string out;
    auto line = [&out](const std::vector<std::string>& fields) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) out += ',';
        out += fields[i];
      }
      out += '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
  }

  [[nodiscard]] std::size_t rows() const noexcept { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline CsvTable gap_profile_csv(const FourierGapProfile& profile) {
  CsvTable t({"s", "re_gap", "im_gap", "abs_gap"});
  for (const auto& sample : profile.samples) {
    t.add_row({format_double(sample.s), format_double(sample.gap.real()),
               format_double(sample.gap.imag()), format_double(std::abs(sample.gap))});
  }
  return t;
}

inline CsvTable sweep_csv(const SweepResult& result) {
  CsvTable t({"l", "N", "epsilon", "h_epsilon", "trial", "node_error", "residual", "stride_used",
              "status"});
  for (const auto& c : result.cells) {
    std::string status = c.ok() ? "ok" : c.status;
    for (char& ch : status) {
      if (ch == ',' || ch == '\n') ch = ';';
    }
    t.add_row({std::to_string(c.l), format_double(c.bandwidth), format_double(c.epsilon),
               format_double(c.h_epsilon), std::to_string(c.trial), format_double(c.node_error),
               format_double(c.residual), format_double(c.stride_used), status});
  }
  return t;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Json read_json_file(const std::string& path) {
  try {
    return Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw InvalidArgument("'" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace spiketrain::io

#endif  // SPIKETRAIN_IO_HPP
