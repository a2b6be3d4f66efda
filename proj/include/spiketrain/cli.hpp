#ifndef SPIKETRAIN_CLI_HPP
#define SPIKETRAIN_CLI_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spiketrain/decimation.hpp"
#include "spiketrain/io.hpp"
#include "spiketrain/xlab.hpp"

namespace spiketrain::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

namespace detail {

inline void report_manifest(const xlab::RunManifest& m, bool json, std::ostream& out) {
  if (json) {
    out << io::dump(xlab::to_json(m)) << '\n';
    return;
  }
  out << xlab::to_string(m.spec.kind) << ": " << m.outputs.size() << " file(s) in "
      << m.spec.output_dir.generic_string() << " (" << m.wall_time << " s)\n";
  for (const auto& o : m.outputs) out << "  " << o.path << "  sha256:" << o.sha256 << '\n';
  for (auto it = m.summary.begin(); it != m.summary.end(); ++it) {
    out << "  " << it.key() << " = " << io::dump(it.value(), 0) << '\n';
  }
}

}  // namespace detail

/// Entry point of the `spiketrain` tool. Returns 0 on success, 2 on usage
/// errors, 1 on runtime errors.
inline int cli_main(const std::vector<std::string>& args, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  CLI::App app{"Spike-train super-resolution experiments"};
  app.name(args.empty() ? "spiketrain" : args.front());
  // -h is the cluster length, so help is long-form only.
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);
  app.fallthrough();

  std::string out_dir;
  std::uint64_t seed = 12345;
  bool json = false;
  std::size_t jobs = 1;
  app.add_option("--out", out_dir, "Output directory (default runs/<command>)");
  app.add_option("--seed", seed, "Random seed");
  app.add_flag("--json", json, "Machine-readable output on stdout");
  app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  double h = 0.1;
  double eta = 0.05;

  auto* tables = app.add_subcommand("tables", "Moment tables of the three closed-form pairs");
  tables->add_option("--h", h, "Cluster length")->required();
  tables->add_option("--eta", eta, "Offset eta")->required();

  double s_max = 1.0;
  std::size_t samples = 256;
  auto* figure1 = app.add_subcommand("figure1", "Fourier differences of the closed-form pairs");
  figure1->add_option("--h", h, "Cluster length")->capture_default_str();
  figure1->add_option("--eta", eta, "Offset eta")->capture_default_str();
  figure1->add_option("--s-max", s_max, "Largest frequency")->capture_default_str();
  figure1->add_option("--samples", samples, "Grid points (>= 16)")->capture_default_str();

  std::size_t l = 2;
  std::size_t trials = 50;
  auto* gap = app.add_subcommand("gap-bound", "Check the Fourier gap bound on random pairs");
  gap->add_option("--l", l, "Cluster size")->required();
  gap->add_option("--h", h, "Cluster length")->capture_default_str();
  gap->add_option("--trials", trials, "Random pairs")->capture_default_str();

  double bandwidth = 10.0;
  std::vector<double> epsilons{1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9};
  std::size_t sweep_trials = 5;
  auto* scaling = app.add_subcommand("scaling", "Worst-case node error against noise level");
  scaling->add_option("--l", l, "Cluster size (1..3)")->required();
  scaling->add_option("--N", bandwidth, "Bandwidth")->capture_default_str();
  scaling->add_option("--epsilons", epsilons, "Descending noise ladder")->expected(2, -1);
  scaling->add_option("--trials", sweep_trials, "Trials per noise level")->capture_default_str();

  std::string signal_path;
  std::size_t kappa = 0;
  std::optional<std::size_t> cluster_l;
  std::optional<double> target_eta;
  std::optional<double> adv_s_max;
  std::size_t adv_samples = 256;
  auto* adversary = app.add_subcommand("adversary", "Build an adversarial pair and its Fourier gap");
  adversary->add_option("--signal", signal_path, "Base signal JSON (default F^0_5(h, eta))")
      ->check(CLI::ExistingFile);
  adversary->add_option("--h", h, "Table parameter h")->capture_default_str();
  adversary->add_option("--eta", eta, "Table parameter eta")->capture_default_str();
  adversary->add_option("--kappa", kappa, "Index of the first cluster spike");
  adversary->add_option("--l", cluster_l, "Cluster size (default: through the last spike)");
  adversary->add_option("--target-eta", target_eta, "Fixed continuation offset (default: maximal)");
  adversary->add_option("--s-max", adv_s_max, "Largest frequency of the gap profile");
  adversary->add_option("--samples", adv_samples, "Gap profile points")->capture_default_str();

  double epsilon = 0.0;
  std::string config_path;
  std::size_t order = 0;
  double node_bound = 0.0;
  std::size_t levels = 3;
  auto* decimate = app.add_subcommand("decimate", "Reconstruct a signal from noisy Fourier data");
  decimate->add_option("--signal", signal_path, "Ground-truth signal JSON")
      ->required()
      ->check(CLI::ExistingFile);
  decimate->add_option("--epsilon", epsilon, "Noise level")->capture_default_str();
  decimate->add_option("--N", bandwidth, "Bandwidth")->required();
  decimate->add_option("--config", config_path, "Decimation config JSON")->check(CLI::ExistingFile);
  decimate->add_option("--order", order, "Model order (default: size of the signal)");
  decimate->add_option("--node-bound", node_bound, "Bound on |x_j| (default: from the signal)");
  decimate->add_option("--levels", levels, "Stride levels")->capture_default_str();

  std::string spec_path;
  auto* run = app.add_subcommand("run", "Run an experiment spec JSON");
  run->add_option("--config", spec_path, "Experiment spec")->required()->check(CLI::ExistingFile);

  std::vector<std::string> rest(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  auto dir_for = [&](const std::string& name) { return out_dir.empty() ? "runs/" + name : out_dir; };

  try {
    if (*tables) {
      detail::report_manifest(xlab::run_tables(h, eta, dir_for("tables")), json, out);
    } else if (*figure1) {
      detail::report_manifest(xlab::run_figure1(h, eta, s_max, samples, dir_for("figure1")), json,
                              out);
    } else if (*gap) {
      detail::report_manifest(xlab::run_gap_bound(l, h, trials, seed, dir_for("gap-bound"), jobs),
                              json, out);
    } else if (*scaling) {
      detail::report_manifest(
          xlab::run_scaling(l, bandwidth, epsilons, sweep_trials, seed, dir_for("scaling"), jobs),
          json, out);
    } else if (*adversary) {
      xlab::ExperimentSpec spec{xlab::ExperimentKind::adversary_demo, xlab::Json{{"h", h}, {"eta", eta}},
                                dir_for("adversary")};
      if (!signal_path.empty()) spec.parameters["signal"] = io::read_json_file(signal_path);
      if (kappa > 0) spec.parameters["kappa"] = kappa;
      if (cluster_l) spec.parameters["l"] = *cluster_l;
      if (target_eta) spec.parameters["target_eta"] = *target_eta;
      if (adv_s_max) spec.parameters["s_max"] = *adv_s_max;
      spec.parameters["samples"] = adv_samples;
      detail::report_manifest(xlab::run_adversary_demo(spec), json, out);
    } else if (*decimate) {
      const SpikeSignal truth = io::signal_from_json(io::read_json_file(signal_path));
      DecimationConfig config;
      if (!config_path.empty()) {
        config = io::decimation_config_from_json(io::read_json_file(config_path));
      } else {
        config.model_order = order > 0 ? order : truth.size();
        double reach = 0.0;
        for (double x : truth.nodes()) reach = std::max(reach, std::abs(x));
        config.node_bound = node_bound > 0.0 ? node_bound : std::max(1.0, 1.01 * reach);
        config.levels = levels;
        config.seed = seed;
      }
      const FourierOracle oracle = make_random_oracle(truth, epsilon, bandwidth, config.seed);
      std::optional<SpikeSignal> scoring;
      if (truth.size() == config.model_order) scoring = truth;
      const ReconstructionReport report = decimated_prony(oracle, config, scoring);
      const std::string text = io::dump(io::to_json(report));
      if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::ofstream file(std::filesystem::path(out_dir) / "report.json", std::ios::binary);
        file << text << '\n';
        if (!file) throw Error("cannot write report.json in '" + out_dir + "'");
      }
      if (json) {
        out << text << '\n';
      } else {
        out << "decimate: node_error = " << io::format_double(report.node_error)
            << ", residual = " << io::format_double(report.residual)
            << ", stride = " << io::format_double(report.stride_used) << '\n';
      }
    } else if (*run) {
      xlab::ExperimentSpec spec = xlab::experiment_spec_from_json(io::read_json_file(spec_path));
      if (!out_dir.empty()) spec.output_dir = out_dir;
      if (spec.output_dir.empty()) spec.output_dir = dir_for(xlab::to_string(spec.kind));
      detail::report_manifest(xlab::run_experiment(spec, jobs), json, out);
    }
  } catch (const InvalidArgument& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DimensionError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

inline int cli_main(int argc, char** argv) {
  return cli_main(std::vector<std::string>(argv, argv + argc));
}

}  // namespace spiketrain::cli

#endif  // SPIKETRAIN_CLI_HPP
