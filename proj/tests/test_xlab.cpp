#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "spiketrain/cli.hpp"
#include "spiketrain/io.hpp"
#include "spiketrain/xlab.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace spiketrain;
namespace fs = std::filesystem;
using io::Json;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("spiketrain_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::istringstream in(io::read_file(p.string()));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(cell);
    rows.push_back(std::move(row));
  }
  return rows;
}

double num(const std::string& s) { return std::stod(s); }

int run_cli(std::vector<std::string> args, std::string* stdout_text = nullptr) {
  args.insert(args.begin(), "spiketrain");
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::cli_main(args, out, err);
  if (stdout_text) *stdout_text = out.str();
  return code;
}

void expect_complete_manifest(const fs::path& dir) {
  const Json m = io::read_json_file((dir / "manifest.json").string());
  std::set<std::string> listed;
  for (const auto& o : m.at("outputs")) {
    const auto path = o.at("path").get<std::string>();
    listed.insert(path);
    EXPECT_EQ(xlab::sha256_hex(io::read_file((dir / path).string())), o.at("sha256").get<std::string>())
        << path;
  }
  std::set<std::string> on_disk;
  for (const auto& e : fs::directory_iterator(dir)) on_disk.insert(e.path().filename().string());
  listed.insert("manifest.json");
  EXPECT_EQ(listed, on_disk);
}

}  // namespace

TEST(FormatDouble, SeventeenSignificantDigits) {
  EXPECT_EQ(io::format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(io::format_double(1.0), "1");
  EXPECT_EQ(io::format_double(std::nan("")), "nan");
  EXPECT_EQ(io::format_double(-INFINITY), "-inf");
}

TEST(FormatDoubleProperty, RoundTripsExactly) {
  testgen::Gen gen(81);
  for (int trial = 0; trial < 2000; ++trial) {
    const double v = gen.sign() * std::pow(10.0, gen.uniform(-300.0, 300.0)) * gen.uniform(1.0, 10.0);
    const std::string s = io::format_double(v);
    double back = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    EXPECT_EQ(back, v) << s;
  }
}

TEST(Dump, FloatsAtFullPrecision) {
  const Json j{{"x", 0.1}, {"a", Json::array({1, 2})}, {"bad", std::nan("")}};
  const std::string text = io::dump(j);
  EXPECT_NE(text.find("0.10000000000000001"), std::string::npos);
  EXPECT_NE(text.find("[1, 2]"), std::string::npos);
  EXPECT_NE(text.find("null"), std::string::npos);
  EXPECT_EQ(Json::parse(text).at("x").get<double>(), 0.1);
}

TEST(JsonIo, SignalAndPairRoundTrip) {
  const auto pair = table_signals(TableFamily::F3, 0.1, 0.05);
  const AdversaryPair back = io::pair_from_json(Json::parse(io::dump(io::to_json(pair))));
  EXPECT_EQ(back.f0, pair.f0);
  EXPECT_EQ(back.f1, pair.f1);
  EXPECT_EQ(back.cluster.l, pair.cluster.l);
  EXPECT_EQ(back.cluster.h, pair.cluster.h);
  EXPECT_EQ(back.eta, pair.eta);
  EXPECT_THROW((void)io::signal_from_json(Json{{"nodes", Json::array({0.0})}}), InvalidArgument);
  EXPECT_THROW((void)io::signal_from_json(Json::parse(R"({"amplitudes":[1],"nodes":[0,1]})")),
               Error);
}

TEST(JsonIo, DecimationConfigSchema) {
  const auto c = io::decimation_config_from_json(Json::parse(R"({"model_order": 2, "node_bound": 0.5})"));
  EXPECT_EQ(c.model_order, 2u);
  EXPECT_EQ(c.levels, 3u);
  EXPECT_THROW((void)io::decimation_config_from_json(Json::parse(R"({"model_order": 2})")), InvalidArgument);
  EXPECT_THROW((void)io::decimation_config_from_json(Json::parse(R"({"model_order": 0, "node_bound": 1})")),
               InvalidArgument);
  DecimationConfig d;
  d.model_order = 3;
  d.node_bound = 0.25;
  d.levels = 5;
  d.seed = 99;
  const auto e = io::decimation_config_from_json(io::to_json(d));
  EXPECT_EQ(e.levels, 5u);
  EXPECT_EQ(e.seed, 99u);
  EXPECT_EQ(e.node_bound, 0.25);
}

TEST(CsvTable, LayoutAndWidthCheck) {
  io::CsvTable t({"a", "b"});
  t.add_row({"1", "2"});
  EXPECT_EQ(t.str(), "a,b\n1,2\n");
  EXPECT_EQ(t.rows(), 1u);
  EXPECT_THROW(t.add_row({"1"}), DimensionError);
}

TEST(CsvTable, SweepStatusIsSanitized) {
  SweepResult r;
  SweepCell c;
  c.l = 2;
  c.status = "bad, very\nbad";
  r.cells.push_back(c);
  const std::string text = io::sweep_csv(r).str();
  EXPECT_NE(text.find("bad; very;bad"), std::string::npos);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
}

TEST(Sha256, KnownVector) {
  EXPECT_EQ(xlab::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(ExperimentSpec, ParsingAndValidation) {
  EXPECT_THROW((void)xlab::experiment_spec_from_json(Json::parse(R"({"kind":"tables","parameters":{"h":0.1}})")),
               InvalidArgument);
  EXPECT_THROW((void)xlab::experiment_spec_from_json(Json::parse(R"({"kind":"nope"})")), InvalidArgument);
  EXPECT_THROW((void)xlab::experiment_spec_from_json(Json::parse(R"({"parameters":{}})")), InvalidArgument);
  const auto spec = xlab::experiment_spec_from_json(
      Json::parse(R"({"kind":"figure1","parameters":{"h":0.1,"eta":0.05,"s_max":1,"samples":64}})"));
  EXPECT_EQ(spec.kind, xlab::ExperimentKind::figure1);
  EXPECT_EQ(spec.get<std::size_t>("samples"), 64u);
  EXPECT_EQ(spec.get_or<double>("missing", 2.5), 2.5);
  EXPECT_THROW((void)spec.get<std::string>("h"), InvalidArgument);
}

TEST(RunTables, MomentTablesAtReferenceParameters) {
  const auto dir = fresh_dir("tables");
  const auto m = xlab::run_tables(0.1, 0.05, dir);
  EXPECT_EQ(m.outputs.size(), 2u);
  const auto t1 = read_csv(dir / "table1.csv");
  ASSERT_EQ(t1.size(), 7u);
  EXPECT_EQ(t1[0], (std::vector<std::string>{"signal", "a1", "a2", "a3", "x1", "x2", "x3"}));
  EXPECT_EQ(t1[5][0], "F0_5");
  EXPECT_EQ(num(t1[5][1]), -2.5);

  const auto t2 = read_csv(dir / "table2.csv");
  ASSERT_EQ(t2.size(), 4u);
  const auto& f1 = t2[1];
  const auto& f5 = t2[3];
  EXPECT_EQ(f1[0], "F1");
  EXPECT_NEAR(std::abs(num(f1[2])), 0.1, 1e-16);
  for (int k = 1; k <= 5; ++k) EXPECT_LE(std::abs(num(f5[k])), 1e-18) << "dm" << k - 1;
  for (const auto& row : t2) {
    if (row[0] == "family") continue;
    EXPECT_LE(num(row.back()), 1e-40);
  }
  expect_complete_manifest(dir);
}

TEST(RunTables, CollapseAtTinyEta) {
  const auto dir = fresh_dir("tables_tiny");
  (void)xlab::run_tables(0.1, 1e-14, dir);
  const auto t2 = read_csv(dir / "table2.csv");
  for (std::size_t r = 1; r < t2.size(); ++r) {
    for (int k = 1; k <= 5; ++k) EXPECT_LE(std::abs(num(t2[r][k])), 1e-12);
  }
  EXPECT_THROW((void)xlab::run_tables(0.1, 0.0, fresh_dir("tables_bad")), InvalidArgument);
}

TEST(RunFigure1, OrdersAndValues) {
  const auto dir = fresh_dir("figure1");
  const auto m = xlab::run_figure1(0.1, 0.05, 1.0, 101, dir);
  EXPECT_NEAR(m.summary.at("F1").at("fitted_order").get<double>(), 1.0, 0.1);
  EXPECT_NEAR(m.summary.at("F3").at("fitted_order").get<double>(), 3.0, 0.1);
  EXPECT_NEAR(m.summary.at("F5").at("fitted_order").get<double>(), 5.0, 0.1);
  const auto csv = read_csv(dir / "figure1.csv");
  ASSERT_EQ(csv.size(), 102u);
  EXPECT_EQ(csv[0], (std::vector<std::string>{"s", "df1_over_h", "df3_over_h", "df5_over_h"}));
  for (int c = 1; c <= 3; ++c) EXPECT_LE(num(csv[1][c]), 1e-14);
  const auto [f0, f1] = table_signal_pair<double>(TableFamily::F5, 0.1, 0.05);
  const double ref = std::abs(oracle::fourier(f0, 1.0) - oracle::fourier(f1, 1.0)) / 0.1;
  EXPECT_EQ(num(csv.back()[0]), 1.0);
  EXPECT_NEAR(num(csv.back()[3]), ref, 1e-12);
  expect_complete_manifest(dir);
  EXPECT_THROW((void)xlab::run_figure1(0.1, 0.05, 1.0, 8, fresh_dir("figure1_bad")), InvalidArgument);
}

TEST(RunGapBound, NoViolationsOnSmallRun) {
  const auto dir = fresh_dir("gap");
  const auto m = xlab::run_gap_bound(2, 0.1, 4, 7, dir);
  EXPECT_EQ(m.summary.at("violations").get<std::size_t>(), 0u);
  EXPECT_EQ(m.summary.at("failed_trials").get<std::size_t>(), 0u);
  EXPECT_EQ(read_csv(dir / "gap_bound.csv").size(), 5u);
  expect_complete_manifest(dir);
}

TEST(RunScaling, SlopesAndByteIdenticalReruns) {
  const auto dir_a = fs::temp_directory_path() / "spiketrain_test_scaling_a";
  for (std::size_t l : {1u, 2u}) {
    const std::vector<double> eps{1e-3, 1e-5, 1e-7, 1e-9};
    const auto a = xlab::run_scaling(l, 10.0, eps, 2, 11, fresh_dir("scaling_a"));
    const auto b = xlab::run_scaling(l, 10.0, eps, 2, 11, fresh_dir("scaling_b"));
    EXPECT_NEAR(a.summary.at("slope").get<double>(), 1.0 / (2.0 * l - 1.0), 0.05);
    EXPECT_EQ(a.output("scaling.csv").sha256, b.output("scaling.csv").sha256);
    EXPECT_EQ(a.output("scaling_fit.json").sha256, b.output("scaling_fit.json").sha256);
  }
  const auto rows = read_csv(dir_a / "scaling.csv");
  ASSERT_FALSE(rows.empty());
  EXPECT_EQ(rows[0], (std::vector<std::string>{"l", "N", "epsilon", "h_epsilon", "trial", "node_error",
                                               "residual", "stride_used", "status"}));
  EXPECT_THROW((void)xlab::run_scaling(4, 10.0, {1e-3, 1e-4}, 1, 1, fresh_dir("scaling_bad")), InvalidArgument);
}

TEST(RunAdversaryDemo, FifthOrderBase) {
  xlab::ExperimentSpec spec{xlab::ExperimentKind::adversary_demo, Json{{"h", 0.1}, {"eta", 0.05}},
                            fresh_dir("adversary")};
  const auto m = xlab::run_adversary_demo(spec);
  EXPECT_EQ(m.summary.at("matched_order").get<std::size_t>(), 5u);
  EXPECT_LE(m.summary.at("moment_residual").get<double>(), 1e-10);
  EXPECT_NEAR(m.summary.at("fitted_order").get<double>(), 5.0, 0.2);
  const auto pair = io::pair_from_json(io::read_json_file((spec.output_dir / "pair.json").string()));
  EXPECT_EQ(pair.node_displacement, m.summary.at("node_displacement").get<double>());
  expect_complete_manifest(spec.output_dir);
}

TEST(RunExperiment, SpecDispatch) {
  const auto spec = xlab::experiment_spec_from_json(
      Json{{"kind", "tables"}, {"parameters", {{"h", 0.1}, {"eta", 0.05}}},
           {"output_dir", fresh_dir("spec_tables").string()}});
  const auto m = xlab::run_experiment(spec);
  const auto direct = xlab::run_tables(0.1, 0.05, fresh_dir("direct_tables"));
  EXPECT_EQ(m.output("table2.csv").sha256, direct.output("table2.csv").sha256);
  EXPECT_THROW((void)m.output("nothing.csv"), InvalidArgument);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run_cli({"--help"}), 0);
  EXPECT_EQ(run_cli({"bogus"}), 2);
  EXPECT_EQ(run_cli({}), 2);
  EXPECT_EQ(run_cli({"tables", "--h", "0.1"}), 2);
  EXPECT_EQ(run_cli({"--out", fresh_dir("cli_fig_bad").string(), "figure1", "--samples", "0"}), 2);
  EXPECT_EQ(run_cli({"--out", fresh_dir("cli_tables_bad").string(), "tables", "--h", "0.1", "--eta", "0.2"}), 2);

  const auto dir = fresh_dir("cli_decimate");
  fs::create_directories(dir);
  {
    std::ofstream(dir / "one.json") << R"({"amplitudes": [1.0], "nodes": [0.2]})";
  }
  EXPECT_EQ(run_cli({"decimate", "--signal", (dir / "one.json").string(), "--N", "10", "--order", "2"}), 1);
  EXPECT_EQ(run_cli({"decimate", "--signal", (dir / "one.json").string(), "--N", "10"}), 0);
}

TEST(Cli, TablesHappyPath) {
  const auto dir = fresh_dir("cli_tables");
  std::string text;
  EXPECT_EQ(run_cli({"--out", dir.string(), "tables", "--h", "0.1", "--eta", "0.05"}, &text), 0);
  EXPECT_NE(text.find("table2.csv"), std::string::npos);
  expect_complete_manifest(dir);
}

TEST(Cli, ScalingMatchesLibrary) {
  std::string text;
  ASSERT_EQ(run_cli({"--out", fresh_dir("cli_scaling").string(), "--json", "--seed", "5", "scaling", "--l", "2",
                     "--trials", "2", "--epsilons", "1e-3", "1e-5", "1e-7"},
                    &text),
            0);
  const Json m = Json::parse(text);
  const auto fit = xlab::scaling_fit(2, error_scaling_sweep(2, 10.0, {1e-3, 1e-5, 1e-7}, 2, 5));
  EXPECT_EQ(m.at("summary").at("slope").get<double>(), fit.fit.slope);
}

TEST(Cli, RunConfig) {
  const auto dir = fresh_dir("cli_run");
  fs::create_directories(dir);
  {
    std::ofstream(dir / "spec.json")
        << R"({"kind": "figure1", "parameters": {"h": 0.1, "eta": 0.05, "s_max": 1.0, "samples": 32}})";
  }
  const auto out = dir / "out";
  EXPECT_EQ(run_cli({"--out", out.string(), "run", "--config", (dir / "spec.json").string()}), 0);
  expect_complete_manifest(out);
  EXPECT_EQ(run_cli({"run", "--config", (dir / "missing.json").string()}), 2);
}

#ifdef SPIKETRAIN_CLI_PATH
TEST(Cli, InstalledBinaryExitCodes) {
  const std::string bin = SPIKETRAIN_CLI_PATH;
  const auto status = [](const std::string& cmd) {
    const int raw = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(raw);
  };
  EXPECT_EQ(status(bin + " --help"), 0);
  EXPECT_EQ(status(bin + " frobnicate"), 2);
  EXPECT_EQ(status(bin + " --out " + fresh_dir("bin_tables").string() + " tables --h 0.1 --eta 0.05"), 0);
}
#endif
