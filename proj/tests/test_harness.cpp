// SPDX-License-Identifier: Apache-2.0
//
// Copyright 2026 The rfpuf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "cli.hpp"
#include "rfpuf/harness.hpp"

namespace rfpuf {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rfpuf_test_" + name);
  fs::remove_all(p);
  return p;
}

// Small enough to run in seconds.
ExperimentConfig tiny_config() {
  ExperimentConfig c;
  c.n_seeds = 2;
  c.n_tx = 4;
  c.n_tx_list = {3, 4};
  c.hidden_list = {4, 8};
  c.n_hidden = 8;
  c.n_train_iterations = 3;
  c.iterations_list = {1, 3};
  c.n_eval_frames = 16;
  c.frame.frame_bits = 8000;
  c.fig6d_n_tx = 3;
  c.ebn0_sigma_list = {2.0};
  c.evals_per_device = 3;
  c.fig6ef_n_tx = 4;
  c.fig10_n_tx_list = {3};
  c.loopback_iterations = 2;
  c.training.max_epochs = 200;
  return c;
}

TEST(Config, DefaultsAreValid) { EXPECT_NO_THROW(ExperimentConfig{}.validate()); }

TEST(Config, ParsesKeyValueText) {
  ExperimentConfig c;
  std::istringstream is(
      "# comment line\n"
      "n_tx = 42   # trailing comment\n"
      "\n"
      "n_tx_list = 5, 6,7\n"
      "rrc_enabled = false\n"
      "rx_mode = compensated\n"
      "ebn0_sigma_db = 4.5\n"
      "optimizer = momentum\n");
  apply_config_text(c, is, "t.cfg");
  EXPECT_EQ(c.n_tx, 42u);
  EXPECT_EQ(c.n_tx_list, (std::vector<std::size_t>{5, 6, 7}));
  EXPECT_FALSE(c.rrc_enabled);
  EXPECT_EQ(c.rx_mode, RxMode::Compensated);
  EXPECT_EQ(c.spec.eb_n0_db.std_dev, 4.5);
  EXPECT_EQ(c.training.optimizer, Optimizer::MomentumDescent);
}

TEST(Config, ErrorsNameSourceLineAndKey) {
  ExperimentConfig c;
  std::istringstream is("n_tx = 3\nbogus_key = 1\n");
  try {
    apply_config_text(c, is, "x.cfg");
    FAIL() << "expected a parse error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Parse);
    EXPECT_NE(std::string(e.what()).find("x.cfg:2"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("bogus_key"), std::string::npos);
  }
  EXPECT_THROW(set_config_value(c, "n_tx", "abc"), Error);
  EXPECT_THROW(set_config_value(c, "n_tx_list", "1,,2"), Error);
}

TEST(Config, MissingFileNamesPath) {
  ExperimentConfig c;
  try {
    load_config_file(c, "/definitely/not/here.cfg");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Io);
    EXPECT_NE(std::string(e.what()).find("/definitely/not/here.cfg"), std::string::npos);
  }
}

TEST(Config, EchoRoundTrips) {
  ExperimentConfig a = tiny_config();
  a.spec.lo_offset_ppm.std_dev = 7.123456789012345;
  a.master_seed = 0xfedcba9876543210ULL;
  std::ostringstream text;
  for (const auto& [k, v] : config_echo(a)) text << k << " = " << v << '\n';
  ExperimentConfig b;
  std::istringstream is(text.str());
  apply_config_text(b, is);
  EXPECT_EQ(config_echo(a), config_echo(b));
  EXPECT_EQ(b.spec.lo_offset_ppm.std_dev, 7.123456789012345);
  EXPECT_EQ(b.master_seed, 0xfedcba9876543210ULL);
}

TEST(Config, EchoIgnoresExecutionSettings) {
  ExperimentConfig a, b;
  b.threads = 7;
  b.output_path = "elsewhere";
  EXPECT_EQ(config_echo(a), config_echo(b));
  EXPECT_EQ(config_echo(a).size() + 2, config_keys().size());
}

TEST(Config, ValidationRejectsZeroCounts) {
  ExperimentConfig c;
  c.n_seeds = 0;
  EXPECT_THROW(c.validate(), Error);
  ExperimentConfig d;
  d.n_tx_list.clear();
  EXPECT_THROW(d.validate(), Error);
}

TEST(Csv, EscapesPerRfc4180) {
  EXPECT_EQ(csv_escape("plain"), "plain");
  EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_escape("line\nbreak"), "\"line\nbreak\"");
}

TEST(Csv, FormatsDoublesShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(2.0), "2");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
  EXPECT_EQ(format_double(std::nan("")), "nan");
}

TEST(Csv, WritesCommentsHeaderRows) {
  CsvTable t({"a", "b"});
  t.add_comment("hello");
  t.add_row({"1", "x,y"});
  std::ostringstream os;
  t.write(os);
  EXPECT_EQ(os.str(), "# hello\na,b\n1,\"x,y\"\n");
  EXPECT_THROW(t.add_row({"only one"}), Error);
}

TEST(Harness, ExperimentKindNames) {
  for (ExperimentKind k : all_experiment_kinds()) EXPECT_EQ(parse_experiment_kind(to_string(k)), k);
  EXPECT_THROW(parse_experiment_kind("fig8"), Error);
}

TEST(Harness, EvalBudgetSpreadsOverFleet) {
  EXPECT_EQ(eval_frames_per_device(2000, 200), 10u);
  EXPECT_EQ(eval_frames_per_device(2000, 300), 7u);
  EXPECT_EQ(eval_frames_per_device(1, 50), 1u);
}

TEST(Harness, SweepPointStatistics) {
  SweepPoint p{"rrc_on", "ebn0_sigma_db", 2.5, {}};
  for (std::size_t e : {3u, 1u, 2u, 9u}) {
    SeedOutcome o;
    o.ok = true;
    o.detection = detection_from_predictions(std::vector<int>(100 - e, 0), std::vector<int>(100 - e, 0), e);
    p.seeds.push_back(o);
  }
  p.seeds.push_back(SeedOutcome{});  // failed seed is ignored
  EXPECT_EQ(p.ok_count(), 4u);
  EXPECT_DOUBLE_EQ(p.median_error(), 0.025);
  EXPECT_EQ(p.pooled_errors(), 15u);
  EXPECT_EQ(p.pooled_total(), 400u);
  EXPECT_EQ(p.file_stem(), "rrc_on_ebn0_sigma_db_2p5");
}

TEST(Harness, Fig6aRunsAndWritesTables) {
  ExperimentConfig c = tiny_config();
  c.output_path = scratch_dir("fig6a");
  const ExperimentResult r = run_experiment(ExperimentKind::Fig6a, c);
  ASSERT_EQ(r.points.size(), 2u);
  for (const auto& p : r.points) {
    EXPECT_EQ(p.seeds.size(), 2u);
    EXPECT_EQ(p.ok_count(), 2u) << p.seeds[0].diagnostic;
  }
  const auto paths = write_experiment(r, c);
  EXPECT_EQ(paths.size(), 3u);
  const std::string summary = slurp(c.output_path / "fig6a_summary.csv");
  EXPECT_NE(summary.find("# master_seed = 1"), std::string::npos);
  EXPECT_NE(summary.find("arm,axis,value,seeds_ok"), std::string::npos);
  fs::remove_all(c.output_path);
}

TEST(Harness, FailedPointsCarryDiagnostics) {
  ExperimentConfig c = tiny_config();
  c.spec.eb_n0_db = {-30.0, 0.0};  // hopeless link: every frame is garbage
  c.n_seeds = 1;
  c.n_tx_list = {3};
  const ExperimentResult r = run_experiment(ExperimentKind::Fig6a, c);
  ASSERT_EQ(r.points.size(), 1u);
  // Either frames are rejected outright, or the run still completes.
  const SeedOutcome& o = r.points[0].seeds[0];
  if (!o.ok) EXPECT_FALSE(o.diagnostic.empty());
}

TEST(Harness, EveryKindRunsAtTinyScale) {
  ExperimentConfig c = tiny_config();
  c.n_seeds = 1;
  c.fig7_devices = 700;  // 11,200 bits, one NIST record
  c.fig7_replicates = 1;
  for (ExperimentKind k : all_experiment_kinds()) {
    const ExperimentResult r = run_experiment(k, c);
    const auto tables = result_tables(r, c);
    EXPECT_FALSE(tables.empty()) << to_string(k);
    for (const auto& p : r.points)
      for (const auto& s : p.seeds) EXPECT_TRUE(s.ok) << to_string(k) << ' ' << p.file_stem() << ": " << s.diagnostic;
  }
}

TEST(Harness, ResultsIndependentOfThreads) {
  ExperimentConfig a = tiny_config(), b = tiny_config();
  b.threads = 3;
  for (ExperimentKind k : {ExperimentKind::Fig6c, ExperimentKind::Fig10}) {
    const auto ta = result_tables(run_experiment(k, a), a);
    const auto tb = result_tables(run_experiment(k, b), b);
    ASSERT_EQ(ta.size(), tb.size());
    for (std::size_t i = 0; i < ta.size(); ++i) {
      std::ostringstream sa, sb;
      ta[i].second.write(sa);
      tb[i].second.write(sb);
      EXPECT_EQ(sa.str(), sb.str()) << ta[i].first;
    }
  }
}

TEST(Harness, ReportProducesCurveAndCrpCount) {
  ExperimentConfig c = tiny_config();
  c.far_thresholds = 11;
  const PufReport r = run_report(c);
  EXPECT_TRUE(r.detection.ok);
  EXPECT_EQ(r.far_frr.points.size(), 11u);
  EXPECT_EQ(r.crp_bits, 80);
  const auto tables = report_tables(r, c);
  std::ostringstream os;
  tables[0].second.write(os);
  EXPECT_NE(os.str().find("crp_count,1208925819614629174706176"), std::string::npos);
}

// --- command line -------------------------------------------------------------

struct CliRun {
  int status;
  std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "rfpuf");
  std::ostringstream out, err;
  const int status = cli::run(args, out, err);
  return {status, out.str(), err.str()};
}

fs::path write_tiny_config(const fs::path& dir) {
  fs::create_directories(dir);
  const fs::path p = dir / "tiny.cfg";
  std::ofstream os(p);
  for (const auto& [k, v] : config_echo(tiny_config())) os << k << " = " << v << '\n';
  return p;
}

TEST(Cli, UnknownFlagIsUsageError) {
  const CliRun r = cli({"--bogus", "fleet"});
  EXPECT_EQ(r.status, cli::kExitUsage);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  EXPECT_NE(r.err.find("error kind=usage"), std::string::npos);
}

TEST(Cli, UnknownSubcommandIsUsageError) {
  EXPECT_EQ(cli({"frobnicate"}).status, cli::kExitUsage);
  EXPECT_EQ(cli({}).status, cli::kExitUsage);
  EXPECT_EQ(cli({"experiment", "fig99"}).status, cli::kExitUsage);
}

TEST(Cli, MissingConfigNamesPath) {
  const CliRun r = cli({"--config", "/no/such/file.cfg", "fleet"});
  EXPECT_EQ(r.status, cli::kExitUsage);
  EXPECT_NE(r.err.find("/no/such/file.cfg"), std::string::npos);
  EXPECT_EQ(r.err.find('\n'), r.err.size() - 1);  // exactly one line
}

TEST(Cli, ErrorLineEscapesQuotes) {
  EXPECT_EQ(cli::error_line("io", "bad \"x\"\nnext"), "error kind=io message=\"bad \\\"x\\\"\\nnext\"");
}

TEST(Cli, FleetTrainEvalPipeline) {
  const fs::path dir = scratch_dir("cli_pipeline");
  const fs::path cfg = write_tiny_config(dir);
  const std::string out = (dir / "out").string();
  ASSERT_EQ(cli({"--config", cfg.string(), "--out", out, "--quiet", "fleet"}).status, 0);
  std::ifstream fleet_file(dir / "out" / "fleet.csv");
  EXPECT_EQ(read_fleet(fleet_file).size(), 4u);
  const CliRun t = cli({"--config", cfg.string(), "--out", out, "--quiet", "train"});
  ASSERT_EQ(t.status, 0) << t.err;
  EXPECT_TRUE(fs::exists(dir / "out" / "model.txt"));
  const CliRun e = cli({"eval", "--config", cfg.string(), "--out", out, "--quiet"});
  ASSERT_EQ(e.status, 0) << e.err;
  EXPECT_NE(e.out.find("eval errors="), std::string::npos);
  fs::remove_all(dir);
}

TEST(Cli, FlagsOverrideConfigFile) {
  const fs::path dir = scratch_dir("cli_override");
  const fs::path cfg = write_tiny_config(dir);
  ASSERT_EQ(cli({"--config", cfg.string(), "--out", (dir / "o").string(), "--ntx", "3", "--seed", "9", "--quiet",
                 "fleet"})
                .status,
            0);
  const std::string body = slurp(dir / "o" / "fleet.csv");
  EXPECT_NE(body.find("# master_seed = 9"), std::string::npos);
  EXPECT_NE(body.find("# n_tx = 3"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Cli, ExperimentIsByteIdenticalAcrossRunsAndThreads) {
  const fs::path dir = scratch_dir("cli_determinism");
  const fs::path cfg = write_tiny_config(dir);
  const auto run = [&](const std::string& sub, const std::string& threads) {
    return cli({"experiment", "fig6a", "--config", cfg.string(), "--ntx", "3,4", "--seed", "1", "--threads", threads,
                "--out", (dir / sub).string(), "--quiet"});
  };
  ASSERT_EQ(run("a", "1").status, 0);
  ASSERT_EQ(run("b", "1").status, 0);
  ASSERT_EQ(run("c", "2").status, 0);
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(dir / "a")) {
    const auto name = entry.path().filename();
    EXPECT_EQ(slurp(entry.path()), slurp(dir / "b" / name)) << name;
    EXPECT_EQ(slurp(entry.path()), slurp(dir / "c" / name)) << name;
    ++files;
  }
  EXPECT_EQ(files, 3u);
  fs::remove_all(dir);
}

TEST(Cli, NistOnBitFile) {
  const fs::path dir = scratch_dir("cli_nist");
  fs::create_directories(dir);
  std::mt19937_64 rng(5);
  {
    std::ofstream os(dir / "bits.txt");
    for (int i = 0; i < 20000; ++i) os << (rng() & 1U) << (i % 80 == 79 ? "\n" : "");
  }
  const CliRun r = cli({"nist", "--input", (dir / "bits.txt").string(), "--record-length", "10000", "--out",
                        (dir / "o").string(), "--quiet"});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find("nist test=frequency passed="), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "o" / "nist.csv"));
  fs::remove_all(dir);
}

}  // namespace
}  // namespace rfpuf
