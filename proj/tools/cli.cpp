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

#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "rfpuf/harness.hpp"

namespace rfpuf::cli {

std::string error_line(std::string_view kind, std::string_view message) {
  std::string s = "error kind=" + std::string(kind) + " message=\"";
  for (char c : message) {
    if (c == '"' || c == '\\') s += '\\';
    if (c == '\n') {
      s += "\\n";
      continue;
    }
    s += c;
  }
  return s + "\"";
}

namespace {

struct GlobalFlags {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> config;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
  std::optional<std::string> ntx;
  std::optional<std::string> hidden;
  std::optional<std::string> iters;
  std::vector<std::string> set;
  bool quiet = false;
};

// Thrown for problems the user must fix on the command line; exit status 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Defaults, then the config file, then --set overrides, then dedicated flags.
ExperimentConfig resolve_config(const GlobalFlags& g) {
  ExperimentConfig cfg;
  if (g.config) {
    if (!std::filesystem::exists(*g.config)) throw UsageError("config file not found: " + *g.config);
    load_config_file(cfg, *g.config);
  }
  for (const auto& kv : g.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    set_config_value(cfg, trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }
  if (g.seed) cfg.master_seed = *g.seed;
  if (g.out) cfg.output_path = *g.out;
  if (g.threads) cfg.threads = *g.threads;
  if (g.ntx) {
    const auto list = parse_size_list(*g.ntx);
    cfg.n_tx_list = list;
    cfg.fig10_n_tx_list = list;
    cfg.n_tx = list.back();
  }
  if (g.hidden) {
    const auto list = parse_size_list(*g.hidden);
    cfg.hidden_list.assign(list.begin(), list.end());
    cfg.n_hidden = static_cast<int>(list.back());
  }
  if (g.iters) {
    const auto list = parse_size_list(*g.iters);
    cfg.iterations_list = list;
    cfg.n_train_iterations = list.back();
  }
  cfg.validate();
  return cfg;
}

ProgressFn progress_to(std::ostream& err, bool quiet) {
  if (quiet) return {};
  return [&err](std::string_view msg) { err << "progress " << msg << '\n' << std::flush; };
}

void print_written(std::ostream& out, const std::vector<std::filesystem::path>& paths) {
  for (const auto& p : paths) out << "wrote " << p.string() << '\n';
}

std::vector<std::filesystem::path> save_tables(const std::vector<std::pair<std::string, CsvTable>>& tables,
                                               const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> paths;
  for (const auto& [name, t] : tables) {
    t.save(dir / name);
    paths.push_back(dir / name);
  }
  return paths;
}

void write_text_file(const std::filesystem::path& path, const std::string& body) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
  os << body;
  if (!os) fail(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::Io, "cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

// --- subcommands -------------------------------------------------------------

int cmd_fleet(const ExperimentConfig& cfg, std::ostream& out) {
  const std::uint64_t seed = replicate_seed(cfg.master_seed, 0);
  const auto fleet = replicate_fleet(seed, cfg.n_tx, cfg.spec);
  std::ostringstream body;
  for (const auto& line : config_echo_lines(cfg, "fleet")) body << "# " << line << '\n';
  write_fleet(body, fleet);
  const auto path = cfg.output_path / "fleet.csv";
  write_text_file(path, body.str());
  print_written(out, {path});
  return kExitOk;
}

LabeledFeatures simulate_role(const ExperimentConfig& cfg, BatchRole role, std::size_t per_device) {
  const std::uint64_t seed = replicate_seed(cfg.master_seed, 0);
  const auto fleet = replicate_fleet(seed, cfg.n_tx, cfg.spec);
  const RxProfile rx[] = {RxProfile{}};
  return collect(simulate_batch(fleet, {per_device, ChallengeMode::Fresh, role}, cfg.pipeline(), seed, rx));
}

int cmd_train(const ExperimentConfig& cfg, std::ostream& out, const ProgressFn& progress) {
  if (progress) progress("train: simulating " + std::to_string(cfg.n_tx * cfg.n_train_iterations) + " frames");
  const auto train = simulate_role(cfg, BatchRole::Training, cfg.n_train_iterations);
  check_rejection_rate(train, "training set");
  TrainingOptions opts = cfg.training;
  opts.hidden_dim = cfg.n_hidden;
  TrainingReport report;
  if (progress) progress("train: fitting classifier");
  const MlpModel model =
      train_classifier(train.matrix(), train.labels, opts, replicate_seed(cfg.master_seed, 0), &report);
  std::ostringstream body;
  save_model(body, model);
  const auto path = cfg.output_path / "model.txt";
  write_text_file(path, body.str());
  out << "train epochs=" << report.epochs << " error=" << format_double(report.final_error)
      << " reached_target=" << (report.reached_target ? "true" : "false") << " rejected=" << train.rejected() << '\n';
  for (const auto& w : report.warnings) out << "warning " << w << '\n';
  print_written(out, {path});
  return kExitOk;
}

int cmd_eval(const ExperimentConfig& cfg, const std::string& model_path, std::ostream& out,
             const ProgressFn& progress) {
  std::istringstream is(read_text_file(model_path));
  const MlpModel model = load_model(is);
  if (progress) progress("eval: simulating evaluation frames");
  const auto eval =
      simulate_role(cfg, BatchRole::Evaluation, eval_frames_per_device(cfg.n_eval_frames, cfg.n_tx));
  const DetectionResult d = false_detection_probability(model, eval);
  CsvTable t({"errors", "total", "error_probability", "ci_low", "ci_high"});
  for (const auto& line : config_echo_lines(cfg, "eval")) t.add_comment(line);
  t.add_row({std::to_string(d.errors), std::to_string(d.total), format_double(d.probability),
             format_double(d.ci.low), format_double(d.ci.high)});
  const auto path = cfg.output_path / "eval.csv";
  t.save(path);
  out << "eval errors=" << d.errors << " total=" << d.total << " probability=" << format_double(d.probability)
      << '\n';
  print_written(out, {path});
  return kExitOk;
}

Bits parse_bits(const std::string& text, const std::string& source) {
  Bits bits;
  for (char c : text) {
    if (c == '0' || c == '1') bits.push_back(static_cast<std::uint8_t>(c - '0'));
    else if (!std::isspace(static_cast<unsigned char>(c)))
      fail(ErrorKind::Parse, source + ": unexpected character '" + std::string(1, c) + "' in bit file");
  }
  return bits;
}

int cmd_nist(const ExperimentConfig& cfg, const std::optional<std::string>& input, std::size_t record_length,
             std::ostream& out, const ProgressFn& progress) {
  Bits bits;
  std::string source;
  if (input) {
    bits = parse_bits(read_text_file(*input), *input);
    source = *input;
  } else {
    // One fleet of fig7_devices, probability-transform bits.
    if (progress) progress("nist: simulating " + std::to_string(cfg.fig7_devices) + " devices");
    const std::uint64_t seed = replicate_seed(cfg.master_seed, 0);
    const auto fleet = replicate_fleet(seed, cfg.fig7_devices, cfg.spec);
    const RxProfile rx[] = {RxProfile{}};
    const FrameBatch batch = simulate_batch(
        fleet, {1, ChallengeMode::SharedPerIndex, BatchRole::Evaluation}, cfg.pipeline(), seed, rx);
    const GeoMeanReference ref = geo_mean_reference(cfg.spec);
    std::vector<double> geo;
    for (const auto& fv : batch.by_receiver[0])
      if (fv) geo.push_back(geo_mean_ppm(*fv, ref));
    const GeoMeanCdf cdf = GeoMeanCdf::from_model(cfg.spec, std::size_t{1} << 20,
                                                  derive_seed(cfg.master_seed, 0, Stream::Baseline));
    bits = puf_bitstream(geo, BitDerivation::ProbabilityTransform, &cdf);
    source = "fleet";
  }
  NistConfig nc;
  nc.record_length = record_length == 0 ? bits.size() : record_length;
  nc.validate();
  const NistReport report = nist_subset(bits, nc);
  CsvTable t({"test", "passed", "run", "skipped", "pass_rate"});
  for (const auto& line : config_echo_lines(cfg, "nist " + source)) t.add_comment(line);
  t.add_comment("record_length = " + std::to_string(nc.record_length));
  for (std::size_t i = 0; i < kNistTestCount; ++i) {
    const auto test = static_cast<NistTest>(i);
    const NistTally& x = report[test];
    t.add_row({std::string(to_string(test)), std::to_string(x.passed), std::to_string(x.run),
               std::to_string(x.skipped), format_double(x.pass_rate())});
    out << "nist test=" << to_string(test) << " passed=" << x.passed << " run=" << x.run
        << " pass_rate=" << format_double(x.pass_rate()) << '\n';
  }
  const auto path = cfg.output_path / "nist.csv";
  t.save(path);
  print_written(out, {path});
  return kExitOk;
}

int cmd_experiment(const ExperimentConfig& cfg, const std::string& kind, std::ostream& out,
                   const ProgressFn& progress) {
  std::vector<ExperimentKind> kinds;
  if (kind == "all") kinds = all_experiment_kinds();
  else kinds.push_back(parse_experiment_kind(kind));
  for (ExperimentKind k : kinds) {
    const ExperimentResult res = run_experiment(k, cfg, progress);
    std::size_t failed = 0;
    for (const auto& p : res.points) failed += p.seeds.size() - p.ok_count();
    for (const auto& p : res.points)
      out << to_string(k) << ' ' << (p.arm.empty() ? "" : p.arm + " ") << p.axis << '=' << format_double(p.value)
          << " median_error=" << format_double(p.median_error()) << " seeds_ok=" << p.ok_count() << '\n';
    for (const auto& d : res.distances)
      out << to_string(k) << " seed=" << d.seed << " median_intra_ppm=" << format_double(d.median_intra)
          << " median_inter_ppm=" << format_double(d.median_inter)
          << " identifiability=" << format_double(d.distances.identifiability) << '\n';
    if (res.randomness)
      for (std::size_t i = 0; i < kNistTestCount; ++i) {
        const auto t = static_cast<NistTest>(i);
        out << to_string(k) << " test=" << to_string(t)
            << " puf_pass_rate=" << format_double(res.randomness->puf[t].pass_rate())
            << " prng_pass_rate=" << format_double(res.randomness->prng[t].pass_rate()) << '\n';
      }
    print_written(out, write_experiment(res, cfg));
    if (failed > 0) out << "warning " << failed << " seed runs failed; see the diagnostic column\n";
  }
  return kExitOk;
}

int cmd_report(const ExperimentConfig& cfg, std::ostream& out, const ProgressFn& progress) {
  const PufReport rep = run_report(cfg, progress);
  const auto tables = report_tables(rep, cfg);
  for (const auto& [name, t] : tables)
    if (name == "report_summary.csv") t.write(out);
  print_written(out, save_tables(tables, cfg.output_path));
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"rfpuf: RF-PUF transmitter identification simulator", "rfpuf"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--config", g.config, "Config file (key = value lines, # comments)");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--threads", g.threads, "Worker threads for frame simulation")->check(CLI::PositiveNumber);
  app.add_option("--ntx", g.ntx, "Transmitter count or list (e.g. 10,50,200); scalars use the last entry");
  app.add_option("--hidden", g.hidden, "Hidden units or list; scalars use the last entry");
  app.add_option("--iters", g.iters, "Training iterations or list; scalars use the last entry");
  app.add_option("--set", g.set, "Override any config key: --set key=value (repeatable)");
  app.add_flag("--quiet", g.quiet, "Suppress progress lines");

  auto* fleet = app.add_subcommand("fleet", "Generate a fleet and export it as CSV");
  auto* train = app.add_subcommand("train", "Simulate training frames and fit the classifier");
  auto* eval = app.add_subcommand("eval", "Score a saved model on fresh evaluation frames");
  std::string model_path;
  eval->add_option("--model", model_path, "Model file (default <out>/model.txt)");
  auto* experiment = app.add_subcommand("experiment", "Run a figure experiment and write CSVs");
  std::string kind;
  experiment->add_option("kind", kind, "fig6a|fig6b|fig6c|fig6d|fig6ef|fig7|fig10|all")->required();
  auto* nist = app.add_subcommand("nist", "Run the NIST subset on a bit file or a simulated fleet");
  std::optional<std::string> nist_input;
  std::size_t record_length = 0;
  nist->add_option("--input", nist_input, "File of '0'/'1' characters (whitespace ignored)");
  nist->add_option("--record-length", record_length, "Bits per record (default: whole input)");
  auto* report = app.add_subcommand("report", "Detection, FAR/FRR, distances and CRP summary at --ntx");

  std::vector<std::string> rev(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(rev.begin(), rev.end());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << app.help() << error_line("usage", e.what()) << '\n';
    return kExitUsage;
  }

  ExperimentConfig cfg;
  try {
    cfg = resolve_config(g);
  } catch (const UsageError& e) {
    err << error_line("usage", e.what()) << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << error_line(to_string(e.kind()), e.what()) << '\n';
    return kExitUsage;
  }

  const ProgressFn progress = progress_to(err, g.quiet);
  try {
    if (*fleet) return cmd_fleet(cfg, out);
    if (*train) return cmd_train(cfg, out, progress);
    if (*eval) return cmd_eval(cfg, model_path.empty() ? (cfg.output_path / "model.txt").string() : model_path, out,
                               progress);
    if (*experiment) return cmd_experiment(cfg, kind, out, progress);
    if (*nist) return cmd_nist(cfg, nist_input, record_length, out, progress);
    if (*report) return cmd_report(cfg, out, progress);
  } catch (const Error& e) {
    err << error_line(to_string(e.kind()), e.what()) << '\n';
    return e.kind() == ErrorKind::Parse && *experiment ? kExitUsage : kExitFailure;
  } catch (const std::exception& e) {
    err << error_line("internal", e.what()) << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace rfpuf::cli
