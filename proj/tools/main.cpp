// aperm: analytic permutation tests from the command line.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aperm/designs.hpp"
#include "aperm/errors.hpp"
#include "aperm/ingest.hpp"
#include "aperm/rng.hpp"
#include "report.hpp"
#include "scenarios.hpp"

namespace {

using aperm::cli::json;

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kParse = 3,
  kDomain = 4,
  kDegenerate = 5,
  kUnsupported = 6,
  kCalibration = 7,
  kNumeric = 8,
  kSize = 9,
};

int exit_code(aperm::ErrorKind kind) {
  switch (kind) {
    case aperm::ErrorKind::parse:
      return kParse;
    case aperm::ErrorKind::domain:
      return kDomain;
    case aperm::ErrorKind::degenerate_data:
      return kDegenerate;
    case aperm::ErrorKind::unsupported_design:
      return kUnsupported;
    case aperm::ErrorKind::calibration_failure:
      return kCalibration;
    case aperm::ErrorKind::numeric:
      return kNumeric;
    case aperm::ErrorKind::size:
      return kSize;
  }
  return kInternal;
}

struct RunConfig {
  std::string command;
  std::string input;
  std::uint64_t seed = 0;
  std::string norm = "auto";
  double c = 64.0;
  std::size_t r = aperm::kDefaultCalibrationDraws;
  std::size_t mc = 0;
  double level = 0.05;
  std::string correction = "none";
  std::string mode = "means";
  std::string output = "json";
  std::string scale_mode = "pairwise";
  bool strict = false;
  bool raw = false;
  std::size_t threads = 1;
  // latin
  std::string stepdown = "analytic";
  std::size_t perms = 1000;
  // crbd
  std::size_t group_size = 0;
  bool block_test = false;
  // simulate
  std::string scenario;
  std::size_t reps = 0;
  std::vector<double> grid;
  std::size_t k = 0;
  std::size_t n = 0;
  std::string plot_csv;
  // benchmark
  std::size_t dim = 100;
  std::size_t blocks = 4;
  std::size_t per_cell = 12;
  std::size_t timed_perms = 3;
  std::size_t n_perms = 2000;

  [[nodiscard]] json to_json() const {
    json j{{"command", command},   {"seed", seed},           {"norm", norm},
           {"c", c},               {"r", r},                 {"mc", mc},
           {"level", level},       {"correction", correction}, {"output", output},
           {"strict", strict},     {"raw", raw},             {"scale_mode", scale_mode},
           {"threads", threads}};
    if (!input.empty()) j["input"] = input;
    if (command == "crbd") {
      j["mode"] = mode;
      j["group_size"] = group_size;
      j["block_test"] = block_test;
    }
    if (command == "latin") {
      j["stepdown"] = stepdown;
      j["perms"] = perms;
    }
    if (command == "simulate") {
      j["scenario"] = scenario;
      j["reps"] = reps;
      j["grid"] = grid;
      j["k"] = k;
      j["n"] = n;
    }
    if (command == "benchmark") {
      j["dim"] = dim;
      j["k"] = k;
      j["blocks"] = blocks;
      j["per_cell"] = per_cell;
      j["timed_perms"] = timed_perms;
      j["n_perms"] = n_perms;
    }
    return j;
  }
};

// "l2", "linf", "s1", ...; "auto" picks l2 / S2 from the data.
aperm::NormSpec resolve_norm(const std::string& name, aperm::ItemKind kind, bool operators) {
  using aperm::NormSpec;
  std::string spec = name;
  if (spec == "auto") spec = operators || kind == aperm::ItemKind::op ? "s2" : "l2";
  if (spec.size() < 2 || (spec[0] != 'l' && spec[0] != 's' && spec[0] != 'L' && spec[0] != 'S')) {
    throw aperm::ParseError("unknown norm '" + name + "'");
  }
  const std::string tail = spec.substr(1);
  double q = 0.0;
  if (tail == "inf") {
    q = NormSpec::infinity;
  } else {
    std::size_t used = 0;
    try {
      q = std::stod(tail, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tail.size()) throw aperm::ParseError("unknown norm '" + name + "'");
  }
  if (spec[0] == 's' || spec[0] == 'S') return NormSpec(NormSpec::Space::schatten, q);
  return NormSpec(kind == aperm::ItemKind::curve ? NormSpec::Space::function
                                                 : NormSpec::Space::sequence,
                  q);
}

aperm::Correction parse_correction(const std::string& s) {
  if (s == "none") return aperm::Correction::none;
  if (s == "bonferroni") return aperm::Correction::bonferroni;
  if (s == "holm") return aperm::Correction::holm;
  throw aperm::ParseError("unknown correction '" + s + "'");
}

aperm::TestOptions test_options(const RunConfig& cfg, const aperm::LabeledSample* sample,
                                bool operators = false) {
  aperm::TestOptions opt;
  const auto kind = sample ? aperm::item_kind(sample->items) : aperm::ItemKind::vector;
  opt.norm = resolve_norm(cfg.norm, kind, operators);
  opt.bounds.c_commutative = cfg.c;
  opt.bounds.c_noncommutative = cfg.c;
  opt.bounds.c_sync = cfg.c;
  opt.bounds.calibrate = !cfg.raw;
  opt.bounds.validate();
  opt.r = cfg.r;
  opt.seed = cfg.seed;
  opt.correction = parse_correction(cfg.correction);
  opt.mc_perms = cfg.mc;
  opt.scale_mode = cfg.scale_mode == "pooled" ? aperm::ScaleMode::pooled : aperm::ScaleMode::pairwise;
  opt.strict = cfg.strict;
  opt.threads = cfg.threads;
  return opt;
}

void warn_flags(const std::vector<aperm::PValueReport>& reports) {
  for (const auto& r : reports) {
    for (const auto& f : r.flags) {
      if (f.rfind("calibration failed", 0) == 0) std::cerr << "warning: " << r.name << ": " << f << '\n';
    }
  }
}

json envelope(const RunConfig& cfg, json result) {
  return json{{"schema_version", aperm::cli::kSchemaVersion},
              {"config", cfg.to_json()},
              {"result", std::move(result)}};
}

void emit_json(const json& j) { std::cout << j.dump(2) << '\n'; }

int cmd_two_sample(const RunConfig& cfg) {
  const auto sample = aperm::load_sample(cfg.input);
  const auto report = aperm::two_sample_test(sample, test_options(cfg, &sample));
  warn_flags({report});
  if (cfg.output == "csv") {
    aperm::cli::write_reports_csv(std::cout, {report});
  } else {
    emit_json(envelope(cfg, aperm::cli::to_json(report)));
  }
  return kOk;
}

int cmd_ksample(const RunConfig& cfg) {
  const auto sample = aperm::load_sample(cfg.input);
  const auto opt = test_options(cfg, &sample);
  const auto pairwise = aperm::pairwise_tests(sample, opt);
  warn_flags(pairwise.reports);
  std::optional<aperm::PValueReport> global;
  std::string global_error;
  try {
    global = aperm::global_test(sample, opt);
  } catch (const aperm::UnsupportedDesignError& e) {
    global_error = e.what();
  }
  if (cfg.output == "csv") {
    auto reports = pairwise.reports;
    if (global) reports.push_back(*global);
    aperm::cli::write_reports_csv(std::cout, reports);
  } else {
    json result = aperm::cli::to_json(pairwise);
    result["global"] = global ? aperm::cli::to_json(*global) : json(nullptr);
    if (!global_error.empty()) result["global_error"] = global_error;
    emit_json(envelope(cfg, result));
  }
  return kOk;
}

int cmd_latin(const RunConfig& cfg) {
  const auto sample = aperm::load_sample(cfg.input);
  aperm::StepdownOptions opt;
  opt.test = test_options(cfg, &sample);
  opt.level = cfg.level;
  opt.n_perms = cfg.perms;
  if (cfg.stepdown == "mc") {
    opt.mode = aperm::StepdownMode::monte_carlo;
  } else if (cfg.stepdown != "analytic") {
    throw aperm::ParseError("unknown stepdown mode '" + cfg.stepdown + "'");
  }
  const auto decisions = aperm::latin_square_stepdown(sample, opt);
  if (cfg.output == "csv") {
    aperm::cli::write_decisions_csv(std::cout, decisions);
  } else {
    json list = json::array();
    for (const auto& d : decisions) list.push_back(aperm::cli::to_json(d));
    emit_json(envelope(cfg, json{{"decisions", list}}));
  }
  return kOk;
}

int cmd_crbd(const RunConfig& cfg) {
  const auto sample = aperm::load_sample(cfg.input);
  aperm::CrbdOptions opt;
  if (cfg.mode == "covariances") {
    opt.mode = aperm::CrbdMode::covariances;
  } else if (cfg.mode != "means") {
    throw aperm::ParseError("unknown mode '" + cfg.mode + "'");
  }
  opt.test = test_options(cfg, &sample, opt.mode == aperm::CrbdMode::covariances);
  opt.operator_group_size = cfg.group_size;
  const auto result = aperm::crbd_test(sample, opt);
  warn_flags(result.pairwise.reports);

  std::optional<aperm::PValueReport> block_report;
  if (cfg.block_test) {
    if (!sample.design.has_block()) throw aperm::DomainError("--block-test needs a block column");
    aperm::LabeledSample by_block = sample;
    by_block.labels = sample.design.block;
    by_block.design.block.clear();
    if (opt.mode == aperm::CrbdMode::covariances &&
        aperm::item_kind(by_block.items) != aperm::ItemKind::op) {
      by_block = cfg.group_size >= 2 ? aperm::curves_to_operators(by_block, cfg.group_size, cfg.seed)
                                     : aperm::curves_to_rank_one_operators(by_block);
    }
    if (aperm::distinct_levels(by_block.labels).size() == 2) {
      block_report = aperm::two_sample_test(by_block, opt.test);
    } else {
      block_report = aperm::global_test(by_block, opt.test);
    }
    block_report->name = "blocking factor";
  }
  if (cfg.output == "csv") {
    auto reports = result.pairwise.reports;
    if (result.global) reports.push_back(*result.global);
    if (block_report) reports.push_back(*block_report);
    aperm::cli::write_reports_csv(std::cout, reports);
  } else {
    json j = aperm::cli::to_json(result);
    if (block_report) j["block_test"] = aperm::cli::to_json(*block_report);
    emit_json(envelope(cfg, j));
  }
  return kOk;
}

std::vector<double> default_grid(const std::string& scenario) {
  std::vector<double> g;
  if (scenario == "uni-two-sample") {
    for (int i = 0; i <= 10; ++i) g.push_back(0.1 * i);
  } else if (scenario == "uni-ksample") {
    for (int i = 0; i <= 10; ++i) g.push_back(0.2 * i);
  } else if (scenario == "curves-mean") {
    for (int i = 0; i <= 10; ++i) g.push_back(0.1 * i);
  } else if (scenario == "operators-procrustes") {
    for (int i = 0; i <= 12; ++i) g.push_back(0.5 * i);
  }
  return g;
}

int cmd_simulate(RunConfig cfg) {
  namespace sim = aperm::sim;
  if (cfg.grid.empty()) cfg.grid = default_grid(cfg.scenario);
  const auto pick = [](std::size_t v, std::size_t fallback) { return v == 0 ? fallback : v; };
  const bool l_norm = cfg.norm == "auto" || cfg.norm[0] == 'l' || cfg.norm[0] == 'L';
  const auto q_of = [&](double fallback) {
    if (cfg.norm == "auto") return fallback;
    return resolve_norm(cfg.norm, aperm::ItemKind::vector, false).q();
  };
  std::vector<sim::Replicate> reps;
  json extra = json::object();
  if (cfg.scenario == "uni-two-sample") {
    sim::UniTwoSampleConfig c;
    c.mu = cfg.grid;
    c.m1 = c.m2 = pick(cfg.n, 100);
    c.reps = pick(cfg.reps, 200);
    c.mc_perms = cfg.mc;
    c.seed = cfg.seed;
    c.threads = cfg.threads;
    reps = sim::run_uni_two_sample(c);
  } else if (cfg.scenario == "uni-ksample") {
    sim::UniKSampleConfig c;
    c.k = pick(cfg.k, 4);
    c.n = pick(cfg.n, 20);
    c.shift = cfg.grid;
    c.reps = pick(cfg.reps, 200);
    c.mc_perms = cfg.mc;
    c.r = cfg.r;
    c.seed = cfg.seed;
    c.threads = cfg.threads;
    reps = sim::run_uni_ksample(c);
  } else if (cfg.scenario == "curves-mean") {
    sim::CurvesMeanConfig c;
    c.n = pick(cfg.n, 30);
    c.shift = cfg.grid;
    c.reps = pick(cfg.reps, 100);
    c.mc_perms = cfg.mc;
    c.r = cfg.r;
    c.q = q_of(2.0);
    c.seed = cfg.seed;
    c.threads = cfg.threads;
    reps = sim::run_curves_mean(c);
  } else if (cfg.scenario == "operators-procrustes") {
    sim::ProcrustesConfig c;
    c.n = pick(cfg.n, 30);
    c.gamma = cfg.grid;
    c.reps = pick(cfg.reps, 200);
    c.mc_perms = cfg.mc;
    c.r = cfg.r;
    c.q = q_of(1.0);
    c.seed = cfg.seed;
    c.threads = cfg.threads;
    reps = sim::run_procrustes(c);
  } else if (cfg.scenario == "null-calibration") {
    sim::NullCalibrationConfig c;
    c.kind = l_norm ? sim::NullKind::curves : sim::NullKind::operators;
    c.q = q_of(2.0);
    c.reps = pick(cfg.reps, 100);
    c.n = pick(cfg.n, c.kind == sim::NullKind::curves ? 30 : 20);
    c.group_size = pick(cfg.group_size, 10);
    c.r = cfg.r;
    c.seed = cfg.seed;
    c.threads = cfg.threads;
    reps = sim::run_null_calibration(c);
    std::vector<double> raw;
    std::vector<double> adjusted;
    for (const auto& r : reps) {
      raw.push_back(r.p_raw);
      adjusted.push_back(r.p_adjusted);
    }
    const auto ks_raw = sim::ks_uniform(raw);
    const auto ks_adj = sim::ks_uniform(adjusted);
    extra["ks_raw"] = json{{"statistic", ks_raw.statistic}, {"p_value", ks_raw.p_value}};
    extra["ks_adjusted"] = json{{"statistic", ks_adj.statistic}, {"p_value", ks_adj.p_value}};
  } else {
    throw aperm::DomainError("unknown scenario '" + cfg.scenario + "'");
  }
  const auto rows = sim::summarize(reps);
  if (!cfg.plot_csv.empty()) {
    std::ofstream out(cfg.plot_csv);
    if (!out) throw aperm::ParseError("cannot write " + cfg.plot_csv);
    if (cfg.scenario == "null-calibration") {
      aperm::cli::write_replicates_csv(out, reps);
    } else {
      aperm::cli::write_summary_csv(out, rows);
    }
  }
  if (cfg.output == "csv") {
    if (cfg.scenario == "null-calibration") {
      aperm::cli::write_replicates_csv(std::cout, reps);
    } else {
      aperm::cli::write_summary_csv(std::cout, rows);
    }
    return kOk;
  }
  json summary = json::array();
  for (const auto& r : rows) summary.push_back(aperm::cli::to_json(r));
  extra["summary"] = summary;
  emit_json(envelope(cfg, extra));
  return kOk;
}

int cmd_benchmark(const RunConfig& cfg) {
  aperm::sim::CrbdBenchConfig c;
  c.dim = cfg.dim;
  c.k = cfg.k == 0 ? 12 : cfg.k;
  c.blocks = cfg.blocks;
  c.per_cell = cfg.per_cell;
  c.n_perms = cfg.n_perms;
  c.timed_perms = cfg.timed_perms;
  c.q = cfg.norm == "auto" ? 1.0 : resolve_norm(cfg.norm, aperm::ItemKind::op, true).q();
  c.seed = cfg.seed;
  const auto report = aperm::sim::run_crbd_bench(c);
  if (cfg.output == "csv") {
    std::cout << "pairings,analytic_seconds,analytic_decompositions,per_perm_seconds,"
                 "per_perm_decompositions,mc_permutations,mc_extrapolated_seconds,speedup\n"
              << report.pairings << ',' << report.analytic_seconds << ','
              << report.analytic_decompositions << ',' << report.per_perm_seconds << ','
              << report.per_perm_decompositions << ',' << report.mc_permutations << ','
              << report.mc_extrapolated_seconds << ',' << report.speedup << '\n';
  } else {
    emit_json(envelope(cfg, aperm::cli::to_json(report)));
  }
  return kOk;
}

void add_common(CLI::App* app, RunConfig& cfg, bool input) {
  if (input) app->add_option("-i,--input", cfg.input, "Data file (curve CSV, scalar CSV or operator file)")->required();
  app->add_option("--norm", cfg.norm, "l1, l2, linf (l^q / L^q by data type), s1, s2, sinf; any lq or sq");
  app->add_option("--seed", cfg.seed, "Seed (default $APERM_SEED or 20200101)");
  app->add_option("--r", cfg.r, "Calibration draws");
  app->add_option("--c", cfg.c, "Bound constant c");
  app->add_option("--mc", cfg.mc, "Monte-Carlo cross-check permutations (0 = off)");
  app->add_option("--correction", cfg.correction, "none, bonferroni or holm");
  app->add_option("--scale-mode", cfg.scale_mode, "pairwise or pooled bound scales")
      ->check(CLI::IsMember({"pairwise", "pooled"}));
  app->add_option("--output", cfg.output, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  app->add_flag("--strict", cfg.strict, "Fail when calibration fails instead of reporting the raw bound");
  app->add_flag("--raw", cfg.raw, "Report raw bounds without calibration");
  app->add_option("--threads", cfg.threads, "Worker threads (0 = all cores)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Analytic permutation tests via concentration bounds"};
  app.require_subcommand(1);
  RunConfig cfg;
  try {
    cfg.seed = aperm::default_seed();
  } catch (const aperm::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  }

  auto* two = app.add_subcommand("two-sample", "Two-sample test");
  add_common(two, cfg, true);
  auto* ks = app.add_subcommand("k-sample", "Pairwise tests, log10 table and synchronized global test");
  add_common(ks, cfg, true);
  auto* latin = app.add_subcommand("latin", "Latin-square step-down test");
  add_common(latin, cfg, true);
  latin->add_option("--level", cfg.level, "Significance level");
  latin->add_option("--stepdown", cfg.stepdown, "analytic or mc")->check(CLI::IsMember({"analytic", "mc"}));
  latin->add_option("--perms", cfg.perms, "Permutations per stage in mc mode");
  auto* crbd = app.add_subcommand("crbd", "Complete randomized block design");
  add_common(crbd, cfg, true);
  crbd->add_option("--mode", cfg.mode, "means or covariances")->check(CLI::IsMember({"means", "covariances"}));
  crbd->add_option("--group-size", cfg.group_size, "Curves per covariance operator (0 = rank-one)");
  crbd->add_flag("--block-test", cfg.block_test, "Also test the blocking factor (two-sample for two blocks, global test otherwise)");
  auto* simulate = app.add_subcommand(
      "simulate",
      "Replication studies. Plot CSV columns: x,reps,mean_p_<m>,mean_log2_<m>,mean_log10_<m> for "
      "m in raw,adjusted,mc,classical (null-calibration: x,rep,p_raw,p_adjusted,p_mc,p_classical)");
  add_common(simulate, cfg, false);
  simulate->add_option("--scenario", cfg.scenario, "Scenario")
      ->required()
      ->check(CLI::IsMember(
          {"uni-two-sample", "uni-ksample", "curves-mean", "operators-procrustes", "null-calibration"}));
  simulate->add_option("--reps", cfg.reps, "Replicates per grid point");
  simulate->add_option("--grid", cfg.grid, "Effect-size grid")->delimiter(',');
  simulate->add_option("--k", cfg.k, "Groups (uni-ksample)");
  simulate->add_option("--n", cfg.n, "Items per group");
  simulate->add_option("--group-size", cfg.group_size, "Curves per operator (null-calibration with s norms)");
  simulate->add_option("--plot-csv", cfg.plot_csv, "Write plot-ready CSV here");
  auto* bench = app.add_subcommand("benchmark", "Analytic CRBD pipeline vs Monte-Carlo permutations");
  add_common(bench, cfg, false);
  bench->add_option("--dim", cfg.dim, "Operator dimension");
  bench->add_option("--k", cfg.k, "Treatments");
  bench->add_option("--blocks", cfg.blocks, "Blocks");
  bench->add_option("--per-cell", cfg.per_cell, "Rank-one operators per cell");
  bench->add_option("--n-perms", cfg.n_perms, "Permutations per hypothesis to extrapolate to");
  bench->add_option("--timed-perms", cfg.timed_perms, "Permutations actually timed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (two->parsed()) {
      cfg.command = "two-sample";
      return cmd_two_sample(cfg);
    }
    if (ks->parsed()) {
      cfg.command = "k-sample";
      return cmd_ksample(cfg);
    }
    if (latin->parsed()) {
      cfg.command = "latin";
      return cmd_latin(cfg);
    }
    if (crbd->parsed()) {
      cfg.command = "crbd";
      return cmd_crbd(cfg);
    }
    if (simulate->parsed()) {
      cfg.command = "simulate";
      return cmd_simulate(cfg);
    }
    if (bench->parsed()) {
      cfg.command = "benchmark";
      return cmd_benchmark(cfg);
    }
  } catch (const aperm::Error& e) {
    std::cerr << "error (" << aperm::to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInternal;
  }
  return kUsage;
}
