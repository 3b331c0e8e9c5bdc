#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "cogfx/config.hpp"
#include "cogfx/error.hpp"
#include "cogfx/pipeline.hpp"
#include "cogfx/report.hpp"

namespace fs = std::filesystem;

namespace {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kFailureCeiling = 3,
  kEmptyData = 4,
  kInterrupted = 130,
};

std::atomic<bool> g_interrupted{false};

extern "C" void on_sigint(int) { g_interrupted.store(true); }

struct CommonFlags {
  std::string config;
  std::string cache;
  std::string out;
  std::string backend;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_cache) {
  cmd->add_option("--config", f.config, "Run configuration (JSON)")->check(CLI::ExistingFile);
  if (with_cache) cmd->add_option("--cache", f.cache, "Completion cache file (JSONL)");
  cmd->add_option("--out", f.out, "Output directory (overrides the config)");
  cmd->add_option("--backend", f.backend, "live or mock (overrides the config)")
      ->check(CLI::IsMember({"live", "mock"}));
  cmd->add_option("--seed", f.seed, "Seed (overrides the config)");
}

cogfx::RunConfig load_config(const CommonFlags& f) {
  if (f.config.empty()) throw cogfx::ConfigError("--config is required");
  auto config = cogfx::load_run_config(f.config);
  if (!f.out.empty()) config.output_dir = f.out;
  if (!f.backend.empty()) config.backend.kind = f.backend;
  if (f.seed) config.seed = *f.seed;
  config.validate();
  return config;
}

int cmd_plan(const CommonFlags& f, bool as_json) {
  const auto config = load_config(f);
  const auto plan = cogfx::make_plan(config);
  if (as_json) {
    std::cout << cogfx::plan_json(plan).dump(2) << "\n";
    return kOk;
  }
  std::cout << fmt::format("{:<32} {:>12} {:>14}\n", "battery", "instances", "est. tokens");
  for (const auto& b : plan.batteries) {
    std::cout << fmt::format("{:<32} {:>12} {:>14}\n", b.experiment_id,
                             fmt::format("{}{}", b.upper_bound ? "<=" : "", b.instances),
                             b.estimated_tokens);
  }
  std::cout << fmt::format("{:<32} {:>12} {:>14}\n", "total", plan.total_instances,
                           plan.total_tokens);
  std::cout << fmt::format("{} instances\n", plan.total_instances);
  std::cout << "run directory: " << cogfx::run_directory(config).string() << "\n";
  return kOk;
}

int cmd_run(const CommonFlags& f) {
  const auto config = load_config(f);
  cogfx::RunOptions options;
  if (!f.cache.empty()) options.cache_path = f.cache;
  options.should_stop = [] { return g_interrupted.load(); };
  std::signal(SIGINT, on_sigint);
  std::signal(SIGTERM, on_sigint);

  const auto s = cogfx::run_experiments(config, options);
  std::cout << fmt::format(
      "run directory: {}\nmodel: {}\ndispatched: {}  network calls: {}  cache hits: {}  "
      "failures: {}\n",
      s.run_dir.string(), s.model, s.dispatched, s.network_calls, s.cache_hits, s.failures);
  if (s.aborted) {
    std::cerr << "error: failure ceiling breached; completed requests are cached, rerun to "
                 "resume\n";
    return kFailureCeiling;
  }
  if (s.cancelled) {
    std::cerr << "interrupted; completed requests are cached, rerun to resume\n";
    return kInterrupted;
  }
  return kOk;
}

fs::path resolve_run_dir(const std::string& run_dir, const CommonFlags& f) {
  if (!run_dir.empty()) return run_dir;
  return cogfx::run_directory(load_config(f));
}

int cmd_analyze(const std::string& run_dir, const CommonFlags& f) {
  const auto dir = resolve_run_dir(run_dir, f);
  const auto report = cogfx::analyze_run(dir);
  const auto files = cogfx::write_report_files(report, dir);
  std::cout << cogfx::render_table(report);
  for (const auto& p : files) std::cout << "wrote " << p.string() << "\n";
  return kOk;
}

int cmd_report(const std::string& run_dir, const CommonFlags& f) {
  const auto dir = resolve_run_dir(run_dir, f);
  std::ifstream in(dir / "report.json");
  if (!in) throw cogfx::EmptyDataError("no report.json in " + dir.string() + "; run analyze");
  std::stringstream buf;
  buf << in.rdbuf();
  const auto report = cogfx::import_run(buf.str());
  cogfx::write_report_files(report, dir);
  std::cout << cogfx::render_table(report);
  return kOk;
}

int cmd_mock_validate(const cogfx::MockValidationOptions& opt, bool as_json) {
  const auto cells = cogfx::mock_validate(opt);
  if (as_json) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& c : cells) {
      out.push_back({{"delta", c.delta},
                     {"seeds", c.seeds},
                     {"rate_05", static_cast<double>(c.detected_05) / c.seeds},
                     {"rate_001", static_cast<double>(c.detected_001) / c.seeds},
                     {"right_direction", static_cast<double>(c.right_direction) / c.seeds}});
    }
    std::cout << out.dump(2) << "\n";
    return kOk;
  }
  std::cout << fmt::format("sigma={} mu={} words={} seeds={}\n", opt.sigma, opt.mu, opt.items,
                           opt.seeds);
  std::cout << fmt::format("{:>8} {:>12} {:>12} {:>16}\n", "delta", "rate a=.05", "rate a=.001",
                           "related>unrel.");
  for (const auto& c : cells) {
    const double n = static_cast<double>(c.seeds);
    std::cout << fmt::format("{:>8.3f} {:>12.3f} {:>12.3f} {:>16.3f}\n", c.delta,
                             c.detected_05 / n, c.detected_001 / n, c.right_direction / n);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Batch experiments probing cognitive effects in language models"};
  app.require_subcommand(1);

  CommonFlags plan_flags;
  bool plan_json = false;
  auto* plan = app.add_subcommand("plan", "Print per-battery instance counts; no network calls");
  add_common(plan, plan_flags, false);
  plan->add_flag("--json", plan_json, "Machine-readable output");

  CommonFlags run_flags;
  auto* run = app.add_subcommand("run", "Dispatch, score and persist observations");
  add_common(run, run_flags, true);

  CommonFlags analyze_flags;
  std::string analyze_dir;
  auto* analyze = app.add_subcommand("analyze", "Compute effect tables for a run directory");
  analyze->add_option("--run", analyze_dir, "Run directory (else derived from --config)");
  add_common(analyze, analyze_flags, false);

  CommonFlags report_flags;
  std::string report_dir;
  auto* report = app.add_subcommand("report", "Re-render report files from report.json");
  report->add_option("--run", report_dir, "Run directory (else derived from --config)");
  add_common(report, report_flags, false);

  cogfx::MockValidationOptions mv;
  bool mv_json = false;
  auto* validate = app.add_subcommand("mock-validate", "Planted-effect detection rates");
  validate->add_option("--deltas", mv.deltas, "Planted effect sizes")->delimiter(',');
  validate->add_option("--sigma", mv.sigma, "Noise standard deviation");
  validate->add_option("--mu", mv.mu, "Baseline confidence");
  validate->add_option("--seeds", mv.seeds, "Seeds per delta");
  validate->add_option("--words", mv.items, "Target words in the synthetic battery");
  validate->add_option("--seed", mv.base_seed, "First seed");
  validate->add_flag("--json", mv_json, "Machine-readable output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*plan) return cmd_plan(plan_flags, plan_json);
    if (*run) return cmd_run(run_flags);
    if (*analyze) return cmd_analyze(analyze_dir, analyze_flags);
    if (*report) return cmd_report(report_dir, report_flags);
    if (*validate) return cmd_mock_validate(mv, mv_json);
  } catch (const cogfx::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const cogfx::EmptyDataError& e) {
    std::cerr << "no data: " << e.what() << "\n";
    return kEmptyData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
