#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cogfx/analysis.hpp"

namespace cogfx {

inline constexpr int kReportSchemaVersion = 1;

struct ReportMetadata {
  std::string model;
  std::string config_digest;
  std::string generated_at;
  int schema_version = kReportSchemaVersion;
  std::vector<std::string> assumptions;
  // AND over catch-trial validity of every experiment that ran catch trials.
  std::optional<bool> run_valid;
};

struct EffectReport {
  ReportMetadata metadata;
  std::vector<ExperimentResult> experiments;
};

// Assumption notes shared by every run.
std::vector<std::string> default_assumptions(bool welch);

// Fills run_valid from the experiments' catch-trial results.
void update_run_validity(EffectReport& report);

// Two decimals, ties to even on the stored binary value.
std::string format_mean(double v);
// "<0.001" below 0.001, else four significant digits.
std::string format_p(double p);

// A row whose df disagrees with the design formula for its n_items.
struct DfAuditFinding {
  std::string experiment_id;
  std::string label;
  double df = 0.0;
  long expected_df = 0;
};

std::vector<DfAuditFinding> audit_df(const EffectReport& report);

// Fixed-width text tables, one section per experiment.
std::string render_table(const EffectReport& report);

// experiment,mean_a,mean_b,p,t,df,n_items with full precision; ANOVA
// summaries appear only in the text and JSON outputs.
std::string render_csv(const EffectReport& report);

struct CsvEffectRow {
  std::string experiment;
  double mean_a = 0.0;
  double mean_b = 0.0;
  double p = 0.0;
  double t = 0.0;
  double df = 0.0;
  std::size_t n_items = 0;
};

std::vector<CsvEffectRow> parse_effect_csv(std::string_view text);

// Line chart of bucket means with 95% whiskers. Throws ConfigError with
// fewer than two buckets.
std::string render_distance_curve(std::span<const BucketStat> buckets, std::string_view title);

void to_json(nlohmann::json& j, const EffectReport& r);
void from_json(const nlohmann::json& j, EffectReport& r);

std::string export_run(const EffectReport& report);
// Throws ParseError on a malformed document or a schema version mismatch.
EffectReport import_run(std::string_view document);

// Writes report.txt, report.csv, report.json and distance-<id>.svg.
std::vector<std::filesystem::path> write_report_files(const EffectReport& report,
                                                      const std::filesystem::path& dir);

}  // namespace cogfx
