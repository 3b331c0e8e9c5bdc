#include "cogfx/report.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "cogfx/error.hpp"

namespace cogfx {

namespace {

std::string printf_double(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

bool integral(double v) { return std::isfinite(v) && v == std::floor(v); }

std::string format_df(double df) {
  if (integral(df)) return printf_double("%.0f", df);
  return printf_double("%.2f", df);
}

std::string format_stat(double v) {
  if (std::isnan(v)) return "n/a";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return printf_double("%.2f", v);
}

std::string column_label(const std::string& condition, const char* fallback) {
  return condition.empty() ? fallback : condition;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("write failed for " + path.string());
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

double parse_double(const std::string& s, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw ParseError("bad number '" + s + "'", line);
  return v;
}

void render_contrast(std::ostringstream& out, const ExperimentResult& r) {
  const auto a = column_label(r.baseline_condition, "mean_a");
  const auto b = column_label(r.favored_condition, "mean_b");
  const auto analyzed = "analyzed " + (r.item_label.empty() ? std::string("items") : r.item_label);
  out << fmt::format("{:<24} {:>12} {:>12} {:>9} {:>9} {:>8} {:>16}\n", "Experiment", a, b,
                     "p-value", "t", "df", analyzed);
  for (const auto& row : r.rows) {
    if (row.skipped) {
      out << fmt::format("{:<24} {:>12} {:>12} {:>9} {:>9} {:>8} {:>16}\n", row.label,
                         row.n_a ? format_mean(row.mean_a) : "-",
                         row.n_b ? format_mean(row.mean_b) : "-", "skipped", "-", "-",
                         row.n_items);
      continue;
    }
    out << fmt::format("{:<24} {:>12} {:>12} {:>9} {:>9} {:>8} {:>16}\n", row.label,
                       format_mean(row.mean_a), format_mean(row.mean_b), format_p(row.p),
                       format_stat(row.t), format_df(row.df), row.n_items);
  }
}

void render_anova(std::ostringstream& out, const AnovaRow& a) {
  if (std::isnan(a.p)) {
    out << "ANOVA: skipped\n";
  } else {
    const auto p = format_p(a.p);
    out << fmt::format("F({}, {})={}, p{}{}, MSE={}\n", a.df_between, a.df_within,
                       format_stat(a.F), p.front() == '<' ? "" : "=", p, format_stat(a.mse));
  }
  out << fmt::format("{:>10} {:>8} {:>10} {:>8}\n", "distance", "mean", "95% CI +-", "n");
  for (const auto& b : a.buckets) {
    out << fmt::format("{:>10} {:>8} {:>10} {:>8}\n", b.bucket, format_mean(b.mean),
                       format_mean(b.ci_half), b.n);
  }
}

}  // namespace

std::vector<std::string> default_assumptions(bool welch) {
  std::vector<std::string> out;
  if (welch) {
    out.push_back("t-test: Welch unequal-variance form (override)");
  } else {
    out.push_back("t-test: pooled-variance Student form, df = n_a + n_b - 2");
  }
  out.push_back("confidence: exact token match after trim, lowercase, trailing punctuation strip");
  out.push_back("p-values two-tailed; no multiple-comparison correction");
  return out;
}

void update_run_validity(EffectReport& report) {
  report.metadata.run_valid.reset();
  for (const auto& e : report.experiments) {
    if (!e.catch_valid) continue;
    report.metadata.run_valid = report.metadata.run_valid.value_or(true) && *e.catch_valid;
  }
}

std::string format_mean(double v) {
  if (std::isnan(v)) return "n/a";
  // glibc printf rounds the exact binary value, ties to even.
  return printf_double("%.2f", v);
}

std::string format_p(double p) {
  if (std::isnan(p)) return "n/a";
  if (p < 0.001) return "<0.001";
  return printf_double("%#.4g", p);
}

std::vector<DfAuditFinding> audit_df(const EffectReport& report) {
  std::vector<DfAuditFinding> out;
  for (const auto& e : report.experiments) {
    for (const auto& row : e.rows) {
      if (row.skipped || !integral(row.df) || row.n_items == 0) continue;
      if (static_cast<long>(row.df) != row.expected_df) {
        out.push_back({e.experiment_id, row.label, row.df, row.expected_df});
      }
    }
  }
  return out;
}

std::string render_table(const EffectReport& report) {
  std::ostringstream out;
  const auto& m = report.metadata;
  out << "Model: " << m.model << "\n";
  out << "Config digest: " << m.config_digest << "\n";
  out << "Run validity (catch trials): "
      << (m.run_valid ? (*m.run_valid ? "valid" : "INVALID") : "not measured") << "\n";
  for (const auto& a : m.assumptions) out << "Assumption: " << a << "\n";

  for (const auto& e : report.experiments) {
    out << "\n== " << e.experiment_id << " ==\n";
    if (e.anova) render_anova(out, *e.anova);
    if (!e.rows.empty()) render_contrast(out, e);
    out << "not-relevant: " << e.not_relevant << " of " << e.scored << " scored\n";
    if (e.catch_mean) {
      out << "catch trials: mean confidence " << printf_double("%.4f", *e.catch_mean) << " ("
          << (*e.catch_valid ? "valid" : "INVALID") << ")\n";
    }
    for (const auto& n : e.notes) out << "note: " << n << "\n";
  }

  const auto findings = audit_df(report);
  out << "\ndf audit: " << (findings.empty() ? "all rows consistent" : "MISMATCH") << "\n";
  for (const auto& f : findings) {
    out << fmt::format("  {} / {}: df {} but design gives {}\n", f.experiment_id, f.label,
                       format_df(f.df), f.expected_df);
  }
  return out.str();
}

std::string render_csv(const EffectReport& report) {
  std::string out = "experiment,mean_a,mean_b,p,t,df,n_items\n";
  for (const auto& e : report.experiments) {
    for (const auto& row : e.rows) {
      out += fmt::format("{},{},{},{},{},{},{}\n", csv_quote(row.label),
                         printf_double("%.17g", row.mean_a), printf_double("%.17g", row.mean_b),
                         printf_double("%.17g", row.p), printf_double("%.17g", row.t),
                         printf_double("%.17g", row.df), row.n_items);
    }
  }
  return out;
}

std::vector<CsvEffectRow> parse_effect_csv(std::string_view text) {
  std::vector<CsvEffectRow> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1) {
      if (line != "experiment,mean_a,mean_b,p,t,df,n_items") {
        throw ParseError("unexpected CSV header", lineno);
      }
      continue;
    }
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 7) throw ParseError("expected 7 fields", lineno);
    CsvEffectRow r;
    r.experiment = f[0];
    r.mean_a = parse_double(f[1], lineno);
    r.mean_b = parse_double(f[2], lineno);
    r.p = parse_double(f[3], lineno);
    r.t = parse_double(f[4], lineno);
    r.df = parse_double(f[5], lineno);
    r.n_items = static_cast<std::size_t>(parse_double(f[6], lineno));
    rows.push_back(std::move(r));
  }
  return rows;
}

void to_json(nlohmann::json& j, const EffectReport& r) {
  const auto& m = r.metadata;
  j = nlohmann::json{{"schema_version", m.schema_version},
                     {"metadata",
                      {{"model", m.model},
                       {"config_digest", m.config_digest},
                       {"generated_at", m.generated_at},
                       {"assumptions", m.assumptions},
                       {"run_valid", m.run_valid ? nlohmann::json(*m.run_valid)
                                                 : nlohmann::json(nullptr)}}},
                     {"experiments", r.experiments}};
  nlohmann::json counts = nlohmann::json::object();
  for (const auto& e : r.experiments) counts[e.experiment_id] = e.not_relevant;
  j["metadata"]["not_relevant"] = std::move(counts);
}

void from_json(const nlohmann::json& j, EffectReport& r) {
  r.metadata.schema_version = j.at("schema_version").get<int>();
  const auto& m = j.at("metadata");
  m.at("model").get_to(r.metadata.model);
  m.at("config_digest").get_to(r.metadata.config_digest);
  m.at("generated_at").get_to(r.metadata.generated_at);
  m.at("assumptions").get_to(r.metadata.assumptions);
  r.metadata.run_valid.reset();
  if (!m.at("run_valid").is_null()) r.metadata.run_valid = m["run_valid"].get<bool>();
  j.at("experiments").get_to(r.experiments);
}

std::string export_run(const EffectReport& report) {
  return nlohmann::json(report).dump(2) + "\n";
}

EffectReport import_run(std::string_view document) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(document);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("report document: ") + e.what(), 0);
  }
  if (!j.is_object() || !j.contains("schema_version")) {
    throw ParseError("report document has no schema_version", 0);
  }
  if (j["schema_version"] != kReportSchemaVersion) {
    throw ParseError("unsupported report schema_version " + j["schema_version"].dump(), 0);
  }
  try {
    return j.get<EffectReport>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("report document: ") + e.what(), 0);
  }
}

std::vector<std::filesystem::path> write_report_files(const EffectReport& report,
                                                      const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& name, const std::string& content) {
    const auto path = dir / name;
    write_file(path, content);
    written.push_back(path);
  };
  emit("report.txt", render_table(report));
  emit("report.csv", render_csv(report));
  emit("report.json", export_run(report));
  for (const auto& e : report.experiments) {
    if (!e.anova || e.anova->buckets.size() < 2) continue;
    const auto& id = e.experiment_id;
    const auto name = (id.rfind("distance", 0) == 0 ? id : "distance-" + id) + ".svg";
    emit(name, render_distance_curve(e.anova->buckets, id));
  }
  return written;
}

}  // namespace cogfx
