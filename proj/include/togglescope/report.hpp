#pragma once

// Ledger -> records -> metrics -> survival -> assessment, and the artifacts
// written by `togglescope report` / `export-community`.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "togglescope/assessment.hpp"
#include "togglescope/config.hpp"
#include "togglescope/error.hpp"
#include "togglescope/ledger.hpp"
#include "togglescope/metrics.hpp"
#include "togglescope/miner.hpp"
#include "togglescope/survival.hpp"

namespace togglescope {

struct Analysis {
  ProjectContext context;
  RunPolicies policies;
  Instant snapshot{};
  EventLedger ledger;
  RecordSet records;
  MetricSet metrics;
  SurvivalCurve curve;
  LifespanTiers tiers;
  PermanentToggles permanent;
  TimeSeries series;
  std::vector<BulkCommit> bulk;
  Assessment assessment;
  std::size_t anomalous_count = 0;
  std::vector<std::string> warnings;
};

inline Analysis analyze(EventLedger ledger, const ProjectContext& context, const RunPolicies& policies,
                        const ThresholdTable& thresholds) {
  context.validate();
  Analysis a;
  a.context = context;
  a.policies = policies;
  a.snapshot = context.snapshot_time.value_or(ledger.mined_range().last);
  if (!ledger.empty() && a.snapshot < ledger.events().back().timestamp) {
    throw ConfigError("snapshot " + format_iso8601(a.snapshot) + " precedes the last event " +
                      format_iso8601(ledger.events().back().timestamp));
  }
  a.ledger = std::move(ledger);
  a.records = build_records(a.ledger, policies.refactor_policy);
  a.warnings = a.records.warnings;
  for (const auto& r : a.records.records) a.anomalous_count += r.anomalous ? 1 : 0;

  MetricInputs in;
  in.additions_total = a.ledger.count(Action::Added);
  in.removals_total = a.ledger.count(Action::Removed);
  in.active_count = a.records.count(RecordStatus::Active);
  in.analysis_months = context.analysis_months;
  in.lines_of_code = context.lines_of_code;
  in.release_cycle_days = context.release_cycle_days;

  if (a.ledger.empty()) {
    a.metrics = undefined_metrics(context.project_name, in, "no toggle events mined");
  } else {
    a.curve = kaplan_meier(a.records.records, a.snapshot, policies.include_anomalous);
    in.median_survival_days = median_survival(a.curve);
    a.metrics = compute_metrics(context.project_name, in);
    a.tiers = classify_tiers(a.records.records, policies.include_anomalous);
    a.permanent = flag_permanent(a.records.records, a.snapshot);
    a.series = build_time_series(a.ledger, a.snapshot);
    a.bulk = detect_bulk_events(a.ledger, policies.bulk_threshold);
    if (auto w = analysis_period_warning(a.ledger, context.analysis_months)) a.warnings.push_back(*w);
    for (const auto& w : a.series.warnings) a.warnings.push_back(w);
  }
  a.metrics.snapshot_date = format_date(utc_day(a.snapshot));
  a.assessment = assess_project(a.metrics, thresholds);
  return a;
}

// ---------------------------------------------------------------------------
// Rendering

inline void write_timeseries_csv(std::ostream& os, const TimeSeries& ts) {
  os << "series,period,additions,removals,active\n";
  for (const auto& p : ts.monthly) {
    os << "monthly," << format_month(p.month) << ',' << p.additions << ',' << p.removals << ",\n";
  }
  for (const auto& p : ts.daily_active) os << "daily," << format_date(p.day) << ",,," << p.active << '\n';
}

inline std::string metric_cell(const OptionalMetric& m) {
  return m.value ? format_metric(m.value) : "n/a (" + m.reason + ")";
}

inline std::string render_report_md(const Analysis& a) {
  std::ostringstream os;
  const auto& name = a.context.project_name.empty() ? std::string("(unnamed project)") : a.context.project_name;
  os << "# Toggle health report: " << name << "\n\n";
  os << "- Snapshot: " << format_iso8601(a.snapshot) << "\n";
  if (!a.ledger.empty()) {
    os << "- Mined range: " << format_iso8601(a.ledger.mined_range().first) << " .. "
       << format_iso8601(a.ledger.mined_range().last) << "\n";
  }
  const auto& in = a.metrics.inputs_echo;
  os << "- Events: " << in.additions_total << " additions, " << in.removals_total << " removals; "
     << in.active_count << " active toggles\n";
  os << "- T = " << format_metric(a.context.analysis_months) << " months, L = " << a.context.lines_of_code
     << " LoC, tau = " << format_metric(a.context.release_cycle_days) << " days\n";
  os << "- Refactor policy: "
     << (a.policies.refactor_policy == RefactorPolicy::CoalesceSameCommit ? "coalesce" : "raw") << "\n\n";

  os << "## Metrics\n\n| Metric | Value | Zone | Description |\n|---|---|---|---|\n";
  const std::array<const OptionalMetric*, 5> values = {&a.metrics.churn_rate, &a.metrics.net_accumulation,
                                                       &a.metrics.cleanup_ratio, &a.metrics.toggle_density,
                                                       &a.metrics.normalized_lifespan};
  for (auto m : kAllMetrics) {
    const auto& ma = a.assessment.of(m);
    os << "| " << metric_label(m) << " | " << metric_cell(*values[index_of(m)]) << " | " << ma.zone.zone_name << " | "
       << ma.zone.description << " |\n";
  }
  os << "\nProfile: **" << to_string(a.assessment.profile) << "** (" << a.assessment.rationale << ")\n";
  const auto concerns = a.assessment.concerns();
  if (!concerns.empty()) {
    os << "\nConcerns:\n";
    for (const auto& c : concerns) os << "- " << c << "\n";
  }

  os << "\n## Survival\n\n";
  os << "- Median survival (Kaplan-Meier): "
     << (in.median_survival_days ? format_metric(in.median_survival_days) + " days" : std::string("n/a (undefined)"))
     << "\n";
  os << "- Anomalous (negative lifespan) records: " << a.anomalous_count
     << (a.policies.include_anomalous ? " (included, clamped at 0)" : " (excluded from survival and tiers)") << "\n\n";

  os << "## Lifespan tiers\n\n";
  if (a.tiers.status == TierStatus::Ok) {
    os << "| Tier | Rule | Count |\n|---|---|---|\n";
    os << "| Temporary | < " << format_metric(a.tiers.q1_days) << " days | " << a.tiers.temporary.size() << " |\n";
    os << "| Intermediate | " << format_metric(a.tiers.q1_days) << " .. " << format_metric(a.tiers.q3_days)
       << " days | " << a.tiers.intermediate.size() << " |\n";
    os << "| Long-lived | >= " << format_metric(a.tiers.q3_days) << " days | " << a.tiers.long_lived.size()
       << " |\n";
  } else {
    os << "n/a (no removals yet)\n";
  }

  os << "\n## De facto permanent toggles\n\n";
  if (!a.permanent.max_removed_lifespan_days) {
    os << "n/a (threshold undefined: no removed toggles)\n";
  } else {
    os << "Threshold: longest removed lifespan = " << format_metric(a.permanent.max_removed_lifespan_days)
       << " days\n\n";
    if (a.permanent.toggles.empty()) {
      os << "None.\n";
    } else {
      os << "| Toggle | Added | Age (days) | Excess (days) |\n|---|---|---|---|\n";
      for (const auto& p : a.permanent.toggles) {
        os << "| " << p.record.export_name() << " | " << format_iso8601(p.record.added_at) << " | "
           << format_metric(p.age_days) << " | " << format_metric(p.excess_days) << " |\n";
      }
    }
  }

  os << "\n## Bulk changes\n\n";
  if (a.bulk.empty()) {
    os << "None at threshold " << a.policies.bulk_threshold << ".\n";
  } else {
    os << "| Commit | Date | Additions | Removals |\n|---|---|---|---|\n";
    for (const auto& b : a.bulk) {
      os << "| " << b.commit_id << " | " << format_iso8601(b.timestamp) << " | " << b.add_count << " | "
         << b.remove_count << " |\n";
    }
  }

  if (!a.warnings.empty()) {
    os << "\n## Warnings\n\n";
    for (const auto& w : a.warnings) os << "- " << w << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Files

// Writes through a temporary sibling and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw RepoError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw RepoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw RepoError("cannot rename into " + path.string() + ": " + ec.message());
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RepoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// events.jsonl -> events.meta.json
inline std::filesystem::path ledger_meta_path(const std::filesystem::path& events_path) {
  return events_path.parent_path() / (events_path.stem().string() + ".meta.json");
}

inline ojson ledger_meta_json(const EventLedger& ledger) {
  ojson j;
  j["repo"] = ledger.repo_label();
  j["mined_first"] = format_iso8601(ledger.mined_range().first);
  j["mined_last"] = format_iso8601(ledger.mined_range().last);
  j["events"] = ledger.size();
  return j;
}

// Reads the JSONL ledger and, when present, its sidecar metadata.
inline EventLedger load_ledger(const std::filesystem::path& events_path) {
  std::istringstream in(read_file(events_path));
  auto events = read_jsonl(in);
  std::string label = events_path.stem().string();
  std::optional<TimeRange> range;
  const auto meta = ledger_meta_path(events_path);
  if (std::filesystem::exists(meta)) {
    try {
      const auto j = ojson::parse(read_file(meta));
      label = j.value("repo", label);
      range = TimeRange{parse_iso8601(j.at("mined_first").get<std::string>()),
                        parse_iso8601(j.at("mined_last").get<std::string>())};
    } catch (const nlohmann::json::exception& ex) {
      throw ConfigError("malformed " + meta.string() + ": " + ex.what());
    }
    if (events.empty()) range.reset();
  }
  return EventLedger(std::move(events), label, range);
}

inline void write_report_artifacts(const Analysis& a, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw RepoError("cannot create output directory " + dir.string() + ": " + ec.message());

  write_file_atomic(dir / "metrics.json", to_json(a.metrics).dump(2) + "\n");
  std::ostringstream curve;
  write_curve_csv(curve, a.curve);
  write_file_atomic(dir / "survival.csv", curve.str());
  write_file_atomic(dir / "tiers.json", to_json(a.tiers).dump(2) + "\n");
  write_file_atomic(dir / "permanent.json", to_json(a.permanent).dump(2) + "\n");
  std::ostringstream series;
  write_timeseries_csv(series, a.series);
  write_file_atomic(dir / "timeseries.csv", series.str());
  write_file_atomic(dir / "records.json", to_json(a.records.records).dump(2) + "\n");
  write_file_atomic(dir / "report.md", render_report_md(a));
}

// ---------------------------------------------------------------------------
// Community CSV

inline constexpr const char* kCommunityHeader =
    "project,churn_rate,net_accumulation,cleanup_ratio,toggle_density,normalized_lifespan,snapshot_date";

// Shortest representation that round-trips.
inline std::string format_exact(std::optional<double> v) {
  if (!v) return {};
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, *v);
  return std::string(buf, p);
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

inline std::string community_row(const MetricSet& m) {
  std::string row = csv_field(m.project_name);
  for (const auto* v : {&m.churn_rate, &m.net_accumulation, &m.cleanup_ratio, &m.toggle_density,
                        &m.normalized_lifespan}) {
    row += "," + format_exact(v->value);
  }
  return row + "," + csv_field(m.snapshot_date);
}

// Appends rows; writes the header only when the file is new or empty.
inline void append_community_rows(const std::filesystem::path& path, const std::vector<MetricSet>& sets) {
  std::error_code ec;
  const bool fresh = !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
  bool needs_newline = false;
  if (!fresh) {
    const auto existing = read_file(path);
    needs_newline = !existing.empty() && existing.back() != '\n';
  }
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw RepoError("cannot open " + path.string() + " for appending");
  if (needs_newline) out << '\n';
  if (fresh) out << kCommunityHeader << '\n';
  for (const auto& m : sets) out << community_row(m) << '\n';
  out.flush();
  if (!out) throw RepoError("write failed: " + path.string());
}

}  // namespace togglescope
