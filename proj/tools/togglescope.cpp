// togglescope: mine feature-toggle lifecycles from git history and assess
// toggle inventory health.
//
//   togglescope mine    --preset kubernetes-gates --repo ./kubernetes --out out/
//   togglescope report  --preset kubernetes-gates --out out/
//   togglescope assess  10.2 1.5 0.74 0.016 6.1
//   togglescope export-community --metrics out/metrics.json --csv community.csv
//   togglescope thresholds --out thresholds.json
//
// Exit codes: 0 ok, 1 usage/config error, 2 environment/IO error.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "togglescope/togglescope.hpp"

namespace fs = std::filesystem;
using namespace togglescope;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitIo = 2;

struct CommonOptions {
  std::string config_path;
  std::string preset;
  std::string repo;
  std::string branch;
  std::string since;
  std::string until;
  std::string refactor_policy;
  bool include_anomalous = false;
  std::optional<std::size_t> bulk_threshold;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "Run configuration file (key = value)");
  cmd->add_option("--preset", o.preset, "Built-in preset")->check(CLI::IsMember({"kubernetes-gates", "gitlab-flags"}));
  cmd->add_option("--out", o.out, "Output directory");
}

void add_mining(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--repo", o.repo, "Local git repository");
  cmd->add_option("--branch", o.branch, "Revision to walk");
  cmd->add_option("--since", o.since, "Ignore commits before this ISO-8601 date");
  cmd->add_option("--until", o.until, "Ignore commits after this ISO-8601 date");
  cmd->add_option("--bulk-threshold", o.bulk_threshold, "Events per commit that mark a bulk change")
      ->check(CLI::PositiveNumber);
}

void add_analysis(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--refactor-policy", o.refactor_policy, "Same-commit remove+add handling")
      ->check(CLI::IsMember({"coalesce", "raw"}));
  cmd->add_flag("--include-anomalous", o.include_anomalous,
                "Keep negative-lifespan toggles (clamped at 0) in survival and tiers");
  cmd->add_option("--bulk-threshold", o.bulk_threshold, "Events per commit that mark a bulk change")
      ->check(CLI::PositiveNumber);
}

RunConfig resolve_config(const CommonOptions& o) {
  RunConfig cfg;
  if (!o.preset.empty()) apply_config_text(cfg, preset_text(o.preset));
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw ConfigError("cannot read config file " + o.config_path);
    apply_config(cfg, in);
  }
  if (!o.repo.empty()) cfg.repo = o.repo;
  if (!o.branch.empty()) cfg.extractor.branch = o.branch;
  if (!o.since.empty()) cfg.since = parse_iso8601(o.since);
  if (!o.until.empty()) cfg.until = parse_iso8601(o.until);
  if (!o.refactor_policy.empty()) cfg.policies.refactor_policy = parse_refactor_policy(o.refactor_policy);
  if (o.include_anomalous) cfg.policies.include_anomalous = true;
  if (o.bulk_threshold) cfg.policies.bulk_threshold = *o.bulk_threshold;
  if (!o.out.empty()) cfg.output_dir = o.out;
  cfg.validate_window();
  return cfg;
}

ThresholdTable load_thresholds(const std::string& path) {
  if (path.empty()) return default_thresholds();
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read thresholds file " + path);
  return read_thresholds(in);
}

int cmd_mine(const CommonOptions& o) {
  const auto cfg = resolve_config(o);
  if (cfg.repo.empty()) throw ConfigError("no repository given (--repo or 'repo' in the config)");
  auto mined = mine_repository(cfg.repo, cfg.extractor, cfg.since, cfg.until);

  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) throw RepoError("cannot create " + cfg.output_dir.string() + ": " + ec.message());
  std::ostringstream jsonl;
  write_jsonl(jsonl, mined.ledger);
  const auto events_path = cfg.output_dir / "events.jsonl";
  write_file_atomic(events_path, jsonl.str());
  write_file_atomic(ledger_meta_path(events_path), ledger_meta_json(mined.ledger).dump(2) + "\n");

  const auto& l = mined.ledger;
  std::cout << "repository: " << l.repo_label() << " (" << cfg.extractor.branch << ")\n";
  if (mined.commits_in_range > 0) {
    std::cout << "range: " << format_iso8601(l.mined_range().first) << " .. " << format_iso8601(l.mined_range().last)
              << "\n";
  }
  std::cout << "commits walked: " << mined.commits_in_range << ", touching watch paths: " << mined.commits_examined
            << "\n";
  std::cout << "events: " << l.size() << " (" << l.count(Action::Added) << " added, " << l.count(Action::Removed)
            << " removed)\n";
  for (const auto& b : detect_bulk_events(l, cfg.policies.bulk_threshold)) {
    std::cout << "bulk commit " << b.commit_id << " " << format_iso8601(b.timestamp) << ": +" << b.add_count << " -"
              << b.remove_count << "\n";
  }
  for (const auto& w : mined.warnings) std::cout << "warning: " << w << "\n";
  std::cout << "wrote " << events_path.string() << "\n";
  return kExitOk;
}

int cmd_report(const CommonOptions& o, const std::string& events_arg, const std::string& thresholds_path) {
  auto cfg = resolve_config(o);
  const auto thresholds = load_thresholds(thresholds_path);
  const fs::path events_path = events_arg.empty() ? cfg.output_dir / "events.jsonl" : fs::path(events_arg);
  if (!fs::exists(events_path)) throw RepoError("events file not found: " + events_path.string());
  auto ledger = load_ledger(events_path);
  if (cfg.project.project_name.empty()) cfg.project.project_name = ledger.repo_label();
  const auto analysis = analyze(std::move(ledger), cfg.project, cfg.policies, thresholds);
  write_report_artifacts(analysis, cfg.output_dir);
  write_assessment_text(std::cout, analysis.assessment);
  for (const auto& w : analysis.warnings) std::cout << "warning: " << w << "\n";
  std::cout << "wrote report to " << cfg.output_dir.string() << "\n";
  return kExitOk;
}

std::optional<double> parse_number(const std::string& s) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

int cmd_assess(const std::vector<std::string>& inline_values, const std::string& metrics_path,
               const std::string& thresholds_path, const std::string& name, bool json) {
  const auto thresholds = load_thresholds(thresholds_path);
  MetricValues values;
  if (!metrics_path.empty()) {
    if (!inline_values.empty()) throw ConfigError("give either --metrics or inline values, not both");
    ojson j;
    try {
      j = ojson::parse(read_file(metrics_path));
    } catch (const nlohmann::json::exception& ex) {
      throw ConfigError(std::string("metrics file is not valid JSON: ") + ex.what());
    }
    values = values_of(metric_set_from_json(j));
  } else {
    if (inline_values.empty()) throw ConfigError("no metrics given (--metrics PATH or up to five values)");
    if (inline_values.size() > 5) throw ConfigError("at most five metric values expected");
    for (std::size_t i = 0; i < inline_values.size(); ++i) {
      const auto v = parse_number(inline_values[i]);
      if (!v) throw ConfigError("not a number: '" + inline_values[i] + "'");
      values.values[i] = *v;
    }
  }
  if (!name.empty()) values.project_name = name;
  const auto a = assess_project(values, thresholds);
  if (json) {
    std::cout << to_json(a).dump(2) << "\n";
  } else {
    write_assessment_text(std::cout, a);
  }
  return kExitOk;
}

int cmd_export_community(const std::vector<std::string>& metrics_paths, const std::string& csv_path,
                         const std::string& snapshot_date) {
  std::vector<MetricSet> sets;
  for (const auto& p : metrics_paths) {
    ojson j;
    try {
      j = ojson::parse(read_file(p));
    } catch (const nlohmann::json::exception& ex) {
      throw ConfigError(p + " is not valid JSON: " + std::string(ex.what()));
    }
    auto m = metric_set_from_json(j);
    if (!snapshot_date.empty()) m.snapshot_date = snapshot_date;
    sets.push_back(std::move(m));
  }
  append_community_rows(csv_path, sets);
  std::cout << "appended " << sets.size() << " row(s) to " << csv_path << "\n";
  return kExitOk;
}

int cmd_thresholds(const std::string& out, const std::string& check_path) {
  if (!check_path.empty()) {
    load_thresholds(check_path);
    std::cout << check_path << ": valid\n";
    return kExitOk;
  }
  const auto text = to_json(default_thresholds()).dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    write_file_atomic(out, text);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feature-toggle lifecycle mining and health assessment"};
  app.require_subcommand(1);

  CommonOptions mine_opts;
  auto* mine = app.add_subcommand("mine", "Extract toggle events from git history into events.jsonl");
  add_common(mine, mine_opts);
  add_mining(mine, mine_opts);

  CommonOptions report_opts;
  std::string report_events, report_thresholds;
  auto* report = app.add_subcommand("report", "Compute metrics, survival and tiers from events.jsonl");
  add_common(report, report_opts);
  add_analysis(report, report_opts);
  report->add_option("--events", report_events, "Event ledger (default: OUT/events.jsonl)");
  report->add_option("--thresholds", report_thresholds, "Threshold zones JSON");

  std::vector<std::string> assess_values;
  std::string assess_metrics, assess_thresholds, assess_name;
  bool assess_json = false;
  auto* assess = app.add_subcommand("assess", "Classify five metric values into threshold zones");
  assess->add_option("values", assess_values, "churn net_accumulation cleanup_ratio density norm_lifespan");
  assess->add_option("--metrics", assess_metrics, "metrics.json written by report");
  assess->add_option("--thresholds", assess_thresholds, "Threshold zones JSON");
  assess->add_option("--name", assess_name, "Project name for the output");
  assess->add_flag("--json", assess_json, "Machine-readable output");

  std::vector<std::string> export_metrics;
  std::string export_csv = "community.csv", export_date;
  auto* exp = app.add_subcommand("export-community", "Append metric sets to the community CSV");
  exp->add_option("--metrics", export_metrics, "metrics.json file(s)")->required();
  exp->add_option("--csv", export_csv, "Community CSV path");
  exp->add_option("--snapshot-date", export_date, "Override the snapshot date column");

  std::string thresholds_out, thresholds_check;
  auto* thr = app.add_subcommand("thresholds", "Print or write the default threshold zones JSON");
  thr->add_option("--out", thresholds_out, "Write to this file instead of stdout");
  thr->add_option("--check", thresholds_check, "Validate a thresholds file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*mine) return cmd_mine(mine_opts);
    if (*report) return cmd_report(report_opts, report_events, report_thresholds);
    if (*assess) return cmd_assess(assess_values, assess_metrics, assess_thresholds, assess_name, assess_json);
    if (*exp) return cmd_export_community(export_metrics, export_csv, export_date);
    if (*thr) return cmd_thresholds(thresholds_out, thresholds_check);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const RepoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitConfig;
}
