#pragma once

// Run configuration: a line-oriented `key = value` file plus two built-in
// presets. Lines starting with '#' are comments. `watch_path` and `pattern`
// may repeat; every other key is single-valued and the last one wins.
//
//   project_name        string
//   repo                path to a local clone
//   branch              revision to walk (default HEAD)
//   mode                declaration | file
//   watch_path          git glob pathspec (repeatable)
//   pattern             ECMAScript regex with one capture group (repeatable)
//   file_filter         glob matched against file names, e.g. *.yml
//   since / until       ISO-8601 date or instant
//   analysis_months     T, months
//   lines_of_code       L
//   release_cycle_days  tau, days
//   snapshot            censoring instant; defaults to the last mined commit
//   refactor_policy     coalesce | raw
//   include_anomalous   true | false
//   bulk_threshold      events per commit
//   output_dir          directory for artifacts

#include <charconv>
#include <filesystem>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "togglescope/error.hpp"
#include "togglescope/ledger.hpp"
#include "togglescope/miner.hpp"
#include "togglescope/time.hpp"

namespace togglescope {

struct RunPolicies {
  RefactorPolicy refactor_policy = RefactorPolicy::CoalesceSameCommit;
  bool include_anomalous = false;
  std::size_t bulk_threshold = kDefaultBulkThreshold;
};

struct RunConfig {
  ProjectContext project;
  ExtractorConfig extractor;
  RunPolicies policies;
  std::filesystem::path repo;
  std::optional<Instant> since;
  std::optional<Instant> until;
  std::filesystem::path output_dir = ".";

  void validate_window() const {
    if (since && until && *until < *since) throw ConfigError("--until is before --since");
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& key, const std::string& v) {
  double d = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
  if (ec != std::errc{} || p != v.data() + v.size()) throw ConfigError(key + ": not a number: '" + v + "'");
  return d;
}

inline long long parse_integer(const std::string& key, const std::string& v) {
  long long n = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
  if (ec != std::errc{} || p != v.data() + v.size()) throw ConfigError(key + ": not an integer: '" + v + "'");
  return n;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

}  // namespace detail

// Applies the settings in `is` on top of `cfg`. Repeatable keys named in the
// file replace the inherited list rather than extending it.
inline void apply_config(RunConfig& cfg, std::istream& is) {
  bool watch_reset = false, pattern_reset = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const auto key = detail::trim(std::string_view(t).substr(0, eq));
    const auto val = detail::trim(std::string_view(t).substr(eq + 1));

    if (key == "project_name") {
      cfg.project.project_name = val;
    } else if (key == "repo") {
      cfg.repo = val;
    } else if (key == "branch") {
      cfg.extractor.branch = val;
    } else if (key == "mode") {
      cfg.extractor.mode = parse_extractor_mode(val);
    } else if (key == "watch_path") {
      if (!watch_reset) cfg.extractor.watch_paths.clear();
      watch_reset = true;
      cfg.extractor.watch_paths.push_back(val);
    } else if (key == "pattern") {
      if (!pattern_reset) cfg.extractor.declaration_patterns.clear();
      pattern_reset = true;
      cfg.extractor.declaration_patterns.push_back(val);
    } else if (key == "file_filter") {
      cfg.extractor.file_name_filter = val;
    } else if (key == "since") {
      cfg.since = parse_iso8601(val);
    } else if (key == "until") {
      cfg.until = parse_iso8601(val);
    } else if (key == "analysis_months") {
      cfg.project.analysis_months = detail::parse_double(key, val);
    } else if (key == "lines_of_code") {
      cfg.project.lines_of_code = detail::parse_integer(key, val);
    } else if (key == "release_cycle_days") {
      cfg.project.release_cycle_days = detail::parse_double(key, val);
    } else if (key == "snapshot") {
      cfg.project.snapshot_time = parse_iso8601(val);
    } else if (key == "refactor_policy") {
      cfg.policies.refactor_policy = parse_refactor_policy(val);
    } else if (key == "include_anomalous") {
      cfg.policies.include_anomalous = detail::parse_bool(key, val);
    } else if (key == "bulk_threshold") {
      const auto n = detail::parse_integer(key, val);
      if (n < 1) throw ConfigError("bulk_threshold must be >= 1");
      cfg.policies.bulk_threshold = static_cast<std::size_t>(n);
    } else if (key == "output_dir") {
      cfg.output_dir = val;
    } else {
      throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
}

inline void apply_config_text(RunConfig& cfg, std::string_view text) {
  std::istringstream is{std::string(text)};
  apply_config(cfg, is);
}

// Kubernetes feature gates: declarations in kube_features.go, in both the
// current and the pre-2019 syntax. tau = 120 d is back-derived from a
// 734-day median at 6.1 release cycles.
inline constexpr std::string_view kKubernetesPreset = R"(project_name = kubernetes
branch = master
mode = declaration
watch_path = pkg/features/kube_features.go
pattern = ^\s*([A-Za-z][A-Za-z0-9_]*)\s+featuregate\.Feature\s*=\s*"[A-Za-z0-9_]+"
pattern = ^\s*([A-Za-z][A-Za-z0-9_]*)\s+utilfeature\.Feature\s*=\s*"[A-Za-z0-9_]+"
analysis_months = 103
lines_of_code = 9980000
release_cycle_days = 120
)";

// GitLab feature flags: one YAML file per flag; tau = 30 d (185 d / 6.2).
inline constexpr std::string_view kGitlabPreset = R"(project_name = gitlab
branch = master
mode = file
watch_path = config/feature_flags/**
file_filter = *.yml
analysis_months = 62
lines_of_code = 4860000
release_cycle_days = 30
)";

inline std::string_view preset_text(const std::string& name) {
  if (name == "kubernetes-gates") return kKubernetesPreset;
  if (name == "gitlab-flags") return kGitlabPreset;
  throw ConfigError("unknown preset '" + name + "' (expected kubernetes-gates or gitlab-flags)");
}

}  // namespace togglescope
