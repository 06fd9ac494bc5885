#pragma once

// Threshold zones for the five benchmark metrics, per-project assessment with a
// Conservative / Aggressive / Mixed profile, and cross-project comparison.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "togglescope/error.hpp"
#include "togglescope/ledger.hpp"
#include "togglescope/metrics.hpp"

namespace togglescope {

enum class MetricId { Churn, NetAccumulation, CleanupRatio, Density, NormLifespan };

inline constexpr std::array<MetricId, 5> kAllMetrics = {MetricId::Churn, MetricId::NetAccumulation,
                                                        MetricId::CleanupRatio, MetricId::Density,
                                                        MetricId::NormLifespan};

inline std::size_t index_of(MetricId m) { return static_cast<std::size_t>(m); }

// Keys used in the thresholds JSON file.
inline const char* metric_key(MetricId m) {
  switch (m) {
    case MetricId::Churn: return "churn";
    case MetricId::NetAccumulation: return "net_accumulation";
    case MetricId::CleanupRatio: return "cleanup_ratio";
    case MetricId::Density: return "density";
    case MetricId::NormLifespan: return "norm_lifespan";
  }
  return "";
}

inline const char* metric_label(MetricId m) {
  switch (m) {
    case MetricId::Churn: return "Churn rate (events/month)";
    case MetricId::NetAccumulation: return "Net accumulation (toggles/month)";
    case MetricId::CleanupRatio: return "Cleanup ratio";
    case MetricId::Density: return "Toggle density (per kLoC)";
    case MetricId::NormLifespan: return "Normalized lifespan (release cycles)";
  }
  return "";
}

inline MetricId parse_metric_key(const std::string& key) {
  for (auto m : kAllMetrics) {
    if (key == metric_key(m)) return m;
  }
  throw ConfigError("unknown metric id '" + key + "'");
}

// Half-open band [min, max); a missing bound is unbounded.
struct Zone {
  std::string name;
  std::optional<double> min;
  std::optional<double> max;
  std::string description;

  bool contains(double v) const { return (!min || v >= *min) && (!max || v < *max); }
  friend bool operator==(const Zone&, const Zone&) = default;
};

// Zones per metric, listed from the healthiest / lowest-volume band outward.
struct ThresholdTable {
  std::array<std::vector<Zone>, 5> zones;

  const std::vector<Zone>& of(MetricId m) const { return zones[index_of(m)]; }
  std::vector<Zone>& of(MetricId m) { return zones[index_of(m)]; }

  // Zones must tile (-inf, inf) for net accumulation and at least [0, inf) otherwise.
  // The shipped table leaves every lowest zone open below so any finite value lands somewhere.
  void validate() const {
    for (auto m : kAllMetrics) {
      auto zs = of(m);
      const std::string key = metric_key(m);
      if (zs.empty()) throw ConfigError("no zones for metric " + key);
      std::sort(zs.begin(), zs.end(), [](const Zone& a, const Zone& b) {
        return a.min.value_or(-std::numeric_limits<double>::infinity()) <
               b.min.value_or(-std::numeric_limits<double>::infinity());
      });
      if (m == MetricId::NetAccumulation) {
        if (zs.front().min) throw ConfigError("net_accumulation zones must be unbounded below");
      } else if (zs.front().min && *zs.front().min > 0) {
        throw ConfigError(key + " zones must start at 0 or below");
      }
      if (zs.back().max) throw ConfigError(key + " zones must be unbounded above");
      for (std::size_t i = 0; i + 1 < zs.size(); ++i) {
        if (!zs[i].max || !zs[i + 1].min || *zs[i].max != *zs[i + 1].min) {
          throw ConfigError(key + " zones are not contiguous at '" + zs[i].name + "'");
        }
      }
      for (const auto& z : zs) {
        if (z.min && z.max && !(*z.min < *z.max)) throw ConfigError(key + " zone '" + z.name + "' is empty");
      }
    }
  }

  friend bool operator==(const ThresholdTable&, const ThresholdTable&) = default;
};

inline ThresholdTable default_thresholds() {
  ThresholdTable t;
  t.of(MetricId::Churn) = {
      {"Low", std::nullopt, 15.0, "Deliberate changes"},
      {"Moderate", 15.0, 100.0, "Balanced activity"},
      {"High", 100.0, std::nullopt, "Rapid iteration"},
  };
  t.of(MetricId::NetAccumulation) = {
      {"Sustainable", std::nullopt, 2.0, "Cleanup keeps pace"},
      {"Warning", 2.0, 5.0, "Gradual debt"},
      {"Critical", 5.0, std::nullopt, "One-in-one-out needed"},
  };
  t.of(MetricId::CleanupRatio) = {
      {"Healthy", 0.85, std::nullopt, ">=85% removed"},
      {"Warning", 0.70, 0.85, "Potential debt"},
      {"Critical", std::nullopt, 0.70, "Significant debt"},
  };
  t.of(MetricId::Density) = {
      {"Conservative", std::nullopt, 0.02, "Low toggle footprint"},
      {"Moderate", 0.02, 0.10, "Typical density"},
      {"Aggressive", 0.10, std::nullopt, "Strict cleanup needed"},
  };
  t.of(MetricId::NormLifespan) = {
      {"Short-lived", std::nullopt, 3.0, "Rapid cleanup"},
      {"Moderate", 3.0, 8.0, "Typical lifecycle"},
      {"Long-lived", 8.0, std::nullopt, "Extended maintenance"},
  };
  return t;
}

inline ojson to_json(const ThresholdTable& t) {
  ojson j;
  for (auto m : kAllMetrics) {
    ojson arr = ojson::array();
    for (const auto& z : t.of(m)) {
      ojson e;
      e["zone"] = z.name;
      e["min"] = z.min ? ojson(*z.min) : ojson(nullptr);
      e["max"] = z.max ? ojson(*z.max) : ojson(nullptr);
      e["description"] = z.description;
      arr.push_back(e);
    }
    j[metric_key(m)] = arr;
  }
  return j;
}

inline ThresholdTable thresholds_from_json(const ojson& j) {
  ThresholdTable t;
  std::set<std::string> seen;
  try {
    for (const auto& [key, arr] : j.items()) {
      const auto m = parse_metric_key(key);
      seen.insert(key);
      for (const auto& e : arr) {
        Zone z;
        z.name = e.at("zone").get<std::string>();
        if (!e.at("min").is_null()) z.min = e.at("min").get<double>();
        if (!e.at("max").is_null()) z.max = e.at("max").get<double>();
        z.description = e.value("description", std::string{});
        t.of(m).push_back(std::move(z));
      }
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("malformed thresholds file: ") + ex.what());
  }
  if (seen.size() != kAllMetrics.size()) throw ConfigError("thresholds file must define all five metrics");
  t.validate();
  return t;
}

inline ThresholdTable read_thresholds(std::istream& is) {
  ojson j;
  try {
    j = ojson::parse(is);
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("thresholds file is not valid JSON: ") + ex.what());
  }
  return thresholds_from_json(j);
}

struct ZoneResult {
  std::optional<std::size_t> index;  // position within the metric's zone list
  std::string zone_name;             // "not assessable" when no zone applies
  std::string description;

  bool assessable() const { return index.has_value(); }
};

inline constexpr const char* kNotAssessable = "not assessable";

inline ZoneResult classify_zone(const ThresholdTable& table, MetricId metric, std::optional<double> value) {
  if (!value || !std::isfinite(*value)) return {std::nullopt, kNotAssessable, "metric value undefined"};
  const auto& zs = table.of(metric);
  for (std::size_t i = 0; i < zs.size(); ++i) {
    if (zs[i].contains(*value)) return {i, zs[i].name, zs[i].description};
  }
  return {std::nullopt, kNotAssessable, "value outside every zone"};
}

// The five values only, any of which may be missing.
struct MetricValues {
  std::string project_name;
  std::array<std::optional<double>, 5> values;

  std::optional<double> get(MetricId m) const { return values[index_of(m)]; }
};

inline MetricValues values_of(const MetricSet& m) {
  MetricValues v;
  v.project_name = m.project_name;
  v.values = {m.churn_rate.value, m.net_accumulation.value, m.cleanup_ratio.value, m.toggle_density.value,
              m.normalized_lifespan.value};
  return v;
}

enum class Profile { Conservative, Aggressive, Mixed };

inline const char* to_string(Profile p) {
  switch (p) {
    case Profile::Conservative: return "Conservative";
    case Profile::Aggressive: return "Aggressive";
    case Profile::Mixed: return "Mixed";
  }
  return "";
}

// An archetype holds when every listed metric falls in one of its zones.
struct ProfileRule {
  std::map<MetricId, std::set<std::string>> conservative;
  std::map<MetricId, std::set<std::string>> aggressive;
};

inline ProfileRule default_profile_rule() {
  return {
      {{MetricId::Churn, {"Low"}}, {MetricId::Density, {"Conservative"}}, {MetricId::NetAccumulation, {"Sustainable"}}},
      {{MetricId::Churn, {"High"}}, {MetricId::Density, {"Moderate", "Aggressive"}}},
  };
}

// Zone names that mark a metric as a concern in reports.
inline bool is_concern_zone(const std::string& zone) { return zone == "Warning" || zone == "Critical"; }

struct MetricAssessment {
  MetricId metric;
  std::optional<double> value;
  ZoneResult zone;
};

struct Assessment {
  std::string project_name;
  std::array<MetricAssessment, 5> metrics;
  Profile profile = Profile::Mixed;
  std::string rationale;

  const MetricAssessment& of(MetricId m) const { return metrics[index_of(m)]; }

  std::vector<std::string> concerns() const {
    std::vector<std::string> out;
    for (const auto& ma : metrics) {
      if (is_concern_zone(ma.zone.zone_name)) out.push_back(std::string(metric_key(ma.metric)) + ": " + ma.zone.zone_name);
    }
    return out;
  }
};

namespace detail {

inline std::vector<std::string> divergences(const Assessment& a, const std::map<MetricId, std::set<std::string>>& want) {
  std::vector<std::string> out;
  for (const auto& [m, zones] : want) {
    const auto& z = a.of(m).zone;
    if (!zones.count(z.zone_name)) out.push_back(std::string(metric_key(m)) + " (" + z.zone_name + ")");
  }
  return out;
}

inline std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string s;
  for (std::size_t i = 0; i < parts.size(); ++i) s += (i ? sep : "") + parts[i];
  return s;
}

}  // namespace detail

inline Assessment assess_project(const MetricValues& values, const ThresholdTable& table,
                                 const ProfileRule& rule = default_profile_rule()) {
  Assessment a;
  a.project_name = values.project_name;
  for (auto m : kAllMetrics) a.metrics[index_of(m)] = {m, values.get(m), classify_zone(table, m, values.get(m))};

  const auto churn = values.get(MetricId::Churn);
  if (!churn || *churn == 0.0) {
    a.profile = Profile::Mixed;
    a.rationale = "insufficient activity: no toggle events in the analysis period";
    return a;
  }
  const auto off_conservative = detail::divergences(a, rule.conservative);
  const auto off_aggressive = detail::divergences(a, rule.aggressive);
  if (off_conservative.empty()) {
    a.profile = Profile::Conservative;
    a.rationale = "low-volume toggle management: every conservative criterion met";
  } else if (off_aggressive.empty()) {
    a.profile = Profile::Aggressive;
    a.rationale = "high-churn toggle management: every aggressive criterion met";
  } else if (off_conservative.size() <= off_aggressive.size()) {
    a.profile = Profile::Mixed;
    a.rationale = "closest to Conservative; diverges on " + detail::join(off_conservative, ", ");
  } else {
    a.profile = Profile::Mixed;
    a.rationale = "closest to Aggressive; diverges on " + detail::join(off_aggressive, ", ");
  }
  return a;
}

inline Assessment assess_project(const MetricSet& metrics, const ThresholdTable& table,
                                 const ProfileRule& rule = default_profile_rule()) {
  return assess_project(values_of(metrics), table, rule);
}

// Compact display form: 10.2, 0.016, 104.5, 6.117
inline std::string format_metric(std::optional<double> v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", *v);
  return buf;
}

inline ojson to_json(const Assessment& a) {
  ojson j;
  j["project"] = a.project_name;
  ojson ms;
  for (const auto& ma : a.metrics) {
    ojson e;
    e["value"] = ma.value ? ojson(*ma.value) : ojson(nullptr);
    e["zone"] = ma.zone.zone_name;
    e["description"] = ma.zone.description;
    ms[metric_key(ma.metric)] = e;
  }
  j["metrics"] = ms;
  j["profile"] = to_string(a.profile);
  j["rationale"] = a.rationale;
  j["concerns"] = a.concerns();
  return j;
}

inline void write_assessment_text(std::ostream& os, const Assessment& a) {
  os << "Project: " << (a.project_name.empty() ? "(unnamed)" : a.project_name) << '\n';
  for (const auto& ma : a.metrics) {
    char line[160];
    std::snprintf(line, sizeof line, "  %-38s %-10s %-14s %s\n", metric_label(ma.metric), format_metric(ma.value).c_str(),
                  ma.zone.zone_name.c_str(), ma.zone.description.c_str());
    os << line;
  }
  os << "Profile: " << to_string(a.profile) << " (" << a.rationale << ")\n";
  const auto c = a.concerns();
  if (!c.empty()) os << "Concerns: " << detail::join(c, "; ") << '\n';
}

struct ComparisonTable {
  std::vector<std::string> columns;  // project names, disambiguated
  std::vector<std::string> row_labels;
  std::vector<std::vector<std::string>> cells;  // [row][column]

  std::string to_markdown() const {
    std::ostringstream os;
    os << "| Metric |";
    for (const auto& c : columns) os << ' ' << c << " |";
    os << "\n|---|";
    for (std::size_t i = 0; i < columns.size(); ++i) os << "---|";
    os << '\n';
    for (std::size_t r = 0; r < row_labels.size(); ++r) {
      os << "| " << row_labels[r] << " |";
      for (const auto& cell : cells[r]) os << ' ' << cell << " |";
      os << '\n';
    }
    return os.str();
  }
};

// One row per metric plus a profile row; duplicate names get " (2)", " (3)"...
inline ComparisonTable compare_projects(const std::vector<Assessment>& assessments) {
  if (assessments.empty()) throw ConfigError("nothing to compare");
  ComparisonTable t;
  std::map<std::string, int> uses;
  for (const auto& a : assessments) {
    const int n = ++uses[a.project_name];
    t.columns.push_back(n == 1 ? a.project_name : a.project_name + " (" + std::to_string(n) + ")");
  }
  for (auto m : kAllMetrics) {
    t.row_labels.push_back(metric_label(m));
    auto& row = t.cells.emplace_back();
    for (const auto& a : assessments) {
      const auto& ma = a.of(m);
      row.push_back(ma.value ? format_metric(ma.value) + " (" + ma.zone.zone_name + ")" : std::string(kNotAssessable));
    }
  }
  t.row_labels.push_back("Profile");
  auto& row = t.cells.emplace_back();
  for (const auto& a : assessments) row.push_back(to_string(a.profile));
  return t;
}

}  // namespace togglescope
