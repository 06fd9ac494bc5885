#pragma once

// The five benchmark metrics and the monthly / daily toggle time series.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "togglescope/error.hpp"
#include "togglescope/ledger.hpp"
#include "togglescope/time.hpp"

namespace togglescope {

inline constexpr double kAverageMonthDays = 30.44;

// A metric that may be undefined for the given inputs; `reason` says why.
struct OptionalMetric {
  std::optional<double> value;
  std::string reason;

  static OptionalMetric of(double v) { return {v, {}}; }
  static OptionalMetric missing(std::string why) { return {std::nullopt, std::move(why)}; }
  bool has_value() const { return value.has_value(); }
};

// C = (a + r) / T
inline double churn_rate(std::size_t additions, std::size_t removals, double months) {
  if (!(months > 0)) throw DomainError("analysis period T must be > 0 months");
  return (static_cast<double>(additions) + static_cast<double>(removals)) / months;
}

// N = (a - r) / T; negative when cleanup outpaces additions.
inline double net_accumulation(std::size_t additions, std::size_t removals, double months) {
  if (!(months > 0)) throw DomainError("analysis period T must be > 0 months");
  return (static_cast<double>(additions) - static_cast<double>(removals)) / months;
}

// R = r / a
inline OptionalMetric cleanup_ratio(std::size_t additions, std::size_t removals) {
  if (additions == 0) return OptionalMetric::missing("no data: no toggle additions");
  return OptionalMetric::of(static_cast<double>(removals) / static_cast<double>(additions));
}

// D = active / L * 1000
inline double toggle_density(std::size_t active, long long lines_of_code) {
  if (lines_of_code <= 0) throw DomainError("lines of code must be > 0");
  return static_cast<double>(active) / static_cast<double>(lines_of_code) * 1000.0;
}

// S_norm = median survival / tau
inline OptionalMetric normalized_lifespan(std::optional<double> median_survival_days, double release_cycle_days) {
  if (!(release_cycle_days > 0)) throw DomainError("release cycle must be > 0 days");
  if (!median_survival_days) return OptionalMetric::missing("median survival undefined: survival never reaches 0.5");
  return OptionalMetric::of(*median_survival_days / release_cycle_days);
}

struct MetricInputs {
  std::size_t additions_total = 0;
  std::size_t removals_total = 0;
  std::size_t active_count = 0;
  double analysis_months = 0;
  long long lines_of_code = 0;
  double release_cycle_days = 0;
  std::optional<double> median_survival_days;
};

struct MetricSet {
  std::string project_name;
  OptionalMetric churn_rate;
  OptionalMetric net_accumulation;
  OptionalMetric cleanup_ratio;
  OptionalMetric toggle_density;
  OptionalMetric normalized_lifespan;
  MetricInputs inputs_echo;
  std::string snapshot_date;  // YYYY-MM-DD of the censoring instant, may be empty
};

inline MetricSet compute_metrics(std::string project_name, const MetricInputs& in) {
  MetricSet m;
  m.project_name = std::move(project_name);
  m.churn_rate = OptionalMetric::of(churn_rate(in.additions_total, in.removals_total, in.analysis_months));
  m.net_accumulation = OptionalMetric::of(net_accumulation(in.additions_total, in.removals_total, in.analysis_months));
  m.cleanup_ratio = cleanup_ratio(in.additions_total, in.removals_total);
  m.toggle_density = OptionalMetric::of(toggle_density(in.active_count, in.lines_of_code));
  m.normalized_lifespan = normalized_lifespan(in.median_survival_days, in.release_cycle_days);
  m.inputs_echo = in;
  return m;
}

// Every metric undefined, e.g. for a ledger without events.
inline MetricSet undefined_metrics(std::string project_name, const MetricInputs& in, const std::string& reason) {
  MetricSet m;
  m.project_name = std::move(project_name);
  for (auto* f : {&m.churn_rate, &m.net_accumulation, &m.cleanup_ratio, &m.toggle_density, &m.normalized_lifespan}) {
    *f = OptionalMetric::missing(reason);
  }
  m.inputs_echo = in;
  return m;
}

// Span between the first and last event, in average-length months.
inline std::optional<double> inferred_analysis_months(const EventLedger& ledger) {
  if (ledger.empty()) return std::nullopt;
  return days_between(ledger.events().front().timestamp, ledger.events().back().timestamp) / kAverageMonthDays;
}

// Warning text when the configured T diverges from the ledger span by more than 5%.
inline std::optional<std::string> analysis_period_warning(const EventLedger& ledger, double configured_months) {
  const auto inferred = inferred_analysis_months(ledger);
  if (!inferred || !(*inferred > 0)) return std::nullopt;
  if (std::abs(*inferred - configured_months) / configured_months <= 0.05) return std::nullopt;
  return "configured analysis period T=" + std::to_string(configured_months) +
         " months diverges by more than 5% from the event span (" + std::to_string(*inferred) + " months)";
}

struct MonthlyPoint {
  std::chrono::year_month month;
  std::size_t additions = 0;
  std::size_t removals = 0;

  friend bool operator==(const MonthlyPoint&, const MonthlyPoint&) = default;
};

struct DailyPoint {
  std::chrono::sys_days day;
  long long active = 0;

  friend bool operator==(const DailyPoint&, const DailyPoint&) = default;
};

struct TimeSeries {
  std::vector<MonthlyPoint> monthly;
  std::vector<DailyPoint> daily_active;
  std::vector<std::string> warnings;
};

inline std::chrono::year_month utc_month(Instant t) {
  const std::chrono::year_month_day ymd{utc_day(t)};
  return ymd.year() / ymd.month();
}

// Calendar-month (UTC) buckets from the first to the last event, gaps included.
inline std::vector<MonthlyPoint> monthly_series(const EventLedger& ledger) {
  std::vector<MonthlyPoint> out;
  if (ledger.empty()) return out;
  const auto first = utc_month(ledger.events().front().timestamp);
  const auto last = utc_month(ledger.events().back().timestamp);
  for (auto m = first; m <= last; m += std::chrono::months{1}) out.push_back({m, 0, 0});
  for (const auto& e : ledger.events()) {
    const auto idx = (utc_month(e.timestamp) - first).count();
    auto& p = out[static_cast<std::size_t>(idx)];
    ++(e.action == Action::Added ? p.additions : p.removals);
  }
  return out;
}

// Running sum of additions minus removals, one point per UTC day from the
// first event through the snapshot day (or the last event day if later).
inline std::vector<DailyPoint> active_series(const EventLedger& ledger, std::optional<Instant> snapshot = std::nullopt,
                                             std::vector<std::string>* warnings = nullptr) {
  std::vector<DailyPoint> out;
  if (ledger.empty()) return out;
  const auto first = utc_day(ledger.events().front().timestamp);
  auto last = utc_day(ledger.events().back().timestamp);
  if (snapshot && utc_day(*snapshot) > last) last = utc_day(*snapshot);

  const auto& ev = ledger.events();
  std::size_t i = 0;
  long long running = 0;
  bool warned = false;
  for (auto d = first; d <= last; d += std::chrono::days{1}) {
    for (; i < ev.size() && utc_day(ev[i].timestamp) == d; ++i) running += ev[i].action == Action::Added ? 1 : -1;
    if (running < 0 && !warned && warnings) {
      warnings->push_back("active toggle count drops below zero on " + format_date(d) +
                          " (removals without observed additions)");
      warned = true;
    }
    out.push_back({d, running});
  }
  return out;
}

inline TimeSeries build_time_series(const EventLedger& ledger, std::optional<Instant> snapshot = std::nullopt) {
  TimeSeries ts;
  ts.monthly = monthly_series(ledger);
  ts.daily_active = active_series(ledger, snapshot, &ts.warnings);
  return ts;
}

inline ojson to_json(const OptionalMetric& m) { return m.value ? ojson(*m.value) : ojson(nullptr); }

// Flat object; undefined metrics are null with a sibling "<name>_reason".
inline ojson to_json(const MetricSet& m) {
  ojson j;
  j["project"] = m.project_name;
  const auto put = [&j](const char* key, const OptionalMetric& v) {
    j[key] = to_json(v);
    if (!v.has_value()) j[std::string(key) + "_reason"] = v.reason;
  };
  put("churn_rate", m.churn_rate);
  put("net_accumulation", m.net_accumulation);
  put("cleanup_ratio", m.cleanup_ratio);
  put("toggle_density", m.toggle_density);
  put("normalized_lifespan", m.normalized_lifespan);
  const auto& in = m.inputs_echo;
  j["additions_total"] = in.additions_total;
  j["removals_total"] = in.removals_total;
  j["active_count"] = in.active_count;
  j["analysis_months"] = in.analysis_months;
  j["lines_of_code"] = in.lines_of_code;
  j["release_cycle_days"] = in.release_cycle_days;
  j["median_survival_days"] = in.median_survival_days ? ojson(*in.median_survival_days) : ojson(nullptr);
  j["snapshot_date"] = m.snapshot_date;
  return j;
}

inline MetricSet metric_set_from_json(const ojson& j) {
  const auto opt = [&j](const char* key) {
    OptionalMetric m;
    if (j.contains(key) && !j.at(key).is_null()) {
      if (!j.at(key).is_number()) throw ConfigError(std::string(key) + " is not a number");
      m.value = j.at(key).get<double>();
    } else {
      m.reason = j.value(std::string(key) + "_reason", std::string("not provided"));
    }
    return m;
  };
  MetricSet m;
  try {
    m.project_name = j.value("project", std::string{});
    m.churn_rate = opt("churn_rate");
    m.net_accumulation = opt("net_accumulation");
    m.cleanup_ratio = opt("cleanup_ratio");
    m.toggle_density = opt("toggle_density");
    m.normalized_lifespan = opt("normalized_lifespan");
    auto& in = m.inputs_echo;
    in.additions_total = j.value("additions_total", std::size_t{0});
    in.removals_total = j.value("removals_total", std::size_t{0});
    in.active_count = j.value("active_count", std::size_t{0});
    in.analysis_months = j.value("analysis_months", 0.0);
    in.lines_of_code = j.value("lines_of_code", 0LL);
    in.release_cycle_days = j.value("release_cycle_days", 0.0);
    if (j.contains("median_survival_days") && !j.at("median_survival_days").is_null()) {
      in.median_survival_days = j.at("median_survival_days").get<double>();
    }
    m.snapshot_date = j.value("snapshot_date", std::string{});
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("malformed metrics file: ") + ex.what());
  }
  return m;
}

}  // namespace togglescope
