#pragma once

// Kaplan-Meier estimation over toggle lifespans, lifespan tiers by quartile,
// and detection of toggles that outlived every removed toggle.

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "togglescope/error.hpp"
#include "togglescope/ledger.hpp"
#include "togglescope/time.hpp"

namespace togglescope {

// One subject: time in days, and whether the event (removal) was observed.
struct Observation {
  double time_days = 0;
  bool event = false;
};

struct SurvivalStep {
  double t = 0;
  double survival = 1.0;
  std::size_t at_risk = 0;
  std::size_t deaths = 0;
  std::size_t censored = 0;

  friend bool operator==(const SurvivalStep&, const SurvivalStep&) = default;
};

struct SurvivalCurve {
  std::vector<SurvivalStep> steps;  // one per distinct observation time
  std::size_t n_total = 0;

  // S(t): survival just after time t.
  double at(double t) const {
    double s = 1.0;
    for (const auto& st : steps) {
      if (st.t > t) break;
      s = st.survival;
    }
    return s;
  }
};

// Product-limit estimate. At tied times deaths are applied before censorings.
inline SurvivalCurve kaplan_meier(std::vector<Observation> obs) {
  SurvivalCurve curve;
  curve.n_total = obs.size();
  std::sort(obs.begin(), obs.end(), [](const Observation& a, const Observation& b) { return a.time_days < b.time_days; });
  std::size_t at_risk = obs.size();
  double s = 1.0;
  for (std::size_t i = 0; i < obs.size();) {
    SurvivalStep step;
    step.t = obs[i].time_days;
    step.at_risk = at_risk;
    for (; i < obs.size() && obs[i].time_days == step.t; ++i) ++(obs[i].event ? step.deaths : step.censored);
    if (step.deaths > 0) {
      s *= static_cast<double>(at_risk - step.deaths) / static_cast<double>(at_risk);
    }
    step.survival = s;
    at_risk -= step.deaths + step.censored;
    curve.steps.push_back(step);
  }
  return curve;
}

// Removed records are events at their lifespan; active records are censored at
// their age on `censor_at`. Anomalous (negative) lifespans are skipped unless
// `include_anomalous`, in which case they count as events at day 0.
inline SurvivalCurve kaplan_meier(const std::vector<ToggleRecord>& records, Instant censor_at,
                                  bool include_anomalous = false) {
  std::vector<Observation> obs;
  obs.reserve(records.size());
  for (const auto& r : records) {
    if (r.removed()) {
      if (r.anomalous && !include_anomalous) continue;
      obs.push_back({std::max(0.0, *r.lifespan_days), true});
    } else {
      const double age = days_between(r.added_at, censor_at);
      if (age < 0) throw DomainError("active toggle '" + r.export_name() + "' was added after the censoring instant");
      obs.push_back({age, false});
    }
  }
  return kaplan_meier(std::move(obs));
}

// Smallest step time with S(t) <= 0.5; absent when the curve stays above 0.5.
inline std::optional<double> median_survival(const SurvivalCurve& curve) {
  // Tolerance absorbs rounding in the running product (e.g. 0.5000000000000001).
  constexpr double kTol = 1e-12;
  for (const auto& st : curve.steps) {
    if (st.deaths > 0 && st.survival <= 0.5 + kTol) return st.t;
  }
  return std::nullopt;
}

// Linear-interpolation quantile (R type 7) over sorted data.
inline double quantile_type7(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw DomainError("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

enum class TierStatus { Ok, NoRemovals };

struct LifespanTiers {
  TierStatus status = TierStatus::NoRemovals;
  double q1_days = 0;
  double q3_days = 0;
  std::vector<ToggleRecord> temporary;     // lifespan < q1
  std::vector<ToggleRecord> intermediate;  // q1 <= lifespan < q3
  std::vector<ToggleRecord> long_lived;    // lifespan >= q3
  std::size_t anomalous_excluded = 0;

  std::size_t classified() const { return temporary.size() + intermediate.size() + long_lived.size(); }
};

inline LifespanTiers classify_tiers(const std::vector<ToggleRecord>& records, bool include_anomalous = false) {
  LifespanTiers tiers;
  std::vector<const ToggleRecord*> removed;
  for (const auto& r : records) {
    if (!r.removed()) continue;
    if (r.anomalous && !include_anomalous) {
      ++tiers.anomalous_excluded;
      continue;
    }
    removed.push_back(&r);
  }
  if (removed.empty()) return tiers;

  const auto span = [](const ToggleRecord& r) { return std::max(0.0, *r.lifespan_days); };
  std::vector<double> spans;
  spans.reserve(removed.size());
  for (const auto* r : removed) spans.push_back(span(*r));
  std::sort(spans.begin(), spans.end());
  tiers.status = TierStatus::Ok;
  tiers.q1_days = quantile_type7(spans, 0.25);
  tiers.q3_days = quantile_type7(spans, 0.75);
  for (const auto* r : removed) {
    const double s = span(*r);
    if (s >= tiers.q3_days) {
      tiers.long_lived.push_back(*r);
    } else if (s < tiers.q1_days) {
      tiers.temporary.push_back(*r);
    } else {
      tiers.intermediate.push_back(*r);
    }
  }
  return tiers;
}

struct PermanentToggle {
  ToggleRecord record;
  double age_days = 0;
  double excess_days = 0;
};

struct PermanentToggles {
  std::optional<double> max_removed_lifespan_days;  // absent: threshold undefined
  std::vector<PermanentToggle> toggles;             // sorted by excess, descending
};

// Active toggles strictly older than the longest lifespan of any removed toggle.
inline PermanentToggles flag_permanent(const std::vector<ToggleRecord>& records, Instant censor_at) {
  PermanentToggles out;
  for (const auto& r : records) {
    if (r.removed() && !r.anomalous) {
      out.max_removed_lifespan_days = std::max(out.max_removed_lifespan_days.value_or(0.0), *r.lifespan_days);
    }
  }
  if (!out.max_removed_lifespan_days) return out;
  const double threshold = *out.max_removed_lifespan_days;
  for (const auto& r : records) {
    if (r.removed()) continue;
    const double age = days_between(r.added_at, censor_at);
    if (age > threshold) out.toggles.push_back({r, age, age - threshold});
  }
  std::sort(out.toggles.begin(), out.toggles.end(), [](const PermanentToggle& a, const PermanentToggle& b) {
    return std::tuple(-a.excess_days, a.record.toggle_name, a.record.occurrence) <
           std::tuple(-b.excess_days, b.record.toggle_name, b.record.occurrence);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Exports

inline void write_curve_csv(std::ostream& os, const SurvivalCurve& curve) {
  os << "t,survival,at_risk,deaths,censored\n";
  for (const auto& s : curve.steps) {
    os << ojson(s.t).dump() << ',' << ojson(s.survival).dump() << ',' << s.at_risk << ',' << s.deaths << ','
       << s.censored << '\n';
  }
}

inline ojson to_json(const LifespanTiers& tiers) {
  ojson j;
  const auto list = [](const std::vector<ToggleRecord>& rs) {
    ojson a = ojson::array();
    for (const auto& r : rs) {
      ojson e;
      e["toggle"] = r.export_name();
      e["lifespan_days"] = *r.lifespan_days;
      a.push_back(e);
    }
    return a;
  };
  j["status"] = tiers.status == TierStatus::Ok ? "ok" : "no removals yet";
  j["q1_days"] = tiers.status == TierStatus::Ok ? ojson(tiers.q1_days) : ojson(nullptr);
  j["q3_days"] = tiers.status == TierStatus::Ok ? ojson(tiers.q3_days) : ojson(nullptr);
  j["counts"] = {{"temporary", tiers.temporary.size()},
                 {"intermediate", tiers.intermediate.size()},
                 {"long_lived", tiers.long_lived.size()},
                 {"anomalous_excluded", tiers.anomalous_excluded}};
  j["temporary"] = list(tiers.temporary);
  j["intermediate"] = list(tiers.intermediate);
  j["long_lived"] = list(tiers.long_lived);
  return j;
}

inline ojson to_json(const PermanentToggles& p) {
  ojson j;
  j["status"] = p.max_removed_lifespan_days ? "ok" : "threshold undefined";
  j["max_removed_lifespan_days"] = p.max_removed_lifespan_days ? ojson(*p.max_removed_lifespan_days) : ojson(nullptr);
  ojson a = ojson::array();
  for (const auto& t : p.toggles) {
    ojson e;
    e["toggle"] = t.record.export_name();
    e["added_at"] = format_iso8601(t.record.added_at);
    e["age_days"] = t.age_days;
    e["excess_days"] = t.excess_days;
    a.push_back(e);
  }
  j["toggles"] = a;
  return j;
}

}  // namespace togglescope
