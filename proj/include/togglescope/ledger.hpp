#pragma once

// Canonical toggle data model: mined events, the sorted event ledger, and the
// per-toggle lifecycle records reconstructed from it.

#include <algorithm>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "togglescope/error.hpp"
#include "togglescope/time.hpp"

namespace togglescope {

using ojson = nlohmann::ordered_json;

enum class Action { Added, Removed };

inline const char* to_string(Action a) { return a == Action::Added ? "added" : "removed"; }

inline Action parse_action(const std::string& s) {
  if (s == "added") return Action::Added;
  if (s == "removed") return Action::Removed;
  throw ConfigError("unknown toggle action '" + s + "'");
}

struct ToggleEvent {
  std::string toggle_name;
  Action action = Action::Added;
  std::string commit_id;
  Instant timestamp{};
  std::string source_path;

  // Total order: (timestamp, commit_id), then removals before additions so a
  // same-commit remove/add pair reads as "close, then reopen", then name/path.
  friend bool operator<(const ToggleEvent& a, const ToggleEvent& b) {
    const auto rank = [](Action x) { return x == Action::Removed ? 0 : 1; };
    return std::forward_as_tuple(a.timestamp, a.commit_id, rank(a.action), a.toggle_name, a.source_path) <
           std::forward_as_tuple(b.timestamp, b.commit_id, rank(b.action), b.toggle_name, b.source_path);
  }
  friend bool operator==(const ToggleEvent&, const ToggleEvent&) = default;
};

struct TimeRange {
  Instant first{};
  Instant last{};
  friend bool operator==(const TimeRange&, const TimeRange&) = default;
};

class EventLedger {
 public:
  EventLedger() = default;

  // Sorts the events. Without an explicit range the span of the events is used.
  EventLedger(std::vector<ToggleEvent> events, std::string repo_label,
              std::optional<TimeRange> mined_range = std::nullopt)
      : events_(std::move(events)), repo_label_(std::move(repo_label)) {
    for (const auto& e : events_) {
      if (e.toggle_name.empty()) throw ConfigError("toggle event with empty name at commit " + e.commit_id);
    }
    std::sort(events_.begin(), events_.end());
    if (mined_range) {
      range_ = *mined_range;
      if (range_.last < range_.first) throw ConfigError("mined range ends before it starts");
      if (!events_.empty() &&
          (events_.front().timestamp < range_.first || range_.last < events_.back().timestamp)) {
        throw ConfigError("ledger events fall outside the mined range");
      }
    } else if (!events_.empty()) {
      range_ = {events_.front().timestamp, events_.back().timestamp};
    }
  }

  const std::vector<ToggleEvent>& events() const { return events_; }
  const std::string& repo_label() const { return repo_label_; }
  const TimeRange& mined_range() const { return range_; }
  bool empty() const { return events_.empty(); }
  std::size_t size() const { return events_.size(); }

  std::size_t count(Action a) const {
    return static_cast<std::size_t>(
        std::count_if(events_.begin(), events_.end(), [a](const ToggleEvent& e) { return e.action == a; }));
  }

 private:
  std::vector<ToggleEvent> events_;
  std::string repo_label_;
  TimeRange range_{};
};

enum class RecordStatus { Active, Removed };

inline const char* to_string(RecordStatus s) { return s == RecordStatus::Active ? "active" : "removed"; }

struct ToggleRecord {
  std::string toggle_name;
  int occurrence = 1;  // 1 for the first life of a name, 2 after a re-addition, ...
  Instant added_at{};
  std::optional<Instant> removed_at;
  std::optional<double> lifespan_days;
  RecordStatus status = RecordStatus::Active;
  bool anomalous = false;
  bool orphan = false;  // added_at anchored to the mined range start
  std::string added_commit;
  std::string removed_commit;

  std::string export_name() const {
    return occurrence > 1 ? toggle_name + "#" + std::to_string(occurrence) : toggle_name;
  }
  bool removed() const { return status == RecordStatus::Removed; }

  friend bool operator==(const ToggleRecord&, const ToggleRecord&) = default;
};

struct ProjectContext {
  std::string project_name;
  double analysis_months = 0;        // T
  long long lines_of_code = 0;       // L
  double release_cycle_days = 0;     // tau
  std::optional<Instant> snapshot_time;  // censoring boundary; defaults to the mined range end

  void validate() const {
    if (!(analysis_months > 0)) throw ConfigError("analysis_months must be > 0");
    if (lines_of_code <= 0) throw ConfigError("lines_of_code must be > 0");
    if (!(release_cycle_days > 0)) throw ConfigError("release_cycle_days must be > 0");
  }
};

enum class RefactorPolicy { CoalesceSameCommit, RawPairs };

inline RefactorPolicy parse_refactor_policy(const std::string& s) {
  if (s == "coalesce") return RefactorPolicy::CoalesceSameCommit;
  if (s == "raw") return RefactorPolicy::RawPairs;
  throw ConfigError("refactor policy must be 'coalesce' or 'raw', got '" + s + "'");
}

struct RecordSet {
  std::vector<ToggleRecord> records;
  std::vector<std::string> warnings;

  std::size_t count(RecordStatus s) const {
    return static_cast<std::size_t>(std::count_if(records.begin(), records.end(),
                                                  [s](const ToggleRecord& r) { return r.status == s; }));
  }
};

// Pairs additions and removals per toggle name into lifecycle records.
inline RecordSet build_records(const EventLedger& ledger, RefactorPolicy policy) {
  RecordSet out;
  if (ledger.empty()) return out;

  // (commit, name) pairs that both remove and add the same toggle.
  std::set<std::pair<std::string, std::string>> modified;
  if (policy == RefactorPolicy::CoalesceSameCommit) {
    std::set<std::pair<std::string, std::string>> adds, removes;
    for (const auto& e : ledger.events()) {
      (e.action == Action::Added ? adds : removes).emplace(e.commit_id, e.toggle_name);
    }
    std::set_intersection(adds.begin(), adds.end(), removes.begin(), removes.end(),
                          std::inserter(modified, modified.end()));
  }

  std::map<std::string, std::size_t> open;  // name -> index into out.records
  std::map<std::string, int> lives;
  std::set<std::pair<std::string, std::string>> handled;

  const auto open_life = [&](const std::string& name, Instant at, const std::string& commit, bool orphan) {
    ToggleRecord r;
    r.toggle_name = name;
    r.occurrence = ++lives[name];
    r.added_at = at;
    r.added_commit = commit;
    r.orphan = orphan;
    out.records.push_back(std::move(r));
    open[name] = out.records.size() - 1;
  };

  for (const auto& e : ledger.events()) {
    const auto key = std::pair(e.commit_id, e.toggle_name);
    if (modified.count(key)) {
      if (!handled.insert(key).second) continue;
      if (!open.count(e.toggle_name)) {
        out.warnings.push_back("toggle '" + e.toggle_name + "' modified at " + e.commit_id +
                               " without an observed addition; anchored to the mined range start");
        open_life(e.toggle_name, ledger.mined_range().first, "", true);
      }
      continue;
    }

    if (e.action == Action::Added) {
      if (open.count(e.toggle_name)) {
        out.warnings.push_back("toggle '" + e.toggle_name + "' added again at " + e.commit_id +
                               " while already active; ignored");
        continue;
      }
      open_life(e.toggle_name, e.timestamp, e.commit_id, false);
      continue;
    }

    auto it = open.find(e.toggle_name);
    if (it == open.end()) {
      out.warnings.push_back("toggle '" + e.toggle_name + "' removed at " + e.commit_id +
                             " without an observed addition; anchored to the mined range start");
      open_life(e.toggle_name, ledger.mined_range().first, "", true);
      it = open.find(e.toggle_name);
    }
    auto& r = out.records[it->second];
    r.removed_at = e.timestamp;
    r.removed_commit = e.commit_id;
    r.lifespan_days = days_between(r.added_at, e.timestamp);
    r.status = RecordStatus::Removed;
    r.anomalous = *r.lifespan_days < 0;
    open.erase(it);
  }

  std::stable_sort(out.records.begin(), out.records.end(), [](const ToggleRecord& a, const ToggleRecord& b) {
    return std::tie(a.added_at, a.toggle_name, a.occurrence) < std::tie(b.added_at, b.toggle_name, b.occurrence);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

inline ojson to_json(const ToggleEvent& e) {
  ojson j;
  j["toggle"] = e.toggle_name;
  j["action"] = to_string(e.action);
  j["commit"] = e.commit_id;
  j["timestamp"] = format_iso8601(e.timestamp);
  j["path"] = e.source_path;
  return j;
}

inline ToggleEvent event_from_json(const ojson& j) {
  ToggleEvent e;
  e.toggle_name = j.at("toggle").get<std::string>();
  e.action = parse_action(j.at("action").get<std::string>());
  e.commit_id = j.at("commit").get<std::string>();
  e.timestamp = parse_iso8601(j.at("timestamp").get<std::string>());
  e.source_path = j.value("path", std::string{});
  if (e.toggle_name.empty()) throw ConfigError("empty toggle name");
  return e;
}

// One event per line.
inline void write_jsonl(std::ostream& os, const EventLedger& ledger) {
  for (const auto& e : ledger.events()) os << to_json(e).dump() << '\n';
}

inline std::vector<ToggleEvent> read_jsonl(std::istream& is) {
  std::vector<ToggleEvent> events;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      events.push_back(event_from_json(ojson::parse(line)));
    } catch (const std::exception& ex) {
      throw ConfigError("events line " + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return events;
}

inline ojson to_json(const ToggleRecord& r) {
  ojson j;
  j["toggle_name"] = r.export_name();
  j["added_at"] = format_iso8601(r.added_at);
  j["removed_at"] = r.removed_at ? ojson(format_iso8601(*r.removed_at)) : ojson(nullptr);
  j["lifespan_days"] = r.lifespan_days ? ojson(*r.lifespan_days) : ojson(nullptr);
  j["status"] = to_string(r.status);
  j["anomalous"] = r.anomalous;
  j["orphan"] = r.orphan;
  j["added_commit"] = r.added_commit;
  j["removed_commit"] = r.removed_commit;
  return j;
}

inline ojson to_json(const std::vector<ToggleRecord>& records) {
  ojson arr = ojson::array();
  for (const auto& r : records) arr.push_back(to_json(r));
  return arr;
}

}  // namespace togglescope
