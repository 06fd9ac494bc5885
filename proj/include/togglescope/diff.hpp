#pragma once

// Toggle extraction from a single commit's changes: declaration lines matched
// inside unified-diff hunks, or toggle files created/deleted/renamed.

#include <fnmatch.h>

#include <charconv>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "togglescope/error.hpp"
#include "togglescope/ledger.hpp"

namespace togglescope {

struct ExtractedEvent {
  std::string toggle_name;
  Action action = Action::Added;
  std::string path;

  friend bool operator==(const ExtractedEvent&, const ExtractedEvent&) = default;
};

struct ExtractResult {
  std::vector<ExtractedEvent> events;
  std::vector<std::string> warnings;
};

// A set of declaration regexes, each with exactly one capture group (the name).
class DeclarationMatcher {
 public:
  explicit DeclarationMatcher(const std::vector<std::string>& patterns) {
    if (patterns.empty()) throw ConfigError("at least one declaration pattern is required");
    for (const auto& p : patterns) {
      std::regex re;
      try {
        re = std::regex(p, std::regex::ECMAScript);
      } catch (const std::regex_error& ex) {
        throw ConfigError("invalid declaration pattern '" + p + "': " + ex.what());
      }
      if (re.mark_count() != 1) {
        throw ConfigError("declaration pattern '" + p + "' must have exactly one capture group");
      }
      regexes_.push_back(std::move(re));
    }
  }

  // First pattern that matches wins.
  std::optional<std::string> match(const std::string& content) const {
    std::smatch m;
    for (const auto& re : regexes_) {
      if (std::regex_search(content, m, re) && m[1].matched && m[1].length() > 0) return m[1].str();
    }
    return std::nullopt;
  }

 private:
  std::vector<std::regex> regexes_;
};

namespace detail {

inline std::string strip_diff_prefix(std::string_view p) {
  // "a/foo" / "b/foo" / "/dev/null", optionally followed by a tab and a timestamp.
  if (auto tab = p.find('\t'); tab != std::string_view::npos) p = p.substr(0, tab);
  if (p.size() >= 2 && p.front() == '"' && p.back() == '"') p = p.substr(1, p.size() - 2);
  if (p == "/dev/null") return {};
  if (p.size() > 2 && (p.starts_with("a/") || p.starts_with("b/"))) p.remove_prefix(2);
  return std::string(p);
}

inline bool parse_range(std::string_view s, long& count) {
  // "12,3" or "12"
  const auto comma = s.find(',');
  long start = 0;
  const auto head = s.substr(0, comma);
  if (std::from_chars(head.data(), head.data() + head.size(), start).ec != std::errc{}) return false;
  if (comma == std::string_view::npos) {
    count = 1;
    return true;
  }
  const auto tail = s.substr(comma + 1);
  auto [ptr, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), count);
  return ec == std::errc{} && ptr == tail.data() + tail.size();
}

// "@@ -a,b +c,d @@ ..." -> (old_count, new_count)
inline std::optional<std::pair<long, long>> parse_hunk_header(std::string_view line) {
  if (!line.starts_with("@@ -")) return std::nullopt;
  const auto plus = line.find(" +", 4);
  if (plus == std::string_view::npos) return std::nullopt;
  const auto close = line.find(" @@", plus);
  if (close == std::string_view::npos) return std::nullopt;
  long old_count = 0, new_count = 0;
  if (!parse_range(line.substr(4, plus - 4), old_count)) return std::nullopt;
  if (!parse_range(line.substr(plus + 2, close - plus - 2), new_count)) return std::nullopt;
  return std::pair(old_count, new_count);
}

}  // namespace detail

// Scans the +/- content lines of a unified diff and matches them against the
// declaration patterns. Header lines and anything outside a hunk are ignored.
inline ExtractResult extract_declaration_events(std::string_view diff_text, const DeclarationMatcher& matcher) {
  ExtractResult out;
  std::set<std::pair<std::string, Action>> seen;
  std::string old_path, new_path;
  bool in_hunk = false;
  bool lenient = false;  // hunk header without usable counts
  long old_left = 0, new_left = 0;
  bool warned_stray = false;

  const auto emit = [&](const std::string& content, Action action) {
    auto name = matcher.match(content);
    if (!name) return;
    if (!seen.emplace(*name, action).second) return;
    std::string path = action == Action::Added ? new_path : old_path;
    if (path.empty()) path = action == Action::Added ? old_path : new_path;
    out.events.push_back({std::move(*name), action, std::move(path)});
  };

  std::istringstream in{std::string(diff_text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();

    if (in_hunk && !lenient) {
      const char c = line.empty() ? ' ' : line[0];
      if (c == '\\') continue;  // "\ No newline at end of file"
      if (c == '+' || c == '-' || c == ' ') {
        if (c != '+') --old_left;
        if (c != '-') --new_left;
        const bool single = line.size() < 2 || line[1] != c;
        if (c != ' ' && single) emit(line.substr(1), c == '+' ? Action::Added : Action::Removed);
        if (old_left <= 0 && new_left <= 0) in_hunk = false;
        continue;
      }
      out.warnings.push_back("hunk ended early before line: " + line);
      in_hunk = false;
    } else if (in_hunk && lenient) {
      const char c = line.empty() ? ' ' : line[0];
      if (line.starts_with("diff ") || line.starts_with("+++ ") || line.starts_with("--- ") ||
          line.starts_with("@@")) {
        in_hunk = false;
      } else if (c == '+' || c == '-') {
        if (line.size() < 2 || line[1] != c) emit(line.substr(1), c == '+' ? Action::Added : Action::Removed);
        continue;
      } else if (c == ' ' || c == '\\') {
        continue;
      } else {
        in_hunk = false;
      }
    }

    if (line.starts_with("diff --git ")) {
      old_path.clear();
      new_path.clear();
      const std::string_view rest = std::string_view(line).substr(11);
      if (const auto sep = rest.find(" b/"); sep != std::string_view::npos) {
        old_path = detail::strip_diff_prefix(rest.substr(0, sep));
        new_path = detail::strip_diff_prefix(rest.substr(sep + 1));
      }
    } else if (line.starts_with("--- ")) {
      old_path = detail::strip_diff_prefix(std::string_view(line).substr(4));
    } else if (line.starts_with("+++ ")) {
      new_path = detail::strip_diff_prefix(std::string_view(line).substr(4));
    } else if (line.starts_with("@@")) {
      if (auto counts = detail::parse_hunk_header(line)) {
        old_left = counts->first;
        new_left = counts->second;
        lenient = false;
        in_hunk = old_left > 0 || new_left > 0;
      } else {
        out.warnings.push_back("malformed hunk header '" + line + "'; scanning leniently");
        lenient = true;
        in_hunk = true;
      }
    } else if (!line.empty() && (line[0] == '+' || line[0] == '-') && !warned_stray) {
      out.warnings.push_back("content line outside any hunk ignored: " + line);
      warned_stray = true;
    }
  }
  return out;
}

inline ExtractResult extract_declaration_events(std::string_view diff_text, const std::vector<std::string>& patterns) {
  return extract_declaration_events(diff_text, DeclarationMatcher(patterns));
}

enum class ChangeKind { AddedFile, DeletedFile, RenamedFile, ModifiedFile };

struct FileChange {
  ChangeKind kind = ChangeKind::ModifiedFile;
  std::string path;       // new path (or the only path)
  std::string from_path;  // set for renames
};

inline std::string_view path_basename(std::string_view path) {
  const auto slash = path.rfind('/');
  return slash == std::string_view::npos ? path : path.substr(slash + 1);
}

// File name without its final extension.
inline std::string path_stem(std::string_view path) {
  auto base = path_basename(path);
  const auto dot = base.rfind('.');
  if (dot != std::string_view::npos && dot > 0) base = base.substr(0, dot);
  return std::string(base);
}

// Filters without a '/' are matched against the file name only.
inline bool matches_file_filter(const std::string& filter, std::string_view path) {
  if (filter.find('/') != std::string::npos) {
    return ::fnmatch(filter.c_str(), std::string(path).c_str(), FNM_PATHNAME) == 0;
  }
  return ::fnmatch(filter.c_str(), std::string(path_basename(path)).c_str(), 0) == 0;
}

inline ExtractResult extract_file_lifecycle_events(const std::vector<FileChange>& changes, const std::string& filter) {
  if (filter.empty()) throw ConfigError("file lifecycle extraction needs a non-empty file name filter");
  ExtractResult out;
  std::set<std::pair<std::string, Action>> seen;
  const auto emit = [&](const std::string& path, Action action) {
    auto stem = path_stem(path);
    if (stem.empty() || !seen.emplace(stem, action).second) return;
    out.events.push_back({std::move(stem), action, path});
  };

  for (const auto& c : changes) {
    switch (c.kind) {
      case ChangeKind::AddedFile:
        if (matches_file_filter(filter, c.path)) emit(c.path, Action::Added);
        break;
      case ChangeKind::DeletedFile:
        if (matches_file_filter(filter, c.path)) emit(c.path, Action::Removed);
        break;
      case ChangeKind::RenamedFile: {
        const bool from_ok = matches_file_filter(filter, c.from_path);
        const bool to_ok = matches_file_filter(filter, c.path);
        if (from_ok && to_ok && path_stem(c.from_path) == path_stem(c.path)) break;  // move only
        if (from_ok) emit(c.from_path, Action::Removed);
        if (to_ok) emit(c.path, Action::Added);
        break;
      }
      case ChangeKind::ModifiedFile:
        break;
    }
  }
  return out;
}

// Parses `git diff-tree -r --name-status` output (tab separated).
inline std::vector<FileChange> parse_name_status(std::string_view text, std::vector<std::string>* warnings = nullptr) {
  std::vector<FileChange> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    const char kind = fields[0].empty() ? '?' : fields[0][0];
    if ((kind == 'R' || kind == 'C') && fields.size() == 3) {
      if (kind == 'R') {
        out.push_back({ChangeKind::RenamedFile, fields[2], fields[1]});
      } else {
        out.push_back({ChangeKind::AddedFile, fields[2], {}});
      }
    } else if (fields.size() == 2 && (kind == 'A' || kind == 'D' || kind == 'M' || kind == 'T')) {
      const auto k = kind == 'A' ? ChangeKind::AddedFile
                     : kind == 'D' ? ChangeKind::DeletedFile
                                   : ChangeKind::ModifiedFile;
      out.push_back({k, fields[1], {}});
    } else if (warnings) {
      warnings->push_back("unrecognised name-status line: " + line);
    }
  }
  return out;
}

}  // namespace togglescope
