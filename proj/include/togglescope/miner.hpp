#pragma once

// Walks the first-parent history of a local git repository and turns each
// commit's first-parent diff into toggle events.

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "togglescope/diff.hpp"
#include "togglescope/error.hpp"
#include "togglescope/ledger.hpp"
#include "togglescope/time.hpp"

namespace togglescope {

enum class ExtractorMode { DeclarationPattern, FileLifecycle };

inline ExtractorMode parse_extractor_mode(const std::string& s) {
  if (s == "declaration") return ExtractorMode::DeclarationPattern;
  if (s == "file") return ExtractorMode::FileLifecycle;
  throw ConfigError("extractor mode must be 'declaration' or 'file', got '" + s + "'");
}

inline const char* to_string(ExtractorMode m) {
  return m == ExtractorMode::DeclarationPattern ? "declaration" : "file";
}

struct ExtractorConfig {
  ExtractorMode mode = ExtractorMode::DeclarationPattern;
  std::vector<std::string> watch_paths;  // git glob pathspecs, repository relative
  std::vector<std::string> declaration_patterns;
  std::string file_name_filter;
  std::string branch = "HEAD";

  void validate() const {
    if (branch.empty()) throw ConfigError("branch must not be empty");
    if (mode == ExtractorMode::DeclarationPattern) {
      DeclarationMatcher{declaration_patterns};  // throws on a bad pattern set
    } else if (file_name_filter.empty()) {
      throw ConfigError("file mode requires a non-empty file name filter");
    }
  }
};

struct MiningResult {
  EventLedger ledger;
  std::vector<std::string> warnings;
  std::size_t commits_in_range = 0;
  std::size_t commits_examined = 0;  // commits touching the watch paths
};

struct BulkCommit {
  std::string commit_id;
  Instant timestamp{};
  std::size_t add_count = 0;
  std::size_t remove_count = 0;

  friend bool operator==(const BulkCommit&, const BulkCommit&) = default;
};

inline constexpr std::size_t kDefaultBulkThreshold = 20;

// Commits whose event count reaches the threshold, in ledger order.
inline std::vector<BulkCommit> detect_bulk_events(const EventLedger& ledger, std::size_t threshold) {
  if (threshold < 1) throw ConfigError("bulk threshold must be >= 1");
  std::vector<BulkCommit> commits;
  for (const auto& e : ledger.events()) {
    if (commits.empty() || commits.back().commit_id != e.commit_id || commits.back().timestamp != e.timestamp) {
      commits.push_back({e.commit_id, e.timestamp, 0, 0});
    }
    ++(e.action == Action::Added ? commits.back().add_count : commits.back().remove_count);
  }
  std::erase_if(commits, [&](const BulkCommit& c) { return c.add_count + c.remove_count < threshold; });
  return commits;
}

namespace detail {

inline std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

struct CommandOutput {
  int status = -1;
  std::string out;
};

inline CommandOutput run_command(const std::string& cmd) {
  CommandOutput res;
  FILE* pipe = ::popen((cmd + " 2>/dev/null").c_str(), "r");
  if (!pipe) return res;
  std::array<char, 1 << 16> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) res.out.append(buf.data(), n);
  const int raw = ::pclose(pipe);
  res.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return res;
}

class Git {
 public:
  explicit Git(std::string repo) : prefix_("LC_ALL=C git -C " + shell_quote(repo) + " -c core.quotepath=off ") {}

  CommandOutput run(const std::string& args) const { return run_command(prefix_ + args); }

 private:
  std::string prefix_;
};

inline std::string pathspec_args(const std::vector<std::string>& watch_paths) {
  std::string s = " --";
  for (const auto& p : watch_paths) s += " " + shell_quote(":(glob)" + p);
  return s;
}

struct CommitRef {
  std::string id;
  std::string first_parent;  // empty for a root commit
  Instant time{};
};

inline std::vector<CommitRef> parse_commit_list(const std::string& text) {
  std::vector<CommitRef> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string id, time, parents;
    if (!(ls >> id >> time)) continue;
    CommitRef c{id, {}, from_unix_seconds(std::stoll(time))};
    if (ls >> parents) c.first_parent = parents;
    out.push_back(std::move(c));
  }
  return out;
}

inline bool in_window(Instant t, const std::optional<Instant>& since, const std::optional<Instant>& until) {
  return (!since || *since <= t) && (!until || t <= *until);
}

}  // namespace detail

// `since`/`until` bound the committer time of walked commits (inclusive).
inline MiningResult mine_repository(const std::filesystem::path& repo_location, const ExtractorConfig& config,
                                    std::optional<Instant> since = std::nullopt,
                                    std::optional<Instant> until = std::nullopt, unsigned jobs = 0) {
  config.validate();
  if (since && until && *until < *since) throw ConfigError("--until is before --since");

  std::error_code ec;
  if (!std::filesystem::is_directory(repo_location, ec)) {
    throw RepoError("repository path does not exist: " + repo_location.string());
  }
  const detail::Git git(repo_location.string());
  if (git.run("rev-parse --git-dir").status != 0) {
    throw RepoError("not a git repository: " + repo_location.string());
  }
  const auto verify = git.run("rev-parse --verify --quiet " + detail::shell_quote(config.branch + "^{commit}"));
  if (verify.status != 0) throw RepoError("branch not found: " + config.branch);
  const std::string tip = verify.out.substr(0, verify.out.find('\n'));

  MiningResult result;

  // %H %ct %P: first token of %P is the first parent.
  const auto all = git.run("log --first-parent --format='%H %ct %P' " + tip);
  if (all.status != 0) throw RepoError("git log failed for " + config.branch);
  std::optional<TimeRange> range;
  for (const auto& c : detail::parse_commit_list(all.out)) {
    if (!detail::in_window(c.time, since, until)) continue;
    ++result.commits_in_range;
    if (!range) {
      range = TimeRange{c.time, c.time};
    } else {
      range->first = std::min(range->first, c.time);
      range->last = std::max(range->last, c.time);
    }
  }
  const std::string label = repo_location.filename().empty() ? repo_location.parent_path().filename().string()
                                                              : repo_location.filename().string();
  if (config.watch_paths.empty()) {
    result.warnings.push_back("no watch paths configured; nothing to mine");
    result.ledger = EventLedger({}, label, range);
    return result;
  }

  std::vector<detail::CommitRef> candidates;
  const auto touched = git.run("log --first-parent --reverse --format='%H %ct %P' " + tip +
                               detail::pathspec_args(config.watch_paths));
  if (touched.status != 0) throw RepoError("git log failed for watch paths");
  for (auto& c : detail::parse_commit_list(touched.out)) {
    if (detail::in_window(c.time, since, until)) candidates.push_back(std::move(c));
  }
  result.commits_examined = candidates.size();

  std::optional<DeclarationMatcher> matcher;
  if (config.mode == ExtractorMode::DeclarationPattern) matcher.emplace(config.declaration_patterns);

  struct PerCommit {
    std::vector<ToggleEvent> events;
    std::vector<std::string> warnings;
  };
  std::vector<PerCommit> per_commit(candidates.size());

  const auto process = [&](std::size_t i) {
    const auto& c = candidates[i];
    auto& slot = per_commit[i];
    const std::string revs = c.first_parent.empty() ? "--root " + c.id : c.first_parent + " " + c.id;
    const std::string fmt = config.mode == ExtractorMode::DeclarationPattern
                                ? "diff-tree -r -p -M --no-color --no-ext-diff --unified=0 "
                                : "diff-tree -r --name-status -M --no-color ";
    const auto diff = git.run(fmt + revs + detail::pathspec_args(config.watch_paths));
    if (diff.status != 0) {
      slot.warnings.push_back("could not diff commit " + c.id + "; skipped");
      return;
    }
    ExtractResult extracted;
    if (matcher) {
      extracted = extract_declaration_events(diff.out, *matcher);
    } else {
      std::vector<std::string> parse_warnings;
      const auto changes = parse_name_status(diff.out, &parse_warnings);
      extracted = extract_file_lifecycle_events(changes, config.file_name_filter);
      extracted.warnings.insert(extracted.warnings.begin(), parse_warnings.begin(), parse_warnings.end());
    }
    for (auto& w : extracted.warnings) slot.warnings.push_back(c.id + ": " + w);
    for (auto& e : extracted.events) {
      slot.events.push_back({std::move(e.toggle_name), e.action, c.id, c.time, std::move(e.path)});
    }
  };

  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, std::max<std::size_t>(1, candidates.size())));
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> workers;
    for (unsigned w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < candidates.size(); i = next++) process(i);
      });
    }
  }

  std::vector<ToggleEvent> events;
  for (auto& pc : per_commit) {
    for (auto& e : pc.events) events.push_back(std::move(e));
    for (auto& w : pc.warnings) result.warnings.push_back(std::move(w));
  }
  result.ledger = EventLedger(std::move(events), label, range);
  return result;
}

}  // namespace togglescope
