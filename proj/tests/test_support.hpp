#pragma once

// Helpers shared by the unit and acceptance suites.

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "togglescope/togglescope.hpp"

namespace togglescope::testing {

namespace fs = std::filesystem;

inline fs::path fixtures_dir() { return TOGGLESCOPE_FIXTURES; }

// Fresh directory under the system temp dir, unique per call.
inline fs::path scratch_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  auto p = fs::temp_directory_path() /
           ("togglescope-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct ProcessResult {
  int exit_code = -1;
  std::string output;
};

inline ProcessResult run_shell(const std::string& cmd) {
  ProcessResult r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), n);
  const int raw = ::pclose(pipe);
  r.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

inline std::string quote(const std::string& s) { return detail::shell_quote(s); }

inline ProcessResult run_cli(const std::string& args) {
  return run_shell(quote(TOGGLESCOPE_CLI) + " " + args + " 2>&1");
}

// The scripted fixture repository, built once per process.
inline const fs::path& fixture_repo() {
  static std::once_flag once;
  static fs::path repo;
  std::call_once(once, [] {
    repo = scratch_dir("fixture") / "repo";
    const auto r = run_shell("bash " + quote((fixtures_dir() / "make_fixture_repo.sh").string()) + " " +
                             quote(repo.string()) + " 2>&1");
    if (r.exit_code != 0) throw std::runtime_error("fixture script failed: " + r.output);
  });
  return repo;
}

inline std::string rev_parse(const fs::path& repo, const std::string& rev) {
  auto r = run_shell("git -C " + quote(repo.string()) + " rev-parse " + quote(rev + "^{commit}"));
  if (r.exit_code != 0) throw std::runtime_error("rev-parse failed for " + rev);
  return r.output.substr(0, r.output.find('\n'));
}

// Expected ledgers name commits by tag ("{c08}"); resolve them to ids.
inline std::string expected_jsonl(const std::string& file) {
  std::string text = read_file(fixtures_dir() / file);
  std::string out;
  for (std::size_t i = 0; i < text.size();) {
    if (text[i] == '{' && i + 4 < text.size() && text[i + 1] == 'c' && text[i + 4] == '}') {
      out += rev_parse(fixture_repo(), text.substr(i + 1, 3));
      i += 5;
    } else {
      out += text[i++];
    }
  }
  return out;
}

inline ExtractorConfig preset_extractor(const std::string& preset) {
  RunConfig cfg;
  apply_config_text(cfg, preset_text(preset));
  return cfg.extractor;
}

inline ToggleEvent event(const std::string& name, Action a, const std::string& commit, Instant t,
                         const std::string& path = "flags.go") {
  return {name, a, commit, t, path};
}

inline Instant day(int n) {
  return parse_iso8601("2017-01-20T12:00:00Z") + std::chrono::days{n};
}

// A ledger reproducing the Kubernetes aggregates: 603 additions, 448 removals,
// 155 active at the snapshot, and a Kaplan-Meier median of exactly 734 days.
//
// Removal lifespans: 301 below 734 days, one at 734, 146 above (max 2185).
// Active toggles are all older than 2185 days at the snapshot, so no censoring
// happens before the median and S(t) = 1 - deaths(<= t) / 603 up to there:
// S(733) = 302/603 > 0.5 and S(734) = 301/603 <= 0.5.
struct AggregateFixture {
  EventLedger ledger;
  ProjectContext context;
};

inline AggregateFixture kubernetes_aggregate() {
  std::vector<ToggleEvent> ev;
  int commit = 0;
  const auto id = [&commit] { return "k" + std::to_string(commit++); };
  for (int i = 0; i < 155; ++i) ev.push_back(event("Active" + std::to_string(i), Action::Added, id(), day(i)));
  for (int k = 0; k < 448; ++k) {
    const int added = k;
    const int life = k < 301 ? 10 + 2 * k : k == 301 ? 734 : 735 + 10 * (k - 302);
    const auto name = "Removed" + std::to_string(k);
    ev.push_back(event(name, Action::Added, id(), day(added)));
    ev.push_back(event(name, Action::Removed, id(), day(added + life)));
  }
  AggregateFixture f;
  f.ledger = EventLedger(std::move(ev), "kubernetes-aggregate");
  f.context.project_name = "kubernetes";
  f.context.analysis_months = 103;
  f.context.lines_of_code = 9'980'000;
  f.context.release_cycle_days = 120;
  f.context.snapshot_time = day(3135);
  return f;
}

inline void write_ledger(const fs::path& path, const EventLedger& ledger) {
  std::ostringstream os;
  write_jsonl(os, ledger);
  write_file_atomic(path, os.str());
}

inline std::string kubernetes_context_config(const std::string& snapshot) {
  return "project_name = kubernetes\nanalysis_months = 103\nlines_of_code = 9980000\n"
         "release_cycle_days = 120\nsnapshot = " +
         snapshot + "\n";
}

}  // namespace togglescope::testing
