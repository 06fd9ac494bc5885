#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace togglescope;
using namespace togglescope::testing;

namespace {

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

// mine + report on the fixture repo into a fresh directory.
fs::path mine_and_report(const std::string& tag) {
  const auto out = scratch_dir(tag);
  const auto conf = out / "context.conf";
  write_file_atomic(conf, "analysis_months = 16\nlines_of_code = 20000\nrelease_cycle_days = 30\n");
  auto r = run_cli("mine --preset kubernetes-gates --repo " + quote(fixture_repo().string()) +
                   " --since 2020-01-01 --out " + quote(out.string()));
  EXPECT_EQ(r.exit_code, 0) << r.output;
  r = run_cli("report --preset kubernetes-gates --config " + quote(conf.string()) + " --out " + quote(out.string()));
  EXPECT_EQ(r.exit_code, 0) << r.output;
  return out;
}

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run_cli("--help").exit_code, 0);
  EXPECT_EQ(run_cli("").exit_code, 1);
  EXPECT_EQ(run_cli("frobnicate").exit_code, 1);
  EXPECT_EQ(run_cli("report --refactor-policy sometimes").exit_code, 1);
}

TEST(Cli, AssessInlineKubernetes) {
  const auto r = run_cli("assess 10.2 1.5 0.74 0.016 6.1");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_TRUE(contains(r.output, "Profile: Conservative")) << r.output;
  EXPECT_TRUE(contains(r.output, "Concerns: cleanup_ratio: Warning")) << r.output;
}

TEST(Cli, AssessInlineGitlabJson) {
  const auto r = run_cli("assess 104.5 6.5 0.88 0.081 6.2 --json --name gitlab");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const auto j = ojson::parse(r.output);
  EXPECT_EQ(j["profile"], "Aggressive");
  EXPECT_EQ(j["project"], "gitlab");
  EXPECT_EQ(j["metrics"]["churn"]["zone"], "High");
  EXPECT_EQ(j["metrics"]["net_accumulation"]["zone"], "Critical");
  EXPECT_EQ(j["metrics"]["cleanup_ratio"]["zone"], "Healthy");
  EXPECT_EQ(j["metrics"]["density"]["zone"], "Moderate");
  EXPECT_EQ(j["metrics"]["norm_lifespan"]["zone"], "Moderate");
}

TEST(Cli, AssessMissingFifthValue) {
  const auto r = run_cli("assess 10.2 1.5 0.74 0.016 --json");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_EQ(ojson::parse(r.output)["metrics"]["norm_lifespan"]["zone"], "not assessable");
}

TEST(Cli, AssessRejectsNonNumeric) {
  const auto r = run_cli("assess 10.2 lots 0.74 0.016 6.1");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_TRUE(contains(r.output, "not a number"));
  EXPECT_EQ(run_cli("assess 1 2 3 4 5 6").exit_code, 1);
  EXPECT_EQ(run_cli("assess").exit_code, 1);
}

TEST(Cli, AssessUsesCustomThresholds) {
  const auto dir = scratch_dir("thr");
  auto j = to_json(default_thresholds());
  j["churn"][0]["max"] = 5.0;
  j["churn"][1]["min"] = 5.0;
  write_file_atomic(dir / "t.json", j.dump());
  const auto r = run_cli("assess 10.2 1.5 0.74 0.016 6.1 --json --thresholds " + quote((dir / "t.json").string()));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_EQ(ojson::parse(r.output)["metrics"]["churn"]["zone"], "Moderate");
  write_file_atomic(dir / "bad.json", "{}");
  EXPECT_EQ(run_cli("assess 1 1 1 1 1 --thresholds " + quote((dir / "bad.json").string())).exit_code, 1);
  EXPECT_EQ(run_cli("thresholds --check " + quote((dir / "t.json").string())).exit_code, 0);
}

TEST(Cli, MineMissingRepoWritesNothing) {
  const auto out = scratch_dir("missing") / "out";
  const auto r = run_cli("mine --preset kubernetes-gates --repo /nonexistent/repo --out " + quote(out.string()));
  EXPECT_EQ(r.exit_code, 2) << r.output;
  EXPECT_FALSE(fs::exists(out / "events.jsonl"));
}

TEST(Cli, MineUntilBeforeSince) {
  const auto r = run_cli("mine --preset kubernetes-gates --repo " + quote(fixture_repo().string()) +
                         " --since 2021-01-01 --until 2020-01-01 --out " + quote(scratch_dir("window").string()));
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_TRUE(contains(r.output, "--until is before --since"));
}

TEST(Cli, MineNeedsRepo) {
  EXPECT_EQ(run_cli("mine --preset gitlab-flags --out " + quote(scratch_dir("norepo").string())).exit_code, 1);
}

TEST(Cli, MineWritesExpectedLedgerAndSummary) {
  const auto out = scratch_dir("mine");
  const auto r = run_cli("mine --preset kubernetes-gates --repo " + quote(fixture_repo().string()) +
                         " --since 2020-01-01 --out " + quote(out.string()));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_EQ(read_file(out / "events.jsonl"), expected_jsonl("expected_kubernetes.jsonl"));
  EXPECT_TRUE(contains(r.output, "events: 42 (33 added, 9 removed)")) << r.output;
  EXPECT_TRUE(contains(r.output, "bulk commit " + rev_parse(fixture_repo(), "c13"))) << r.output;
  EXPECT_TRUE(fs::exists(out / "events.meta.json"));
}

TEST(Cli, ReportAndAssessAgree) {
  const auto out = mine_and_report("agree");
  const auto md = read_file(out / "report.md");
  const auto r = run_cli("assess --json --metrics " + quote((out / "metrics.json").string()));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const auto j = ojson::parse(r.output);
  for (auto m : kAllMetrics) {
    const std::string zone = j["metrics"][metric_key(m)]["zone"];
    EXPECT_TRUE(contains(md, std::string("| ") + metric_label(m) + " | ")) << md;
    const auto row = md.substr(md.find(std::string("| ") + metric_label(m)));
    EXPECT_TRUE(contains(row.substr(0, row.find('\n')), "| " + zone + " |")) << row.substr(0, row.find('\n'));
  }
  EXPECT_TRUE(contains(md, "Profile: **" + std::string(j["profile"]) + "**"));
  // the orphaned AncientGate removal is reported
  EXPECT_TRUE(contains(md, "## Warnings"));
  EXPECT_TRUE(contains(md, "AncientGate"));
}

TEST(Cli, ReportRefactorPolicies) {
  const auto out = mine_and_report("policy");
  const auto coalesced = ojson::parse(read_file(out / "records.json"));
  EXPECT_EQ(coalesced.size(), 32u);
  const auto conf = out / "context.conf";
  const auto r = run_cli("report --preset kubernetes-gates --refactor-policy raw --config " + quote(conf.string()) +
                         " --out " + quote(out.string()));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_EQ(ojson::parse(read_file(out / "records.json")).size(), 34u);
}

TEST(Cli, ReportMalformedEvents) {
  const auto out = scratch_dir("malformed");
  write_file_atomic(out / "events.jsonl", "{\"toggle\": 3}\n");
  const auto r = run_cli("report --preset gitlab-flags --out " + quote(out.string()));
  EXPECT_EQ(r.exit_code, 1) << r.output;
  EXPECT_EQ(run_cli("report --preset gitlab-flags --out " + quote(scratch_dir("none").string())).exit_code, 2);
}

TEST(Cli, ReportEmptyLedger) {
  const auto out = scratch_dir("emptyledger");
  write_file_atomic(out / "events.jsonl", "");
  const auto r = run_cli("report --preset gitlab-flags --out " + quote(out.string()));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_TRUE(contains(read_file(out / "report.md"), "n/a (no toggle events mined)"));
}

TEST(Cli, ExportCommunityTwiceKeepsOneHeader) {
  const auto out = mine_and_report("export");
  const auto csv = out / "community.csv";
  for (int i = 0; i < 2; ++i) {
    const auto r = run_cli("export-community --metrics " + quote((out / "metrics.json").string()) + " --csv " +
                           quote(csv.string()));
    ASSERT_EQ(r.exit_code, 0) << r.output;
  }
  const auto text = read_file(csv);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
  EXPECT_EQ(text.substr(0, text.find('\n')), kCommunityHeader);
  EXPECT_TRUE(contains(text, "\nkubernetes,"));
  EXPECT_TRUE(contains(text, ",2021-05-01\n"));
}

TEST(Cli, ExportCommunityUnwritable) {
  const auto out = mine_and_report("unwritable");
  const auto r = run_cli("export-community --metrics " + quote((out / "metrics.json").string()) +
                         " --csv /nonexistent-dir/sub/community.csv");
  EXPECT_EQ(r.exit_code, 2) << r.output;
}

TEST(Cli, EndToEndDeterminism) {
  const auto a = mine_and_report("det-a");
  const auto b = mine_and_report("det-b");
  for (const char* f : {"events.jsonl", "metrics.json", "report.md", "survival.csv", "tiers.json", "permanent.json",
                        "timeseries.csv", "records.json"}) {
    EXPECT_EQ(read_file(a / f), read_file(b / f)) << f;
  }
}

TEST(Cli, ThresholdsCommandPrintsDefaults) {
  const auto r = run_cli("thresholds");
  ASSERT_EQ(r.exit_code, 0);
  std::istringstream is(r.output);
  EXPECT_EQ(read_thresholds(is), default_thresholds());
}
