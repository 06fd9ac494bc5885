#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace togglescope;
using namespace togglescope::testing;

namespace {

Analysis analyze_aggregate() {
  auto f = kubernetes_aggregate();
  return analyze(f.ledger, f.context, RunPolicies{}, default_thresholds());
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST(Report, KubernetesAggregateReproducesTable) {
  const auto a = analyze_aggregate();
  const auto& m = a.metrics;
  EXPECT_EQ(m.inputs_echo.additions_total, 603u);
  EXPECT_EQ(m.inputs_echo.removals_total, 448u);
  EXPECT_EQ(m.inputs_echo.active_count, 155u);
  EXPECT_EQ(m.inputs_echo.median_survival_days, 734.0);
  EXPECT_NEAR(*m.churn_rate.value, 10.2, 0.1);
  EXPECT_NEAR(*m.net_accumulation.value, 1.5, 0.05);
  EXPECT_NEAR(*m.cleanup_ratio.value, 0.74, 0.005);
  EXPECT_NEAR(*m.toggle_density.value, 0.016, 0.001);
  EXPECT_NEAR(*m.normalized_lifespan.value, 6.1, 0.1);
  EXPECT_EQ(a.assessment.profile, Profile::Conservative);
  EXPECT_EQ(m.snapshot_date, format_date(utc_day(day(3135))));
}

TEST(Report, AggregateTiersAndPermanent) {
  const auto a = analyze_aggregate();
  EXPECT_EQ(a.tiers.classified(), 448u);
  EXPECT_EQ(a.permanent.max_removed_lifespan_days, 2185.0);
  EXPECT_EQ(a.permanent.toggles.size(), 155u);
  EXPECT_EQ(a.permanent.toggles.front().record.toggle_name, "Active0");
}

TEST(Report, ArtifactsWritten) {
  const auto dir = scratch_dir("report");
  const auto a = analyze_aggregate();
  write_report_artifacts(a, dir);
  for (const char* f : {"metrics.json", "survival.csv", "tiers.json", "permanent.json", "timeseries.csv",
                        "records.json", "report.md"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
    EXPECT_FALSE(std::filesystem::exists(dir / (std::string(f) + ".tmp"))) << f;
  }
  const auto metrics = metric_set_from_json(ojson::parse(read_file(dir / "metrics.json")));
  EXPECT_EQ(metrics.churn_rate.value, a.metrics.churn_rate.value);
  const auto md = read_file(dir / "report.md");
  EXPECT_NE(md.find("| Cleanup ratio | 0.743 | Warning |"), std::string::npos) << md;
  EXPECT_NE(md.find("Profile: **Conservative**"), std::string::npos);
  EXPECT_NE(md.find("Temporary"), std::string::npos);
  const auto csv = read_file(dir / "survival.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,survival,at_risk,deaths,censored");
  const auto ts = read_file(dir / "timeseries.csv");
  EXPECT_EQ(ts.substr(0, ts.find('\n')), "series,period,additions,removals,active");
  EXPECT_NE(ts.find("daily,2025-08-21,,,155\n"), std::string::npos);
}

TEST(Report, EmptyLedgerIsAllNotAvailable) {
  ProjectContext ctx{"empty", 12, 1000, 14, parse_iso8601("2024-01-01")};
  const auto a = analyze(EventLedger{}, ctx, RunPolicies{}, default_thresholds());
  for (const auto* m : {&a.metrics.churn_rate, &a.metrics.net_accumulation, &a.metrics.cleanup_ratio,
                        &a.metrics.toggle_density, &a.metrics.normalized_lifespan}) {
    EXPECT_FALSE(m->has_value());
  }
  const auto md = render_report_md(a);
  EXPECT_EQ(std::count(md.begin(), md.end(), '|') > 0, true);
  std::size_t na = 0;
  for (std::size_t p = md.find("n/a (no toggle events mined)"); p != std::string::npos;
       p = md.find("n/a (no toggle events mined)", p + 1)) {
    ++na;
  }
  EXPECT_EQ(na, 5u);
  EXPECT_EQ(a.assessment.profile, Profile::Mixed);
  const auto dir = scratch_dir("empty");
  EXPECT_NO_THROW(write_report_artifacts(a, dir));
  EXPECT_TRUE(ojson::parse(read_file(dir / "metrics.json"))["churn_rate"].is_null());
}

TEST(Report, OrphanRemovalProducesWarningBlock) {
  EventLedger l({event("Old", Action::Removed, "c2", day(5)), event("New", Action::Added, "c3", day(6))}, "r",
                TimeRange{day(0), day(6)});
  ProjectContext ctx{"p", 0.2, 1000, 14, std::nullopt};
  const auto a = analyze(l, ctx, RunPolicies{}, default_thresholds());
  const auto md = render_report_md(a);
  const auto pos = md.find("## Warnings");
  ASSERT_NE(pos, std::string::npos);
  EXPECT_NE(md.find("Old", pos), std::string::npos);
  EXPECT_EQ(a.snapshot, day(6));
}

TEST(Report, SnapshotBeforeLastEventRejected) {
  EventLedger l({event("A", Action::Added, "c", day(5))}, "r");
  ProjectContext ctx{"p", 1, 1000, 14, day(4)};
  EXPECT_THROW(analyze(l, ctx, RunPolicies{}, default_thresholds()), ConfigError);
}

TEST(Report, InvalidContextRejected) {
  ProjectContext ctx{"p", 0, 1000, 14, std::nullopt};
  EXPECT_THROW(analyze(EventLedger{}, ctx, RunPolicies{}, default_thresholds()), ConfigError);
}

TEST(Report, DeterministicArtifacts) {
  const auto d1 = scratch_dir("det"), d2 = scratch_dir("det");
  write_report_artifacts(analyze_aggregate(), d1);
  write_report_artifacts(analyze_aggregate(), d2);
  for (const char* f : {"metrics.json", "survival.csv", "tiers.json", "permanent.json", "timeseries.csv",
                        "records.json", "report.md"}) {
    EXPECT_EQ(read_file(d1 / f), read_file(d2 / f)) << f;
  }
}

TEST(Report, LedgerSidecarRoundTrip) {
  const auto dir = scratch_dir("ledger");
  EventLedger l({event("A", Action::Removed, "c", day(5))}, "myrepo", TimeRange{day(1), day(9)});
  write_ledger(dir / "events.jsonl", l);
  write_file_atomic(ledger_meta_path(dir / "events.jsonl"), ledger_meta_json(l).dump(2));
  EXPECT_EQ(ledger_meta_path(dir / "events.jsonl"), dir / "events.meta.json");
  const auto back = load_ledger(dir / "events.jsonl");
  EXPECT_EQ(back.mined_range().first, day(1));
  EXPECT_EQ(back.repo_label(), "myrepo");
  EXPECT_EQ(back.events(), l.events());
}

TEST(Community, KubernetesRow) {
  MetricSet m;
  m.project_name = "kubernetes";
  m.churn_rate = OptionalMetric::of(10.2);
  m.net_accumulation = OptionalMetric::of(1.5);
  m.cleanup_ratio = OptionalMetric::of(0.74);
  m.toggle_density = OptionalMetric::of(0.016);
  m.normalized_lifespan = OptionalMetric::of(6.1);
  m.snapshot_date = "2025-08-01";
  EXPECT_EQ(community_row(m), "kubernetes,10.2,1.5,0.74,0.016,6.1,2025-08-01");
  m.normalized_lifespan = OptionalMetric::missing("undefined");
  EXPECT_EQ(community_row(m), "kubernetes,10.2,1.5,0.74,0.016,,2025-08-01");
  m.project_name = "a,b";
  EXPECT_EQ(community_row(m).substr(0, 6), "\"a,b\",");
}

TEST(Community, AppendKeepsOneHeader) {
  const auto path = scratch_dir("community") / "community.csv";
  MetricSet m;
  m.project_name = "p";
  m.churn_rate = OptionalMetric::of(1);
  append_community_rows(path, {m});
  append_community_rows(path, {m});
  const auto text = read_file(path);
  EXPECT_EQ(count_lines(text), 3u);
  EXPECT_EQ(text.substr(0, text.find('\n')), kCommunityHeader);
  EXPECT_EQ(text.find(kCommunityHeader, 1), std::string::npos);
}

TEST(Community, UnwritablePath) {
  MetricSet m;
  EXPECT_THROW(append_community_rows("/nonexistent-dir/x/community.csv", {m}), RepoError);
}
