#include "videostf/report.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "test_util.hpp"

using namespace videostf;
using report::RecordKind;
using report::ReportKind;
using report::ResultLog;
using report::RunRecord;
using testutil::TempDir;

namespace {

nlohmann::json context(const std::string& protocol, const std::string& model,
                       long frames, const std::string& transform = "original",
                       size_t trial = 0) {
  return {{"protocol", protocol}, {"model", model},  {"frame_count", frames},
          {"transform", transform}, {"trial", trial}};
}

RunRecord sample_record(const std::string& id, const nlohmann::json& ctx,
                        const std::string& video, bool repetitive,
                        double rep_n, double h_norm, bool empty = false) {
  nlohmann::json payload{{"query_id", id},
                         {"video_id", video},
                         {"context", ctx},
                         {"r_max", repetitive ? 2 : 1},
                         {"rep_n", rep_n},
                         {"h_norm", h_norm},
                         {"is_repetitive", repetitive},
                         {"n_indicator", 5},
                         {"n_intensity", 1},
                         {"flags", nlohmann::json::array()}};
  if (empty) payload["flags"].push_back("empty_output");
  return report::make_record(RecordKind::sample_metrics, "run1", id, payload);
}

RunRecord trace_record(const std::string& id, const nlohmann::json& ctx,
                       const std::string& video, bool success,
                       size_t queries_used) {
  nlohmann::json payload{{"video_id", video},
                         {"context", ctx},
                         {"success", success},
                         {"queries_used", queries_used},
                         {"attempts", nlohmann::json::array()}};
  return report::make_record(RecordKind::trace, "run1", id, payload);
}

}  // namespace

TEST(ResultLog, AppendAndReload) {
  TempDir tmp("log");
  const auto path = tmp.path() / "run.jsonl";
  {
    ResultLog log(path);
    EXPECT_EQ(log.append(sample_record("s1", context("pervasive", "m", 8),
                                       "v1", false, 0.1, 0.9)),
              0u);
    EXPECT_EQ(log.append(sample_record("s2", context("pervasive", "m", 8),
                                       "v2", true, 0.5, 0.5)),
              1u);
    EXPECT_TRUE(log.contains(RecordKind::sample_metrics, "s1"));
    EXPECT_FALSE(log.contains(RecordKind::query, "s1"));
  }
  ResultLog reopened(path);
  EXPECT_EQ(reopened.records().size(), 2u);
  EXPECT_TRUE(reopened.contains(RecordKind::sample_metrics, "s2"));
}

TEST(ResultLog, DuplicateIdRejectedWithOriginalLine) {
  TempDir tmp("dup");
  ResultLog log(tmp.path() / "run.jsonl");
  log.append(sample_record("s1", context("pervasive", "m", 8), "v1", false,
                           0.0, 1.0));
  try {
    log.append(sample_record("s1", context("pervasive", "m", 8), "v1", false,
                             0.0, 1.0));
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos);
  }
  // Same id under a different kind is a different record.
  EXPECT_NO_THROW(log.append(report::make_record(
      RecordKind::query, "run1", "s1", nlohmann::json::object())));
}

TEST(ResultLog, TornTrailingLineTruncatedOnOpen) {
  TempDir tmp("torn");
  const auto path = tmp.path() / "run.jsonl";
  {
    ResultLog log(path);
    log.append(sample_record("s1", context("pervasive", "m", 8), "v1", false,
                             0.0, 1.0));
  }
  {
    std::ofstream out(path, std::ios::app | std::ios::binary);
    out << "{\"record_kind\":\"query\",\"run_id\":\"r\",\"rec";  // torn write
  }
  ResultLog log(path);
  EXPECT_EQ(log.records().size(), 1u);
  // The log is usable again and the torn bytes are gone from disk.
  log.append(sample_record("s2", context("pervasive", "m", 8), "v2", false,
                           0.0, 1.0));
  const auto loaded = ResultLog::load(path);
  EXPECT_EQ(loaded.size(), 2u);
}

TEST(Aggregate, PervasiveCellMeansAndExclusions) {
  std::vector<RunRecord> records;
  const auto ctx = context("pervasive", "model_a", 8);
  records.push_back(sample_record("s1", ctx, "v1", true, 0.5, 0.5));
  records.push_back(sample_record("s2", ctx, "v2", false, 0.1, 0.9));
  records.push_back(sample_record("s3", ctx, "v3", false, 0.3, 0.7));
  records.push_back(sample_record("s4", ctx, "v4", false, 0.1, 0.9));
  records.push_back(sample_record("s5", ctx, "v5", false, 0.0, 1.0, true));

  const auto table = report::aggregate(records, ReportKind::pervasive);
  ASSERT_EQ(table.rows.size(), 1u);
  const auto& row = table.rows[0];
  EXPECT_EQ(row.axes, (std::vector<std::string>{"model_a", "8"}));
  EXPECT_DOUBLE_EQ(row.values.at("k"), 4.0);
  EXPECT_DOUBLE_EQ(row.values.at("rr"), 0.25);
  EXPECT_DOUBLE_EQ(row.values.at("excluded"), 1.0);
  EXPECT_NEAR(row.values.at("ri"), 0.25, 1e-12);
  EXPECT_NEAR(row.values.at("ie"), 0.75, 1e-12);
  EXPECT_EQ(row.provenance.size(), 5u);
}

TEST(Aggregate, StressBothAggregates) {
  std::vector<RunRecord> records;
  const auto ctx = context("stress", "m", 16, "shuffle");
  // Video v1: 2 trials, one repetitive. Video v2: 2 trials, none repetitive.
  records.push_back(sample_record("t1", ctx, "v1", true, 0.6, 0.4));
  records.push_back(sample_record("t2", ctx, "v1", false, 0.2, 0.8));
  records.push_back(sample_record("t3", ctx, "v2", false, 0.2, 0.8));
  records.push_back(sample_record("t4", ctx, "v2", false, 0.2, 0.8));

  const auto table = report::aggregate(records, ReportKind::stress);
  ASSERT_EQ(table.rows.size(), 1u);
  const auto& row = table.rows[0];
  EXPECT_EQ(row.axes, (std::vector<std::string>{"m", "16", "shuffle"}));
  EXPECT_DOUBLE_EQ(row.values.at("rr"), 0.25);           // 1 of 4 trials
  EXPECT_DOUBLE_EQ(row.values.at("rr_any_trial"), 0.5);  // 1 of 2 videos
  EXPECT_DOUBLE_EQ(row.values.at("videos"), 2.0);
}

TEST(Aggregate, AttackAsrAq) {
  std::vector<RunRecord> records;
  const auto ctx = context("attack", "m", 8, "add1");
  records.push_back(trace_record("tr1", ctx, "v1", true, 3));
  records.push_back(trace_record("tr2", ctx, "v2", true, 5));
  records.push_back(trace_record("tr3", ctx, "v3", false, 30));

  const auto table = report::aggregate(records, ReportKind::attack);
  ASSERT_EQ(table.rows.size(), 1u);
  const auto& row = table.rows[0];
  EXPECT_NEAR(row.values.at("asr"), 2.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(row.values.at("aq"), 4.0);

  const std::string csv = report::render(table, report::RenderFormat::csv);
  EXPECT_NE(csv.find("m,8,add1,3,67,4.0"), std::string::npos) << csv;
}

TEST(Aggregate, AttackAllFailuresOmitsAq) {
  std::vector<RunRecord> records;
  records.push_back(
      trace_record("tr1", context("attack", "m", 8, "reverse"), "v1", false, 1));
  const auto table = report::aggregate(records, ReportKind::attack);
  EXPECT_TRUE(table.rows[0].absent.count("aq"));
  EXPECT_DOUBLE_EQ(table.rows[0].values.at("asr"), 0.0);
  const std::string md = report::render(table, report::RenderFormat::markdown);
  EXPECT_NE(md.find("| - |"), std::string::npos);
}

TEST(Aggregate, EmptySelectionThrows) {
  std::vector<RunRecord> records;
  records.push_back(sample_record("s1", context("pervasive", "m", 8), "v1",
                                  false, 0.0, 1.0));
  EXPECT_THROW(report::aggregate(records, ReportKind::attack),
               EmptyReportError);
  EXPECT_THROW(report::aggregate(std::vector<RunRecord>{}, ReportKind::pervasive),
               EmptyReportError);
}

TEST(Aggregate, SweepFromLoggedOutputs) {
  std::vector<RunRecord> records;
  const auto ctx = context("pervasive", "m", 8);
  nlohmann::json q1{{"query_id", "q1"},
                    {"video_id", "v1"},
                    {"context", ctx},
                    {"output_text", "a b c d e a b c d e"},
                    {"flags", nlohmann::json::array()}};
  nlohmann::json q2 = q1;
  q2["query_id"] = "q2";
  q2["video_id"] = "v2";
  q2["output_text"] = "all words here are unique tokens";
  records.push_back(report::make_record(RecordKind::query, "run1", "q1", q1));
  records.push_back(report::make_record(RecordKind::query, "run1", "q2", q2));

  const auto table = report::aggregate(records, ReportKind::sweep);
  ASSERT_EQ(table.rows.size(), 10u);  // default n = 1..10
  // n=5: half the outputs repeat a 5-gram.
  EXPECT_EQ(table.rows[4].axes[2], "5");
  EXPECT_DOUBLE_EQ(table.rows[4].values.at("rr"), 0.5);
  // n=6: the repeated block is only 5 long.
  EXPECT_DOUBLE_EQ(table.rows[5].values.at("rr"), 0.0);
}

TEST(Aggregate, DistributionQuantiles) {
  std::vector<RunRecord> records;
  const auto ctx = context("pervasive", "m", 8);
  const std::vector<double> reps = {0.0, 0.25, 0.5, 0.75, 1.0};
  for (size_t i = 0; i < reps.size(); ++i) {
    records.push_back(sample_record("s" + std::to_string(i), ctx,
                                    "v" + std::to_string(i), false, reps[i],
                                    1.0 - reps[i]));
  }
  const auto table = report::aggregate(records, ReportKind::distributions);
  ASSERT_EQ(table.rows.size(), 2u);  // rep_n and h_norm rows
  const auto& rep_row = table.rows[1];  // h_norm sorts before rep_n
  EXPECT_EQ(rep_row.axes[3], "rep_n");
  EXPECT_DOUBLE_EQ(rep_row.values.at("min"), 0.0);
  EXPECT_DOUBLE_EQ(rep_row.values.at("p25"), 0.25);
  EXPECT_DOUBLE_EQ(rep_row.values.at("median"), 0.5);
  EXPECT_DOUBLE_EQ(rep_row.values.at("p75"), 0.75);
  EXPECT_DOUBLE_EQ(rep_row.values.at("max"), 1.0);
}

TEST(Render, RoundingRules) {
  std::vector<RunRecord> records;
  const auto ctx = context("pervasive", "m", 8);
  records.push_back(sample_record("s1", ctx, "v1", true, 0.5, 0.5));
  records.push_back(sample_record("s2", ctx, "v2", true, 0.5, 0.5));
  records.push_back(sample_record("s3", ctx, "v3", false, 0.5, 0.5));
  const auto table = report::aggregate(records, ReportKind::pervasive);
  const std::string csv = report::render(table, report::RenderFormat::csv);
  // RR 0.666... renders as 67; RI 0.5 renders as 0.50.
  EXPECT_NE(csv.find("m,8,3,67,0.50,0.50,0"), std::string::npos) << csv;
}

TEST(Render, CsvRoundTripToDisplayedPrecision) {
  std::vector<RunRecord> records;
  const auto ctx = context("pervasive", "model", 16);
  records.push_back(sample_record("s1", ctx, "v1", true, 0.333333, 0.876543));
  records.push_back(sample_record("s2", ctx, "v2", false, 0.1, 0.9));
  const auto table = report::aggregate(records, ReportKind::pervasive);
  const std::string csv = report::render(table, report::RenderFormat::csv);

  std::istringstream in(csv);
  std::string header, line;
  ASSERT_TRUE(std::getline(in, header));
  ASSERT_TRUE(std::getline(in, line));
  std::vector<std::string> fields;
  {
    std::istringstream ls(line);
    std::string f;
    while (std::getline(ls, f, ',')) fields.push_back(f);
  }
  ASSERT_EQ(fields.size(), 7u);
  // Re-parsed values match the displayed precision of the raw table.
  EXPECT_EQ(fields[3],
            report::detail::format_value(table.rows[0].values.at("rr"),
                                         report::ColumnFormat::percent0));
  EXPECT_EQ(fields[4],
            report::detail::format_value(table.rows[0].values.at("ri"),
                                         report::ColumnFormat::fixed2));
}

TEST(Render, PlotdataSweepShape) {
  std::vector<RunRecord> records;
  const auto ctx = context("pervasive", "m", 8);
  nlohmann::json q{{"query_id", "q1"},
                   {"video_id", "v1"},
                   {"context", ctx},
                   {"output_text", "x y x y x y"},
                   {"flags", nlohmann::json::array()}};
  records.push_back(report::make_record(RecordKind::query, "run1", "q1", q));
  const auto table = report::aggregate(records, ReportKind::sweep);
  const auto doc = nlohmann::json::parse(
      report::render(table, report::RenderFormat::plotdata_json));
  EXPECT_EQ(doc.at("kind"), "sweep");
  ASSERT_EQ(doc.at("x").size(), 10u);
  EXPECT_EQ(doc.at("x")[0], 1);
  ASSERT_FALSE(doc.at("series").empty());
  EXPECT_EQ(doc.at("series")[0].at("values").size(), 10u);
}

TEST(Render, AggregationPurityUnderReordering) {
  std::vector<RunRecord> records;
  const auto ctx = context("pervasive", "m", 8);
  records.push_back(sample_record("s1", ctx, "v1", true, 0.5, 0.5));
  records.push_back(sample_record("s2", ctx, "v2", false, 0.25, 0.75));
  records.push_back(sample_record("s3", ctx, "v3", false, 0.125, 0.875));
  auto reordered = records;
  std::swap(reordered[0], reordered[2]);
  const auto a = report::aggregate(records, ReportKind::pervasive);
  const auto b = report::aggregate(reordered, ReportKind::pervasive);
  EXPECT_EQ(report::render(a, report::RenderFormat::csv),
            report::render(b, report::RenderFormat::csv));
}
