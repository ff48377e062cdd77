#include <gtest/gtest.h>

#include "teleop/error.hpp"
#include "teleop/report.hpp"

namespace teleop {
namespace {

RunLog finished_run(const std::string& participant, Modality m, double start, double finish, int collisions) {
  RunLog log;
  log.header.participant = participant;
  log.header.modality = std::string(to_string(m));
  log.events.push_back({1, {RunEventKind::RunStarted, start, {}}});
  for (int i = 0; i < collisions; ++i) log.events.push_back({2, {RunEventKind::Collision, start + 1.0 + i, {}}});
  log.events.push_back({3, {RunEventKind::Finished, finish, {}}});
  return log;
}

TEST(SummarizeRun, TraversalAndCollisions) {
  const auto s = summarize_run(finished_run("1", Modality::Pose, 1.5, 29.25, 2));
  ASSERT_TRUE(s.has_value());
  EXPECT_EQ(s->traversal_time, 27.75);
  EXPECT_EQ(s->collision_count, 2);
  EXPECT_EQ(s->modality, Modality::Pose);
}

TEST(SummarizeRun, UnfinishedRun) {
  RunLog log;
  log.header.modality = "pose";
  log.events.push_back({1, {RunEventKind::RunStarted, 1.0, {}}});
  EXPECT_FALSE(summarize_run(log).has_value());
}

TEST(SummarizeRun, ResetStartsOver) {
  RunLog log = finished_run("1", Modality::Joystick, 1.0, 10.0, 1);
  log.events.push_back({4, {RunEventKind::Reset, 11.0, {}}});
  log.events.push_back({5, {RunEventKind::RunStarted, 12.0, {}}});
  log.events.push_back({6, {RunEventKind::Finished, 20.0, {}}});
  const auto s = summarize_run(log);
  ASSERT_TRUE(s);
  EXPECT_EQ(s->traversal_time, 8.0);
  EXPECT_EQ(s->collision_count, 0);
}

TEST(Report, ZeroLogsGiveValidBundleWithWarning) {
  const ReportBundle b = build_report({}, {}, {});
  EXPECT_TRUE(b.files.contains("report.txt"));
  EXPECT_NE(std::find(b.warnings.begin(), b.warnings.end(), "no run logs supplied"), b.warnings.end());
}

TEST(Report, SingleParticipantBothModalities) {
  const std::vector<RunLog> logs{finished_run("1", Modality::Pose, 1.0, 41.0, 0),
                                 finished_run("1", Modality::Joystick, 1.0, 31.0, 1)};
  const std::vector<TlxRecord> tlx{{"1", Modality::Pose, {12, 9, 8, 7, 11, 6}},
                                   {"1", Modality::Joystick, {8, 3, 7, 5, 7, 4}}};
  const ReportBundle b = build_report(logs, {}, tlx);
  ASSERT_TRUE(b.files.contains("time_difference.dat"));
  const std::string& td = b.files.at("time_difference.dat");
  std::size_t rows = 0;
  for (std::size_t p = 0; (p = td.find('\n', p)) != std::string::npos; ++p) ++rows;
  std::size_t comments = 0;
  for (std::size_t p = 0; (p = td.find('#', p)) != std::string::npos; ++p) ++comments;
  EXPECT_EQ(rows - comments, 1u);
  EXPECT_NE(td.find("-10"), std::string::npos);
  EXPECT_TRUE(b.files.contains("rtlx_overall.dat"));
  EXPECT_TRUE(b.files.contains("subscale_means.dat"));
  for (auto name : kSubscaleNames) EXPECT_TRUE(b.files.contains("subscale_" + std::string(name) + ".dat"));
  // rtlx(12,9,8,7,11,6) = 53/6
  EXPECT_NE(b.files.at("rtlx_overall.dat").find("8.8333"), std::string::npos);
}

TEST(Report, PopulationBlock) {
  std::vector<ParticipantRecord> people;
  for (double age : {20.0, 40.0}) people.push_back({std::to_string(age), age, "M", "Never", false, false, false, false});
  const ReportBundle b = build_report({}, people, {});
  const std::string& txt = b.files.at("report.txt");
  EXPECT_NE(txt.find("age_mean 30.0000"), std::string::npos);
  EXPECT_NE(txt.find("age_std 14.1421"), std::string::npos);
}

TEST(Report, IncompletePairingNamesParticipant) {
  const std::vector<RunLog> logs{finished_run("5", Modality::Pose, 1.0, 41.0, 0)};
  try {
    build_report(logs, {}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IncompleteData);
    EXPECT_NE(std::string(e.what()).find("'5'"), std::string::npos);
  }
}

TEST(Report, Deterministic) {
  const std::vector<RunLog> logs{finished_run("1", Modality::Pose, 1.0, 41.0, 0),
                                 finished_run("1", Modality::Joystick, 1.0, 31.0, 1)};
  const auto a = build_report(logs, {}, {});
  const auto b = build_report(logs, {}, {});
  EXPECT_EQ(a.files, b.files);
}

}  // namespace
}  // namespace teleop
