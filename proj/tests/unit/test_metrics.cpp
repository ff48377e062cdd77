#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "../support/oracles.hpp"
#include "teleop/error.hpp"
#include "teleop/metrics.hpp"

namespace teleop {
namespace {

TlxRecord record(std::array<double, 6> ratings, Modality m = Modality::Pose, std::string id = "1") {
  return {std::move(id), m, ratings};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Rtlx, WorkedExamples) {
  EXPECT_EQ(rtlx(record({20, 20, 20, 20, 20, 20})), 20.0);
  EXPECT_EQ(rtlx(record({10, 10, 10, 10, 10, 10})), 10.0);
  EXPECT_EQ(rtlx(record({5, 10, 15, 0, 20, 10})), 10.0);
}

TEST(Rtlx, RejectsOutOfRange) {
  try {
    rtlx(record({5, 10, 15, 0, 21, 10}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Validation);
  }
  EXPECT_THROW(rtlx(record({-1, 0, 0, 0, 0, 0})), Error);
  EXPECT_THROW(rtlx(record({0, 0, 0, 0, 0, 0}, Modality::Trace)), Error);
}

TEST(Rtlx, PermutationInvariantMonotoneAndBounded) {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> rating(0, 20);
  for (int i = 0; i < 2000; ++i) {
    std::array<double, 6> r{};
    for (double& x : r) x = rating(rng);
    const double base = rtlx(record(r));
    EXPECT_GE(base, *std::min_element(r.begin(), r.end()));
    EXPECT_LE(base, *std::max_element(r.begin(), r.end()));
    std::array<double, 6> shuffled = r;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EXPECT_EQ(rtlx(record(shuffled)), base);
    const std::size_t k = static_cast<std::size_t>(rating(rng)) % 6;
    if (r[k] < 20) {
      std::array<double, 6> raised = r;
      raised[k] += 1;
      EXPECT_GE(rtlx(record(raised)), base);
    }
  }
}

TEST(SummarizeAges, TwoValues) {
  const std::vector<double> ages{20, 40};
  const AgeSummary s = summarize_ages(ages);
  EXPECT_EQ(s.mean, 30.0);
  EXPECT_NEAR(s.std, 14.142135623730951, 1e-12);
}

TEST(SummarizeAges, EqualValues) {
  const std::vector<double> ages{30, 30};
  const AgeSummary s = summarize_ages(ages);
  EXPECT_EQ(s.mean, 30.0);
  EXPECT_EQ(s.std, 0.0);
}

TEST(SummarizeAges, NeedsTwo) {
  const std::vector<double> one{30};
  EXPECT_THROW(summarize_ages(one), Error);
}

TEST(SummarizeAges, MatchesTwoPassOracle) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> age(18, 70);
  std::uniform_int_distribution<int> n(2, 50);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> ages(static_cast<std::size_t>(n(rng)));
    for (double& a : ages) a = age(rng);
    const AgeSummary s = summarize_ages(ages);
    ASSERT_NEAR(s.mean, oracle::mean(ages), 1e-12);
    ASSERT_NEAR(s.std, oracle::sample_std(ages), 1e-12);
  }
}

TEST(SummarizeAges, StudyPopulation) {
  const auto people = parse_participants(read_file(std::string(TELEOP_DATA_DIR) + "/participants/table3.csv"));
  ASSERT_EQ(people.size(), 12u);
  const AgeSummary s = summarize_ages(people);
  EXPECT_GE(s.mean, 26.66 - 0.01);
  EXPECT_LE(s.mean, 26.67 + 0.01);
  EXPECT_NEAR(s.std, 5.01, 0.01);
  EXPECT_EQ(people[0].uav_experience, "5 and more");
  EXPECT_TRUE(people[0].vr_ar);
  EXPECT_FALSE(people[0].athlete);
}

TEST(TimeDifferences, JoystickMinusPose) {
  const std::vector<RunSummary> runs{{"1", Modality::Pose, 40.0, 1},
                                     {"1", Modality::Joystick, 30.5, 0},
                                     {"2", Modality::Joystick, 20.0, 0},
                                     {"2", Modality::Pose, 25.0, 2}};
  const auto d = time_differences(runs);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.at("1"), -9.5);
  EXPECT_EQ(d.at("2"), -5.0);
}

TEST(TimeDifferences, Examples) {
  const std::vector<RunSummary> same{{"a", Modality::Pose, 42.0, 0}, {"a", Modality::Joystick, 42.0, 0}};
  EXPECT_EQ(time_differences(same).at("a"), 0.0);
  const std::vector<RunSummary> runs{{"b", Modality::Joystick, 60.0, 0}, {"b", Modality::Pose, 75.0, 0}};
  EXPECT_EQ(time_differences(runs).at("b"), -15.0);
}

TEST(TimeDifferences, MissingModalityNamesParticipant) {
  const std::vector<RunSummary> runs{{"7", Modality::Pose, 40.0, 0}};
  try {
    time_differences(runs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IncompleteData);
    EXPECT_NE(std::string(e.what()).find("'7'"), std::string::npos);
  }
}

TEST(SubscaleMeans, PerModality) {
  const std::vector<TlxRecord> recs{record({2, 4, 6, 8, 10, 12}), record({4, 4, 4, 4, 4, 4}),
                                    record({20, 20, 20, 20, 20, 20}, Modality::Joystick)};
  const auto pose = subscale_means(recs, Modality::Pose);
  EXPECT_EQ(pose, (std::array<double, 6>{3, 4, 5, 6, 7, 8}));
  EXPECT_EQ(subscale_means(recs, Modality::Joystick)[0], 20.0);
  const std::vector<TlxRecord> none;
  EXPECT_THROW(subscale_means(none, Modality::Pose), Error);
}

TEST(SubscaleMeans, Examples) {
  const std::vector<TlxRecord> one{record({1, 2, 3, 4, 5, 6})};
  EXPECT_EQ(subscale_means(one, Modality::Pose), (std::array<double, 6>{1, 2, 3, 4, 5, 6}));
  const std::vector<TlxRecord> extremes{record({0, 0, 0, 0, 0, 0}), record({20, 20, 20, 20, 20, 20})};
  EXPECT_EQ(subscale_means(extremes, Modality::Pose), (std::array<double, 6>{10, 10, 10, 10, 10, 10}));
  const std::vector<TlxRecord> mental{record({5, 0, 0, 0, 0, 0}), record({10, 0, 0, 0, 0, 0}),
                                      record({15, 0, 0, 0, 0, 0})};
  EXPECT_EQ(subscale_means(mental, Modality::Pose)[0], 10.0);
}

TEST(Tables, TlxCsvRoundTrip) {
  std::mt19937_64 rng(14);
  std::uniform_int_distribution<int> rating(0, 20);
  std::vector<TlxRecord> recs;
  std::string text = tlx_csv_header() + "\n";
  for (int i = 0; i < 20; ++i) {
    TlxRecord r;
    r.participant_id = std::to_string(i);
    r.modality = i % 2 ? Modality::Joystick : Modality::Pose;
    for (double& x : r.ratings) x = std::min(20.0, rating(rng) + 0.5 * (i % 2));
    recs.push_back(r);
    text += tlx_csv_row(r) + "\n";
  }
  EXPECT_EQ(parse_tlx(text), recs);
}

TEST(Tables, TabSeparatedAndComments) {
  const auto recs = parse_tlx(
      "# comment\nparticipant\tmodality\tmental\tphysical\ttemporal\tperformance\teffort\tfrustration\n"
      "3\tjoystick\t1\t2\t3\t4\t5\t6\n");
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].modality, Modality::Joystick);
  EXPECT_EQ(recs[0].ratings[5], 6.0);
}

TEST(Tables, ErrorsNameLine) {
  try {
    parse_tlx(tlx_csv_header() + "\n1,pose,1,2,3\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_THROW(parse_tlx(tlx_csv_header() + "\n1,pose,1,2,3,4,5,25\n"), Error);
  EXPECT_THROW(parse_participants("id,age\n1,20\n"), Error);
}

}  // namespace
}  // namespace teleop
