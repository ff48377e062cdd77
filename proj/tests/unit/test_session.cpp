#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <sstream>

#include "teleop/error.hpp"
#include "teleop/session.hpp"

namespace teleop {
namespace {

using protocol::InboundMessage;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Maze reference_maze() { return load_maze_file(std::string(TELEOP_DATA_DIR) + "/mazes/reference_maze.txt"); }

PendingInputs joy(std::array<double, 4> axes, std::uint64_t seq = 1) {
  Mailbox box;
  box.post({seq, 0.0, protocol::JoyAxes{axes}});
  return box.drain();
}

PendingInputs hands(Point2 left, Point2 right, std::uint64_t seq = 1) {
  KeypointFrame f = KeypointFrame::uniform({0.5, 0.5});
  f.points[kLeftHandRow] = left;
  f.points[kRightHandRow] = right;
  Mailbox box;
  box.post({seq, 0.0, protocol::Keypoints{f}});
  return box.drain();
}

PendingInputs control(protocol::RunAction a) {
  Mailbox box;
  box.post({1, 0.0, protocol::RunControl{a}});
  return box.drain();
}

std::vector<InboundMessage> joy_trace(std::array<double, 4> axes, double seconds) {
  std::vector<InboundMessage> out;
  for (int k = 0; k * 0.05 < seconds; ++k) {
    out.push_back({static_cast<std::uint64_t>(k + 1), k * 0.05, protocol::JoyAxes{axes}});
  }
  return out;
}

bool same_state(const VehicleState& a, const VehicleState& b) {
  return std::memcmp(a.position.data(), b.position.data(), 3 * sizeof(double)) == 0 &&
         std::memcmp(a.velocity.data(), b.velocity.data(), 3 * sizeof(double)) == 0 &&
         std::memcmp(a.orientation.coeffs().data(), b.orientation.coeffs().data(), 4 * sizeof(double)) == 0 &&
         std::memcmp(a.angular_rate.data(), b.angular_rate.data(), 3 * sizeof(double)) == 0;
}

TEST(Session, StartsAtSpawn) {
  const Maze m = reference_maze();
  Session s(Config{}, m);
  EXPECT_EQ(s.state().position, m.spawn_position);
  EXPECT_EQ(s.setpoints().z, m.spawn_position.z());
  EXPECT_EQ(s.ticks(), 0u);
}

TEST(Session, NoInputNoDrift) {
  HeadlessOptions opt;
  opt.duration = 5.0;
  const HeadlessResult r = run_headless(Config{}, reference_maze(), {}, opt);
  ASSERT_EQ(r.log.records.size(), 100u);
  EXPECT_LT((r.last.state.position - reference_maze().spawn_position).norm(), 1e-6);
}

TEST(Session, NoInputTenSeconds) {
  HeadlessOptions opt;
  opt.duration = 10.0;
  const HeadlessResult r = run_headless(Config{}, reference_maze(), {}, opt);
  EXPECT_FALSE(r.halted);
  EXPECT_EQ(r.log.records.size(), 200u);
  for (const TickRecord& rec : r.log.records) ASSERT_EQ(rec.reference, ReferenceVector{});
  EXPECT_LT((r.last.state.position - reference_maze().spawn_position).norm(), 1e-6);
}

TEST(Session, RateDecimation) {
  Session s(Config{}, reference_maze());
  for (int k = 0; k < 40; ++k) s.tick({});
  EXPECT_EQ(s.ticks(), 40u);
  EXPECT_EQ(s.cascade_steps(), 40u * 5u);
  EXPECT_EQ(s.physics_steps(), 40u * 50u);
  EXPECT_DOUBLE_EQ(s.time(), 2.0);
}

TEST(Session, ClimbSetpointRisesExactlyPerSecond) {
  Session s(Config{}, reference_maze());
  const double z0 = s.setpoints().z;
  for (int sec = 1; sec <= 3; ++sec) {
    for (int k = 0; k < 20; ++k) s.tick(joy({1, 0, 0, 0}));
    EXPECT_NEAR(s.setpoints().z - z0, 0.2 * sec, 1e-12);
  }
}

TEST(Session, HeldClimbStickGivesSteadyClimbRate) {
  HeadlessOptions opt;
  opt.duration = 5.0;
  const HeadlessResult r = run_headless(Config{}, reference_maze(), joy_trace({1, 0, 0, 0}, 5.0), opt);
  ASSERT_FALSE(r.halted);
  // 0.01 m per tick at 20 Hz
  EXPECT_NEAR(r.last.setpoints.z, 1.0 + 0.01 * 100, 1e-12);
  EXPECT_NEAR(r.last.state.velocity.z(), 0.2, 0.02);
}

TEST(Session, YawIntegratesPerTick) {
  Session s(Config{}, reference_maze());
  for (int k = 0; k < 10; ++k) s.tick(joy({0, 1, 0, 0}));
  EXPECT_NEAR(s.setpoints().psi, 0.6, 1e-12);
}

TEST(Session, PoseHandsOutsideDeadZonesNeverArm) {
  Config c;
  c.modality = Modality::Pose;
  Session s(c, reference_maze());
  for (int k = 0; k < 60; ++k) {
    const auto snap = s.tick(hands({0.10, 0.30}, {0.90, 0.70}, k + 1));
    ASSERT_EQ(snap.reference, ReferenceVector{});
    ASSERT_FALSE(snap.armed);
  }
}

TEST(Session, PoseAndJoystickAgreeOnEqualReferences) {
  Config pose_cfg;
  pose_cfg.modality = Modality::Pose;
  pose_cfg.filter_window = 1;
  Config joy_cfg = pose_cfg;
  joy_cfg.modality = Modality::Joystick;

  Session a(pose_cfg, reference_maze());
  Session b(joy_cfg, reference_maze());
  a.tick(hands({0.25, 0.5}, {0.75, 0.5}));
  b.tick(joy({0, 0, 0, 0}));
  for (int k = 0; k < 40; ++k) {
    const auto sa = a.tick(hands({0.25, 0.20}, {0.75, 0.5}));
    const auto sb = b.tick(joy({1, 0, 0, 0}));
    ASSERT_EQ(sa.reference, (ReferenceVector{1, 0, 0, 0}));
    ASSERT_EQ(sa.reference, sb.reference);
    ASSERT_TRUE(same_state(sa.state, sb.state));
  }
}

TEST(Session, StaleReferenceHoldsThenDecays) {
  Config c;  // 20 Hz, hold 0.5 s, decay 0.5 s
  Session s(c, reference_maze());
  s.tick(joy({0.8, 0, 0, 0}));
  std::vector<double> r1;
  for (int k = 1; k <= 25; ++k) r1.push_back(s.tick({}).reference.r1);
  // r1[k-1] is the reference k ticks after the last input
  for (int k = 1; k <= 10; ++k) EXPECT_EQ(r1[k - 1], 0.8) << k;
  EXPECT_NEAR(r1[14], 0.8 * 0.5, 1e-12);
  for (int k = 20; k <= 25; ++k) EXPECT_EQ(r1[k - 1], 0.0) << k;
  for (int k = 11; k < 20; ++k) {
    EXPECT_LT(r1[k - 1], r1[k - 2]);
    EXPECT_GT(r1[k - 1], 0.0);
  }
}

TEST(Session, TraceModeJoystickOverridesPose) {
  Config c;
  c.modality = Modality::Trace;
  c.filter_window = 1;
  Session s(c, reference_maze());
  s.tick(hands({0.25, 0.5}, {0.75, 0.5}));
  PendingInputs both = hands({0.25, 0.20}, {0.75, 0.5});
  both.joy_axes = joy({0, 0, 0.5, 0}).joy_axes;
  EXPECT_EQ(s.tick(both).reference, (ReferenceVector{0, 0, 0.5, 0}));
}

TEST(Session, PauseFreezesTheClock) {
  Session s(Config{}, reference_maze());
  s.tick(joy({0.5, 0, 0, 0}));
  s.tick(control(protocol::RunAction::Pause));
  const auto before = s.state();
  for (int k = 0; k < 5; ++k) EXPECT_TRUE(s.tick({}).paused);
  EXPECT_EQ(s.ticks(), 1u);
  EXPECT_TRUE(same_state(before, s.state()));
  s.tick(control(protocol::RunAction::Resume));
  EXPECT_EQ(s.ticks(), 2u);
}

TEST(Session, ResetReturnsToSpawn) {
  const Maze m = reference_maze();
  Session s(Config{}, m);
  for (int k = 0; k < 40; ++k) s.tick(joy({1, 0, 0.5, 0}));
  ASSERT_GT((s.state().position - m.spawn_position).norm(), 0.5);
  const auto snap = s.tick(control(protocol::RunAction::Reset));
  ASSERT_FALSE(snap.events.empty());
  EXPECT_EQ(snap.events.front().kind, RunEventKind::Reset);
  EXPECT_EQ(snap.setpoints.z, m.spawn_position.z());
  EXPECT_LT((snap.state.position - m.spawn_position).norm(), 1e-3);
  EXPECT_TRUE(s.log().records.back().operator_reset);
}

TEST(Session, SetModeSwitchesInputSource) {
  Session s(Config{}, reference_maze());
  Mailbox box;
  box.post({1, 0.0, protocol::SetMode{Modality::Pose}});
  box.post({2, 0.0, protocol::JoyAxes{{1, 0, 0, 0}}});
  const auto snap = s.tick(box.drain());
  EXPECT_EQ(snap.mode, Modality::Pose);
  EXPECT_EQ(snap.reference, ReferenceVector{});
  EXPECT_EQ(snap.input_ack, 2u);
}

TEST(Session, TlxSubmissionsAreCollected) {
  Session s(Config{}, reference_maze());
  Mailbox box;
  box.post({1, 0.0, protocol::TlxSubmit{{"4", Modality::Pose, {1, 2, 3, 4, 5, 6}}}});
  s.tick(box.drain());
  const auto recs = s.take_tlx();
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].participant_id, "4");
  EXPECT_TRUE(s.take_tlx().empty());
}

TEST(Session, PreviewDoesNotChangeTheSession) {
  Session a(Config{}, reference_maze());
  Session b(Config{}, reference_maze());
  for (int k = 0; k < 10; ++k) {
    const PendingInputs in = joy({0.3, 0.2, -0.4, 0.1}, k + 1);
    const auto p = a.preview(in);
    EXPECT_EQ(p.reference, (ReferenceVector{0.3, 0.2, -0.4, 0.1}));
    EXPECT_EQ(p.input_ack, static_cast<std::uint64_t>(k + 1));
    a.tick(in);
    b.tick(in);
    ASSERT_TRUE(same_state(a.state(), b.state()));
  }
}

TEST(Session, FaultHalts) {
  Config c;
  c.cascade.roll_rate.gains.p = 1e300;
  Session s(c, reference_maze());
  for (int k = 0; k < 40 && !s.halted(); ++k) s.tick(joy({0, 0, 0, 1}));
  ASSERT_TRUE(s.halted());
  EXPECT_FALSE(s.fault().empty());
  const auto ticks = s.ticks();
  EXPECT_TRUE(s.tick(joy({0, 0, 0, 1})).halted);
  EXPECT_EQ(s.ticks(), ticks);
}

TEST(Replay, ReferenceTraceIsBitIdentical) {
  const Maze m = reference_maze();
  const auto trace = parse_trace(read_file(std::string(TELEOP_DATA_DIR) + "/traces/reference_run.trace"));
  HeadlessOptions opt;
  opt.duration = 30.0;
  const HeadlessResult a = run_headless(Config{}, m, trace, opt);
  const HeadlessResult b = run_headless(Config{}, m, trace, opt);
  EXPECT_EQ(export_log(a.log, LogFormat::Jsonl), export_log(b.log, LogFormat::Jsonl));
  const ReplayResult r = replay(a.log, Config{}, m);
  EXPECT_TRUE(r.bit_identical);
  EXPECT_EQ(r.max_deviation, 0.0);
  EXPECT_EQ(r.compared, a.log.records.size());
  EXPECT_EQ(r.events, a.log.events);
  EXPECT_FALSE(r.truncated);
}

TEST(Replay, DigestMismatch) {
  const Maze m = reference_maze();
  HeadlessOptions opt;
  opt.duration = 1.0;
  const HeadlessResult a = run_headless(Config{}, m, joy_trace({0.5, 0, 0, 0}, 1.0), opt);
  Config other;
  other.scaling.s_z = 0.02;
  try {
    replay(a.log, other, m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DigestMismatch);
  }
  Config zones;
  zones.set("zone1.dead", "0.21 0.45 0.30 0.55");
  EXPECT_THROW(replay(a.log, zones, m), Error);
  EXPECT_THROW(replay(a.log, Config{}, load_maze("#S..F#\n")), Error);
}

TEST(Replay, TruncatedLogReplaysItsPrefix) {
  const Maze m = reference_maze();
  HeadlessOptions opt;
  opt.duration = 3.0;
  const HeadlessResult a = run_headless(Config{}, m, joy_trace({0.5, 0.3, 0.2, -0.2}, 3.0), opt);
  std::string text = export_log(a.log, LogFormat::Jsonl);
  text.resize(text.size() * 2 / 3);
  const RunLog cut = import_log(text);
  EXPECT_FALSE(cut.complete);
  const ReplayResult r = replay(cut, Config{}, m);
  EXPECT_TRUE(r.truncated);
  EXPECT_TRUE(r.bit_identical);
  EXPECT_EQ(r.compared, cut.records.size());
  EXPECT_GT(r.compared, 20u);
}

TEST(Replay, TamperedRecordIsReported) {
  const Maze m = reference_maze();
  HeadlessOptions opt;
  opt.duration = 1.0;
  HeadlessResult a = run_headless(Config{}, m, joy_trace({0.5, 0, 0, 0}, 1.0), opt);
  a.log.records[7].state.position.x() += 1e-9;
  const ReplayResult r = replay(a.log, Config{}, m);
  EXPECT_FALSE(r.bit_identical);
  EXPECT_EQ(r.first_mismatch, 8u);
  EXPECT_NEAR(r.max_deviation, 1e-9, 1e-12);
}

TEST(Trace, ParsesCommentsAndBlankLines) {
  const auto t = parse_trace(
      "# header\n\n"
      R"({"v":1,"kind":"joy_axes","seq":1,"t":0.0,"axes":[0,0,0,0]})" "\n"
      R"({"v":1,"kind":"run_control","seq":2,"t":0.5,"action":"reset"})" "\n");
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[1].kind(), protocol::InboundKind::RunControl);
}

TEST(Trace, ErrorsNameTheLine) {
  try {
    parse_trace("# c\n" R"({"v":1,"kind":"joy_axes","seq":1,"t":0.0,"axes":[0,0,0]})" "\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Schema);
    EXPECT_NE(std::string(e.what()).find("trace line 2"), std::string::npos);
  }
  EXPECT_THROW(parse_trace(R"({"v":1,"kind":"joy_axes","seq":1,"t":1.0,"axes":[0,0,0,0]})" "\n"
                           R"({"v":1,"kind":"joy_axes","seq":2,"t":0.5,"axes":[0,0,0,0]})" "\n"),
               Error);
}

TEST(Headless, SummaryMentionsOutcome) {
  HeadlessOptions opt;
  opt.duration = 0.5;
  const std::string s = summary_json(run_headless(Config{}, reference_maze(), {}, opt));
  EXPECT_NE(s.find("\"ticks\":10"), std::string::npos);
  EXPECT_NE(s.find("\"halted\":false"), std::string::npos);
}

}  // namespace
}  // namespace teleop
