#include "teleop/report.hpp"

#include <cstdio>
#include <set>
#include <sstream>

#include "teleop/error.hpp"

namespace teleop {
namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

}  // namespace

std::optional<RunSummary> summarize_run(const RunLog& log) {
  std::optional<double> started;
  std::optional<RunSummary> out;
  int collisions = 0;
  for (const auto& le : log.events) {
    const RunEvent& e = le.event;
    switch (e.kind) {
      case RunEventKind::RunStarted:
        started = e.time;
        collisions = 0;
        break;
      case RunEventKind::Collision:
        ++collisions;
        break;
      case RunEventKind::Reset:
        started.reset();
        collisions = 0;
        break;
      case RunEventKind::Finished:
        if (started) {
          RunSummary s;
          s.participant_id = log.header.participant;
          s.modality = modality_from(log.header.modality);
          s.traversal_time = e.time - *started;
          s.collision_count = collisions;
          out = s;
        }
        break;
    }
  }
  return out;
}

ReportBundle build_report(const std::vector<RunLog>& logs, const std::vector<ParticipantRecord>& participants,
                          const std::vector<TlxRecord>& tlx) {
  ReportBundle bundle;
  auto& warn = bundle.warnings;
  for (const auto& r : tlx) r.validate();

  std::vector<RunSummary> runs;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    const RunLog& log = logs[i];
    const std::string name = "log " + std::to_string(i + 1);
    if (log.header.participant.empty()) {
      warn.push_back(name + " has no participant id; skipped");
      continue;
    }
    if (log.header.modality != "pose" && log.header.modality != "joystick") {
      warn.push_back(name + " (" + log.header.participant + ") was recorded in " + log.header.modality +
                     " mode; skipped");
      continue;
    }
    if (!log.complete) warn.push_back(name + " (" + log.header.participant + ") is truncated");
    if (auto s = summarize_run(log)) {
      runs.push_back(*s);
    } else {
      warn.push_back(name + " (" + log.header.participant + ", " + log.header.modality + ") never finished");
    }
  }
  if (logs.empty()) warn.push_back("no run logs supplied");
  if (tlx.empty()) warn.push_back("no TLX records supplied");
  if (participants.empty()) warn.push_back("no participant records supplied");

  std::ostringstream txt;
  txt << "# workload and traversal report\n\n";

  // population
  txt << "## population\n";
  txt << "participants " << participants.size() << "\n";
  if (participants.size() >= 2) {
    const AgeSummary ages = summarize_ages(participants);
    txt << "age_mean " << fixed(ages.mean, 4) << "\n";
    txt << "age_std " << fixed(ages.std, 4) << "\n";
  } else {
    txt << "age_mean n/a\nage_std n/a\n";
    if (!participants.empty()) warn.push_back("age statistics need at least two participants");
  }
  int athletes = 0, pc = 0, console = 0, vr = 0;
  std::map<std::string, int> experience;
  for (const auto& p : participants) {
    athletes += p.athlete;
    pc += p.pc_games;
    console += p.console;
    vr += p.vr_ar;
    ++experience[p.uav_experience];
  }
  txt << "athlete_yes " << athletes << "\npc_games_yes " << pc << "\nconsole_yes " << console
      << "\nvr_ar_yes " << vr << "\n";
  for (const auto& [bucket, n] : experience) txt << "uav_experience \"" << bucket << "\" " << n << "\n";
  txt << "\n";

  // RTLX per participant
  std::map<std::string, std::map<Modality, const TlxRecord*>> by_participant;
  for (const auto& r : tlx) {
    auto& slot = by_participant[r.participant_id][r.modality];
    if (slot) warn.push_back("duplicate TLX record for " + r.participant_id + "; the last one is used");
    slot = &r;
  }
  std::ostringstream rtlx_dat;
  rtlx_dat << "# participant rtlx_pose rtlx_joystick\n";
  txt << "## rtlx per participant\n" << pad("participant", 14) << pad("pose", 10) << "joystick\n";
  for (const auto& [id, recs] : by_participant) {
    const auto cell = [&](Modality m) {
      const auto it = recs.find(m);
      return it == recs.end() ? std::string("nan") : fixed(rtlx(*it->second), 4);
    };
    const auto shown = [&](Modality m) {
      const auto it = recs.find(m);
      return it == recs.end() ? std::string("-") : fixed(rtlx(*it->second), 2);
    };
    txt << pad(id, 14) << pad(shown(Modality::Pose), 10) << shown(Modality::Joystick) << "\n";
    rtlx_dat << id << ' ' << cell(Modality::Pose) << ' ' << cell(Modality::Joystick) << "\n";
  }
  txt << "\n";
  bundle.files["rtlx_overall.dat"] = rtlx_dat.str();

  // per-subscale scores
  for (std::size_t k = 0; k < kSubscaleCount; ++k) {
    const std::string name(kSubscaleNames[k]);
    std::ostringstream dat;
    dat << "# participant " << name << "_pose " << name << "_joystick\n";
    txt << "## subscale " << name << "\n" << pad("participant", 14) << pad("pose", 10) << "joystick\n";
    for (const auto& [id, recs] : by_participant) {
      const auto value = [&](Modality m, int digits, const char* missing) {
        const auto it = recs.find(m);
        return it == recs.end() ? std::string(missing) : fixed(it->second->ratings[k], digits);
      };
      txt << pad(id, 14) << pad(value(Modality::Pose, 2, "-"), 10) << value(Modality::Joystick, 2, "-") << "\n";
      dat << id << ' ' << value(Modality::Pose, 4, "nan") << ' ' << value(Modality::Joystick, 4, "nan") << "\n";
    }
    txt << "\n";
    bundle.files["subscale_" + name + ".dat"] = dat.str();
  }

  // subscale means
  std::ostringstream means_dat;
  means_dat << "# subscale mean_pose mean_joystick\n";
  std::array<std::optional<std::array<double, kSubscaleCount>>, 2> means;
  for (const Modality m : {Modality::Pose, Modality::Joystick}) {
    try {
      means[m == Modality::Pose ? 0 : 1] = subscale_means(tlx, m);
    } catch (const Error&) {
      warn.push_back("no TLX records for " + std::string(to_string(m)) + " mode");
    }
  }
  txt << "## subscale means\n" << pad("subscale", 14) << pad("pose", 10) << "joystick\n";
  for (std::size_t k = 0; k < kSubscaleCount; ++k) {
    const auto v = [&](int idx, int digits, const char* missing) {
      return means[idx] ? fixed((*means[idx])[k], digits) : std::string(missing);
    };
    txt << pad(std::string(kSubscaleNames[k]), 14) << pad(v(0, 2, "-"), 10) << v(1, 2, "-") << "\n";
    means_dat << kSubscaleNames[k] << ' ' << v(0, 4, "nan") << ' ' << v(1, 4, "nan") << "\n";
  }
  txt << "\n";
  bundle.files["subscale_means.dat"] = means_dat.str();

  // time differences
  const auto diffs = time_differences(runs);
  std::ostringstream diff_dat;
  diff_dat << "# participant t_pose t_joystick t_joystick_minus_t_pose\n";
  txt << "## traversal time difference (t_joystick - t_pose, s)\n"
      << pad("participant", 14) << pad("t_pose", 10) << pad("t_joystick", 12) << "difference\n";
  for (const auto& [id, d] : diffs) {
    double tp = 0.0, tj = 0.0;
    for (const auto& r : runs) {
      if (r.participant_id != id) continue;
      (r.modality == Modality::Pose ? tp : tj) = r.traversal_time;
    }
    txt << pad(id, 14) << pad(fixed(tp, 2), 10) << pad(fixed(tj, 2), 12) << fixed(d, 2) << "\n";
    diff_dat << id << ' ' << fixed(tp, 4) << ' ' << fixed(tj, 4) << ' ' << fixed(d, 4) << "\n";
  }
  txt << "\n";
  bundle.files["time_difference.dat"] = diff_dat.str();

  txt << "## warnings\n";
  if (warn.empty()) txt << "none\n";
  for (const auto& w : warn) txt << "- " << w << "\n";
  bundle.files["report.txt"] = txt.str();
  return bundle;
}

}  // namespace teleop
