#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "teleop/modality.hpp"

namespace teleop {

inline constexpr std::size_t kSubscaleCount = 6;

/// Subscale order used everywhere: mental, physical, temporal, performance,
/// effort, frustration. Performance keeps the questionnaire orientation
/// (higher = worse), like the others.
inline constexpr std::array<std::string_view, kSubscaleCount> kSubscaleNames{
    "mental", "physical", "temporal", "performance", "effort", "frustration"};

/// One raw NASA TLX questionnaire (ratings 0..20).
struct TlxRecord {
  std::string participant_id;
  Modality modality = Modality::Pose;
  std::array<double, kSubscaleCount> ratings{};

  /// Throws Validation on a rating outside [0,20] or a modality other than
  /// pose/joystick.
  void validate() const;

  friend bool operator==(const TlxRecord&, const TlxRecord&) = default;
};

/// Raw TLX: unweighted mean of the six ratings.
double rtlx(const TlxRecord& record);

struct ParticipantRecord {
  std::string id;
  double age = 0.0;
  std::string gender;
  std::string uav_experience;  // "Never", "1-3 times", "3-5 times", "5 and more"
  bool athlete = false;
  bool pc_games = false;
  bool console = false;
  bool vr_ar = false;
};

struct AgeSummary {
  double mean = 0.0;
  double std = 0.0;  // sample (n - 1) standard deviation
};

AgeSummary summarize_ages(std::span<const double> ages);
AgeSummary summarize_ages(std::span<const ParticipantRecord> participants);

struct RunSummary {
  std::string participant_id;
  Modality modality = Modality::Pose;
  double traversal_time = 0.0;  // s
  int collision_count = 0;
};

/// Per participant, t_joystick - t_pose in seconds. Throws IncompleteData
/// naming the first participant without exactly one run per modality.
std::map<std::string, double> time_differences(std::span<const RunSummary> runs);

/// Per-subscale mean over the records of one modality. Throws Validation
/// when there are none.
std::array<double, kSubscaleCount> subscale_means(std::span<const TlxRecord> records,
                                                  Modality modality);

/// Table readers (comma- or tab-separated, '#' comments, header row).
std::vector<ParticipantRecord> parse_participants(std::string_view text);
std::vector<TlxRecord> parse_tlx(std::string_view text);

std::string tlx_csv_header();
std::string tlx_csv_row(const TlxRecord& record);

}  // namespace teleop
