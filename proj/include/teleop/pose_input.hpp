#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace teleop {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline constexpr std::size_t kKeypointRows = 16;

// MPII skeleton ordering: row 10 is the right wrist, row 15 the left wrist.
inline constexpr std::size_t kRightHandRow = 10;
inline constexpr std::size_t kLeftHandRow = 15;

/// One human-pose sample in normalized image coordinates (x right, y down).
/// Coordinates of rows flagged valid lie in [0,1].
struct KeypointFrame {
  std::array<Point2, kKeypointRows> points{};
  std::array<bool, kKeypointRows> valid{};
  double timestamp = 0.0;

  /// Builds a frame from a dynamic row list; throws RejectedFrame on a row
  /// count other than 16 or an out-of-range coordinate.
  static KeypointFrame from_rows(std::span<const Point2> rows,
                                 std::span<const bool> valid, double timestamp);

  /// A frame with every row valid and set to `p`.
  static KeypointFrame uniform(Point2 p, double timestamp = 0.0);

  /// Throws RejectedFrame if any valid coordinate is non-finite or outside [0,1].
  void validate() const;

  friend bool operator==(const KeypointFrame&, const KeypointFrame&) = default;
};

struct FilteredPose {
  std::array<Point2, kKeypointRows> points{};
  std::array<bool, kKeypointRows> valid{};
  std::size_t window_fill = 0;
};

struct HandPair {
  Point2 left;
  Point2 right;

  friend bool operator==(const HandPair&, const HandPair&) = default;
};

/// Moving-average filter over the last n keypoint frames.
///
/// Before n frames have been seen the mean is taken over the frames
/// available. A row is reported valid when the newest frame has it valid;
/// its value is the mean over the window samples in which it was valid.
class AveragingFilter {
public:
  explicit AveragingFilter(std::size_t window = 5);

  /// Validates and appends `frame`. A rejected frame leaves the state untouched.
  FilteredPose push(const KeypointFrame& frame);

  void reset();

  [[nodiscard]] std::size_t window() const { return window_; }
  [[nodiscard]] std::size_t size() const { return frames_.size(); }

private:
  std::size_t window_;
  std::vector<KeypointFrame> frames_;  // ring buffer, capacity window_
  std::size_t head_ = 0;               // slot of the oldest frame once full
};

/// Selects the wrist rows. Throws MissingHand if either row is invalid.
HandPair extract_hands(const FilteredPose& pose);

}  // namespace teleop
