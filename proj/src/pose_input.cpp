#include "teleop/pose_input.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "teleop/error.hpp"

namespace teleop {
namespace {

bool in_unit(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

}  // namespace

KeypointFrame KeypointFrame::from_rows(std::span<const Point2> rows,
                                       std::span<const bool> valid, double timestamp) {
  if (rows.size() != kKeypointRows || valid.size() != kKeypointRows) {
    throw Error(ErrorCode::RejectedFrame, "keypoint frame must have exactly 16 rows, got " +
                                              std::to_string(rows.size()));
  }
  KeypointFrame f;
  for (std::size_t i = 0; i < kKeypointRows; ++i) {
    f.points[i] = rows[i];
    f.valid[i] = valid[i];
  }
  f.timestamp = timestamp;
  f.validate();
  return f;
}

KeypointFrame KeypointFrame::uniform(Point2 p, double timestamp) {
  KeypointFrame f;
  f.points.fill(p);
  f.valid.fill(true);
  f.timestamp = timestamp;
  return f;
}

void KeypointFrame::validate() const {
  for (std::size_t i = 0; i < kKeypointRows; ++i) {
    if (!valid[i]) continue;
    if (!in_unit(points[i].x) || !in_unit(points[i].y)) {
      throw Error(ErrorCode::RejectedFrame,
                  "keypoint row " + std::to_string(i) + " outside [0,1]");
    }
  }
}

AveragingFilter::AveragingFilter(std::size_t window) : window_(window) {
  if (window_ == 0) throw Error(ErrorCode::Config, "averaging window must be >= 1");
  frames_.reserve(window_);
}

FilteredPose AveragingFilter::push(const KeypointFrame& frame) {
  frame.validate();

  std::size_t newest;
  if (frames_.size() < window_) {
    frames_.push_back(frame);
    newest = frames_.size() - 1;
  } else {
    frames_[head_] = frame;
    newest = head_;
    head_ = (head_ + 1) % window_;
  }

  FilteredPose out;
  out.window_fill = frames_.size();
  const std::size_t start = frames_.size() < window_ ? 0 : head_;
  for (std::size_t row = 0; row < kKeypointRows; ++row) {
    out.valid[row] = frames_[newest].valid[row];
    // mean as an offset from the oldest valid sample
    const Point2* base = nullptr;
    double dx = 0.0;
    double dy = 0.0;
    Point2 lo{1.0, 1.0};
    Point2 hi{0.0, 0.0};
    std::size_t count = 0;
    for (std::size_t k = 0; k < frames_.size(); ++k) {  // oldest to newest
      const auto& f = frames_[(start + k) % frames_.size()];
      if (!f.valid[row]) continue;
      if (base == nullptr) base = &f.points[row];
      dx += f.points[row].x - base->x;
      dy += f.points[row].y - base->y;
      lo = {std::min(lo.x, f.points[row].x), std::min(lo.y, f.points[row].y)};
      hi = {std::max(hi.x, f.points[row].x), std::max(hi.y, f.points[row].y)};
      ++count;
    }
    if (count > 0) {
      const double n = static_cast<double>(count);
      out.points[row] = {std::clamp(base->x + dx / n, lo.x, hi.x), std::clamp(base->y + dy / n, lo.y, hi.y)};
    }
  }
  return out;
}

void AveragingFilter::reset() {
  frames_.clear();
  head_ = 0;
}

HandPair extract_hands(const FilteredPose& pose) {
  if (!pose.valid[kLeftHandRow]) throw Error(ErrorCode::MissingHand, "left hand (row 15) missing");
  if (!pose.valid[kRightHandRow]) throw Error(ErrorCode::MissingHand, "right hand (row 10) missing");
  return {pose.points[kLeftHandRow], pose.points[kRightHandRow]};
}

}  // namespace teleop
