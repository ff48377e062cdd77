#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <mutex>
#include <optional>
#include <vector>

#include "teleop/protocol.hpp"

namespace teleop {

/// Inputs gathered for one session tick. Data-plane kinds keep only their
/// newest message; control-plane messages (everything else) keep arrival order.
struct PendingInputs {
  std::optional<protocol::InboundMessage> keypoints;
  std::optional<protocol::InboundMessage> joy_axes;
  std::vector<protocol::InboundMessage> control;
  std::size_t dropped_control = 0;  // control messages lost to the bound

  [[nodiscard]] bool empty() const { return !keypoints && !joy_axes && control.empty(); }
  /// Highest sequence number among the pending messages.
  [[nodiscard]] std::uint64_t max_seq() const;
};

/// Latest-wins mailbox (single-threaded).
class Mailbox {
public:
  explicit Mailbox(std::size_t control_capacity = 256) : capacity_(control_capacity) {}

  void post(protocol::InboundMessage msg);
  PendingInputs drain();
  [[nodiscard]] const PendingInputs& peek() const { return pending_; }
  [[nodiscard]] bool empty() const { return pending_.empty(); }

private:
  std::size_t capacity_;
  PendingInputs pending_;
};

/// Functional form of Mailbox::post.
Mailbox coalesce(Mailbox mailbox, protocol::InboundMessage msg);

/// Thread-safe mailbox shared by gateway connections (producers) and the
/// live loop (single consumer).
class SharedMailbox {
public:
  explicit SharedMailbox(std::size_t control_capacity = 256) : box_(control_capacity) {}

  void post(protocol::InboundMessage msg);
  PendingInputs drain();
  /// Copy of what is pending, without consuming it.
  PendingInputs peek() const;

  /// Waits until something is posted after the last wait, or the deadline passes.
  /// Returns true when woken by a post.
  bool wait_until(std::chrono::steady_clock::time_point deadline);
  void notify();

private:
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  Mailbox box_;
  std::uint64_t posted_ = 0;
  std::uint64_t seen_ = 0;
};

}  // namespace teleop
