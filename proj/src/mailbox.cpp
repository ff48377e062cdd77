#include "teleop/mailbox.hpp"

#include <algorithm>

namespace teleop {

using protocol::InboundKind;
using protocol::InboundMessage;

std::uint64_t PendingInputs::max_seq() const {
  std::uint64_t seq = 0;
  if (keypoints) seq = std::max(seq, keypoints->seq);
  if (joy_axes) seq = std::max(seq, joy_axes->seq);
  for (const auto& m : control) seq = std::max(seq, m.seq);
  return seq;
}

void Mailbox::post(InboundMessage msg) {
  switch (msg.kind()) {
    case InboundKind::Keypoints:
      pending_.keypoints = std::move(msg);
      break;
    case InboundKind::JoyAxes:
      pending_.joy_axes = std::move(msg);
      break;
    default:
      if (pending_.control.size() >= capacity_) {
        ++pending_.dropped_control;
        return;
      }
      pending_.control.push_back(std::move(msg));
      break;
  }
}

PendingInputs Mailbox::drain() {
  PendingInputs out = std::move(pending_);
  pending_ = {};
  return out;
}

Mailbox coalesce(Mailbox mailbox, InboundMessage msg) {
  mailbox.post(std::move(msg));
  return mailbox;
}

void SharedMailbox::post(InboundMessage msg) {
  {
    std::lock_guard lock(mutex_);
    box_.post(std::move(msg));
    ++posted_;
  }
  cv_.notify_all();
}

PendingInputs SharedMailbox::drain() {
  std::lock_guard lock(mutex_);
  return box_.drain();
}

PendingInputs SharedMailbox::peek() const {
  std::lock_guard lock(mutex_);
  return box_.peek();
}

bool SharedMailbox::wait_until(std::chrono::steady_clock::time_point deadline) {
  std::unique_lock lock(mutex_);
  const bool woken = cv_.wait_until(lock, deadline, [&] { return posted_ != seen_; });
  seen_ = posted_;
  return woken;
}

void SharedMailbox::notify() {
  {
    std::lock_guard lock(mutex_);
    ++posted_;
  }
  cv_.notify_all();
}

}  // namespace teleop
