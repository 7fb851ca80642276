#pragma once

#include <cstdint>
#include <stdexcept>

namespace uwmab {

// Slot-granular age of the transmitter's channel knowledge (1 slot = 1 min).
// Age grows by one per slot and drops to zero when feedback arrives.
class AoiClock {
 public:
  AoiClock() = default;
  AoiClock(std::int64_t last_feedback_slot, std::int64_t current_slot)
      : last_feedback_slot_(last_feedback_slot), current_slot_(current_slot) {
    if (current_slot < last_feedback_slot) {
      throw std::invalid_argument("AoiClock: current slot precedes last feedback");
    }
  }

  std::int64_t age() const { return current_slot_ - last_feedback_slot_; }
  std::int64_t current_slot() const { return current_slot_; }
  std::int64_t last_feedback_slot() const { return last_feedback_slot_; }

  void advance_to(std::int64_t slot) {
    if (slot < current_slot_) throw std::invalid_argument("AoiClock: time went backwards");
    current_slot_ = slot;
  }

  void tick() { ++current_slot_; }

  // Feedback received at the current slot.
  void reset() { last_feedback_slot_ = current_slot_; }

 private:
  std::int64_t last_feedback_slot_ = 0;
  std::int64_t current_slot_ = 0;
};

inline std::int64_t aoi_value(const AoiClock& clock) { return clock.age(); }

}  // namespace uwmab
