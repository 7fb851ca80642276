#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

#include "uwmab/bandit/types.hpp"
#include "uwmab/channel/acoustic.hpp"

namespace uwmab::netsim {

enum class FrameKind : std::uint8_t { Data, FeedbackRequest, Feedback };

enum class Fate : std::uint8_t { Delivered, LostBer, LostCollision, LostHalfDuplex };

inline constexpr std::string_view to_string(Fate f) {
  switch (f) {
    case Fate::Delivered: return "delivered";
    case Fate::LostBer: return "lost_ber";
    case Fate::LostCollision: return "lost_collision";
    case Fate::LostHalfDuplex: return "lost_halfduplex";
  }
  return "?";
}

// Half-open [start, end) in seconds.
struct TimeSpan {
  double start = 0.0;
  double end = 0.0;

  bool overlaps(const TimeSpan& o) const { return start < o.end && o.start < end; }
};

struct Frame {
  FrameKind kind = FrameKind::Data;
  int src = 0;
  int dst = 0;
  long payload_bits = 0;
  Modulation modulation = Modulation::BPSK;
  PowerClass power = PowerClass::Medium;  // embedded in data frames
  double tx_start = 0.0;
  double tx_end = 0.0;
  double arrival = 0.0;  // arrival of the last bit at dst

  TimeSpan reception() const { return {arrival - (tx_end - tx_start), arrival}; }
};

// An arrival registered at a receiver: a whole burst or one control frame.
struct Arrival {
  TimeSpan span;
  std::uint64_t transmission_id = 0;
};

// Receiver-side fate of one frame. own_transmissions are the receiver's own
// airtime intervals; others are every arrival at the receiver, possibly
// including the frame's own transmission (skipped by id).
inline Fate deliver_frame(const TimeSpan& reception, std::uint64_t transmission_id,
                          std::span<const TimeSpan> own_transmissions,
                          std::span<const Arrival> others, double success_probability,
                          double uniform_draw) {
  for (const TimeSpan& t : own_transmissions) {
    if (t.overlaps(reception)) return Fate::LostHalfDuplex;
  }
  for (const Arrival& a : others) {
    if (a.transmission_id != transmission_id && a.span.overlaps(reception)) return Fate::LostCollision;
  }
  return uniform_draw < success_probability ? Fate::Delivered : Fate::LostBer;
}

struct MacParams {
  double slot_s = 60.0;
  double duty_window_s = 10.0;
  double control_window_s = 2.0;
  long frame_bits = 1000;
  long packet_bits = 1'000'000;  // 125 kB
  long request_bits = 128;
  long feedback_bits = 256;
  double control_bitrate_bps = 4800.0;
  PowerClass control_power = PowerClass::Medium;

  double control_airtime(long bits) const { return static_cast<double>(bits) / control_bitrate_bps; }
};

// Back-to-back data frames sent by one node in one slot.
struct Burst {
  int src = 0;
  int dst = 0;
  Action action;
  double start = 0.0;
  double frame_airtime = 0.0;
  long frame_bits = 0;
  long frames = 0;

  double end() const { return start + frame_airtime * static_cast<double>(frames); }
  double airtime() const { return frame_airtime * static_cast<double>(frames); }

  Frame frame(long i, double propagation_s) const {
    Frame f;
    f.kind = FrameKind::Data;
    f.src = src;
    f.dst = dst;
    f.payload_bits = frame_bits;
    f.modulation = action.modulation;
    f.power = action.power;
    f.tx_start = start + frame_airtime * static_cast<double>(i);
    f.tx_end = f.tx_start + frame_airtime;
    f.arrival = f.tx_end + propagation_s;
    return f;
  }
};

inline long frames_per_window(Modulation m, double window_s, long frame_bits,
                              const channel::ChannelParams& ch) {
  // Small epsilon so that exact multiples are not lost to rounding.
  return static_cast<long>(std::floor(window_s * channel::bitrate(m, ch) / static_cast<double>(frame_bits) + 1e-9));
}

// Frames one node sends in its slot. A node still on the air at the decision
// instant (half-duplex) sends nothing and the slot counts as deferred.
inline Burst transmit_slot(int src, int dst, Action action, double start_s, double busy_until_s,
                           const MacParams& mac, const channel::ChannelParams& ch) {
  Burst b;
  b.src = src;
  b.dst = dst;
  b.action = action;
  b.start = start_s;
  b.frame_bits = mac.frame_bits;
  b.frame_airtime = static_cast<double>(mac.frame_bits) / channel::bitrate(action.modulation, ch);
  b.frames = busy_until_s > start_s ? 0 : frames_per_window(action.modulation, mac.duty_window_s, mac.frame_bits, ch);
  return b;
}

}  // namespace uwmab::netsim
