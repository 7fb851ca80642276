#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "uwmab/bandit/contextual_ucb.hpp"
#include "uwmab/bandit/feedback_mab.hpp"
#include "uwmab/bandit/types.hpp"

namespace uwmab::netsim {

// One feedback round k on one directed link.
struct IntervalRecord {
  int link_src = 0;
  int link_dst = 0;
  std::uint64_t k = 0;
  double t_start_s = 0.0;
  int q_k_min = 0;
  std::int64_t slots = 0;  // actual length; exceeds q_k_min after feedback retries
  long long r_k_bits = 0;
  double r_k_norm = 0.0;
  double energy_data_j = 0.0;
  double energy_fb_j = 0.0;
  double aoi_mean_slots = 0.0;
  std::int64_t aoi_peak_slots = 0;
  long long frames_sent = 0;
  long long frames_delivered = 0;
  long long lost_ber = 0;
  long long lost_collision = 0;
  long long lost_halfduplex = 0;
  std::array<long long, kActionCount> action_counts{};
  // Closed by the end of the episode rather than by a feedback exchange.
  bool truncated = false;
};

// One decision slot on one link.
struct SlotRecord {
  int link_src = 0;
  std::int64_t slot = 0;
  Context context;       // as seen by the controller
  double ref_snr_db = 0.0;  // true mean SNR at the reference power class
  int action = -1;  // -1: deferred (half-duplex busy)
  long long frames_sent = 0;
  long long delivered_bits = 0;
};

struct ControlStats {
  long long requests_sent = 0;
  long long feedback_sent = 0;
  long long exchanges_completed = 0;
  long long exchanges_failed = 0;
};

// Learned controller state of one link at episode end (bilevel links only).
struct LinkCheckpoint {
  int link_src = 0;
  std::optional<ArmTable> inner;
  std::optional<FeedbackMab> outer;
};

struct EpisodeResult {
  std::vector<IntervalRecord> intervals;
  std::vector<SlotRecord> slots;
  std::vector<double> node_energy_j;
  std::vector<long long> sink_bits_by_origin;
  ControlStats control;
  std::int64_t slot_count = 0;
  double duration_s = 0.0;
  long long max_bits_per_slot = 0;
  long long deferred_slots = 0;
  std::vector<LinkCheckpoint> checkpoints;
};

}  // namespace uwmab::netsim
