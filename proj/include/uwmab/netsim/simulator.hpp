#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "uwmab/bandit/aoi_clock.hpp"
#include "uwmab/bandit/types.hpp"
#include "uwmab/channel/acoustic.hpp"
#include "uwmab/netsim/frame.hpp"
#include "uwmab/netsim/metrics.hpp"
#include "uwmab/netsim/policy.hpp"
#include "uwmab/netsim/topology.hpp"

namespace uwmab::netsim {

struct SimConfig {
  Topology topology;
  channel::ChannelParams channel;
  channel::PowerMap power;
  MacParams mac;
  ControllerParams controller;
  PolicySpec policy;
  double duration_s = 6000.0;
  double interference_range_m = 357.0;
  // Feedback reports SNR as if the data frame had been sent at this class.
  PowerClass reference_power = PowerClass::Medium;

  double max_propagation_s() const {
    return std::max(interference_range_m, topology.max_link_m) / channel.sound_speed_mps;
  }
  // One request/feedback round trip over the longest allowed link.
  double exchange_time_s() const {
    return mac.control_airtime(mac.request_bits) + mac.control_airtime(mac.feedback_bits) +
           2.0 * topology.max_link_m / channel.sound_speed_mps;
  }
  double request_jitter_s() const { return mac.control_window_s - exchange_time_s(); }
  // Range of the random data start offset after the control window; the
  // margin keeps every arrival inside its own slot.
  double data_offset_range_s() const {
    return mac.slot_s - mac.control_window_s - mac.duty_window_s - (max_propagation_s() + 0.5);
  }
  // Feedback intervals are given in minutes and must span whole slots.
  std::int64_t interval_slots(int q_min) const {
    return static_cast<std::int64_t>(std::llround(60.0 * q_min / mac.slot_s));
  }
  std::int64_t slot_count() const {
    return static_cast<std::int64_t>(std::floor(duration_s / mac.slot_s + 1e-9));
  }
  long long max_bits_per_slot() const {
    return static_cast<long long>(frames_per_window(Modulation::PSK16, mac.duty_window_s, mac.frame_bits, channel)) *
           mac.frame_bits;
  }

  void validate() const {
    channel.validate();
    power.validate();
    topology.validate();
    auto fail = [](const std::string& what) { throw std::invalid_argument("simulation: " + what); };
    if (!(mac.slot_s > 0.0)) fail("slot length must be > 0");
    if (!(mac.duty_window_s > 0.0)) fail("duty window must be > 0");
    if (mac.frame_bits <= 0 || mac.request_bits <= 0 || mac.feedback_bits <= 0) fail("frame sizes must be > 0");
    if (!(mac.control_bitrate_bps > 0.0)) fail("control bitrate must be > 0");
    const double bpsk_airtime = static_cast<double>(mac.frame_bits) / channel::bitrate(Modulation::BPSK, channel);
    if (bpsk_airtime > mac.duty_window_s) {
      fail("frame airtime at BPSK (" + std::to_string(bpsk_airtime) + " s for " + std::to_string(mac.frame_bits) +
           " bits) exceeds the duty window (" + std::to_string(mac.duty_window_s) + " s)");
    }
    if (!(request_jitter_s() > 0.0)) {
      fail("control window (" + std::to_string(mac.control_window_s) + " s) cannot hold a feedback exchange (" +
           std::to_string(exchange_time_s()) + " s)");
    }
    if (!(data_offset_range_s() > 0.0)) {
      fail("slot (" + std::to_string(mac.slot_s) + " s) cannot hold control window + duty window + propagation margin");
    }
    if (!(interference_range_m > 0.0)) fail("interference range must be > 0");
    if (controller.interval_menu.empty()) fail("interval menu is empty");
    if (controller.action_menu.empty()) fail("action menu is empty");
    for (std::size_t i = 0; i < controller.action_menu.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (controller.action_menu[i] == controller.action_menu[j]) fail("action menu lists an action twice");
      }
    }
    auto check_interval = [&](int q) {
      if (q <= 0) fail("interval durations must be positive");
      const double slots = 60.0 * q / mac.slot_s;
      if (std::abs(slots - std::round(slots)) > 1e-9) {
        fail("interval of " + std::to_string(q) + " min is not a whole number of " + std::to_string(mac.slot_s) +
             " s slots");
      }
    };
    for (int q : controller.interval_menu) check_interval(q);
    const int shortest = *std::min_element(controller.interval_menu.begin(), controller.interval_menu.end());
    if (slot_count() < interval_slots(shortest)) fail("duration is shorter than one feedback interval");
    if (policy.interval_min) check_interval(*policy.interval_min);
  }
};

class Simulator {
 public:
  Simulator(SimConfig cfg, std::uint64_t seed)
      : cfg_(std::move(cfg)),
        rng_channel_(make_rng(seed, 1)),
        rng_mac_(make_rng(seed, 2)),
        rng_phy_(make_rng(seed, 3)),
        rng_policy_(make_rng(seed, 4)) {
    cfg_.validate();
    setup();
  }

  EpisodeResult run() {
    schedule(0.0, EventKind::SlotStart, 0);
    while (!queue_.empty()) {
      const Event ev = queue_.top();
      queue_.pop();
      now_ = ev.time;
      switch (ev.kind) {
        case EventKind::SlotStart: on_slot_start(static_cast<std::int64_t>(ev.arg)); break;
        case EventKind::SendRequest: on_send_request(static_cast<int>(ev.arg)); break;
        case EventKind::DataStart: on_data_start(static_cast<int>(ev.arg)); break;
        case EventKind::ControlArrival: on_control_arrival(ev.arg); break;
        case EventKind::BurstArrival: on_burst_arrival(ev.arg); break;
      }
    }
    finish();
    return std::move(result_);
  }

 private:
  enum class EventKind : std::uint8_t { SlotStart, SendRequest, DataStart, ControlArrival, BurstArrival };

  struct Event {
    double time;
    std::uint64_t seq;
    EventKind kind;
    std::uint64_t arg;
    bool operator>(const Event& o) const { return time != o.time ? time > o.time : seq > o.seq; }
  };

  struct Chunk {
    int origin;
    long long bits;
  };

  struct Neighbor {
    int node;
    double propagation_s;
  };

  struct NodeRt {
    std::vector<TimeSpan> own_tx;
    std::vector<Arrival> arrivals;
    std::vector<Neighbor> in_range;
    double busy_until = -std::numeric_limits<double>::infinity();
    std::deque<Chunk> relay_queue;
  };

  struct Transmission {
    FrameKind kind = FrameKind::Data;
    int link = 0;  // index into links_
    int src = 0;
    int dst = 0;
    std::uint64_t k = 0;
    TimeSpan tx;
    Burst burst;                 // Data
    double snr_db = 0.0;         // at dst, this slot's shadowing
    std::size_t slot_record = 0;  // Data
    std::vector<int> origins;     // Data, per frame
    long long report_bits = 0;    // Feedback
    std::optional<double> report_snr_db;  // Feedback
  };

  struct TxLink {
    int src = 0;
    int dst = 0;
    double propagation_s = 0.0;
    channel::LinkState state;
    std::unique_ptr<LinkPolicy> policy;
    AoiClock clock;
    std::optional<double> snr_estimate_db;
    IntervalRecord cur;
    std::int64_t start_slot = 0;
    std::int64_t next_feedback_slot = 0;
    double aoi_sum = 0.0;
    bool request_this_slot = false;
    bool feedback_this_slot = false;
    // Receiver side.
    std::map<std::uint64_t, long long> rx_bits_by_k;
    std::optional<double> rx_last_snr_norm_db;
  };

  // Independent engine per concern so that, e.g., a policy drawing extra
  // random numbers does not perturb the channel realization.
  static Rng make_rng(std::uint64_t seed, std::uint32_t stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream_id};
    return Rng(seq);
  }

  void schedule(double t, EventKind kind, std::uint64_t arg) { queue_.push(Event{t, seq_++, kind, arg}); }

  std::int64_t current_slot() const { return static_cast<std::int64_t>(std::floor(now_ / cfg_.mac.slot_s)); }

  void setup() {
    const Topology& topo = cfg_.topology;
    const std::size_t n = topo.node_count();
    nodes_.resize(n);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        if (a == b) continue;
        const double d = distance(topo.positions[a], topo.positions[b]);
        if (d <= cfg_.interference_range_m) {
          nodes_[a].in_range.push_back(Neighbor{static_cast<int>(b), d / cfg_.channel.sound_speed_mps});
        }
      }
    }
    link_of_node_.assign(n, -1);
    for (std::size_t i = 1; i < n; ++i) {
      TxLink l;
      l.src = static_cast<int>(i);
      l.dst = topo.parent[i];
      l.state.distance_m = topo.link_length(l.src);
      l.propagation_s = l.state.distance_m / cfg_.channel.sound_speed_mps;
      l.policy = make_policy(cfg_.policy, cfg_.controller);
      link_of_node_[i] = static_cast<int>(links_.size());
      links_.push_back(std::move(l));
    }
    result_.node_energy_j.assign(n, 0.0);
    result_.sink_bits_by_origin.assign(n, 0);
    result_.slot_count = cfg_.slot_count();
    result_.duration_s = static_cast<double>(result_.slot_count) * cfg_.mac.slot_s;
    result_.max_bits_per_slot = cfg_.max_bits_per_slot();
  }

  void open_interval(TxLink& l, std::uint64_t k, std::int64_t slot, int q) {
    l.cur = IntervalRecord{};
    l.cur.link_src = l.src;
    l.cur.link_dst = l.dst;
    l.cur.k = k;
    l.cur.t_start_s = static_cast<double>(slot) * cfg_.mac.slot_s;
    l.cur.q_k_min = q;
    l.start_slot = slot;
    l.next_feedback_slot = slot + cfg_.interval_slots(q);
    l.aoi_sum = 0.0;
  }

  void close_interval(TxLink& l, std::int64_t end_slot, long long reported_bits) {
    IntervalRecord& r = l.cur;
    r.slots = end_slot - l.start_slot;
    r.aoi_peak_slots = l.clock.age();
    r.aoi_mean_slots = r.slots > 0 ? l.aoi_sum / static_cast<double>(r.slots) : 0.0;
    r.r_k_bits = reported_bits;
    r.r_k_norm = r.slots > 0 ? static_cast<double>(reported_bits) /
                                   (static_cast<double>(r.slots) * static_cast<double>(result_.max_bits_per_slot))
                             : 0.0;
  }

  void charge(int node, double joules) { result_.node_energy_j[static_cast<std::size_t>(node)] += joules; }

  void register_transmission(int src, int dst, const TimeSpan& tx, std::uint64_t id) {
    NodeRt& s = nodes_[static_cast<std::size_t>(src)];
    s.own_tx.push_back(tx);
    s.busy_until = std::max(s.busy_until, tx.end);
    bool dst_seen = false;
    for (const Neighbor& nb : s.in_range) {
      nodes_[static_cast<std::size_t>(nb.node)].arrivals.push_back(
          Arrival{{tx.start + nb.propagation_s, tx.end + nb.propagation_s}, id});
      dst_seen = dst_seen || nb.node == dst;
    }
    if (!dst_seen) {
      const double p = distance(cfg_.topology.positions[static_cast<std::size_t>(src)],
                                cfg_.topology.positions[static_cast<std::size_t>(dst)]) /
                       cfg_.channel.sound_speed_mps;
      nodes_[static_cast<std::size_t>(dst)].arrivals.push_back(Arrival{{tx.start + p, tx.end + p}, id});
    }
  }

  // Control frames: BPSK-equivalent at the control bitrate.
  double control_ber(const TxLink& l) const {
    const double snr = channel::mean_snr(l.state, cfg_.mac.control_power, cfg_.channel, cfg_.power);
    return channel::ber(snr, Modulation::BPSK, cfg_.channel, cfg_.mac.control_bitrate_bps);
  }

  void on_slot_start(std::int64_t s) {
    const double t0 = static_cast<double>(s) * cfg_.mac.slot_s;
    const double horizon = t0 - cfg_.mac.slot_s;
    for (NodeRt& n : nodes_) {
      std::erase_if(n.own_tx, [&](const TimeSpan& x) { return x.end < horizon; });
      std::erase_if(n.arrivals, [&](const Arrival& x) { return x.span.end < horizon; });
    }
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (TxLink& l : links_) {
      if (s == 0) {
        l.state.shadow_db = cfg_.channel.shadowing_sigma_db * gauss(rng_channel_);
      } else {
        l.state = channel::evolve_shadowing(l.state, gauss(rng_channel_), cfg_.channel);
      }
    }
    if (s == 0) {
      for (TxLink& l : links_) open_interval(l, 1, 0, l.policy->initial_interval(rng_policy_));
    }
    std::uniform_real_distribution<double> jitter(0.0, cfg_.request_jitter_s());
    for (std::size_t i = 0; i < links_.size(); ++i) {
      TxLink& l = links_[i];
      l.clock.advance_to(s);
      l.request_this_slot = false;
      l.feedback_this_slot = false;
      if (s >= l.next_feedback_slot) {
        l.request_this_slot = true;
        schedule(t0 + jitter(rng_mac_), EventKind::SendRequest, i);
      }
    }
    std::uniform_real_distribution<double> offset(0.0, cfg_.data_offset_range_s());
    for (std::size_t i = 0; i < links_.size(); ++i) {
      schedule(t0 + cfg_.mac.control_window_s + offset(rng_mac_), EventKind::DataStart, i);
    }
    if (s + 1 < result_.slot_count) schedule(t0 + cfg_.mac.slot_s, EventKind::SlotStart, static_cast<std::uint64_t>(s + 1));
  }

  void send_control(FrameKind kind, int link, int src, int dst, long bits, std::uint64_t k,
                    long long report_bits, std::optional<double> report_snr) {
    const double air = cfg_.mac.control_airtime(bits);
    Transmission tr;
    tr.kind = kind;
    tr.link = link;
    tr.src = src;
    tr.dst = dst;
    tr.k = k;
    tr.tx = TimeSpan{now_, now_ + air};
    tr.report_bits = report_bits;
    tr.report_snr_db = report_snr;
    const std::uint64_t id = tx_.size();
    tx_.push_back(std::move(tr));
    register_transmission(src, dst, tx_[id].tx, id);
    const double joules = cfg_.power.power_watts(cfg_.mac.control_power) * air;
    charge(src, joules);
    links_[static_cast<std::size_t>(link)].cur.energy_fb_j += joules;
    schedule(now_ + air + links_[static_cast<std::size_t>(link)].propagation_s, EventKind::ControlArrival, id);
  }

  void on_send_request(int link) {
    TxLink& l = links_[static_cast<std::size_t>(link)];
    if (nodes_[static_cast<std::size_t>(l.src)].busy_until > now_) return;  // retried next slot
    ++result_.control.requests_sent;
    send_control(FrameKind::FeedbackRequest, link, l.src, l.dst, cfg_.mac.request_bits, l.cur.k, 0, std::nullopt);
  }

  void on_control_arrival(std::uint64_t id) {
    const Transmission& tr = tx_[id];
    TxLink& l = links_[static_cast<std::size_t>(tr.link)];
    const NodeRt& rx = nodes_[static_cast<std::size_t>(tr.dst)];
    const long bits = tr.kind == FrameKind::FeedbackRequest ? cfg_.mac.request_bits : cfg_.mac.feedback_bits;
    const double p_ok = channel::frame_success(control_ber(l), bits);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const TimeSpan reception{tr.tx.start + l.propagation_s, tr.tx.end + l.propagation_s};
    const Fate fate = deliver_frame(reception, id, rx.own_tx, rx.arrivals, p_ok, u(rng_phy_));
    if (fate != Fate::Delivered) return;
    if (tr.kind == FrameKind::FeedbackRequest) {
      if (rx.busy_until > now_) return;
      ++result_.control.feedback_sent;
      const auto it = l.rx_bits_by_k.find(tr.k);
      const long long reported = it == l.rx_bits_by_k.end() ? 0 : it->second;
      const std::uint64_t k = tr.k;
      const int link = tr.link;
      send_control(FrameKind::Feedback, link, l.dst, l.src, cfg_.mac.feedback_bits, k, reported, l.rx_last_snr_norm_db);
      return;
    }
    on_feedback(l, tr.k, tr.report_bits, tr.report_snr_db);
  }

  void on_feedback(TxLink& l, std::uint64_t k, long long bits, std::optional<double> snr_report) {
    if (k != l.cur.k || l.feedback_this_slot) return;
    const std::int64_t s = current_slot();
    close_interval(l, s, bits);
    const double r_sum = static_cast<double>(bits) / static_cast<double>(result_.max_bits_per_slot);
    const int next_q = l.policy->on_feedback(r_sum, l.cur.r_k_norm, l.cur.q_k_min, rng_policy_);
    result_.intervals.push_back(l.cur);
    l.rx_bits_by_k.erase(k);
    if (snr_report) l.snr_estimate_db = snr_report;
    l.clock.reset();
    l.feedback_this_slot = true;
    ++result_.control.exchanges_completed;
    open_interval(l, k + 1, s, next_q);
  }

  double ref_snr_db(const TxLink& l) const {
    return channel::mean_snr(l.state, cfg_.reference_power, cfg_.channel, cfg_.power);
  }

  Context context_of(const TxLink& l) const {
    // The genie policy sees the true class; everyone else sees the last report,
    // or the worst class before the first one.
    SnrClass snr = SnrClass::Low;
    if (cfg_.policy.kind == PolicyKind::Oracle) {
      snr = quantize_snr(ref_snr_db(l));
    } else if (l.snr_estimate_db) {
      snr = quantize_snr(*l.snr_estimate_db);
    }
    return Context{snr, quantize_aoi(l.clock.age())};
  }

  void on_data_start(int link) {
    TxLink& l = links_[static_cast<std::size_t>(link)];
    NodeRt& node = nodes_[static_cast<std::size_t>(l.src)];
    const std::int64_t s = current_slot();
    if (l.request_this_slot && !l.feedback_this_slot) ++result_.control.exchanges_failed;
    const Context ctx = context_of(l);
    l.aoi_sum += static_cast<double>(l.clock.age());

    SlotRecord rec;
    rec.link_src = l.src;
    rec.slot = s;
    rec.context = ctx;
    rec.ref_snr_db = ref_snr_db(l);
    if (node.busy_until > now_) {
      ++result_.deferred_slots;
      result_.slots.push_back(rec);
      return;
    }
    const Action a = l.policy->choose(ctx, s, rng_policy_);
    Burst b = transmit_slot(l.src, l.dst, a, now_, node.busy_until, cfg_.mac, cfg_.channel);
    rec.action = static_cast<int>(a.index());
    rec.frames_sent = b.frames;
    l.cur.action_counts[a.index()] += 1;
    l.cur.frames_sent += b.frames;
    const std::size_t rec_index = result_.slots.size();
    result_.slots.push_back(rec);
    if (b.frames == 0) return;

    const double joules = cfg_.power.power_watts(a.power) * b.airtime();
    charge(l.src, joules);
    l.cur.energy_data_j += joules;

    Transmission tr;
    tr.kind = FrameKind::Data;
    tr.link = link;
    tr.src = l.src;
    tr.dst = l.dst;
    tr.k = l.cur.k;
    tr.tx = TimeSpan{b.start, b.end()};
    tr.snr_db = channel::mean_snr(l.state, a.power, cfg_.channel, cfg_.power);
    tr.slot_record = rec_index;
    tr.origins.reserve(static_cast<std::size_t>(b.frames));
    for (long i = 0; i < b.frames; ++i) tr.origins.push_back(take_payload(node, l.src, b.frame_bits));
    tr.burst = b;
    const std::uint64_t id = tx_.size();
    tx_.push_back(std::move(tr));
    register_transmission(l.src, l.dst, tx_[id].tx, id);
    schedule(b.end() + l.propagation_s, EventKind::BurstArrival, id);
  }

  // Relayed data first (FIFO), then the node's own backlog, which never runs dry.
  static int take_payload(NodeRt& node, int self, long bits) {
    int origin = self;
    long need = bits;
    while (need > 0 && !node.relay_queue.empty()) {
      Chunk& c = node.relay_queue.front();
      origin = c.origin;
      const long long take = std::min<long long>(need, c.bits);
      c.bits -= take;
      need -= static_cast<long>(take);
      if (c.bits == 0) node.relay_queue.pop_front();
    }
    return origin;
  }

  void on_burst_arrival(std::uint64_t id) {
    Transmission& tr = tx_[id];
    TxLink& l = links_[static_cast<std::size_t>(tr.link)];
    NodeRt& rx = nodes_[static_cast<std::size_t>(tr.dst)];
    const Burst& b = tr.burst;
    const double p_ok = channel::frame_success(
        channel::ber(tr.snr_db, b.action.modulation, cfg_.channel, channel::bitrate(b.action.modulation, cfg_.channel)),
        b.frame_bits);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    IntervalRecord& r = l.cur;
    if (tr.k != r.k) throw std::logic_error("simulator: data burst outlived its feedback interval");
    long long delivered_bits = 0;
    bool measured = false;
    for (long i = 0; i < b.frames; ++i) {
      const Frame f = b.frame(i, l.propagation_s);
      const Fate fate = deliver_frame(f.reception(), id, rx.own_tx, rx.arrivals, p_ok, u(rng_phy_));
      switch (fate) {
        case Fate::Delivered: {
          ++r.frames_delivered;
          delivered_bits += f.payload_bits;
          const int origin = tr.origins[static_cast<std::size_t>(i)];
          if (tr.dst == Topology::sink()) {
            result_.sink_bits_by_origin[static_cast<std::size_t>(origin)] += f.payload_bits;
          } else if (!rx.relay_queue.empty() && rx.relay_queue.back().origin == origin) {
            rx.relay_queue.back().bits += f.payload_bits;
          } else {
            rx.relay_queue.push_back(Chunk{origin, f.payload_bits});
          }
          measured = true;
          break;
        }
        case Fate::LostBer: ++r.lost_ber; measured = true; break;
        case Fate::LostCollision: ++r.lost_collision; break;
        case Fate::LostHalfDuplex: ++r.lost_halfduplex; break;
      }
    }
    if (measured) {
      l.rx_last_snr_norm_db = tr.snr_db - 10.0 * std::log10(cfg_.power.power_watts(b.action.power) /
                                                            cfg_.power.power_watts(cfg_.reference_power));
    }
    l.rx_bits_by_k[tr.k] += delivered_bits;
    result_.slots[tr.slot_record].delivered_bits += delivered_bits;
    tr.origins.clear();
    tr.origins.shrink_to_fit();
  }

  void finish() {
    const std::int64_t end = result_.slot_count;
    for (TxLink& l : links_) {
      l.clock.advance_to(end);
      const auto it = l.rx_bits_by_k.find(l.cur.k);
      close_interval(l, end, it == l.rx_bits_by_k.end() ? 0 : it->second);
      l.cur.truncated = true;
      result_.intervals.push_back(l.cur);
      LinkCheckpoint cp;
      cp.link_src = l.src;
      if (const auto* bp = dynamic_cast<const BilevelPolicy*>(l.policy.get())) {
        cp.inner = bp->inner().table();
        if (bp->outer_enabled()) cp.outer = bp->outer();
      }
      result_.checkpoints.push_back(std::move(cp));
    }
    std::stable_sort(result_.intervals.begin(), result_.intervals.end(),
                     [](const IntervalRecord& a, const IntervalRecord& b) {
                       return a.link_src != b.link_src ? a.link_src < b.link_src : a.k < b.k;
                     });
  }

  SimConfig cfg_;
  Rng rng_channel_;
  Rng rng_mac_;
  Rng rng_phy_;
  Rng rng_policy_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
  std::uint64_t seq_ = 0;
  double now_ = 0.0;
  std::vector<NodeRt> nodes_;
  std::vector<TxLink> links_;
  std::vector<int> link_of_node_;
  std::vector<Transmission> tx_;
  EpisodeResult result_;
};

inline EpisodeResult run_episode(const SimConfig& cfg, std::uint64_t seed) {
  return Simulator(cfg, seed).run();
}

}  // namespace uwmab::netsim
