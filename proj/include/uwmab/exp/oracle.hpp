#pragma once

// Genie reference: for every SNR class, the action with the highest expected
// delivered bits per slot, estimated by Monte Carlo over links and shadowing.
// Collisions are not modelled here, so the reference is a single-link bound.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "uwmab/exp/scenario.hpp"

namespace uwmab::exp {

struct OracleOptions {
  std::uint64_t min_samples_per_class = 100'000;
  std::uint64_t max_draws = 4'000'000;
  std::uint64_t seed = 12345;
  // Actions within this relative margin of the best count as ties; ties go to
  // the lower power class, then to the higher rate.
  double tie_tolerance = 1e-3;
};

struct OracleClass {
  Action best;
  std::array<double, kActionCount> expected_bits{};  // per slot, by action index
  std::uint64_t samples = 0;
  double weight = 0.0;  // share of natural draws in this class
  bool synthetic = false;  // never drawn naturally; sampled uniformly in-class
  double best_norm = 0.0;  // expected_bits[best] / max bits per slot
};

struct OracleResult {
  std::string config_hash;
  std::array<OracleClass, kSnrClassCount> classes{};
  long long max_bits_per_slot = 0;
  double genie_norm = 0.0;  // class-weighted best_norm

  Action best(SnrClass c) const { return classes[static_cast<std::size_t>(c)].best; }
  double expected_norm(SnrClass c) const { return classes[static_cast<std::size_t>(c)].best_norm; }
  std::array<Action, kSnrClassCount> action_map() const {
    return {classes[0].best, classes[1].best, classes[2].best};
  }
};

namespace detail {

inline double delta_db(const channel::PowerMap& pm, PowerClass from, PowerClass to) {
  return 10.0 * std::log10(pm.power_watts(to) / pm.power_watts(from));
}

// Expected delivered bits in one slot for a link whose reference-power SNR is
// ref_snr_db.
inline double expected_slot_bits(const netsim::SimConfig& s, double ref_snr_db, Action a) {
  const double snr = ref_snr_db + delta_db(s.power, s.reference_power, a.power);
  const double rate = channel::bitrate(a.modulation, s.channel);
  const double p = channel::frame_success(channel::ber(snr, a.modulation, s.channel, rate), s.mac.frame_bits);
  const long frames = netsim::frames_per_window(a.modulation, s.mac.duty_window_s, s.mac.frame_bits, s.channel);
  return static_cast<double>(frames) * static_cast<double>(s.mac.frame_bits) * p;
}

inline std::array<double, 2> class_bounds(SnrClass c) {
  switch (c) {
    case SnrClass::Low: return {10.0, kSnrLowUpperDb};
    case SnrClass::Medium: return {kSnrLowUpperDb, kSnrMediumUpperDb};
    case SnrClass::High: return {kSnrMediumUpperDb, 40.0};
  }
  return {10.0, 40.0};
}

}  // namespace detail

inline OracleResult genie_oracle(const ScenarioConfig& cfg, const OracleOptions& opt = {}) {
  const netsim::SimConfig& s = cfg.sim;
  OracleResult out;
  out.config_hash = config_hash(cfg);
  out.max_bits_per_slot = s.max_bits_per_slot();

  std::vector<double> distances;
  for (std::size_t i = 1; i < s.topology.node_count(); ++i) distances.push_back(s.topology.link_length(static_cast<int>(i)));

  const std::vector<Action>& menu = s.controller.action_menu;
  std::array<std::array<double, kActionCount>, kSnrClassCount> sums{};
  std::array<std::uint64_t, kSnrClassCount> natural{};
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, distances.size() - 1);

  auto accumulate = [&](double ref_snr, std::size_t cls) {
    for (const Action& a : menu) sums[cls][a.index()] += detail::expected_slot_bits(s, ref_snr, a);
  };

  std::uint64_t draws = 0;
  auto enough = [&] {
    for (auto n : natural) {
      if (n < opt.min_samples_per_class) return false;
    }
    return true;
  };
  while (draws < opt.max_draws && !enough()) {
    channel::LinkState link{distances[pick(rng)], s.channel.shadowing_sigma_db * gauss(rng)};
    const double ref = channel::mean_snr(link, s.reference_power, s.channel, s.power);
    const auto cls = static_cast<std::size_t>(quantize_snr(ref));
    accumulate(ref, cls);
    ++natural[cls];
    ++draws;
  }

  double genie = 0.0;
  for (std::size_t c = 0; c < kSnrClassCount; ++c) {
    OracleClass& oc = out.classes[c];
    oc.weight = static_cast<double>(natural[c]) / static_cast<double>(draws);
    oc.samples = natural[c];
    if (natural[c] < opt.min_samples_per_class) {
      // Too rare to estimate from natural draws: top up uniformly within the class.
      oc.synthetic = natural[c] == 0;
      const auto [lo, hi] = detail::class_bounds(static_cast<SnrClass>(c));
      std::uniform_real_distribution<double> u(lo, hi);
      while (oc.samples < opt.min_samples_per_class) {
        accumulate(u(rng), c);
        ++oc.samples;
      }
    }
    for (const Action& a : menu) oc.expected_bits[a.index()] = sums[c][a.index()] / static_cast<double>(oc.samples);

    double top = 0.0;
    for (const Action& a : menu) top = std::max(top, oc.expected_bits[a.index()]);
    bool have = false;
    for (const Action& a : menu) {
      const double v = oc.expected_bits[a.index()];
      if (v < top * (1.0 - opt.tie_tolerance)) continue;
      const bool better = !have || a.power < oc.best.power ||
                          (a.power == oc.best.power && v > oc.expected_bits[oc.best.index()]);
      if (better) {
        oc.best = a;
        have = true;
      }
    }
    oc.best_norm = oc.expected_bits[oc.best.index()] / static_cast<double>(out.max_bits_per_slot);
    genie += oc.weight * oc.best_norm;
  }
  out.genie_norm = genie;
  return out;
}

}  // namespace uwmab::exp
