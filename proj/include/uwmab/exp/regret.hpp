#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "uwmab/exp/oracle.hpp"
#include "uwmab/netsim/metrics.hpp"

namespace uwmab::exp {

struct RegretReport {
  // cumulative[r][s]: regret summed over slots 0..s of replication r, averaged over links.
  std::vector<std::vector<double>> cumulative;
  std::vector<double> mean;
  std::vector<double> stddev;
};

// Average regret per slot over [from, to) of one cumulative curve.
inline double regret_slope(const std::vector<double>& cum, std::size_t from, std::size_t to) {
  if (to <= from || to > cum.size()) throw std::invalid_argument("regret_slope: bad range");
  const double start = from == 0 ? 0.0 : cum[from - 1];
  return (cum[to - 1] - start) / static_cast<double>(to - from);
}

struct HalfSlopes {
  double first = 0.0;
  double second = 0.0;
};

inline HalfSlopes half_slopes(const std::vector<double>& cum) {
  const std::size_t mid = cum.size() / 2;
  return {regret_slope(cum, 0, mid), regret_slope(cum, mid, cum.size())};
}

// Per slot and link: oracle expected normalized reward for the true SNR class
// minus the realized delivered bits over the per-slot maximum.
inline RegretReport regret_report(const std::vector<netsim::EpisodeResult>& episodes, const std::string& run_config_hash,
                                  const OracleResult& oracle) {
  if (run_config_hash != oracle.config_hash) {
    throw std::invalid_argument("regret_report: oracle was computed for config " + oracle.config_hash +
                                ", episodes for " + run_config_hash);
  }
  RegretReport rep;
  for (const netsim::EpisodeResult& ep : episodes) {
    if (ep.max_bits_per_slot != oracle.max_bits_per_slot) {
      throw std::invalid_argument("regret_report: episode and oracle disagree on the per-slot maximum");
    }
    const auto slots = static_cast<std::size_t>(ep.slot_count);
    std::vector<double> inc(slots, 0.0);
    std::vector<int> links(slots, 0);
    for (const netsim::SlotRecord& s : ep.slots) {
      const auto i = static_cast<std::size_t>(s.slot);
      const double realized = static_cast<double>(s.delivered_bits) / static_cast<double>(ep.max_bits_per_slot);
      inc[i] += oracle.expected_norm(quantize_snr(s.ref_snr_db)) - realized;
      ++links[i];
    }
    std::vector<double> cum(slots, 0.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < slots; ++i) {
      if (links[i] > 0) acc += inc[i] / links[i];
      cum[i] = acc;
    }
    rep.cumulative.push_back(std::move(cum));
  }
  if (rep.cumulative.empty()) return rep;
  const std::size_t n = rep.cumulative.front().size();
  rep.mean.assign(n, 0.0);
  rep.stddev.assign(n, 0.0);
  const auto reps = static_cast<double>(rep.cumulative.size());
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (const auto& c : rep.cumulative) s += c.at(i);
    const double m = s / reps;
    double v = 0.0;
    for (const auto& c : rep.cumulative) v += (c[i] - m) * (c[i] - m);
    rep.mean[i] = m;
    rep.stddev[i] = rep.cumulative.size() > 1 ? std::sqrt(v / (reps - 1.0)) : 0.0;
  }
  return rep;
}

}  // namespace uwmab::exp
