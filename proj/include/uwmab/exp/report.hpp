#pragma once

// CSV artifacts and the per-replication summary statistics. Every summary
// metric is a function of the intervals.csv rows plus the values carried in
// its metadata line, so summary.csv can be rebuilt from intervals.csv alone.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "uwmab/exp/regret.hpp"
#include "uwmab/netsim/metrics.hpp"

namespace uwmab::exp {

inline constexpr std::string_view kVersion = "1.0.0";

struct RunMeta {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string version{kVersion};
  std::string scenario;
  std::string policy;
  int nodes = 0;
  double duration_s = 0.0;
  double slot_s = 0.0;
  long long max_bits_per_slot = 0;
};

struct IntervalRow {
  int replication = 0;
  netsim::IntervalRecord rec;
};

struct SummaryRow {
  std::string scenario;
  std::string policy;
  int nodes = 0;
  std::string metric;
  double mean = 0.0;
  double stddev = 0.0;
  int n = 0;
};

struct SummaryReport {
  std::vector<SummaryRow> rows;

  const SummaryRow* find(const std::string& policy, const std::string& metric) const {
    for (const SummaryRow& r : rows) {
      if (r.policy == policy && r.metric == metric) return &r;
    }
    return nullptr;
  }
  double mean(const std::string& policy, const std::string& metric) const {
    const SummaryRow* r = find(policy, metric);
    if (!r) throw std::out_of_range("summary: no metric '" + metric + "' for policy '" + policy + "'");
    return r->mean;
  }
};

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---- metadata line ----

inline std::string meta_line(const RunMeta& m) {
  std::ostringstream os;
  os << "# config_hash=" << m.config_hash << " seed=" << m.seed << " version=" << m.version
     << " scenario=" << m.scenario << " policy=" << m.policy << " nodes=" << m.nodes
     << " duration_s=" << fmt_double(m.duration_s) << " slot_s=" << fmt_double(m.slot_s)
     << " max_bits_per_slot=" << m.max_bits_per_slot;
  return os.str();
}

inline RunMeta parse_meta_line(const std::string& line) {
  if (line.rfind("# ", 0) != 0) throw std::invalid_argument("csv: missing '#' metadata line");
  std::map<std::string, std::string> kv;
  std::istringstream is(line.substr(2));
  std::string tok;
  while (is >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("csv: bad metadata token '" + tok + "'");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  auto need = [&](const char* k) -> const std::string& {
    const auto it = kv.find(k);
    if (it == kv.end()) throw std::invalid_argument(std::string("csv: metadata lacks ") + k);
    return it->second;
  };
  RunMeta m;
  m.config_hash = need("config_hash");
  m.seed = std::stoull(need("seed"));
  m.version = need("version");
  m.scenario = need("scenario");
  m.policy = need("policy");
  m.nodes = std::stoi(need("nodes"));
  m.duration_s = std::stod(need("duration_s"));
  m.slot_s = std::stod(need("slot_s"));
  m.max_bits_per_slot = std::stoll(need("max_bits_per_slot"));
  return m;
}

// ---- intervals.csv ----

inline const std::vector<std::string>& interval_columns() {
  static const std::vector<std::string> cols = [] {
    std::vector<std::string> c{"replication",    "link_src",       "link_dst",    "k",
                               "t_start_s",      "q_k_min",        "r_k_bits",    "r_k_norm",
                               "energy_data_j",  "energy_fb_j",    "aoi_mean_slots", "aoi_peak_slots",
                               "frames_sent",    "frames_delivered", "lost_ber",  "lost_collision",
                               "lost_halfduplex"};
    for (std::size_t i = 0; i < kActionCount; ++i) c.push_back("a" + std::to_string(i));
    return c;
  }();
  return cols;
}

inline void write_intervals_csv(std::ostream& os, const RunMeta& meta, const std::vector<IntervalRow>& rows) {
  os << meta_line(meta) << '\n';
  const auto& cols = interval_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  for (const IntervalRow& row : rows) {
    const netsim::IntervalRecord& r = row.rec;
    os << row.replication << ',' << r.link_src << ',' << r.link_dst << ',' << r.k << ',' << fmt_double(r.t_start_s) << ','
       << r.q_k_min << ',' << r.r_k_bits << ',' << fmt_double(r.r_k_norm) << ',' << fmt_double(r.energy_data_j) << ','
       << fmt_double(r.energy_fb_j) << ',' << fmt_double(r.aoi_mean_slots) << ',' << r.aoi_peak_slots << ','
       << r.frames_sent << ',' << r.frames_delivered << ',' << r.lost_ber << ',' << r.lost_collision << ','
       << r.lost_halfduplex;
    for (long long c : r.action_counts) os << ',' << c;
    os << '\n';
  }
}

inline std::vector<IntervalRow> read_intervals_csv(std::istream& is, RunMeta& meta) {
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("intervals.csv: empty file");
  meta = parse_meta_line(line);
  if (!std::getline(is, line)) throw std::invalid_argument("intervals.csv: missing header");
  std::string expected;
  for (const auto& c : interval_columns()) expected += (expected.empty() ? "" : ",") + c;
  if (line != expected) throw std::invalid_argument("intervals.csv: unexpected header");
  std::vector<IntervalRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != interval_columns().size()) throw std::invalid_argument("intervals.csv: wrong field count");
    IntervalRow row;
    netsim::IntervalRecord& r = row.rec;
    row.replication = std::stoi(f[0]);
    r.link_src = std::stoi(f[1]);
    r.link_dst = std::stoi(f[2]);
    r.k = std::stoull(f[3]);
    r.t_start_s = std::stod(f[4]);
    r.q_k_min = std::stoi(f[5]);
    r.r_k_bits = std::stoll(f[6]);
    r.r_k_norm = std::stod(f[7]);
    r.energy_data_j = std::stod(f[8]);
    r.energy_fb_j = std::stod(f[9]);
    r.aoi_mean_slots = std::stod(f[10]);
    r.aoi_peak_slots = std::stoll(f[11]);
    r.frames_sent = std::stoll(f[12]);
    r.frames_delivered = std::stoll(f[13]);
    r.lost_ber = std::stoll(f[14]);
    r.lost_collision = std::stoll(f[15]);
    r.lost_halfduplex = std::stoll(f[16]);
    for (std::size_t i = 0; i < kActionCount; ++i) r.action_counts[i] = std::stoll(f[17 + i]);
    rows.push_back(row);
  }
  return rows;
}

// ---- summary ----

namespace detail {

inline double safe_ratio(double a, double b) { return b > 0.0 ? a / b : 0.0; }

}  // namespace detail

// Metric name -> value for one replication's rows, in a fixed order.
inline std::vector<std::pair<std::string, double>> replication_metrics(const std::vector<netsim::IntervalRecord>& rows,
                                                                        const RunMeta& meta,
                                                                        const std::vector<int>& interval_menu) {
  double bits = 0.0, e_data = 0.0, e_fb = 0.0;
  double sent = 0.0, delivered = 0.0, l_ber = 0.0, l_col = 0.0, l_hd = 0.0;
  std::array<double, kActionCount> acts{};
  std::map<int, double> q_count;
  std::map<int, bool> links;
  for (const auto& r : rows) {
    bits += static_cast<double>(r.r_k_bits);
    e_data += r.energy_data_j;
    e_fb += r.energy_fb_j;
    sent += static_cast<double>(r.frames_sent);
    delivered += static_cast<double>(r.frames_delivered);
    l_ber += static_cast<double>(r.lost_ber);
    l_col += static_cast<double>(r.lost_collision);
    l_hd += static_cast<double>(r.lost_halfduplex);
    for (std::size_t i = 0; i < kActionCount; ++i) acts[i] += static_cast<double>(r.action_counts[i]);
    q_count[r.q_k_min] += 1.0;
    links[r.link_src] = true;
  }
  const double energy = e_data + e_fb;
  const double slots = std::floor(meta.duration_s / meta.slot_s + 1e-9);
  const double capacity = slots * static_cast<double>(links.size()) * static_cast<double>(meta.max_bits_per_slot);
  double decisions = 0.0;
  for (double a : acts) decisions += a;

  std::vector<std::pair<std::string, double>> m;
  m.emplace_back("throughput_bps", detail::safe_ratio(bits, meta.duration_s));
  m.emplace_back("throughput_norm", detail::safe_ratio(bits, capacity));
  m.emplace_back("energy_j", energy);
  m.emplace_back("energy_data_j", e_data);
  m.emplace_back("energy_fb_j", e_fb);
  m.emplace_back("efficiency_bits_per_j", detail::safe_ratio(bits, energy));
  m.emplace_back("delivery_rate", detail::safe_ratio(delivered, sent));
  m.emplace_back("loss_collision_rate", detail::safe_ratio(l_col, sent));
  m.emplace_back("loss_ber_rate", detail::safe_ratio(l_ber, sent));
  m.emplace_back("loss_halfduplex_rate", detail::safe_ratio(l_hd, sent));
  m.emplace_back("feedback_rounds", static_cast<double>(rows.size()));
  for (std::size_t mi = 0; mi < kModulationCount; ++mi) {
    double c = 0.0;
    for (std::size_t p = 0; p < kPowerClassCount; ++p) c += acts[mi * kPowerClassCount + p];
    m.emplace_back("mod_freq_" + std::string(to_string(static_cast<Modulation>(mi))), detail::safe_ratio(c, decisions));
  }
  for (std::size_t p = 0; p < kPowerClassCount; ++p) {
    double c = 0.0;
    for (std::size_t mi = 0; mi < kModulationCount; ++mi) c += acts[mi * kPowerClassCount + p];
    m.emplace_back("power_freq_" + std::string(to_string(static_cast<PowerClass>(p))), detail::safe_ratio(c, decisions));
  }
  // Menu entries first, then any other interval that appears (fixed policies).
  std::vector<int> qs = interval_menu;
  for (const auto& [q, _] : q_count) {
    if (std::find(qs.begin(), qs.end(), q) == qs.end()) qs.push_back(q);
  }
  for (int q : qs) {
    m.emplace_back("interval_freq_" + std::to_string(q), detail::safe_ratio(q_count[q], static_cast<double>(rows.size())));
  }
  return m;
}

inline std::vector<SummaryRow> summarize(const std::vector<IntervalRow>& rows, const RunMeta& meta,
                                         const std::vector<int>& interval_menu) {
  std::map<int, std::vector<netsim::IntervalRecord>> by_rep;
  for (const auto& r : rows) by_rep[r.replication].push_back(r.rec);
  // Union of metric names in first-seen order (interval entries can differ).
  std::vector<std::string> names;
  std::vector<std::map<std::string, double>> values;
  for (const auto& [rep, recs] : by_rep) {
    std::map<std::string, double> v;
    for (auto& [k, x] : replication_metrics(recs, meta, interval_menu)) {
      if (std::find(names.begin(), names.end(), k) == names.end()) names.push_back(k);
      v[k] = x;
    }
    values.push_back(std::move(v));
  }
  std::vector<SummaryRow> out;
  const auto n = static_cast<double>(values.size());
  for (const std::string& name : names) {
    double s = 0.0;
    for (auto& v : values) s += v[name];
    const double mean = n > 0 ? s / n : 0.0;
    double var = 0.0;
    for (auto& v : values) var += (v[name] - mean) * (v[name] - mean);
    out.push_back({meta.scenario, meta.policy, meta.nodes, name, mean, values.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0,
                   static_cast<int>(values.size())});
  }
  return out;
}

inline void write_summary_csv(std::ostream& os, const RunMeta& meta, const std::vector<SummaryRow>& rows) {
  os << meta_line(meta) << '\n' << "scenario,policy,nodes,metric,mean,stddev,n\n";
  for (const SummaryRow& r : rows) {
    os << r.scenario << ',' << r.policy << ',' << r.nodes << ',' << r.metric << ',' << fmt_double(r.mean) << ','
       << fmt_double(r.stddev) << ',' << r.n << '\n';
  }
}

inline std::vector<SummaryRow> read_summary_csv(std::istream& is, RunMeta& meta) {
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("summary.csv: empty file");
  meta = parse_meta_line(line);
  std::getline(is, line);
  if (line != "scenario,policy,nodes,metric,mean,stddev,n") throw std::invalid_argument("summary.csv: unexpected header");
  std::vector<SummaryRow> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 7) throw std::invalid_argument("summary.csv: wrong field count");
    out.push_back({f[0], f[1], std::stoi(f[2]), f[3], std::stod(f[4]), std::stod(f[5]), std::stoi(f[6])});
  }
  return out;
}

// ---- plot data ----

// One point per round k: mean over links and replications, plus a trailing
// rolling mean over `window` rounds.
inline void write_learning_curve_csv(std::ostream& os, const RunMeta& meta, const std::vector<IntervalRow>& rows,
                                     std::size_t window = 10) {
  std::map<std::uint64_t, std::array<double, 3>> acc;  // sum r_k_norm, sum energy, n
  for (const auto& r : rows) {
    auto& a = acc[r.rec.k];
    a[0] += r.rec.r_k_norm;
    a[1] += r.rec.energy_data_j + r.rec.energy_fb_j;
    a[2] += 1.0;
  }
  os << meta_line(meta) << '\n' << "episode,throughput_norm,throughput_norm_rolling,energy_j,energy_j_rolling,n\n";
  std::vector<double> thr, en;
  for (const auto& [k, a] : acc) {
    thr.push_back(a[0] / a[2]);
    en.push_back(a[1] / a[2]);
    const std::size_t lo = thr.size() > window ? thr.size() - window : 0;
    double st = 0.0, se = 0.0;
    for (std::size_t i = lo; i < thr.size(); ++i) {
      st += thr[i];
      se += en[i];
    }
    const auto w = static_cast<double>(thr.size() - lo);
    os << k << ',' << fmt_double(thr.back()) << ',' << fmt_double(st / w) << ',' << fmt_double(en.back()) << ','
       << fmt_double(se / w) << ',' << static_cast<long long>(a[2]) << '\n';
  }
}

inline void write_interval_hist_csv(std::ostream& os, const RunMeta& meta, const std::vector<IntervalRow>& rows) {
  std::map<int, long long> c;
  for (const auto& r : rows) ++c[r.rec.q_k_min];
  os << meta_line(meta) << '\n' << "q_k_min,count,fraction\n";
  for (const auto& [q, n] : c) {
    os << q << ',' << n << ',' << fmt_double(static_cast<double>(n) / static_cast<double>(rows.size())) << '\n';
  }
}

inline void write_action_hist_csv(std::ostream& os, const RunMeta& meta, const std::vector<IntervalRow>& rows) {
  std::array<long long, kActionCount> c{};
  long long total = 0;
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < kActionCount; ++i) {
      c[i] += r.rec.action_counts[i];
      total += r.rec.action_counts[i];
    }
  }
  os << meta_line(meta) << '\n' << "action,modulation,power,count,fraction\n";
  for (std::size_t i = 0; i < kActionCount; ++i) {
    const Action a = Action::from_index(i);
    os << 'a' << i << ',' << to_string(a.modulation) << ',' << to_string(a.power) << ',' << c[i] << ','
       << fmt_double(total > 0 ? static_cast<double>(c[i]) / static_cast<double>(total) : 0.0) << '\n';
  }
}

inline void write_regret_csv(std::ostream& os, const RunMeta& meta, const RegretReport& rep) {
  os << meta_line(meta) << '\n' << "slot,mean_cumulative,stddev_cumulative";
  for (std::size_t r = 0; r < rep.cumulative.size(); ++r) os << ",rep" << r;
  os << '\n';
  for (std::size_t s = 0; s < rep.mean.size(); ++s) {
    os << s << ',' << fmt_double(rep.mean[s]) << ',' << fmt_double(rep.stddev[s]);
    for (const auto& c : rep.cumulative) os << ',' << fmt_double(c[s]);
    os << '\n';
  }
}

inline void write_oracle_csv(std::ostream& os, const RunMeta& meta, const OracleResult& o) {
  os << meta_line(meta) << '\n' << "snr_class,best_action,modulation,power,expected_bits,expected_norm,weight,samples";
  for (std::size_t i = 0; i < kActionCount; ++i) os << ",bits_a" << i;
  os << '\n';
  for (std::size_t c = 0; c < kSnrClassCount; ++c) {
    const OracleClass& oc = o.classes[c];
    os << to_string(static_cast<SnrClass>(c)) << ",a" << oc.best.index() << ',' << to_string(oc.best.modulation) << ','
       << to_string(oc.best.power) << ',' << fmt_double(oc.expected_bits[oc.best.index()]) << ','
       << fmt_double(oc.best_norm) << ',' << fmt_double(oc.weight) << ',' << oc.samples;
    for (double b : oc.expected_bits) os << ',' << fmt_double(b);
    os << '\n';
  }
}

}  // namespace uwmab::exp
