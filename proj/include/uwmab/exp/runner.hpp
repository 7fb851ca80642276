#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "uwmab/bandit/serialize.hpp"
#include "uwmab/exp/oracle.hpp"
#include "uwmab/exp/regret.hpp"
#include "uwmab/exp/report.hpp"
#include "uwmab/exp/scenario.hpp"
#include "uwmab/netsim/simulator.hpp"

namespace uwmab::exp {

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;  // nothing is written when unset
  bool overwrite = false;
  unsigned threads = 0;  // 0: hardware concurrency
  OracleOptions oracle;
};

struct PolicyRun {
  netsim::PolicySpec spec;
  RunMeta meta;
  std::vector<netsim::EpisodeResult> episodes;
  std::vector<IntervalRow> rows;
  std::vector<SummaryRow> summary;
  RegretReport regret;
};

struct ExperimentResult {
  std::string config_hash;
  OracleResult oracle;
  std::vector<PolicyRun> runs;
  SummaryReport summary;

  const PolicyRun& run(const std::string& policy) const {
    for (const auto& r : runs) {
      if (r.spec.name == policy) return r;
    }
    throw std::out_of_range("experiment: no policy named '" + policy + "'");
  }
};

// Seed of replication r; independent of execution order.
inline std::uint64_t replication_seed(std::uint64_t base, int replication) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(replication)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

// Runs fn(0..count-1) on up to `threads` workers; rethrows the first failure.
inline void parallel_for(int count, unsigned threads, const std::function<void(int)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max(count, 1)));
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  if (error) std::rethrow_exception(error);
}

inline nlohmann::json checkpoint_json(const std::vector<netsim::EpisodeResult>& episodes) {
  nlohmann::json reps = nlohmann::json::array();
  for (std::size_t r = 0; r < episodes.size(); ++r) {
    nlohmann::json links = nlohmann::json::array();
    for (const auto& cp : episodes[r].checkpoints) {
      nlohmann::json l{{"link_src", cp.link_src}};
      if (cp.inner) l["inner"] = to_json(*cp.inner);
      if (cp.outer) l["outer"] = to_json(*cp.outer);
      links.push_back(std::move(l));
    }
    reps.push_back({{"replication", r}, {"links", std::move(links)}});
  }
  return reps;
}

namespace detail {

inline void write_file(const std::filesystem::path& p, const std::function<void(std::ostream&)>& body) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + p.string() + "'");
  body(os);
  os.flush();
  if (!os) throw std::runtime_error("write failed for '" + p.string() + "'");
}

inline void write_policy_outputs(const std::filesystem::path& dir, const PolicyRun& run) {
  write_file(dir / "intervals.csv", [&](std::ostream& os) { write_intervals_csv(os, run.meta, run.rows); });
  write_file(dir / "summary.csv", [&](std::ostream& os) { write_summary_csv(os, run.meta, run.summary); });
  write_file(dir / "plotdata" / "learning_curve.csv",
             [&](std::ostream& os) { write_learning_curve_csv(os, run.meta, run.rows); });
  write_file(dir / "plotdata" / "interval_hist.csv",
             [&](std::ostream& os) { write_interval_hist_csv(os, run.meta, run.rows); });
  write_file(dir / "plotdata" / "action_hist.csv",
             [&](std::ostream& os) { write_action_hist_csv(os, run.meta, run.rows); });
  write_file(dir / "plotdata" / "regret.csv", [&](std::ostream& os) { write_regret_csv(os, run.meta, run.regret); });
  write_file(dir / "checkpoint.json", [&](std::ostream& os) {
    nlohmann::json j{{"config_hash", run.meta.config_hash}, {"seed", run.meta.seed}, {"policy", run.meta.policy},
                     {"replications", checkpoint_json(run.episodes)}};
    os << j.dump(1) << '\n';
  });
}

// Writes into a sibling staging directory and renames it into place, so a
// failure never leaves a half-written output directory behind.
inline void write_atomically(const std::filesystem::path& out, bool overwrite,
                             const std::function<void(const std::filesystem::path&)>& body) {
  namespace fs = std::filesystem;
  if (fs::exists(out) && !fs::is_empty(out) && !overwrite) {
    throw std::runtime_error("output directory '" + out.string() + "' is not empty");
  }
  const fs::path parent = out.has_parent_path() ? out.parent_path() : fs::path(".");
  fs::create_directories(parent);
  const fs::path staging = parent / (out.filename().string() + ".partial");
  fs::remove_all(staging);
  try {
    body(staging);
    if (fs::exists(out)) fs::remove_all(out);
    fs::rename(staging, out);
  } catch (...) {
    std::error_code ec;
    fs::remove_all(staging, ec);
    throw;
  }
}

}  // namespace detail

inline RunMeta make_meta(const ScenarioConfig& cfg, const std::string& hash, const netsim::PolicySpec& p) {
  RunMeta m;
  m.config_hash = hash;
  m.seed = cfg.seed;
  m.scenario = cfg.name;
  m.policy = p.name;
  m.nodes = cfg.sensor_count();
  m.slot_s = cfg.sim.mac.slot_s;
  m.duration_s = static_cast<double>(cfg.sim.slot_count()) * cfg.sim.mac.slot_s;
  m.max_bits_per_slot = cfg.sim.max_bits_per_slot();
  return m;
}

inline ExperimentResult run_experiment(const ScenarioConfig& cfg, const RunOptions& opt = {}) {
  ExperimentResult res;
  res.config_hash = config_hash(cfg);
  res.oracle = genie_oracle(cfg, opt.oracle);
  for (netsim::PolicySpec spec : cfg.policies) {
    if (spec.kind == netsim::PolicyKind::Oracle) spec.oracle_map = res.oracle.action_map();
    PolicyRun run;
    run.spec = spec;
    run.meta = make_meta(cfg, res.config_hash, spec);
    const netsim::SimConfig sim = cfg.for_policy(spec);
    run.episodes.resize(static_cast<std::size_t>(cfg.replications));
    parallel_for(cfg.replications, opt.threads, [&](int r) {
      run.episodes[static_cast<std::size_t>(r)] = netsim::run_episode(sim, replication_seed(cfg.seed, r));
    });
    for (int r = 0; r < cfg.replications; ++r) {
      for (const auto& rec : run.episodes[static_cast<std::size_t>(r)].intervals) run.rows.push_back({r, rec});
    }
    run.summary = summarize(run.rows, run.meta, cfg.sim.controller.interval_menu);
    run.regret = regret_report(run.episodes, res.config_hash, res.oracle);
    res.summary.rows.insert(res.summary.rows.end(), run.summary.begin(), run.summary.end());
    res.runs.push_back(std::move(run));
  }

  if (opt.out_dir) {
    detail::write_atomically(*opt.out_dir, opt.overwrite, [&](const std::filesystem::path& dir) {
      const bool single = res.runs.size() == 1;
      for (const PolicyRun& run : res.runs) detail::write_policy_outputs(single ? dir : dir / run.spec.name, run);
      RunMeta top = res.runs.front().meta;
      top.policy = single ? top.policy : "all";
      if (!single) {
        detail::write_file(dir / "summary.csv", [&](std::ostream& os) { write_summary_csv(os, top, res.summary.rows); });
      }
      detail::write_file(dir / "plotdata" / "oracle.csv",
                         [&](std::ostream& os) { write_oracle_csv(os, top, res.oracle); });
    });
  }
  return res;
}

inline void write_oracle(const ScenarioConfig& cfg, const OracleResult& o, const std::filesystem::path& out,
                         bool overwrite) {
  detail::write_atomically(out, overwrite, [&](const std::filesystem::path& dir) {
    RunMeta m = make_meta(cfg, o.config_hash, netsim::PolicySpec{});
    m.policy = "oracle";
    detail::write_file(dir / "oracle.csv", [&](std::ostream& os) { write_oracle_csv(os, m, o); });
  });
}

}  // namespace uwmab::exp
