#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "uwmab/exp/runner.hpp"

using namespace uwmab;
using namespace uwmab::exp;
namespace fs = std::filesystem;

namespace {

ConfigErrorKind error_kind(const std::string& text) {
  try {
    parse_scenario_text(text);
  } catch (const ConfigError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error for: " << text;
  return ConfigErrorKind::MissingFile;
}

std::string error_message(const std::string& text) {
  try {
    parse_scenario_text(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

const char* kLosslessLink = R"({
  "topology": {"positions": [[0, 0, 10], [250, 0, 30]]},
  "channel": {"shadowing_sigma_db": 0.0, "ber_override": 0.0},
  "replications": 5
})";

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("uwmab_test_" + name);
  fs::remove_all(p);
  fs::remove_all(p.string() + ".partial");
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

OracleOptions quick_oracle() {
  OracleOptions o;
  o.min_samples_per_class = 2000;
  o.max_draws = 20000;
  return o;
}

RunOptions options(unsigned threads, std::optional<fs::path> out = std::nullopt, bool overwrite = false) {
  RunOptions o;
  o.out_dir = std::move(out);
  o.overwrite = overwrite;
  o.threads = threads;
  o.oracle = quick_oracle();
  return o;
}

}  // namespace

// ---- scenario parsing ----

TEST(Scenario, MissingFile) {
  try {
    parse_scenario("/nonexistent/scenario.json");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.kind(), ConfigErrorKind::MissingFile);
    EXPECT_NE(std::string(e.what()).find("/nonexistent/scenario.json"), std::string::npos);
  }
}

TEST(Scenario, ErrorKindsAreDistinct) {
  EXPECT_EQ(error_kind("{\"topology\": "), ConfigErrorKind::Syntax);
  EXPECT_EQ(error_kind("{}"), ConfigErrorKind::Schema);  // node count has no silent default
  EXPECT_EQ(error_kind(R"({"topology": {"nodes": 4}, "colour": 1})"), ConfigErrorKind::Schema);
  EXPECT_EQ(error_kind(R"({"topology": {"nodes": 4}, "mac": {"slot": 60}})"), ConfigErrorKind::Schema);
  EXPECT_EQ(error_kind(R"({"topology": {"nodes": "four"}})"), ConfigErrorKind::Schema);
  EXPECT_EQ(error_kind(R"({"topology": {"nodes": 4}, "policy": "greedy"})"), ConfigErrorKind::Schema);
  EXPECT_EQ(error_kind(R"({"topology": {"nodes": 5}})"), ConfigErrorKind::Semantic);
  EXPECT_EQ(error_kind(R"({"topology": {"nodes": 4}, "policy": ["random", "random"]})"), ConfigErrorKind::Semantic);
  EXPECT_EQ(error_kind(R"({"topology": {"nodes": 4, "positions": [[0,0,0],[1,0,0]]}})"), ConfigErrorKind::Semantic);
}

TEST(Scenario, DefaultsFilledIn) {
  const ScenarioConfig c = parse_scenario_text(R"({"topology": {"nodes": 4}})");
  EXPECT_EQ(c.sensor_count(), 4);
  EXPECT_EQ(c.sim.duration_s, 6000.0);
  EXPECT_EQ(c.sim.channel.frequency_khz, 10.5);
  EXPECT_EQ(c.sim.channel.bandwidth_hz, 4200.0);
  EXPECT_EQ(c.sim.channel.wind_kmh, 50.0);
  EXPECT_EQ(c.sim.channel.shipping, 0.5);
  EXPECT_EQ(c.sim.channel.spreading, 1.75);
  EXPECT_EQ(c.sim.controller.exploration_c, 2.0);
  EXPECT_EQ(c.sim.controller.theta, 0.7);
  EXPECT_EQ(c.sim.controller.interval_menu, (std::vector<int>{4, 7, 10}));
  EXPECT_EQ(c.sim.controller.action_menu.size(), kActionCount);
  EXPECT_EQ(c.sim.mac.control_bitrate_bps, 4800.0);
  ASSERT_EQ(c.policies.size(), 1u);
  EXPECT_EQ(c.policies[0].kind, netsim::PolicyKind::Bilevel);
}

TEST(Scenario, FrameAirtimeOverDutyWindowNamesBothValues) {
  const std::string msg = error_message(R"({"topology": {"nodes": 4}, "mac": {"frame_bits": 50000}})");
  EXPECT_NE(msg.find("11.9"), std::string::npos) << msg;
  EXPECT_NE(msg.find("10.0"), std::string::npos) << msg;
  EXPECT_EQ(error_kind(R"({"topology": {"nodes": 4}, "mac": {"frame_bits": 50000}})"), ConfigErrorKind::Semantic);
}

TEST(Scenario, IntervalsMustBeWholeSlots) {
  EXPECT_EQ(error_kind(R"({"topology": {"nodes": 4}, "mac": {"slot_s": 45}})"), ConfigErrorKind::Semantic);
  EXPECT_EQ(error_kind(R"({"topology": {"nodes": 4}, "controller": {"interval_menu_min": []}})"),
            ConfigErrorKind::Semantic);
}

TEST(Scenario, SingletonThreeMinuteMenu) {
  const ScenarioConfig c = parse_scenario_text(R"({"topology": {"nodes": 4}, "controller": {"interval_menu_min": [3]}})");
  EXPECT_EQ(c.sim.controller.interval_menu, std::vector<int>{3});
}

TEST(Scenario, PolicyForms) {
  const ScenarioConfig c = parse_scenario_text(R"({
    "topology": {"nodes": 6},
    "policy": ["bilevel", {"type": "fixed", "modulation": "BPSK", "power": "low", "interval_min": 4}, "oracle"]
  })");
  ASSERT_EQ(c.policies.size(), 3u);
  EXPECT_EQ(c.policies[1].kind, netsim::PolicyKind::Fixed);
  EXPECT_EQ(c.policies[1].action, (Action{Modulation::BPSK, PowerClass::Low}));
  EXPECT_EQ(c.policies[1].interval_min, 4);
  EXPECT_NE(c.policies[1].name, "fixed");
}

TEST(Scenario, ShippedScenariosParse) {
  for (const auto& entry : fs::directory_iterator(UWMAB_SCENARIO_DIR)) {
    if (entry.path().extension() != ".json") continue;
    EXPECT_NO_THROW(parse_scenario(entry.path())) << entry.path();
  }
}

TEST(ConfigHash, StableAndSensitive) {
  const std::string base = R"({"topology": {"nodes": 4}})";
  const ScenarioConfig a = parse_scenario_text(base);
  EXPECT_EQ(config_hash(a), config_hash(parse_scenario_text(base)));
  EXPECT_EQ(config_hash(a).size(), 16u);
  // Seed, replication count and policy do not change the physics.
  EXPECT_EQ(config_hash(a),
            config_hash(parse_scenario_text(R"({"topology": {"nodes": 4}, "seed": 9, "replications": 3, "policy": "random"})")));
  EXPECT_NE(config_hash(a), config_hash(parse_scenario_text(R"({"topology": {"nodes": 6}})")));
  EXPECT_NE(config_hash(a), config_hash(parse_scenario_text(R"({"topology": {"nodes": 4}, "channel": {"wind_kmh": 40}})")));
}

// ---- oracle ----

TEST(Oracle, LosslessPicksFastestCheapestEverywhere) {
  const ScenarioConfig c = parse_scenario_text(kLosslessLink);
  const OracleResult o = genie_oracle(c, quick_oracle());
  for (std::size_t k = 0; k < kSnrClassCount; ++k) {
    EXPECT_EQ(o.classes[k].best, (Action{Modulation::PSK16, PowerClass::Low})) << k;
    EXPECT_DOUBLE_EQ(o.classes[k].best_norm, 1.0);
  }
}

TEST(Oracle, SingletonActionMenu) {
  const ScenarioConfig c =
      parse_scenario_text(R"({"topology": {"nodes": 4}, "controller": {"action_menu": ["8PSK/medium"]}})");
  const OracleResult o = genie_oracle(c, quick_oracle());
  for (std::size_t k = 0; k < kSnrClassCount; ++k) {
    EXPECT_EQ(o.classes[k].best, (Action{Modulation::PSK8, PowerClass::Medium}));
  }
}

TEST(Oracle, GoldenMapForDefaultFourNodes) {
  const ScenarioConfig c = parse_scenario(fs::path(UWMAB_SCENARIO_DIR) / "nodes4.json");
  const OracleResult o = genie_oracle(c);
  EXPECT_EQ(o.best(SnrClass::Low), (Action{Modulation::PSK8, PowerClass::High}));
  EXPECT_EQ(o.best(SnrClass::Medium), (Action{Modulation::PSK16, PowerClass::High}));
  EXPECT_EQ(o.best(SnrClass::High), (Action{Modulation::PSK16, PowerClass::Low}));
  double w = 0.0;
  for (const auto& k : o.classes) w += k.weight;
  EXPECT_NEAR(w, 1.0, 1e-12);
}

TEST(Oracle, Deterministic) {
  const ScenarioConfig c = parse_scenario_text(R"({"topology": {"nodes": 6}})");
  const OracleResult a = genie_oracle(c, quick_oracle());
  const OracleResult b = genie_oracle(c, quick_oracle());
  for (std::size_t k = 0; k < kSnrClassCount; ++k) EXPECT_EQ(a.classes[k].expected_bits, b.classes[k].expected_bits);
}

// ---- regret ----

TEST(Regret, RejectsMismatchedConfig) {
  const ScenarioConfig a = parse_scenario_text(kLosslessLink);
  const ScenarioConfig b = parse_scenario_text(R"({"topology": {"nodes": 4}})");
  const OracleResult o = genie_oracle(b, quick_oracle());
  const auto ep = netsim::run_episode(a.sim, 1);
  EXPECT_THROW(regret_report({ep}, config_hash(a), o), std::invalid_argument);
}

TEST(Regret, OracleReplayIsIndistinguishableFromZero) {
  ScenarioConfig c = parse_scenario_text(R"({
    "topology": {"positions": [[0, 0, 10], [357, 0, 10]]},
    "channel": {"shadowing_sigma_db": 0.0},
    "replications": 20,
    "policy": "oracle"
  })");
  const ExperimentResult r = run_experiment(c, options(1));
  const RegretReport& rep = r.run("oracle").regret;
  std::vector<double> finals;
  for (const auto& cum : rep.cumulative) finals.push_back(cum.back());
  double mean = 0.0;
  for (double f : finals) mean += f;
  mean /= static_cast<double>(finals.size());
  double var = 0.0;
  for (double f : finals) var += (f - mean) * (f - mean);
  const double se = std::sqrt(var / static_cast<double>(finals.size() - 1) / static_cast<double>(finals.size()));
  EXPECT_LT(std::abs(mean), 2.0 * se + 1e-12) << "mean " << mean << " se " << se;
}

TEST(Regret, HalfSlopes) {
  const std::vector<double> linear{1, 2, 3, 4, 5, 6};
  const HalfSlopes s = half_slopes(linear);
  EXPECT_DOUBLE_EQ(s.first, 1.0);
  EXPECT_DOUBLE_EQ(s.second, 1.0);
  const HalfSlopes c = half_slopes({3, 5, 6, 6.5});
  EXPECT_GT(c.first, c.second);
  EXPECT_THROW(regret_slope(linear, 3, 3), std::invalid_argument);
}

// ---- reports ----

TEST(Report, SummaryIsRecomputableFromIntervals) {
  const fs::path out = fresh_dir("aggregate");
  ScenarioConfig c = parse_scenario_text(R"({"topology": {"nodes": 4}, "replications": 4, "policy": ["bilevel", "random"]})");
  run_experiment(c, options(2, out));
  for (const std::string policy : {"bilevel", "random"}) {
    std::ifstream iv(out / policy / "intervals.csv");
    RunMeta meta;
    const auto rows = read_intervals_csv(iv, meta);
    EXPECT_EQ(meta.config_hash, config_hash(c));
    EXPECT_EQ(meta.policy, policy);
    const auto recomputed = summarize(rows, meta, c.sim.controller.interval_menu);
    std::ifstream sv(out / policy / "summary.csv");
    RunMeta smeta;
    const auto stored = read_summary_csv(sv, smeta);
    EXPECT_EQ(smeta.config_hash, meta.config_hash);
    ASSERT_EQ(stored.size(), recomputed.size());
    for (std::size_t i = 0; i < stored.size(); ++i) {
      EXPECT_EQ(stored[i].metric, recomputed[i].metric);
      EXPECT_NEAR(stored[i].mean, recomputed[i].mean, 1e-12 * (1.0 + std::abs(recomputed[i].mean))) << stored[i].metric;
      EXPECT_NEAR(stored[i].stddev, recomputed[i].stddev, 1e-12 * (1.0 + std::abs(recomputed[i].stddev)))
          << stored[i].metric;
      EXPECT_EQ(stored[i].n, 4);
    }
  }
  EXPECT_TRUE(fs::exists(out / "summary.csv"));
  EXPECT_TRUE(fs::exists(out / "plotdata" / "oracle.csv"));
  EXPECT_TRUE(fs::exists(out / "bilevel" / "plotdata" / "learning_curve.csv"));
  EXPECT_TRUE(fs::exists(out / "bilevel" / "checkpoint.json"));
  fs::remove_all(out);
}

TEST(Report, IntervalCsvHeaderOrder) {
  std::ostringstream os;
  RunMeta m;
  m.config_hash = "00ff";
  write_intervals_csv(os, m, {});
  std::istringstream is(os.str());
  std::string meta_line;
  std::string header;
  std::getline(is, meta_line);
  std::getline(is, header);
  EXPECT_EQ(meta_line.front(), '#');
  EXPECT_NE(meta_line.find("config_hash=00ff"), std::string::npos) << meta_line;
  EXPECT_EQ(header,
            "replication,link_src,link_dst,k,t_start_s,q_k_min,r_k_bits,r_k_norm,energy_data_j,energy_fb_j,"
            "aoi_mean_slots,aoi_peak_slots,frames_sent,frames_delivered,lost_ber,lost_collision,lost_halfduplex,"
            "a0,a1,a2,a3,a4,a5,a6,a7,a8");
}

TEST(Report, SelectionFrequenciesSumToOne) {
  const ScenarioConfig c = parse_scenario_text(R"({"topology": {"nodes": 6}, "replications": 3, "policy": "random"})");
  const ExperimentResult r = run_experiment(c, options(1));
  const PolicyRun& run = r.run("random");
  for (const auto& ep : run.episodes) {
    const auto m = replication_metrics(ep.intervals, run.meta, c.sim.controller.interval_menu);
    double mod = 0.0, pow = 0.0, q = 0.0;
    for (const auto& [name, v] : m) {
      if (name.starts_with("mod_freq_")) mod += v;
      if (name.starts_with("power_freq_")) pow += v;
      if (name.starts_with("interval_freq_")) q += v;
    }
    EXPECT_NEAR(mod, 1.0, 1e-9);
    EXPECT_NEAR(pow, 1.0, 1e-9);
    EXPECT_NEAR(q, 1.0, 1e-9);
  }
}

TEST(Report, ReplicationsIndependentOfExecutionOrder) {
  const ScenarioConfig c = parse_scenario_text(R"({"topology": {"nodes": 4}, "replications": 6})");
  const ExperimentResult one = run_experiment(c, options(1));
  const ExperimentResult many = run_experiment(c, options(4));
  ASSERT_EQ(one.summary.rows.size(), many.summary.rows.size());
  for (std::size_t i = 0; i < one.summary.rows.size(); ++i) {
    EXPECT_EQ(one.summary.rows[i].mean, many.summary.rows[i].mean) << one.summary.rows[i].metric;
    EXPECT_EQ(one.summary.rows[i].stddev, many.summary.rows[i].stddev) << one.summary.rows[i].metric;
  }
  // Feeding the rows in reverse replication order aggregates to the same numbers.
  std::vector<IntervalRow> reversed(one.runs[0].rows.rbegin(), one.runs[0].rows.rend());
  const auto again = summarize(reversed, one.runs[0].meta, c.sim.controller.interval_menu);
  for (std::size_t i = 0; i < again.size(); ++i) EXPECT_EQ(again[i].mean, one.runs[0].summary[i].mean);
}

TEST(Experiment, FixedPolicyOnLosslessLinkHasNoVariance) {
  ScenarioConfig c = parse_scenario_text(kLosslessLink);
  c.policies = {parse_scenario_text(R"({"topology": {"nodes": 4},
      "policy": {"type": "fixed", "modulation": "BPSK", "power": "low", "interval_min": 4}})")
                    .policies[0]};
  const ExperimentResult r = run_experiment(c, options(1));
  const SummaryRow* t = r.summary.find(c.policies[0].name, "throughput_bps");
  ASSERT_NE(t, nullptr);
  EXPECT_EQ(t->stddev, 0.0);
  EXPECT_DOUBLE_EQ(t->mean, 4200.0 * 10.0 / 60.0);  // 42 frames of 1000 bits every 60 s
  // BPSK moves a quarter of the 16-PSK per-slot maximum.
  for (const auto& row : r.runs[0].rows) EXPECT_DOUBLE_EQ(row.rec.r_k_norm, 0.25);
}

TEST(Experiment, BilevelSpendsLessOnFeedbackThanPerSlotFeedback) {
  const ScenarioConfig c = parse_scenario_text(R"({"topology": {"nodes": 4}, "replications": 2,
      "policy": ["bilevel", {"type": "fixed", "modulation": "16PSK", "power": "high", "interval_min": 1, "name": "per_slot"}]})");
  const ExperimentResult r = run_experiment(c, options(1));
  EXPECT_LT(r.summary.mean("bilevel", "energy_fb_j"), r.summary.mean("per_slot", "energy_fb_j") / 4.0 + 1e-9);
}

// ---- output directory handling ----

TEST(Output, RefusesNonEmptyDirectoryWithoutOverwrite) {
  const fs::path out = fresh_dir("nonempty");
  fs::create_directories(out);
  std::ofstream(out / "keep.txt") << "x";
  const ScenarioConfig c = parse_scenario_text(kLosslessLink);
  EXPECT_THROW(run_experiment(c, options(1, out)), std::runtime_error);
  EXPECT_EQ(slurp(out / "keep.txt"), "x");
  run_experiment(c, options(1, out, true));
  EXPECT_FALSE(fs::exists(out / "keep.txt"));
  EXPECT_TRUE(fs::exists(out / "intervals.csv"));
  fs::remove_all(out);
}

TEST(Output, FailureLeavesNoPartialDirectory) {
  const fs::path out = fresh_dir("atomic");
  EXPECT_THROW(detail::write_atomically(out, false,
                                        [](const fs::path& dir) {
                                          detail::write_file(dir / "a.csv", [](std::ostream& os) { os << "1\n"; });
                                          throw std::runtime_error("disk full");
                                        }),
               std::runtime_error);
  EXPECT_FALSE(fs::exists(out));
  EXPECT_FALSE(fs::exists(out.string() + ".partial"));
}

TEST(Output, UnwritableDestinationFailsCleanly) {
  const fs::path blocker = fresh_dir("blocker");
  std::ofstream(blocker) << "not a directory";
  const ScenarioConfig c = parse_scenario_text(kLosslessLink);
  EXPECT_ANY_THROW(run_experiment(c, options(1, blocker / "run")));
  EXPECT_TRUE(fs::is_regular_file(blocker));
  fs::remove_all(blocker);
}
