#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "synthetic.hpp"
#include "uwmab/bandit/aoi_clock.hpp"
#include "uwmab/bandit/contextual_ucb.hpp"
#include "uwmab/bandit/feedback_mab.hpp"
#include "uwmab/bandit/serialize.hpp"
#include "uwmab/bandit/types.hpp"

using namespace uwmab;

namespace {

const Context kCtx{SnrClass::Medium, AoiClass::Fresh};

// Direct UCB score, independent of ArmTable.
double ucb(double mean, double pulls, double n, double c) { return mean + std::sqrt(c * std::log(n) / pulls); }

}  // namespace

// ---- AoI clock ----

TEST(AoiClock, ExamplesFromDefinition) {
  EXPECT_EQ(aoi_value(AoiClock(10, 13)), 3);
  EXPECT_EQ(aoi_value(AoiClock(10, 10)), 0);
  EXPECT_EQ(aoi_value(AoiClock(0, 7)), 7);
}

TEST(AoiClock, RejectsCurrentBeforeLast) { EXPECT_THROW(AoiClock(5, 4), std::invalid_argument); }

TEST(AoiClock, SawtoothOverRandomResets) {
  std::mt19937_64 rng(3);
  std::bernoulli_distribution reset(0.2);
  AoiClock clock;
  std::int64_t expected = 0;
  for (int s = 1; s < 5000; ++s) {
    const std::int64_t before = clock.age();
    clock.tick();
    EXPECT_EQ(clock.age(), before + 1);
    ++expected;
    if (reset(rng)) {
      clock.reset();
      expected = 0;
      EXPECT_EQ(clock.age(), 0);
    }
    ASSERT_EQ(clock.age(), expected);
  }
}

TEST(AoiClock, AdvanceIsMonotone) {
  AoiClock c(2, 5);
  c.advance_to(9);
  EXPECT_EQ(c.age(), 7);
  EXPECT_THROW(c.advance_to(8), std::invalid_argument);
}

// ---- quantizers ----

TEST(Quantize, SnrExamples) {
  EXPECT_EQ(quantize_snr(18.0), SnrClass::Low);
  EXPECT_EQ(quantize_snr(25.0), SnrClass::Medium);
  EXPECT_EQ(quantize_snr(7.5), SnrClass::Low);
}

TEST(Quantize, SnrBoundariesAndClamp) {
  EXPECT_EQ(quantize_snr(10.0), SnrClass::Low);
  EXPECT_EQ(quantize_snr(std::nextafter(18.0, 19.0)), SnrClass::Medium);
  EXPECT_EQ(quantize_snr(30.0), SnrClass::Medium);
  EXPECT_EQ(quantize_snr(std::nextafter(30.0, 31.0)), SnrClass::High);
  EXPECT_EQ(quantize_snr(40.0), SnrClass::High);
  EXPECT_EQ(quantize_snr(95.0), SnrClass::High);
  EXPECT_EQ(quantize_snr(-30.0), SnrClass::Low);
}

TEST(Quantize, SnrRejectsNonFinite) {
  EXPECT_THROW(quantize_snr(std::numeric_limits<double>::quiet_NaN()), std::invalid_argument);
  EXPECT_THROW(quantize_snr(std::numeric_limits<double>::infinity()), std::invalid_argument);
}

TEST(Quantize, AoiExamples) {
  EXPECT_EQ(quantize_aoi(0), AoiClass::Fresh);
  EXPECT_EQ(quantize_aoi(4), AoiClass::Fresh);
  EXPECT_EQ(quantize_aoi(5), AoiClass::Stale);
  EXPECT_EQ(quantize_aoi(7), AoiClass::Stale);
  EXPECT_EQ(quantize_aoi(8), AoiClass::VeryStale);
  EXPECT_EQ(quantize_aoi(12), AoiClass::VeryStale);
}

TEST(Types, ContextAndActionSpacesAreNineEach) {
  std::set<std::size_t> ctx;
  std::set<std::size_t> act;
  for (std::size_t i = 0; i < kContextCount; ++i) ctx.insert(Context::from_index(i).index());
  for (const Action& a : all_actions()) act.insert(a.index());
  EXPECT_EQ(ctx.size(), 9u);
  EXPECT_EQ(act.size(), 9u);
}

// ---- inner bandit: selection ----

TEST(SelectAction, UntriedArmWins) {
  const Action a = Action::from_index(0);
  const Action b = Action::from_index(1);
  // Only A and B are offered; A tried 10 times with mean 0.5.
  ContextualDelayedUcb restricted(2.0, {a, b});
  restricted.table().restore(kCtx, a, 0.5, 10);
  EXPECT_EQ(restricted.select_action(kCtx, 0), b);
}

TEST(SelectAction, EqualBonusHigherMeanWins) {
  const Action a = Action::from_index(0);
  const Action b = Action::from_index(1);
  ContextualDelayedUcb agent(2.0, {a, b});
  agent.table().restore(kCtx, a, 0.5, 10);
  agent.table().restore(kCtx, b, 0.4, 10);
  ASSERT_EQ(agent.table().total_decisions(), 20u);
  EXPECT_EQ(agent.select_action(kCtx, 0), a);
}

TEST(SelectAction, LargeBonusBeatsHigherMean) {
  const Action a = Action::from_index(0);
  const Action b = Action::from_index(1);
  ContextualDelayedUcb agent(2.0, {a, b});
  agent.table().restore(kCtx, a, 0.6, 100);
  agent.table().restore(kCtx, b, 0.5, 2);
  const double sa = ucb(0.6, 100, 102, 2.0);
  const double sb = ucb(0.5, 2, 102, 2.0);
  EXPECT_NEAR(sa, 0.904, 1e-3);
  EXPECT_NEAR(sb, 2.651, 1e-3);
  EXPECT_NEAR(agent.table().ucb_score(kCtx, a), sa, 1e-12);
  EXPECT_NEAR(agent.table().ucb_score(kCtx, b), sb, 1e-12);
  EXPECT_EQ(agent.select_action(kCtx, 0), b);
}

TEST(SelectAction, TiesGoToLowestIndex) {
  ContextualDelayedUcb agent(2.0);
  EXPECT_EQ(agent.select_action(kCtx, 0).index(), 0u);
  ArmTable t(2.0);
  for (const Action& a : all_actions()) t.restore(kCtx, a, 0.3, 5);
  EXPECT_EQ(t.argmax(kCtx).index(), 0u);
}

TEST(SelectAction, CountsIncrementAtSelectionOnly) {
  ContextualDelayedUcb agent(2.0);
  const Action a = agent.select_action(kCtx, 0);
  EXPECT_EQ(agent.table().at(kCtx, a).pulls, 1u);
  EXPECT_EQ(agent.table().at(kCtx, a).mean, 0.0);
  EXPECT_EQ(agent.table().total_decisions(), 1u);
  ASSERT_EQ(agent.pending().size(), 1u);
  EXPECT_EQ(agent.pending().entries[0].count_at_selection, 1u);
}

TEST(SelectAction, ColdStartSweepPerContext) {
  // Property: in every context, all 9 arms are tried once before any twice,
  // whatever the rewards and however contexts interleave.
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick_ctx(0, kContextCount - 1);
    std::uniform_int_distribution<int> len(1, 10);
    std::uniform_real_distribution<double> reward(0.0, 10.0);
    ContextualDelayedUcb agent(std::uniform_real_distribution<double>(0.1, 5.0)(rng));
    std::array<std::array<int, kActionCount>, kContextCount> seen{};
    std::array<int, kContextCount> selections{};
    for (int round = 0; round < 60; ++round) {
      const Context ctx = Context::from_index(pick_ctx(rng));
      const int n = len(rng);
      for (int i = 0; i < n; ++i) {
        const Action a = agent.select_action(ctx, round * 10 + i);
        auto& s = seen[ctx.index()];
        if (selections[ctx.index()] < static_cast<int>(kActionCount)) {
          ASSERT_EQ(s[a.index()], 0) << "arm repeated before sweep, seed " << seed;
        }
        ++s[a.index()];
        ++selections[ctx.index()];
      }
      agent.apply_delayed_reward(reward(rng));
    }
  }
}

TEST(ArmTable, PullsSumToTotalDecisions) {
  std::mt19937_64 rng(11);
  ContextualDelayedUcb agent(2.0);
  std::uniform_int_distribution<std::size_t> pick(0, kContextCount - 1);
  for (int k = 0; k < 500; ++k) {
    const Context ctx = Context::from_index(pick(rng));
    for (int i = 0; i < 4; ++i) agent.select_action(ctx, k);
    agent.apply_delayed_reward(1.0);
    std::uint64_t sum = 0;
    for (std::size_t c = 0; c < kContextCount; ++c) {
      for (const Action& a : all_actions()) sum += agent.table().at(Context::from_index(c), a).pulls;
    }
    ASSERT_EQ(sum, agent.table().total_decisions());
  }
}

TEST(ArmTable, RejectsNonPositiveExploration) {
  EXPECT_THROW(ArmTable(0.0), std::invalid_argument);
  EXPECT_THROW(ArmTable(-1.0), std::invalid_argument);
}

// ---- inner bandit: delayed reward ----

TEST(DelayedReward, SplitsEvenly) {
  ContextualDelayedUcb agent(2.0);
  for (int i = 0; i < 4; ++i) agent.select_action(kCtx, i);
  EXPECT_DOUBLE_EQ(agent.apply_delayed_reward(12.0), 3.0);
  EXPECT_TRUE(agent.pending().empty());
  EXPECT_EQ(agent.pending().interval_index, 2u);
}

TEST(DelayedReward, IncrementalMeanExample) {
  const Action a = Action::from_index(4);
  ContextualDelayedUcb agent(2.0, {a});
  agent.table().restore(kCtx, a, 0.5, 1);
  agent.select_action(kCtx, 0);  // pulls -> 2
  agent.apply_delayed_reward(0.9);
  EXPECT_DOUBLE_EQ(agent.table().at(kCtx, a).mean, 0.7);
}

TEST(DelayedReward, ZeroRewardDecaysMean) {
  const Action a = Action::from_index(2);
  ContextualDelayedUcb agent(2.0, {a});
  agent.table().restore(kCtx, a, 0.6, 2);
  agent.select_action(kCtx, 0);
  agent.apply_delayed_reward(0.0);
  EXPECT_DOUBLE_EQ(agent.table().at(kCtx, a).mean, 0.6 - 0.6 / 3.0);
}

TEST(DelayedReward, RejectsEmptyLedgerAndBadRewards) {
  ContextualDelayedUcb agent(2.0);
  EXPECT_THROW(agent.apply_delayed_reward(1.0), std::logic_error);
  agent.select_action(kCtx, 0);
  EXPECT_THROW(agent.apply_delayed_reward(-0.1), std::invalid_argument);
  EXPECT_THROW(agent.apply_delayed_reward(std::numeric_limits<double>::quiet_NaN()), std::invalid_argument);
}

TEST(DelayedReward, CreditConservation) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> len(1, 12);
  std::uniform_real_distribution<double> reward(0.0, 1e6);
  for (int trial = 0; trial < 2000; ++trial) {
    ContextualDelayedUcb agent(2.0);
    const int n = len(rng);
    for (int i = 0; i < n; ++i) agent.select_action(kCtx, i);
    const double r = reward(rng);
    const double g = agent.apply_delayed_reward(r);
    long double sum = 0.0L;
    for (int i = 0; i < n; ++i) sum += g;
    ASSERT_NEAR(static_cast<double>(sum), r, 1e-9 * std::max(1.0, r));
  }
}

TEST(DelayedReward, RunningMeanMatchesHistory) {
  // 10^4 random update sequences against a keep-everything oracle.
  for (std::uint64_t seed = 1; seed <= 10000; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick_ctx(0, kContextCount - 1);
    std::uniform_int_distribution<int> len(1, 10);
    std::uniform_int_distribution<int> rounds(1, 12);
    std::uniform_real_distribution<double> reward(0.0, 10.0);
    ContextualDelayedUcb agent(2.0);
    oracle::HistoryMean hist;
    const int k_max = rounds(rng);
    for (int k = 0; k < k_max; ++k) {
      const Context ctx = Context::from_index(pick_ctx(rng));
      const int n = len(rng);
      std::vector<int> keys;
      for (int i = 0; i < n; ++i) {
        const Action a = agent.select_action(ctx, k * 10 + i);
        keys.push_back(static_cast<int>(ctx.index() * kActionCount + a.index()));
      }
      const double r = reward(rng);
      agent.apply_delayed_reward(r);
      for (int key : keys) hist.credit(key, r / n);
    }
    for (std::size_t c = 0; c < kContextCount; ++c) {
      for (const Action& a : all_actions()) {
        const Context ctx = Context::from_index(c);
        const int key = static_cast<int>(c * kActionCount + a.index());
        const ArmStats& s = agent.table().at(ctx, a);
        ASSERT_EQ(s.pulls, hist.count(key));
        const double expect = hist.mean(key);
        ASSERT_NEAR(s.mean, expect, 1e-9 * std::max(1.0, std::abs(expect))) << "seed " << seed;
      }
    }
  }
}

TEST(Convergence, EasyInstanceConverges) {
  // Wide gap and immediate feedback: UCB must settle on the best arm.
  const auto inst = synthetic::make_instance(1, 0.5);
  const auto out = synthetic::run(inst, 1, 5000, 1);
  EXPECT_GT(out.min_fraction, 0.85);
}

TEST(Convergence, FrozenGapPointOneRegression) {
  // Mean optimal-arm fraction over seeds 1..10 at gap 0.1 after 5000 pulls
  // per context; values frozen from a brute-force run of this harness.
  double immediate = 0.0;
  double delayed = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto inst = synthetic::make_instance(seed);
    immediate += synthetic::run(inst, seed, 5000, 1).mean_fraction / 10.0;
    delayed += synthetic::run(inst, seed, 5000, 4).mean_fraction / 10.0;
  }
  EXPECT_NEAR(immediate, 0.6752, 5e-4);
  EXPECT_NEAR(delayed, 0.6638, 5e-4);
}

// ---- outer bandit ----

TEST(FeedbackMab, RewardExamples) {
  FeedbackMab m({4, 7, 10}, 0.7, 0.2);
  EXPECT_NEAR(fb_reward(m, 1.0, 4), 0.685, 1e-12);
  FeedbackMab one({4, 7, 10}, 1.0, 0.9);
  EXPECT_NEAR(fb_reward(one, 0.5, 10), 0.5, 1e-12);
  FeedbackMab zero({4, 7, 10}, 0.0, 0.3);
  EXPECT_NEAR(fb_reward(zero, 0.77, 10), -0.03, 1e-12);
  EXPECT_THROW(fb_reward(m, 0.5, 5), std::invalid_argument);
}

TEST(FeedbackMab, ColdStartPicksShortest) {
  FeedbackMab m({10, 4, 7}, 0.7, 1.0);
  EXPECT_EQ(fb_select_interval(m), 4);
  EXPECT_EQ(m.round(), 1u);
  EXPECT_EQ(m.arm(4).pulls, 1u);
}

TEST(FeedbackMab, EqualBonusHighestMean) {
  FeedbackMab m({4, 7, 10}, 0.7, 1.0);
  m.restore(4, 0.68, 5);
  m.restore(7, 0.64, 5);
  m.restore(10, 0.60, 5);
  ASSERT_EQ(m.round(), 15u);
  EXPECT_EQ(fb_select_interval(m), 4);
}

TEST(FeedbackMab, LargestBonusWins) {
  FeedbackMab m({4, 7, 10}, 0.7, 1.0);
  m.restore(4, 0.6, 10);
  m.restore(7, 0.6, 2);
  m.restore(10, 0.6, 10);
  ASSERT_EQ(m.round(), 22u);
  const double s7 = ucb(0.6, 2, 22, 2.0);
  const double s4 = ucb(0.6, 10, 22, 2.0);
  EXPECT_GT(s7, s4);
  EXPECT_EQ(fb_select_interval(m), 7);
}

TEST(FeedbackMab, UpdateExamples) {
  FeedbackMab m({4, 7, 10}, 0.7, 1.0);
  m.restore(4, 0.0, 1);
  fb_update(m, 4, 0.685);
  EXPECT_NEAR(m.arm(4).mean, 0.685, 1e-12);
  m.restore(4, 0.685, 2);
  fb_update(m, 4, 0.5);
  EXPECT_NEAR(m.arm(4).mean, 0.5925, 1e-12);
  m.restore(7, 0.6, 4);
  fb_update(m, 7, 0.6);
  EXPECT_NEAR(m.arm(7).mean, 0.6, 1e-12);
  EXPECT_THROW(fb_update(m, 5, 0.1), std::invalid_argument);
  EXPECT_THROW(fb_update(m, 10, 0.1), std::logic_error);
}

TEST(FeedbackMab, ConstructorValidation) {
  EXPECT_THROW(FeedbackMab({}, 0.7, 1.0), std::invalid_argument);
  EXPECT_THROW(FeedbackMab({4, 4}, 0.7, 1.0), std::invalid_argument);
  EXPECT_THROW(FeedbackMab({0, 4}, 0.7, 1.0), std::invalid_argument);
  EXPECT_THROW(FeedbackMab({4}, 1.5, 1.0), std::invalid_argument);
  EXPECT_THROW(FeedbackMab({4}, 0.7, -1.0), std::invalid_argument);
}

TEST(FeedbackMab, PullsSumToRound) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  FeedbackMab m({4, 7, 10}, 0.7, 1.0);
  for (int k = 0; k < 300; ++k) {
    const int q = m.select_interval();
    m.update(q, m.reward(u(rng), q));
    std::uint64_t s = 0;
    for (const auto& a : m.arms()) s += a.pulls;
    ASSERT_EQ(s, m.round());
  }
}

TEST(FeedbackMab, ThetaExtremesPickExpectedArm) {
  // Stationary synthetic throughput: 7 min is best. theta = 1 must prefer 7,
  // theta = 0 must prefer the longest interval.
  const std::map<int, double> thr{{4, 0.5}, {7, 0.8}, {10, 0.4}};
  for (double theta : {1.0, 0.0}) {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> noise(0.0, 0.05);
    FeedbackMab m({4, 7, 10}, theta, 1.0);
    for (int k = 0; k < 20000; ++k) {
      const int q = m.select_interval();
      m.update(q, m.reward(thr.at(q) + noise(rng), q));
    }
    const auto most = std::max_element(m.arms().begin(), m.arms().end(),
                                       [](const auto& a, const auto& b) { return a.pulls < b.pulls; });
    EXPECT_EQ(most->minutes, theta == 1.0 ? 7 : 10) << "theta " << theta;
  }
}

// ---- checkpoint round trip ----

TEST(Serialize, ArmTableRoundTrip) {
  ContextualDelayedUcb agent(2.0);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 4.0);
  for (int k = 0; k < 50; ++k) {
    const Context ctx = Context::from_index(static_cast<std::size_t>(k) % kContextCount);
    for (int i = 0; i < 3; ++i) agent.select_action(ctx, k);
    agent.apply_delayed_reward(u(rng));
  }
  const ArmTable back = arm_table_from_json(nlohmann::json::parse(to_json(agent.table()).dump()));
  EXPECT_EQ(back.total_decisions(), agent.table().total_decisions());
  for (std::size_t c = 0; c < kContextCount; ++c) {
    for (const Action& a : all_actions()) {
      const Context ctx = Context::from_index(c);
      EXPECT_EQ(back.at(ctx, a).pulls, agent.table().at(ctx, a).pulls);
      EXPECT_DOUBLE_EQ(back.at(ctx, a).mean, agent.table().at(ctx, a).mean);
    }
  }
}

TEST(Serialize, FeedbackMabRoundTrip) {
  FeedbackMab m({4, 7, 10}, 0.7, 1.0);
  for (int k = 0; k < 10; ++k) {
    const int q = m.select_interval();
    m.update(q, 0.1 * k);
  }
  const FeedbackMab back = feedback_mab_from_json(to_json(m));
  EXPECT_EQ(back.round(), m.round());
  for (const auto& a : m.arms()) {
    EXPECT_EQ(back.arm(a.minutes).pulls, a.pulls);
    EXPECT_DOUBLE_EQ(back.arm(a.minutes).mean, a.mean);
  }
}

TEST(Serialize, RejectsInconsistentTotal) {
  nlohmann::json j = to_json(ArmTable(2.0));
  j["total_decisions"] = 3;
  EXPECT_THROW(arm_table_from_json(j), std::invalid_argument);
}
