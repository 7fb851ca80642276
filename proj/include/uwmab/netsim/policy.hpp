#pragma once

#include <algorithm>
#include <array>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "uwmab/bandit/contextual_ucb.hpp"
#include "uwmab/bandit/feedback_mab.hpp"
#include "uwmab/bandit/types.hpp"

namespace uwmab::netsim {

using Rng = std::mt19937_64;

enum class PolicyKind { Bilevel, Fixed, Random, Oracle };

struct PolicySpec {
  PolicyKind kind = PolicyKind::Bilevel;
  Action action{Modulation::PSK16, PowerClass::High};  // Fixed only
  // Fixed interval in minutes. For Bilevel this disables the outer bandit.
  std::optional<int> interval_min;
  // Best action per SNR class; Oracle only.
  std::array<Action, kSnrClassCount> oracle_map{};
  std::string name = "bilevel";
};

inline std::vector<Action> full_action_menu() {
  const auto all = all_actions();
  return {all.begin(), all.end()};
}

struct ControllerParams {
  double exploration_c = 2.0;
  double theta = 0.7;
  std::vector<int> interval_menu{4, 7, 10};
  std::vector<Action> action_menu = full_action_menu();
  // Energy of one feedback exchange over the largest per-interval feedback
  // energy on the menu. Every interval carries exactly one exchange, so 1.
  double feedback_cost_norm = 1.0;
};

// Per-link decision logic. The simulator owns feedback, AoI and accounting;
// a policy only picks actions and feedback intervals.
class LinkPolicy {
 public:
  virtual ~LinkPolicy() = default;
  virtual int initial_interval(Rng& rng) = 0;
  virtual Action choose(Context ctx, std::int64_t slot, Rng& rng) = 0;
  // r_sum: interval throughput summed over slots, each slot normalized to
  // [0, 1]; r_norm: its per-slot average. Returns the next interval.
  virtual int on_feedback(double r_sum, double r_norm, int q_min, Rng& rng) = 0;
};

class BilevelPolicy final : public LinkPolicy {
 public:
  BilevelPolicy(const ControllerParams& p, std::optional<int> fixed_interval)
      : inner_(p.exploration_c, p.action_menu),
        outer_(p.interval_menu, p.theta, p.feedback_cost_norm, p.exploration_c),
        fixed_interval_(fixed_interval) {}

  int initial_interval(Rng&) override {
    return fixed_interval_ ? *fixed_interval_ : outer_.select_interval();
  }

  Action choose(Context ctx, std::int64_t slot, Rng&) override { return inner_.select_action(ctx, slot); }

  int on_feedback(double r_sum, double r_norm, int q_min, Rng&) override {
    if (!inner_.pending().empty()) inner_.apply_delayed_reward(r_sum);
    if (fixed_interval_) return *fixed_interval_;
    outer_.update(q_min, outer_.reward(r_norm, q_min));
    return outer_.select_interval();
  }

  const ContextualDelayedUcb& inner() const { return inner_; }
  const FeedbackMab& outer() const { return outer_; }
  bool outer_enabled() const { return !fixed_interval_; }

 private:
  ContextualDelayedUcb inner_;
  FeedbackMab outer_;
  std::optional<int> fixed_interval_;
};

class FixedPolicy final : public LinkPolicy {
 public:
  FixedPolicy(Action a, int interval_min) : action_(a), interval_(interval_min) {}
  int initial_interval(Rng&) override { return interval_; }
  Action choose(Context, std::int64_t, Rng&) override { return action_; }
  int on_feedback(double, double, int, Rng&) override { return interval_; }

 private:
  Action action_;
  int interval_;
};

class RandomPolicy final : public LinkPolicy {
 public:
  RandomPolicy(std::vector<Action> actions, std::vector<int> menu, std::optional<int> fixed_interval)
      : actions_(std::move(actions)), menu_(std::move(menu)), fixed_interval_(fixed_interval) {}
  int initial_interval(Rng& rng) override { return draw_interval(rng); }
  Action choose(Context, std::int64_t, Rng& rng) override {
    std::uniform_int_distribution<std::size_t> pick(0, actions_.size() - 1);
    return actions_[pick(rng)];
  }
  int on_feedback(double, double, int, Rng& rng) override { return draw_interval(rng); }

 private:
  int draw_interval(Rng& rng) {
    if (fixed_interval_) return *fixed_interval_;
    std::uniform_int_distribution<std::size_t> pick(0, menu_.size() - 1);
    return menu_[pick(rng)];
  }
  std::vector<Action> actions_;
  std::vector<int> menu_;
  std::optional<int> fixed_interval_;
};

// Plays the genie-best action for the reported SNR class.
class OraclePolicy final : public LinkPolicy {
 public:
  OraclePolicy(std::array<Action, kSnrClassCount> map, int interval_min)
      : map_(map), interval_(interval_min) {}
  int initial_interval(Rng&) override { return interval_; }
  Action choose(Context ctx, std::int64_t, Rng&) override {
    return map_[static_cast<std::size_t>(ctx.snr)];
  }
  int on_feedback(double, double, int, Rng&) override { return interval_; }

 private:
  std::array<Action, kSnrClassCount> map_;
  int interval_;
};

inline std::unique_ptr<LinkPolicy> make_policy(const PolicySpec& spec, const ControllerParams& p) {
  if (p.interval_menu.empty()) throw std::invalid_argument("make_policy: empty interval menu");
  if (p.action_menu.empty()) throw std::invalid_argument("make_policy: empty action menu");
  const int shortest = *std::min_element(p.interval_menu.begin(), p.interval_menu.end());
  switch (spec.kind) {
    case PolicyKind::Bilevel: return std::make_unique<BilevelPolicy>(p, spec.interval_min);
    case PolicyKind::Fixed: return std::make_unique<FixedPolicy>(spec.action, spec.interval_min.value_or(shortest));
    case PolicyKind::Random: return std::make_unique<RandomPolicy>(p.action_menu, p.interval_menu, spec.interval_min);
    case PolicyKind::Oracle: return std::make_unique<OraclePolicy>(spec.oracle_map, spec.interval_min.value_or(shortest));
  }
  throw std::invalid_argument("make_policy: unknown policy kind");
}

}  // namespace uwmab::netsim
