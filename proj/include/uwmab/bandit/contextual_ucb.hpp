#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "uwmab/bandit/types.hpp"

namespace uwmab {

struct ArmStats {
  double mean = 0.0;
  std::uint64_t pulls = 0;
};

// Per-(context, action) statistics plus the global decision count used in the
// exploration bonus. Cold start: every mean is 0, every count is 0.
class ArmTable {
 public:
  explicit ArmTable(double exploration_c = 2.0) : c_(exploration_c) {
    if (!(exploration_c > 0.0) || !std::isfinite(exploration_c)) {
      throw std::invalid_argument("ArmTable: exploration constant must be positive");
    }
  }

  const ArmStats& at(Context ctx, Action a) const { return arms_[slot(ctx, a)]; }
  ArmStats& at(Context ctx, Action a) { return arms_[slot(ctx, a)]; }

  std::uint64_t total_decisions() const { return total_; }
  double exploration_c() const { return c_; }

  // +inf for an untried arm.
  double ucb_score(Context ctx, Action a) const {
    const ArmStats& s = at(ctx, a);
    if (s.pulls == 0) return std::numeric_limits<double>::infinity();
    const double n = static_cast<double>(total_);
    const double bonus = n > 1.0 ? std::sqrt(c_ * std::log(n) / static_cast<double>(s.pulls)) : 0.0;
    return s.mean + bonus;
  }

  // Highest UCB score under ctx; ties go to the lowest action index.
  Action argmax(Context ctx) const {
    std::size_t best = 0;
    double best_score = ucb_score(ctx, Action::from_index(0));
    for (std::size_t i = 1; i < kActionCount; ++i) {
      const double s = ucb_score(ctx, Action::from_index(i));
      if (s > best_score) {
        best_score = s;
        best = i;
      }
    }
    return Action::from_index(best);
  }

  // Same, restricted to a nonempty menu of allowed actions.
  Action argmax(Context ctx, const std::vector<Action>& menu) const {
    if (menu.empty()) throw std::invalid_argument("ArmTable::argmax: empty action menu");
    Action best = menu.front();
    double best_score = ucb_score(ctx, best);
    for (const Action& a : menu) {
      const double s = ucb_score(ctx, a);
      if (s > best_score || (s == best_score && a.index() < best.index())) {
        best_score = s;
        best = a;
      }
    }
    return best;
  }

  // Counts only; the mean waits for the delayed correction.
  std::uint64_t record_selection(Context ctx, Action a) {
    ++total_;
    return ++at(ctx, a).pulls;
  }

  // Restores a snapshot. total_decisions is recomputed from the counts so the
  // sum invariant cannot be violated by a restore.
  void restore(Context ctx, Action a, double mean, std::uint64_t pulls) {
    ArmStats& s = at(ctx, a);
    total_ -= s.pulls;
    s.mean = mean;
    s.pulls = pulls;
    total_ += pulls;
  }

 private:
  static std::size_t slot(Context ctx, Action a) { return ctx.index() * kActionCount + a.index(); }

  std::array<ArmStats, kContextCount * kActionCount> arms_{};
  std::uint64_t total_ = 0;
  double c_;
};

struct PendingEntry {
  std::int64_t slot = 0;
  Context context;
  Action action;
  // N_t(a_t, X_t) right after this selection; the divisor of its correction.
  std::uint64_t count_at_selection = 0;
};

// Actions taken since the last feedback, waiting for the aggregate reward.
struct PendingInterval {
  std::vector<PendingEntry> entries;
  std::uint64_t interval_index = 1;

  bool empty() const { return entries.empty(); }
  std::size_t size() const { return entries.size(); }
};

// Contextual UCB over (modulation, power) with interval-delayed rewards.
// Rewards arrive once per feedback interval as a sum r_k and are split evenly
// over the actions of that interval before the running-mean correction.
class ContextualDelayedUcb {
 public:
  explicit ContextualDelayedUcb(double exploration_c = 2.0) : table_(exploration_c) {}
  // Restricts selection to `menu`; an empty menu means all actions.
  ContextualDelayedUcb(double exploration_c, std::vector<Action> menu)
      : table_(exploration_c), menu_(std::move(menu)) {}

  Action select_action(Context ctx, std::int64_t slot) {
    const Action a = menu_.empty() ? table_.argmax(ctx) : table_.argmax(ctx, menu_);
    const std::uint64_t n = table_.record_selection(ctx, a);
    pending_.entries.push_back(PendingEntry{slot, ctx, a, n});
    return a;
  }

  // Returns the per-action credit r_k / |T_k|.
  double apply_delayed_reward(double r_k) {
    if (pending_.empty()) {
      throw std::logic_error("apply_delayed_reward: no actions pending in this interval");
    }
    if (!std::isfinite(r_k) || r_k < 0.0) {
      throw std::invalid_argument("apply_delayed_reward: reward must be finite and nonnegative");
    }
    const double g = r_k / static_cast<double>(pending_.size());
    for (const PendingEntry& e : pending_.entries) {
      ArmStats& s = table_.at(e.context, e.action);
      s.mean += (g - s.mean) / static_cast<double>(e.count_at_selection);
    }
    pending_.entries.clear();
    ++pending_.interval_index;
    return g;
  }

  const ArmTable& table() const { return table_; }
  ArmTable& table() { return table_; }
  const PendingInterval& pending() const { return pending_; }
  PendingInterval& pending() { return pending_; }

 private:
  ArmTable table_;
  PendingInterval pending_;
  std::vector<Action> menu_;
};

// Free-function forms mirroring the controller's two entry points.
inline Action select_action(ContextualDelayedUcb& agent, Context ctx, std::int64_t slot) {
  return agent.select_action(ctx, slot);
}

inline double apply_delayed_reward(ContextualDelayedUcb& agent, double r_k) {
  return agent.apply_delayed_reward(r_k);
}

}  // namespace uwmab
