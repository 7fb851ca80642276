#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace uwmab {

// Non-contextual UCB over the feedback interval menu (durations in minutes).
//
// The reward of a round trades interval throughput against the feedback rate:
//   theta * r_k - (1 - theta) * C_fb / Q_k
// with r_k and C_fb both normalized to [0, 1] by the caller.
class FeedbackMab {
 public:
  struct Arm {
    int minutes = 0;
    double mean = 0.0;
    std::uint64_t pulls = 0;
  };

  FeedbackMab(std::vector<int> intervals_min, double theta, double feedback_cost,
              double exploration_c = 2.0)
      : theta_(theta), feedback_cost_(feedback_cost), c_(exploration_c) {
    if (intervals_min.empty()) throw std::invalid_argument("FeedbackMab: empty interval menu");
    std::sort(intervals_min.begin(), intervals_min.end());
    if (std::adjacent_find(intervals_min.begin(), intervals_min.end()) != intervals_min.end()) {
      throw std::invalid_argument("FeedbackMab: duplicate interval in menu");
    }
    for (int q : intervals_min) {
      if (q <= 0) throw std::invalid_argument("FeedbackMab: interval durations must be positive");
      arms_.push_back(Arm{q, 0.0, 0});
    }
    if (!(theta >= 0.0 && theta <= 1.0)) {
      throw std::invalid_argument("FeedbackMab: theta must lie in [0, 1]");
    }
    if (!(feedback_cost >= 0.0) || !std::isfinite(feedback_cost)) {
      throw std::invalid_argument("FeedbackMab: feedback cost must be finite and nonnegative");
    }
    if (!(exploration_c > 0.0) || !std::isfinite(exploration_c)) {
      throw std::invalid_argument("FeedbackMab: exploration constant must be positive");
    }
  }

  double reward(double r_k, int q_min) const {
    (void)index_of(q_min);
    return theta_ * r_k - (1.0 - theta_) * feedback_cost_ / static_cast<double>(q_min);
  }

  double ucb_score(std::size_t i) const {
    const Arm& a = arms_[i];
    if (a.pulls == 0) return std::numeric_limits<double>::infinity();
    const double k = static_cast<double>(round_);
    const double bonus = k > 1.0 ? std::sqrt(c_ * std::log(k) / static_cast<double>(a.pulls)) : 0.0;
    return a.mean + bonus;
  }

  // Menu is sorted ascending, so the strict comparison breaks ties toward the
  // shortest interval.
  int select_interval() {
    std::size_t best = 0;
    double best_score = ucb_score(0);
    for (std::size_t i = 1; i < arms_.size(); ++i) {
      const double s = ucb_score(i);
      if (s > best_score) {
        best_score = s;
        best = i;
      }
    }
    ++round_;
    ++arms_[best].pulls;
    return arms_[best].minutes;
  }

  void update(int q_min, double reward) {
    Arm& a = arms_[index_of(q_min)];
    if (a.pulls == 0) {
      throw std::logic_error("FeedbackMab::update: interval " + std::to_string(q_min) +
                             " was never selected");
    }
    a.mean += (reward - a.mean) / static_cast<double>(a.pulls);
  }

  void restore(int q_min, double mean, std::uint64_t pulls) {
    Arm& a = arms_[index_of(q_min)];
    round_ -= a.pulls;
    a.mean = mean;
    a.pulls = pulls;
    round_ += pulls;
  }

  const std::vector<Arm>& arms() const { return arms_; }
  const Arm& arm(int q_min) const { return arms_[index_of(q_min)]; }
  std::uint64_t round() const { return round_; }
  double theta() const { return theta_; }
  double feedback_cost() const { return feedback_cost_; }
  double exploration_c() const { return c_; }
  bool contains(int q_min) const {
    return std::any_of(arms_.begin(), arms_.end(), [&](const Arm& a) { return a.minutes == q_min; });
  }

 private:
  std::size_t index_of(int q_min) const {
    for (std::size_t i = 0; i < arms_.size(); ++i) {
      if (arms_[i].minutes == q_min) return i;
    }
    throw std::invalid_argument("FeedbackMab: interval " + std::to_string(q_min) +
                                " min is not in the menu");
  }

  std::vector<Arm> arms_;
  std::uint64_t round_ = 0;
  double theta_;
  double feedback_cost_;
  double c_;
};

inline double fb_reward(const FeedbackMab& mab, double r_k, int q_min) {
  return mab.reward(r_k, q_min);
}
inline int fb_select_interval(FeedbackMab& mab) { return mab.select_interval(); }
inline void fb_update(FeedbackMab& mab, int q_min, double reward) { mab.update(q_min, reward); }

}  // namespace uwmab
