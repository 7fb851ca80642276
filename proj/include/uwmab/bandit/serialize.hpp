#pragma once

// Checkpoint form of the bandit state: plain numeric maps keyed by readable
// names, e.g. {"c": 2, "arms": [{"context": 4, "action": 7, "mean": .., "pulls": ..}]}.

#include <nlohmann/json.hpp>

#include "uwmab/bandit/contextual_ucb.hpp"
#include "uwmab/bandit/feedback_mab.hpp"

namespace uwmab {

inline nlohmann::json to_json(const ArmTable& t) {
  nlohmann::json arms = nlohmann::json::array();
  for (std::size_t ci = 0; ci < kContextCount; ++ci) {
    for (std::size_t ai = 0; ai < kActionCount; ++ai) {
      const ArmStats& s = t.at(Context::from_index(ci), Action::from_index(ai));
      if (s.pulls == 0 && s.mean == 0.0) continue;
      arms.push_back({{"context", ci}, {"action", ai}, {"mean", s.mean}, {"pulls", s.pulls}});
    }
  }
  return {{"c", t.exploration_c()}, {"total_decisions", t.total_decisions()}, {"arms", arms}};
}

inline ArmTable arm_table_from_json(const nlohmann::json& j) {
  ArmTable t(j.at("c").get<double>());
  for (const auto& a : j.at("arms")) {
    const auto ci = a.at("context").get<std::size_t>();
    const auto ai = a.at("action").get<std::size_t>();
    if (ci >= kContextCount || ai >= kActionCount) {
      throw std::invalid_argument("arm_table_from_json: index out of range");
    }
    t.restore(Context::from_index(ci), Action::from_index(ai), a.at("mean").get<double>(),
              a.at("pulls").get<std::uint64_t>());
  }
  if (j.contains("total_decisions") &&
      j.at("total_decisions").get<std::uint64_t>() != t.total_decisions()) {
    throw std::invalid_argument("arm_table_from_json: total_decisions does not match pull counts");
  }
  return t;
}

inline nlohmann::json to_json(const FeedbackMab& m) {
  nlohmann::json arms = nlohmann::json::array();
  for (const auto& a : m.arms()) {
    arms.push_back({{"minutes", a.minutes}, {"mean", a.mean}, {"pulls", a.pulls}});
  }
  return {{"theta", m.theta()},
          {"feedback_cost", m.feedback_cost()},
          {"c", m.exploration_c()},
          {"round", m.round()},
          {"arms", arms}};
}

inline FeedbackMab feedback_mab_from_json(const nlohmann::json& j) {
  std::vector<int> menu;
  for (const auto& a : j.at("arms")) menu.push_back(a.at("minutes").get<int>());
  FeedbackMab m(menu, j.at("theta").get<double>(), j.at("feedback_cost").get<double>(),
                j.at("c").get<double>());
  for (const auto& a : j.at("arms")) {
    m.restore(a.at("minutes").get<int>(), a.at("mean").get<double>(),
              a.at("pulls").get<std::uint64_t>());
  }
  return m;
}

}  // namespace uwmab
