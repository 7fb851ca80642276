#pragma once

// Scenario files: JSON documents describing one network, its channel and the
// policies to run. Every key is optional except the topology; unknown keys are
// rejected so that typos cannot silently fall back to defaults.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uwmab/netsim/simulator.hpp"

namespace uwmab::exp {

using nlohmann::json;

enum class ConfigErrorKind { MissingFile, Syntax, Schema, Semantic };

inline std::string_view to_string(ConfigErrorKind k) {
  switch (k) {
    case ConfigErrorKind::MissingFile: return "missing file";
    case ConfigErrorKind::Syntax: return "syntax error";
    case ConfigErrorKind::Schema: return "schema error";
    case ConfigErrorKind::Semantic: return "invalid configuration";
  }
  return "?";
}

class ConfigError : public std::runtime_error {
 public:
  ConfigError(ConfigErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ConfigErrorKind kind() const { return kind_; }

 private:
  ConfigErrorKind kind_;
};

inline const std::set<int>& supported_node_counts() {
  static const std::set<int> counts{4, 6, 8, 10};
  return counts;
}

struct ScenarioConfig {
  std::string name = "scenario";
  netsim::SimConfig sim;
  // Sensor count for generated layouts; 0 when positions are explicit.
  int nodes = 0;
  std::uint64_t layout_seed = 1;
  netsim::LayoutParams layout;
  int replications = 20;
  std::uint64_t seed = 1;
  std::vector<netsim::PolicySpec> policies;

  int sensor_count() const { return static_cast<int>(sim.topology.node_count()) - 1; }

  netsim::SimConfig for_policy(const netsim::PolicySpec& p) const {
    netsim::SimConfig c = sim;
    c.policy = p;
    return c;
  }
};

namespace detail {

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) schema("must be an object");
  }

  // Call after all get() calls; reports the first key nobody asked for.
  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.contains(key)) schema_at(key, "unknown key");
    }
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  template <class T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw std::invalid_argument("expected a number");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw std::invalid_argument("expected an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (v.get<long long>() < 0) throw std::invalid_argument("expected a nonnegative integer");
        }
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw std::invalid_argument("expected a string");
      }
      out = v.get<T>();
    } catch (const std::exception& e) {
      schema_at(key, e.what());
    }
  }

  Reader child(const std::string& key) {
    seen_.insert(key);
    return Reader(j_.at(key), path_ + "." + key);
  }

  [[noreturn]] void schema(const std::string& msg) const { throw ConfigError(ConfigErrorKind::Schema, path_ + ": " + msg); }
  [[noreturn]] void schema_at(const std::string& key, const std::string& msg) const {
    throw ConfigError(ConfigErrorKind::Schema, path_ + "." + key + ": " + msg);
  }
  const std::string& path() const { return path_; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline Action parse_action_name(const std::string& s, const std::string& where) {
  const auto slash = s.find('/');
  if (slash == std::string::npos) {
    throw ConfigError(ConfigErrorKind::Schema, where + ": action '" + s + "' must look like MOD/power, e.g. 16PSK/low");
  }
  try {
    return Action{parse_modulation(s.substr(0, slash)), parse_power(s.substr(slash + 1))};
  } catch (const std::invalid_argument& e) {
    throw ConfigError(ConfigErrorKind::Schema, where + ": " + e.what());
  }
}

inline PowerClass parse_power_at(const std::string& s, const std::string& where) {
  try {
    return parse_power(s);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(ConfigErrorKind::Schema, where + ": " + e.what());
  }
}

inline netsim::PolicySpec parse_policy(const json& j, const std::string& where) {
  netsim::PolicySpec p;
  auto kind_of = [&](const std::string& t) {
    if (t == "bilevel") return netsim::PolicyKind::Bilevel;
    if (t == "fixed") return netsim::PolicyKind::Fixed;
    if (t == "random") return netsim::PolicyKind::Random;
    if (t == "oracle") return netsim::PolicyKind::Oracle;
    throw ConfigError(ConfigErrorKind::Schema, where + ": unknown policy '" + t + "'");
  };
  if (j.is_string()) {
    p.kind = kind_of(j.get<std::string>());
    p.name = j.get<std::string>();
    return p;
  }
  Reader r(j, where);
  std::string type;
  r.get("type", type);
  if (type.empty()) r.schema("policy object needs a 'type'");
  p.kind = kind_of(type);
  p.name = type;
  std::string mod;
  std::string power;
  r.get("modulation", mod);
  r.get("power", power);
  if (!mod.empty() || !power.empty()) {
    if (p.kind != netsim::PolicyKind::Fixed) r.schema("modulation/power apply to the fixed policy only");
    if (!mod.empty()) {
      try {
        p.action.modulation = parse_modulation(mod);
      } catch (const std::invalid_argument& e) {
        r.schema_at("modulation", e.what());
      }
    }
    if (!power.empty()) p.action.power = parse_power_at(power, where + ".power");
  }
  if (r.has("interval_min")) {
    int q = 0;
    r.get("interval_min", q);
    p.interval_min = q;
  }
  r.get("name", p.name);
  r.finish();
  if (p.kind == netsim::PolicyKind::Fixed && p.name == "fixed") {
    p.name = "fixed_" + std::string(to_string(p.action.modulation)) + "_" + std::string(to_string(p.action.power)) +
             (p.interval_min ? "_q" + std::to_string(*p.interval_min) : "");
  }
  return p;
}

inline void parse_topology(Reader r, ScenarioConfig& cfg) {
  r.get("layout_seed", cfg.layout_seed);
  r.get("area_radius_m", cfg.layout.area_radius_m);
  r.get("min_depth_m", cfg.layout.min_depth_m);
  r.get("max_depth_m", cfg.layout.max_depth_m);
  r.get("sink_depth_m", cfg.layout.sink_depth_m);
  r.get("min_separation_m", cfg.layout.min_separation_m);
  r.get("max_link_m", cfg.layout.max_link_m);
  r.get("nodes", cfg.nodes);
  const bool explicit_positions = r.has("positions");
  std::vector<int> parent;
  const bool explicit_parent = r.has("parent");
  if (explicit_parent) r.get("parent", parent);
  if (explicit_positions) {
    const json& pos = r.raw("positions");
    if (!pos.is_array()) r.schema_at("positions", "expected an array of [x, y, z]");
    netsim::Topology t;
    t.max_link_m = cfg.layout.max_link_m;
    for (const auto& p : pos) {
      if (!p.is_array() || p.size() != 3 || !p[0].is_number() || !p[1].is_number() || !p[2].is_number()) {
        r.schema_at("positions", "every position must be [x, y, z] in metres");
      }
      t.positions.push_back(netsim::Vec3{p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
    }
    r.finish();
    if (cfg.nodes != 0) {
      throw ConfigError(ConfigErrorKind::Semantic, r.path() + ": give either nodes or positions, not both");
    }
    if (explicit_parent) {
      t.parent = parent;
    } else if (t.positions.size() >= 2 && !netsim::build_min_hop_tree(t)) {
      throw ConfigError(ConfigErrorKind::Semantic, r.path() + ": positions do not form a connected network within " +
                                                       std::to_string(t.max_link_m) + " m links");
    }
    cfg.sim.topology = std::move(t);
    return;
  }
  r.finish();
  if (explicit_parent) throw ConfigError(ConfigErrorKind::Semantic, r.path() + ": parent requires explicit positions");
  if (cfg.nodes == 0) r.schema("'nodes' or 'positions' is required");
  if (!supported_node_counts().contains(cfg.nodes)) {
    throw ConfigError(ConfigErrorKind::Semantic,
                      r.path() + ".nodes: " + std::to_string(cfg.nodes) + " is not one of 4, 6, 8, 10");
  }
  try {
    cfg.sim.topology = netsim::generate_topology(cfg.nodes, cfg.layout_seed, cfg.layout);
  } catch (const std::exception& e) {
    throw ConfigError(ConfigErrorKind::Semantic, r.path() + ": " + e.what());
  }
}

}  // namespace detail

inline ScenarioConfig scenario_from_json(const json& doc) {
  using detail::Reader;
  ScenarioConfig cfg;
  Reader root(doc, "scenario");
  root.get("name", cfg.name);
  if (!root.has("topology")) root.schema("'topology' is required (node count or explicit positions)");
  detail::parse_topology(root.child("topology"), cfg);

  netsim::SimConfig& s = cfg.sim;
  if (root.has("channel")) {
    Reader c = root.child("channel");
    c.get("frequency_khz", s.channel.frequency_khz);
    c.get("bandwidth_hz", s.channel.bandwidth_hz);
    c.get("wind_kmh", s.channel.wind_kmh);
    c.get("shipping", s.channel.shipping);
    c.get("spreading", s.channel.spreading);
    c.get("sound_speed_mps", s.channel.sound_speed_mps);
    c.get("shadowing_sigma_db", s.channel.shadowing_sigma_db);
    c.get("shadowing_corr", s.channel.shadowing_corr);
    c.get("excess_loss_db", s.channel.excess_loss_db);
    if (c.has("ber_override")) {
      double b = 0.0;
      c.get("ber_override", b);
      s.channel.ber_override = b;
    }
    c.finish();
  }
  if (root.has("power")) {
    Reader p = root.child("power");
    std::vector<double> watts;
    p.get("watts", watts);
    if (p.has("watts")) {
      if (watts.size() != kPowerClassCount) p.schema_at("watts", "expected [low, medium, high]");
      std::copy(watts.begin(), watts.end(), s.power.watts.begin());
    }
    p.get("source_level_ref_db", s.power.source_level_ref_db);
    p.finish();
  }
  if (root.has("mac")) {
    Reader m = root.child("mac");
    m.get("slot_s", s.mac.slot_s);
    m.get("duty_window_s", s.mac.duty_window_s);
    m.get("control_window_s", s.mac.control_window_s);
    m.get("frame_bits", s.mac.frame_bits);
    m.get("packet_bits", s.mac.packet_bits);
    m.get("request_bits", s.mac.request_bits);
    m.get("feedback_bits", s.mac.feedback_bits);
    m.get("control_bitrate_bps", s.mac.control_bitrate_bps);
    std::string cp;
    m.get("control_power", cp);
    if (!cp.empty()) s.mac.control_power = detail::parse_power_at(cp, m.path() + ".control_power");
    m.finish();
  }
  if (root.has("controller")) {
    Reader c = root.child("controller");
    c.get("exploration_c", s.controller.exploration_c);
    c.get("theta", s.controller.theta);
    c.get("feedback_cost_norm", s.controller.feedback_cost_norm);
    c.get("interval_menu_min", s.controller.interval_menu);
    if (c.has("action_menu")) {
      std::vector<std::string> names;
      c.get("action_menu", names);
      s.controller.action_menu.clear();
      for (const auto& n : names) s.controller.action_menu.push_back(detail::parse_action_name(n, c.path() + ".action_menu"));
    }
    c.finish();
  }
  root.get("duration_s", s.duration_s);
  root.get("interference_range_m", s.interference_range_m);
  std::string ref;
  root.get("reference_power", ref);
  if (!ref.empty()) s.reference_power = detail::parse_power_at(ref, "scenario.reference_power");
  root.get("replications", cfg.replications);
  root.get("seed", cfg.seed);

  if (root.has("policy")) {
    const json& p = root.raw("policy");
    if (p.is_array()) {
      for (std::size_t i = 0; i < p.size(); ++i) {
        cfg.policies.push_back(detail::parse_policy(p[i], "scenario.policy[" + std::to_string(i) + "]"));
      }
    } else {
      cfg.policies.push_back(detail::parse_policy(p, "scenario.policy"));
    }
  }
  root.finish();
  if (cfg.policies.empty()) cfg.policies.push_back(netsim::PolicySpec{});

  if (cfg.replications < 1) throw ConfigError(ConfigErrorKind::Semantic, "scenario.replications must be >= 1");
  std::set<std::string> names;
  for (const auto& p : cfg.policies) {
    if (!names.insert(p.name).second) {
      throw ConfigError(ConfigErrorKind::Semantic, "scenario.policy: two policies are named '" + p.name + "'");
    }
  }
  try {
    for (const auto& p : cfg.policies) cfg.for_policy(p).validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(ConfigErrorKind::Semantic, e.what());
  }
  return cfg;
}

inline ScenarioConfig parse_scenario_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(ConfigErrorKind::Syntax, e.what());
  }
  return scenario_from_json(doc);
}

inline ScenarioConfig parse_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(ConfigErrorKind::MissingFile, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  ScenarioConfig cfg = parse_scenario_text(ss.str());
  if (cfg.name == "scenario") cfg.name = path.stem().string();
  return cfg;
}

// Canonical form of everything that determines the physics and controller,
// excluding the seed, the replication count and the policy under test.
inline json canonical_json(const ScenarioConfig& cfg) {
  const netsim::SimConfig& s = cfg.sim;
  json pos = json::array();
  for (const auto& p : s.topology.positions) pos.push_back({p.x, p.y, p.z});
  json actions = json::array();
  for (const Action& a : s.controller.action_menu) actions.push_back(a.index());
  return {
      {"topology", {{"positions", pos}, {"parent", s.topology.parent}, {"max_link_m", s.topology.max_link_m}}},
      {"channel",
       {{"frequency_khz", s.channel.frequency_khz},
        {"bandwidth_hz", s.channel.bandwidth_hz},
        {"wind_kmh", s.channel.wind_kmh},
        {"shipping", s.channel.shipping},
        {"spreading", s.channel.spreading},
        {"sound_speed_mps", s.channel.sound_speed_mps},
        {"shadowing_sigma_db", s.channel.shadowing_sigma_db},
        {"shadowing_corr", s.channel.shadowing_corr},
        {"excess_loss_db", s.channel.excess_loss_db},
        {"ber_override", s.channel.ber_override ? json(*s.channel.ber_override) : json(nullptr)}}},
      {"power", {{"watts", s.power.watts}, {"source_level_ref_db", s.power.source_level_ref_db}}},
      {"mac",
       {{"slot_s", s.mac.slot_s},
        {"duty_window_s", s.mac.duty_window_s},
        {"control_window_s", s.mac.control_window_s},
        {"frame_bits", s.mac.frame_bits},
        {"packet_bits", s.mac.packet_bits},
        {"request_bits", s.mac.request_bits},
        {"feedback_bits", s.mac.feedback_bits},
        {"control_bitrate_bps", s.mac.control_bitrate_bps},
        {"control_power", static_cast<int>(s.mac.control_power)}}},
      {"controller",
       {{"exploration_c", s.controller.exploration_c},
        {"theta", s.controller.theta},
        {"feedback_cost_norm", s.controller.feedback_cost_norm},
        {"interval_menu_min", s.controller.interval_menu},
        {"action_menu", actions}}},
      {"duration_s", s.duration_s},
      {"interference_range_m", s.interference_range_m},
      {"reference_power", static_cast<int>(s.reference_power)},
  };
}

// 64-bit FNV-1a of the canonical JSON dump, as 16 hex digits.
inline std::string config_hash(const ScenarioConfig& cfg) {
  const std::string text = canonical_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace uwmab::exp
