#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace uwmab::netsim {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

inline double distance(const Vec3& a, const Vec3& b) {
  return std::hypot(a.x - b.x, a.y - b.y, a.z - b.z);
}

// Node 0 is the sink. parent[0] == -1; every other node forwards to parent[i].
struct Topology {
  std::vector<Vec3> positions;
  std::vector<int> parent;
  double max_link_m = 357.0;

  std::size_t node_count() const { return positions.size(); }
  static constexpr int sink() { return 0; }

  double link_length(int child) const {
    return distance(positions[static_cast<std::size_t>(child)],
                    positions[static_cast<std::size_t>(parent[static_cast<std::size_t>(child)])]);
  }

  std::vector<int> children(int node) const {
    std::vector<int> out;
    for (std::size_t i = 1; i < parent.size(); ++i) {
      if (parent[i] == node) out.push_back(static_cast<int>(i));
    }
    return out;
  }

  bool is_leaf(int node) const { return node != sink() && children(node).empty(); }

  void validate() const {
    const std::size_t n = positions.size();
    if (n < 2) throw std::invalid_argument("topology: need the sink and at least one node");
    if (parent.size() != n) throw std::invalid_argument("topology: parent table size mismatch");
    if (parent[0] != -1) throw std::invalid_argument("topology: node 0 is the sink and has no parent");
    for (std::size_t i = 1; i < n; ++i) {
      const int p = parent[i];
      if (p < 0 || static_cast<std::size_t>(p) >= n || p == static_cast<int>(i)) {
        throw std::invalid_argument("topology: node " + std::to_string(i) + " has invalid parent");
      }
      const double len = link_length(static_cast<int>(i));
      if (!(len > 0.0)) {
        throw std::invalid_argument("topology: node " + std::to_string(i) + " is co-located with its parent");
      }
      if (len > max_link_m) {
        throw std::invalid_argument("topology: link " + std::to_string(i) + "->" + std::to_string(p) +
                                    " is " + std::to_string(len) + " m, above the " +
                                    std::to_string(max_link_m) + " m limit");
      }
      // Walk toward the sink; more than n hops means a cycle.
      int cur = static_cast<int>(i);
      std::size_t hops = 0;
      while (cur != 0) {
        cur = parent[static_cast<std::size_t>(cur)];
        if (++hops > n) {
          throw std::invalid_argument("topology: routing loop through node " + std::to_string(i));
        }
      }
    }
  }
};

struct LayoutParams {
  double area_radius_m = 450.0;
  double min_depth_m = 20.0;
  double max_depth_m = 60.0;
  double sink_depth_m = 10.0;
  double min_separation_m = 30.0;
  double max_link_m = 357.0;
};

// Min-hop routing tree toward the sink over edges no longer than max_link_m;
// among equal-hop candidates the closest parent wins. Returns false if some
// node cannot reach the sink.
inline bool build_min_hop_tree(Topology& t) {
  const std::size_t n = t.positions.size();
  std::vector<int> hops(n, std::numeric_limits<int>::max());
  t.parent.assign(n, -1);
  hops[0] = 0;
  std::queue<std::size_t> frontier;
  frontier.push(0);
  while (!frontier.empty()) {
    const std::size_t u = frontier.front();
    frontier.pop();
    for (std::size_t v = 1; v < n; ++v) {
      if (v == u) continue;
      const double d = distance(t.positions[u], t.positions[v]);
      if (d > t.max_link_m) continue;
      if (hops[v] == std::numeric_limits<int>::max()) {
        hops[v] = hops[u] + 1;
        t.parent[v] = static_cast<int>(u);
        frontier.push(v);
      } else if (hops[v] == hops[u] + 1 &&
                 d < distance(t.positions[static_cast<std::size_t>(t.parent[v])], t.positions[v])) {
        t.parent[v] = static_cast<int>(u);
      }
    }
  }
  for (std::size_t v = 1; v < n; ++v) {
    if (t.parent[v] < 0) return false;
  }
  return true;
}

// Random shallow-water layout of `nodes` sensors (plus the sink at the
// origin), resampled until it is connected.
inline Topology generate_topology(int nodes, std::uint64_t layout_seed, const LayoutParams& lp = {}) {
  if (nodes < 1) throw std::invalid_argument("generate_topology: need at least one node");
  std::mt19937_64 rng(layout_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    Topology t;
    t.max_link_m = lp.max_link_m;
    t.positions.push_back(Vec3{0.0, 0.0, lp.sink_depth_m});
    bool ok = true;
    for (int i = 0; i < nodes && ok; ++i) {
      bool placed = false;
      for (int tries = 0; tries < 1000 && !placed; ++tries) {
        const double r = lp.area_radius_m * std::sqrt(unit(rng));
        const double phi = 2.0 * std::numbers::pi * unit(rng);
        const Vec3 p{r * std::cos(phi), r * std::sin(phi),
                     lp.min_depth_m + (lp.max_depth_m - lp.min_depth_m) * unit(rng)};
        bool clear = true;
        for (const Vec3& q : t.positions) {
          if (distance(p, q) < lp.min_separation_m) {
            clear = false;
            break;
          }
        }
        if (clear) {
          t.positions.push_back(p);
          placed = true;
        }
      }
      ok = placed;
    }
    if (ok && build_min_hop_tree(t)) return t;
  }
  throw std::runtime_error("generate_topology: could not find a connected layout");
}

}  // namespace uwmab::netsim
