#pragma once

// World: the registered node population of one simulation run. Single-writer
// during setup, effectively immutable while a run executes. Every node owns
// exactly one secure platform, provisioned at registration from the world
// seed.

#include <algorithm>
#include <map>
#include <memory>
#include <vector>

#include "hcsim/result.hpp"
#include "hcsim/secure_platform.hpp"
#include "hcsim/types.hpp"

namespace hcsim {

// Scripted waypoint trajectory. Position is linearly interpolated between
// waypoints and clamped to the first/last waypoint outside the scripted
// window. A single waypoint is a fixed position.
class Trajectory {
 public:
  Trajectory() = default;
  explicit Trajectory(GeoPosition fixed) { waypoints_.push_back({SimTime{0}, fixed}); }
  Trajectory(std::initializer_list<std::pair<SimTime, GeoPosition>> pts)
      : waypoints_(pts.begin(), pts.end()) {
    sort_waypoints();
  }

  static Trajectory fixed(GeoPosition p) { return Trajectory(p); }

  void add_waypoint(SimTime at, GeoPosition p) {
    waypoints_.push_back({at, p});
    sort_waypoints();
  }

  bool empty() const { return waypoints_.empty(); }
  const std::vector<std::pair<SimTime, GeoPosition>>& waypoints() const { return waypoints_; }

  GeoPosition position_at(SimTime t) const {
    if (waypoints_.empty()) return GeoPosition{};
    if (t <= waypoints_.front().first) return waypoints_.front().second;
    if (t >= waypoints_.back().first) return waypoints_.back().second;
    for (std::size_t i = 1; i < waypoints_.size(); ++i) {
      if (t <= waypoints_[i].first) {
        const auto& [t0, p0] = waypoints_[i - 1];
        const auto& [t1, p1] = waypoints_[i];
        if (t1.ms == t0.ms) return p1;
        const double f = static_cast<double>(t.ms - t0.ms) / static_cast<double>(t1.ms - t0.ms);
        return GeoPosition{p0.x + f * (p1.x - p0.x), p0.y + f * (p1.y - p0.y)};
      }
    }
    return waypoints_.back().second;
  }

 private:
  void sort_waypoints() {
    std::stable_sort(waypoints_.begin(), waypoints_.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
  }

  std::vector<std::pair<SimTime, GeoPosition>> waypoints_;
};

struct Node {
  NodeId id;
  NodeKind kind{NodeKind::Vehicle};
  Plane plane{Plane::Remote};
  Trajectory trajectory;

  GeoPosition position_at(SimTime t) const { return trajectory.position_at(t); }
};

class World {
 public:
  explicit World(std::uint64_t seed) : seed_(seed_from_u64(seed)) {}
  explicit World(Seed32 seed) : seed_(seed) {}

  World(const World&) = delete;
  World& operator=(const World&) = delete;
  World(World&&) = default;
  World& operator=(World&&) = default;

  Result<NodeId> register_node(NodeKind kind, Plane plane, Trajectory trajectory) {
    return register_node_with_id(NodeId{next_id_}, kind, plane, std::move(trajectory));
  }

  Result<NodeId> register_node(NodeKind kind, Plane plane, GeoPosition position) {
    return register_node(kind, plane, Trajectory::fixed(position));
  }

  // Registration with an explicit id (scenario loaders that pre-assign ids).
  Result<NodeId> register_node_with_id(NodeId id, NodeKind kind, Plane plane,
                                       Trajectory trajectory) {
    if (sealed_) return make_error(Errc::world_sealed, "world is sealed; no setup changes");
    if (plane != legal_plane(kind)) {
      return make_error(Errc::kind_plane_mismatch,
                        std::string(node_kind_name(kind)) + " cannot live on the " +
                            std::string(plane_name(plane)) + " plane");
    }
    if (nodes_.contains(id)) return make_error(Errc::duplicate_id, "node id already registered");
    Node node{id, kind, plane, std::move(trajectory)};
    nodes_.emplace(id, std::move(node));
    platforms_.emplace(id, std::make_unique<SecurePlatform>(
                               derive_seed(seed_, "platform", id.value), id.value));
    next_id_ = std::max(next_id_, id.value + 1);
    return id;
  }

  void seal() { sealed_ = true; }
  bool sealed() const { return sealed_; }

  bool contains(NodeId id) const { return nodes_.contains(id); }
  std::size_t node_count() const { return nodes_.size(); }

  const Node* find(NodeId id) const {
    const auto it = nodes_.find(id);
    return it == nodes_.end() ? nullptr : &it->second;
  }

  const std::map<NodeId, Node>& nodes() const { return nodes_; }

  SecurePlatform& platform(NodeId id) {
    const auto it = platforms_.find(id);
    if (it == platforms_.end()) throw std::out_of_range("no platform for node");
    return *it->second;
  }

  Result<GeoPosition> position_of(NodeId id, SimTime at) const {
    const Node* n = find(id);
    if (!n) return make_error(Errc::unknown_node, "node " + to_string(id) + " not registered");
    return n->position_at(at);
  }

  const Seed32& seed() const { return seed_; }

 private:
  Seed32 seed_{};
  bool sealed_{false};
  std::uint32_t next_id_{1};
  std::map<NodeId, Node> nodes_;
  std::map<NodeId, std::unique_ptr<SecurePlatform>> platforms_;
};

}  // namespace hcsim
