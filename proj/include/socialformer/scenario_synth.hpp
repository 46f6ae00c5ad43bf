#pragma once

// Synthetic desk-scale traffic scenes: lane topologies, kinematic agent
// rollouts, ground-truth futures, and the rule-based semantic relations
// between agents at every observed frame.

#include "socialformer/lane_topology.hpp"
#include "socialformer/scene_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace sf {

// ---------------------------------------------------------------------------
// Relation extraction

struct RelationParams {
  double map_match_radius = 3.0;
  double max_path_distance = 50.0;   // longitudinal reach along successors
  double lateral_offset_max = 5.0;   // strict upper bound on along-lane offset
  double forward_horizon = 50.0;     // look-ahead for intersecting paths
  double pedestrian_radius = 15.0;
  double prob_scale = 20.0;
};

struct FrameAgent {
  std::string id;
  AgentType type = AgentType::vehicle;
  Point2 position;
};

// Classification per unordered vehicle pair, first rule that fires wins:
//   longitudinal  one agent reaches the other along successor edges within
//                 max_path_distance; one edge rear -> front.
//   lateral       matched nodes share a proximal edge and the offset along the
//                 first agent's lane heading is < lateral_offset_max; both ways.
//   intersecting  forward successor paths (<= forward_horizon) cross or
//                 touch; both ways, path_distance = arc_a + arc_b at the
//                 earliest crossing.
// Humans are not map-matched; a human within pedestrian_radius of a matched
// vehicle yields one pedestrian edge human -> vehicle with MISSING
// path_distance.
inline std::vector<InteractionEdge> extract_relations(const std::vector<FrameAgent>& agents, const LaneGraph& lanes,
                                                      const RelationParams& params = {},
                                                      std::vector<std::string>* warnings = nullptr) {
  const LaneIndex index(lanes);
  std::vector<std::optional<MatchedPose>> matched(agents.size());
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (agents[i].type != AgentType::vehicle) continue;
    matched[i] = index.match(agents[i].position, params.map_match_radius);
    if (!matched[i] && warnings) {
      warnings->push_back("vehicle '" + agents[i].id + "' is not within " + std::to_string(params.map_match_radius) +
                          " m of any lane pose; it gets no interaction edges");
    }
  }

  auto make_edge = [&](std::size_t s, std::size_t d, Relation rel, std::optional<double> path) {
    const double dist = std::hypot(agents[s].position.x - agents[d].position.x,
                                   agents[s].position.y - agents[d].position.y);
    return InteractionEdge{agents[s].id, agents[d].id, rel, dist, path, std::exp(-dist / params.prob_scale)};
  };

  std::vector<std::optional<std::vector<ForwardPath>>> forward_cache(agents.size());
  auto forward = [&](std::size_t i) -> const std::vector<ForwardPath>& {
    if (!forward_cache[i]) forward_cache[i] = index.forward_paths(*matched[i], params.forward_horizon);
    return *forward_cache[i];
  };

  std::vector<InteractionEdge> edges;
  for (std::size_t a = 0; a < agents.size(); ++a) {
    for (std::size_t b = a + 1; b < agents.size(); ++b) {
      const bool va = agents[a].type == AgentType::vehicle;
      const bool vb = agents[b].type == AgentType::vehicle;
      if (va != vb) {
        const std::size_t human = va ? b : a;
        const std::size_t vehicle = va ? a : b;
        if (!matched[vehicle]) continue;
        auto e = make_edge(human, vehicle, Relation::pedestrian, std::nullopt);
        if (e.distance <= params.pedestrian_radius) edges.push_back(std::move(e));
        continue;
      }
      if (!va || !matched[a] || !matched[b]) continue;
      const auto& ma = *matched[a];
      const auto& mb = *matched[b];

      const auto ab = index.forward_distance(ma, mb);
      const auto ba = index.forward_distance(mb, ma);
      const bool ab_ok = ab && *ab <= params.max_path_distance;
      const bool ba_ok = ba && *ba <= params.max_path_distance;
      if (ab_ok || ba_ok) {
        // rear agent -> front agent; a coincident pair keeps storage order
        if (ab_ok && (!ba_ok || *ab <= *ba)) {
          edges.push_back(make_edge(a, b, Relation::longitudinal, *ab));
        } else {
          edges.push_back(make_edge(b, a, Relation::longitudinal, *ba));
        }
        continue;
      }

      if (index.proximal(ma.node, mb.node)) {
        const auto& pose = index.pose(ma);
        const double dx = agents[b].position.x - agents[a].position.x;
        const double dy = agents[b].position.y - agents[a].position.y;
        const double offset = std::abs(dx * std::cos(pose.theta) + dy * std::sin(pose.theta));
        if (offset < params.lateral_offset_max) {
          edges.push_back(make_edge(a, b, Relation::lateral, offset));
          edges.push_back(make_edge(b, a, Relation::lateral, offset));
          continue;
        }
      }

      std::optional<double> crossing;
      for (const auto& pa : forward(a)) {
        for (const auto& pb : forward(b)) {
          const auto c = geometry::first_crossing(pa, pb, params.forward_horizon);
          if (c && (!crossing || *c < *crossing)) crossing = c;
        }
      }
      if (crossing) {
        edges.push_back(make_edge(a, b, Relation::intersecting, *crossing));
        edges.push_back(make_edge(b, a, Relation::intersecting, *crossing));
      }
    }
  }
  std::sort(edges.begin(), edges.end(), [](const auto& x, const auto& y) {
    return std::tie(x.src_id, x.dst_id) < std::tie(y.src_id, y.dst_id);
  });
  return edges;
}

// ---------------------------------------------------------------------------
// Scene generation

enum class Topology { straight, curve, lane_change, intersection, roundabout };

inline std::string_view to_string(Topology t) {
  switch (t) {
    case Topology::straight: return "straight";
    case Topology::curve: return "curve";
    case Topology::lane_change: return "lane_change";
    case Topology::intersection: return "intersection";
    case Topology::roundabout: return "roundabout";
  }
  return "?";
}

inline std::optional<Topology> topology_from(std::string_view s) {
  for (auto t : {Topology::straight, Topology::curve, Topology::lane_change, Topology::intersection,
                 Topology::roundabout}) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

struct SynthConfig {
  Topology topology = Topology::straight;
  int n_agents = 1;          // vehicles, including the target
  int n_pedestrians = 0;
  std::uint64_t seed = 0;
  double noise_std = 0.0;    // metres, applied to observed positions only
  double target_speed = 10.0;
  double crop_radius = 100.0;  // lane nodes farther than this from the target are dropped
  RelationParams relations;
};

namespace synth_detail {

struct Polyline {
  std::vector<Point2> pts;
  std::vector<double> arc;

  void push(Point2 p) {
    if (!pts.empty()) {
      const auto& q = pts.back();
      const double d = std::hypot(p.x - q.x, p.y - q.y);
      if (d < 1e-9) return;
      arc.push_back(arc.back() + d);
    } else {
      arc.push_back(0.0);
    }
    pts.push_back(p);
  }

  double length() const { return arc.empty() ? 0.0 : arc.back(); }

  // Position at arc length s, linearly extrapolated past either end.
  Point2 at(double s) const {
    if (pts.size() == 1) return pts.front();
    std::size_t i = static_cast<std::size_t>(std::upper_bound(arc.begin(), arc.end(), s) - arc.begin());
    i = std::clamp<std::size_t>(i, 1, pts.size() - 1);
    const double t = (s - arc[i - 1]) / (arc[i] - arc[i - 1]);
    return Point2{pts[i - 1].x + t * (pts[i].x - pts[i - 1].x), pts[i - 1].y + t * (pts[i].y - pts[i - 1].y)};
  }
};

struct LaneSpec {
  std::string name;
  Polyline centerline;
  std::function<bool(Point2)> crosswalk = [](Point2) { return false; };
  std::function<bool(Point2)> stopline = [](Point2) { return false; };
};

struct Layout {
  std::vector<LaneSpec> lanes;
  std::vector<std::pair<std::string, std::string>> links;     // lane -> lane successor
  std::vector<std::pair<std::string, std::string>> parallel;  // proximal lane pairs (node-aligned)
  std::vector<std::vector<std::string>> routes;               // lane sequences agents drive
  std::size_t target_route = 0;
  double target_s0 = 0.0;
  std::vector<Point2> crosswalk_centres;
};

inline Polyline straight(Point2 from, Point2 to) {
  const double len = std::hypot(to.x - from.x, to.y - from.y);
  const int n = std::max(1, static_cast<int>(std::ceil(len / 1.95)));
  Polyline p;
  for (int i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) / n;
    p.push(Point2{from.x + t * (to.x - from.x), from.y + t * (to.y - from.y)});
  }
  return p;
}

// Counter-clockwise (sweep > 0) or clockwise arc.
inline Polyline arc(Point2 centre, double radius, double start, double sweep) {
  const double len = std::abs(sweep) * radius;
  const int n = std::max(1, static_cast<int>(std::ceil(len / 1.95)));
  Polyline p;
  for (int i = 0; i <= n; ++i) {
    const double a = start + sweep * static_cast<double>(i) / n;
    p.push(Point2{centre.x + radius * std::cos(a), centre.y + radius * std::sin(a)});
  }
  return p;
}

inline constexpr double kLaneWidth = 3.5;

inline Layout make_layout(Topology topology) {
  Layout l;
  auto in_box = [](double x0, double x1, double y0, double y1) {
    return [=](Point2 p) { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; };
  };
  switch (topology) {
    case Topology::straight:
    case Topology::lane_change: {
      l.lanes.push_back({"L0", straight({-80, 0}, {160, 0}), in_box(40, 46, -1, 1)});
      l.lanes.push_back({"L1", straight({-80, kLaneWidth}, {160, kLaneWidth}), in_box(40, 46, 2, 5)});
      l.parallel.push_back({"L0", "L1"});
      l.routes = {{"L0"}, {"L1"}};
      l.target_s0 = 80.0;
      l.crosswalk_centres = {{43, -6}, {43, 9.5}};
      break;
    }
    case Topology::curve: {
      const double r = 80.0;
      l.lanes.push_back({"C0", arc({0, r}, r, -std::numbers::pi / 2, 3.0)});
      l.lanes.push_back({"C1", arc({0, r}, r - kLaneWidth, -std::numbers::pi / 2, 3.0)});
      l.parallel.push_back({"C0", "C1"});
      l.routes = {{"C0"}, {"C1"}};
      l.target_s0 = 80.0;
      l.crosswalk_centres = {{0, -6}};
      break;
    }
    case Topology::intersection: {
      l.lanes.push_back({"A0", straight({-80, 0}, {160, 0}), [](Point2) { return false; }, in_box(24, 27, -1, 1)});
      l.lanes.push_back(
          {"A1", straight({-80, kLaneWidth}, {160, kLaneWidth}), [](Point2) { return false; }, in_box(24, 27, 2, 5)});
      l.lanes.push_back({"B0", straight({32, -120}, {32, 120}), in_box(30, 34, -10, -6), in_box(30, 34, -6, -4)});
      l.parallel.push_back({"A0", "A1"});
      l.routes = {{"A0"}, {"A1"}, {"B0"}};
      l.target_s0 = 80.0;
      l.crosswalk_centres = {{38, -8}, {26, -8}};
      break;
    }
    case Topology::roundabout: {
      const Point2 c{20, 20};
      const double r = 20.0;
      const double q = std::numbers::pi / 2;
      l.lanes.push_back({"E0", straight({-80, 0}, {20, 0}), [](Point2) { return false; }, in_box(16, 20, -1, 1)});
      l.lanes.push_back({"E1", straight({40, -80}, {40, 20}), [](Point2) { return false; }, in_box(39, 41, 16, 20)});
      l.lanes.push_back({"Q0", arc(c, r, -q, q)});
      l.lanes.push_back({"Q1", arc(c, r, 0.0, q)});
      l.lanes.push_back({"Q2", arc(c, r, q, q)});
      l.lanes.push_back({"Q3", arc(c, r, 2 * q, q)});
      l.lanes.push_back({"X0", straight({20, 40}, {-80, 40})});
      l.links = {{"E0", "Q0"}, {"Q0", "Q1"}, {"E1", "Q1"}, {"Q1", "Q2"}, {"Q2", "Q3"}, {"Q1", "X0"}};
      l.routes = {{"E0", "Q0", "Q1", "X0"}, {"E1", "Q1", "Q2", "Q3"}, {"E0", "Q0", "Q1", "Q2", "Q3"}};
      l.target_s0 = 90.0;
      l.crosswalk_centres = {{-5, -6}, {46, -20}};
      break;
    }
  }
  return l;
}

inline Polyline route_polyline(const Layout& l, const std::vector<std::string>& route) {
  Polyline p;
  for (const auto& name : route) {
    for (const auto& lane : l.lanes) {
      if (lane.name != name) continue;
      for (const auto& pt : lane.centerline.pts) p.push(pt);
    }
  }
  return p;
}

// Motion as a function of time t (seconds, t = 0 is the current frame).
using Motion = std::function<Point2(double)>;

inline double smoothstep5(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

struct Kinematics {
  Point2 p;
  double heading = 0.0;
  double speed = 0.0;
  double acc = 0.0;
  double yaw_rate = 0.0;
};

// Numerical kinematics of a motion model by central differences.
inline Kinematics kinematics(const Motion& m, double t) {
  constexpr double h = 1e-3;
  auto vel = [&](double tt) {
    const auto a = m(tt - h);
    const auto b = m(tt + h);
    return Point2{(b.x - a.x) / (2 * h), (b.y - a.y) / (2 * h)};
  };
  const auto v0 = vel(t - h);
  const auto v1 = vel(t);
  const auto v2 = vel(t + h);
  Kinematics k;
  k.p = m(t);
  k.speed = std::hypot(v1.x, v1.y);
  k.heading = std::atan2(v1.y, v1.x);
  k.acc = (std::hypot(v2.x, v2.y) - std::hypot(v0.x, v0.y)) / (2 * h);
  double dth = std::atan2(v2.y, v2.x) - std::atan2(v0.y, v0.x);
  dth = wrap_angle(dth);
  k.yaw_rate = dth / (2 * h);
  if (std::abs(k.acc) < 1e-6) k.acc = 0.0;
  if (std::abs(k.yaw_rate) < 1e-6) k.yaw_rate = 0.0;
  return k;
}

struct AgentPlan {
  std::string id;
  AgentType type = AgentType::vehicle;
  Motion motion;
  int first_frame = 0;  // index into the 5 observed frames of the first present frame
};

// Rigid transform into the target-centred, heading-aligned frame.
struct LocalFrame {
  Point2 origin;
  double heading = 0.0;

  Point2 apply(Point2 p) const {
    const double c = std::cos(heading), s = std::sin(heading);
    const double dx = p.x - origin.x, dy = p.y - origin.y;
    return Point2{c * dx + s * dy, -s * dx + c * dy};
  }
};

inline LaneGraph build_lane_graph(const Layout& layout, const LocalFrame& frame, double crop_radius) {
  LaneGraph g;
  std::map<std::string, std::vector<std::string>> chunks;  // lane -> node ids in order
  std::map<std::string, bool> kept;
  for (const auto& lane : layout.lanes) {
    const auto& pts = lane.centerline.pts;
    const std::size_t n_chunks = (pts.size() + kMaxLanePoses - 1) / kMaxLanePoses;
    for (std::size_t c = 0; c < n_chunks; ++c) {
      LaneNode node;
      node.id = lane.name + "." + (c < 10 ? "0" : "") + std::to_string(c);
      bool near = false;
      for (std::size_t k = c * kMaxLanePoses; k < std::min(pts.size(), (c + 1) * kMaxLanePoses); ++k) {
        const std::size_t a = k > 0 ? k - 1 : k;
        const std::size_t b = k + 1 < pts.size() ? k + 1 : k;
        const double world_heading = std::atan2(pts[b].y - pts[a].y, pts[b].x - pts[a].x);
        const auto local = frame.apply(pts[k]);
        node.poses.push_back(LanePose{local.x, local.y, wrap_angle(world_heading - frame.heading),
                                      lane.stopline(pts[k]), lane.crosswalk(pts[k])});
        if (std::hypot(local.x, local.y) <= crop_radius) near = true;
      }
      chunks[lane.name].push_back(node.id);
      kept[node.id] = near;
      if (near) g.nodes.push_back(std::move(node));
    }
  }
  auto add = [&](const std::string& s, const std::string& d, LaneEdgeType t) {
    if (kept[s] && kept[d]) g.edges.push_back(LaneEdge{s, d, t});
  };
  for (const auto& [lane, ids] : chunks) {
    for (std::size_t c = 0; c + 1 < ids.size(); ++c) add(ids[c], ids[c + 1], LaneEdgeType::successor);
  }
  for (const auto& [from, to] : layout.links) add(chunks[from].back(), chunks[to].front(), LaneEdgeType::successor);
  for (const auto& [a, b] : layout.parallel) {
    const auto& ca = chunks[a];
    const auto& cb = chunks[b];
    for (std::size_t c = 0; c < std::min(ca.size(), cb.size()); ++c) {
      add(ca[c], cb[c], LaneEdgeType::proximal);
      add(cb[c], ca[c], LaneEdgeType::proximal);
    }
  }
  std::sort(g.nodes.begin(), g.nodes.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  std::sort(g.edges.begin(), g.edges.end(), [](const auto& a, const auto& b) {
    return std::tie(a.src_id, a.dst_id, a.edge_type) < std::tie(b.src_id, b.dst_id, b.edge_type);
  });
  return g;
}

}  // namespace synth_detail

inline Scene generate_scene(const SynthConfig& cfg, const std::string& scene_id = {}) {
  using namespace synth_detail;
  if (cfg.n_agents < 1) throw GenerationError("n_agents must be >= 1 (the target vehicle)");
  if (cfg.n_pedestrians < 0) throw GenerationError("n_pedestrians must be >= 0");
  if (!(cfg.noise_std >= 0.0)) throw GenerationError("noise_std must be >= 0");
  if (!(cfg.target_speed >= 0.0) || cfg.target_speed > 30.0) throw GenerationError("target_speed must lie in [0, 30] m/s");
  constexpr int kMaxVehicles = 12;
  constexpr int kMaxPedestrians = 12;
  if (cfg.n_agents > kMaxVehicles) {
    throw GenerationError("topology " + std::string(to_string(cfg.topology)) + " has room for at most " +
                          std::to_string(kMaxVehicles) + " vehicles");
  }
  if (cfg.n_pedestrians > kMaxPedestrians) {
    throw GenerationError("at most " + std::to_string(kMaxPedestrians) + " pedestrians are supported");
  }

  std::mt19937_64 rng(cfg.seed);
  auto uniform = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  const Layout layout = make_layout(cfg.topology);

  std::vector<Polyline> routes;
  for (const auto& r : layout.routes) routes.push_back(route_polyline(layout, r));

  std::vector<AgentPlan> plans;
  {
    const Polyline& tr = routes[layout.target_route];
    const double s0 = layout.target_s0;
    const double v = cfg.target_speed;
    Motion m = [&tr, s0, v](double t) { return tr.at(s0 + v * t); };
    if (cfg.topology == Topology::lane_change) {
      const Polyline& other = routes[1];
      const double start = uniform(-1.5, 1.0);
      const double duration = uniform(3.0, 4.5);
      m = [&tr, &other, s0, v, start, duration](double t) {
        const double w = smoothstep5((t - start) / duration);
        const auto a = tr.at(s0 + v * t);
        const auto b = other.at(s0 + v * t);
        return Point2{(1 - w) * a.x + w * b.x, (1 - w) * a.y + w * b.y};
      };
    }
    plans.push_back({"veh00", AgentType::vehicle, m, 0});
  }

  // Other vehicles: constant speed along a route, placed near the target
  // without overlapping anyone at t = 0.
  for (int i = 1; i < cfg.n_agents; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
      std::size_t route = static_cast<std::size_t>(uniform(0.0, static_cast<double>(routes.size())));
      route = std::min(route, routes.size() - 1);
      // the first extra vehicle at an intersection always approaches on the crossing road
      if (cfg.topology == Topology::intersection && i == 1) route = 2;
      const Polyline& rp = routes[route];
      double s0 = layout.target_s0 + uniform(-30.0, 40.0);
      if (cfg.topology == Topology::intersection && route == 2) s0 = 120.0 - uniform(12.0, 30.0);
      const double v = uniform(6.0, 14.0);
      if (s0 - 2.0 * v < 0.0 || s0 + 6.0 * v > rp.length()) continue;
      const Point2 p0 = rp.at(s0);
      bool clear = true;
      for (const auto& other : plans) {
        const auto q = other.motion(0.0);
        if (std::hypot(p0.x - q.x, p0.y - q.y) < 8.0) clear = false;
      }
      if (!clear) continue;
      const int first = uniform(0.0, 1.0) < 0.2 ? 1 + static_cast<int>(uniform(0.0, 2.0)) : 0;
      plans.push_back({"veh" + std::string(i < 10 ? "0" : "") + std::to_string(i), AgentType::vehicle,
                       [&rp, s0, v](double t) { return rp.at(s0 + v * t); }, std::min(first, 2)});
      placed = true;
    }
    if (!placed) {
      throw GenerationError("could not place vehicle " + std::to_string(i) + " in topology " +
                            std::string(to_string(cfg.topology)));
    }
  }

  for (int i = 0; i < cfg.n_pedestrians; ++i) {
    const auto& centre = layout.crosswalk_centres[static_cast<std::size_t>(i) % layout.crosswalk_centres.size()];
    const Point2 start{centre.x + uniform(-3.0, 3.0), centre.y + uniform(-2.0, 2.0)};
    const double speed = uniform(0.0, 1.5);
    const double dir = uniform(-std::numbers::pi, std::numbers::pi);
    const Point2 vel{speed * std::cos(dir), speed * std::sin(dir)};
    plans.push_back({"ped" + std::string(i < 10 ? "0" : "") + std::to_string(i), AgentType::human,
                     [start, vel](double t) { return Point2{start.x + vel.x * t, start.y + vel.y * t}; }, 0});
  }

  const auto target_now = kinematics(plans.front().motion, 0.0);
  const LocalFrame frame{target_now.p, target_now.heading};

  Scene scene;
  scene.scene_id = scene_id.empty() ? std::string(to_string(cfg.topology)) + "-" + std::to_string(cfg.seed) : scene_id;
  scene.target_id = plans.front().id;
  scene.lane_graph = build_lane_graph(layout, frame, cfg.crop_radius);

  std::normal_distribution<double> noise(0.0, 1.0);
  for (const auto& plan : plans) {
    AgentTrack track;
    track.id = plan.id;
    track.agent_type = plan.type;
    for (int f = 0; f < kObservedFrames; ++f) {
      const double t = (f - (kObservedFrames - 1)) * kFrameInterval;
      AgentState s;
      if (f >= plan.first_frame) {
        const auto k = kinematics(plan.motion, t);
        auto local = frame.apply(k.p);
        if (cfg.noise_std > 0.0) {
          local.x += cfg.noise_std * noise(rng);
          local.y += cfg.noise_std * noise(rng);
        }
        s = AgentState{local.x, local.y, k.speed, k.acc, k.yaw_rate, true};
      }
      track.states.push_back(s);
    }
    scene.tracks.push_back(std::move(track));
  }

  for (int k = 1; k <= kFutureSteps; ++k) {
    scene.future.push_back(frame.apply(plans.front().motion(k * kFrameInterval)));
  }

  for (int f = 0; f < kObservedFrames; ++f) {
    InteractionGraph g;
    g.frame_index = f - (kObservedFrames - 1);
    std::vector<FrameAgent> present;
    for (const auto& t : scene.tracks) {
      const auto& s = t.states[static_cast<std::size_t>(f)];
      if (!s.present) continue;
      g.agent_ids.push_back(t.id);
      present.push_back(FrameAgent{t.id, t.agent_type, Point2{s.x, s.y}});
    }
    g.edges = extract_relations(present, scene.lane_graph, cfg.relations);
    scene.interaction_graphs.push_back(std::move(g));
  }

  scene = canonicalize(std::move(scene));
  require_valid(scene);
  return scene;
}

// `count` scenes with seeds seed, seed+1, ...; without a fixed topology the
// five topologies are cycled in declaration order.
inline std::vector<Scene> generate_scenes(const SynthConfig& base, int count, std::optional<Topology> topology) {
  if (count < 1) throw GenerationError("count must be >= 1");
  constexpr Topology all[] = {Topology::straight, Topology::curve, Topology::lane_change, Topology::intersection,
                              Topology::roundabout};
  std::vector<Scene> out;
  for (int i = 0; i < count; ++i) {
    SynthConfig cfg = base;
    cfg.seed = base.seed + static_cast<std::uint64_t>(i);
    cfg.topology = topology ? *topology : all[i % 5];
    out.push_back(generate_scene(cfg));
  }
  return out;
}

}  // namespace sf
