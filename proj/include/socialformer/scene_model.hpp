#pragma once

// Traffic-scene domain types, invariant checking and the line-delimited
// "sf-scene/1" record format.
//
// Coordinates are scene-local: metres in a frame centred on the target
// agent's current (t = 0) pose with +x along its heading.

#include "socialformer/core/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace sf {

inline constexpr int kObservedFrames = 5;     // t = -4 ... 0
inline constexpr int kFutureSteps = 12;       // 6 s at 2 Hz
inline constexpr int kMaxLanePoses = 10;      // pose capacity of one lane node
inline constexpr double kFrameInterval = 0.5; // seconds
inline constexpr int kLanePoseFeatures = 5;
inline constexpr int kAgentStateFeatures = 5;
inline constexpr std::string_view kSceneSchema = "sf-scene/1";

// Maps an angle to [-pi, pi).
inline double wrap_angle(double theta) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double r = std::fmod(theta + std::numbers::pi, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  r -= std::numbers::pi;
  // fmod rounding can land exactly on +pi
  return r >= std::numbers::pi ? -std::numbers::pi : r;
}

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point2&) const = default;
};

struct LanePose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  bool stopline_flag = false;
  bool crosswalk_flag = false;
  bool operator==(const LanePose&) const = default;
};

// `poses` holds only the valid prefix; the padded tail up to kMaxLanePoses is
// implicit and materialised by the lane encoder.
struct LaneNode {
  std::string id;
  std::vector<LanePose> poses;
  bool operator==(const LaneNode&) const = default;
};

enum class LaneEdgeType { successor, proximal };

struct LaneEdge {
  std::string src_id;
  std::string dst_id;
  LaneEdgeType edge_type = LaneEdgeType::successor;
  bool operator==(const LaneEdge&) const = default;
};

struct LaneGraph {
  std::vector<LaneNode> nodes;
  std::vector<LaneEdge> edges;
  bool operator==(const LaneGraph&) const = default;

  const LaneNode* find(std::string_view id) const {
    for (const auto& n : nodes) {
      if (n.id == id) return &n;
    }
    return nullptr;
  }
};

enum class AgentType { vehicle, human };

struct AgentState {
  double x = 0.0;
  double y = 0.0;
  double vel = 0.0;
  double acc = 0.0;
  double yaw_rate = 0.0;
  bool present = false;
  bool operator==(const AgentState&) const = default;
};

// states[0] is t = -4, states[4] is t = 0.
struct AgentTrack {
  std::string id;
  AgentType agent_type = AgentType::vehicle;
  std::vector<AgentState> states;
  bool operator==(const AgentTrack&) const = default;
};

enum class Relation { longitudinal, lateral, intersecting, pedestrian };
inline constexpr int kRelationCount = 4;
inline constexpr int kAgentTypeCount = 2;

struct InteractionEdge {
  std::string src_id;
  std::string dst_id;
  Relation relation = Relation::longitudinal;
  double distance = 0.0;
  std::optional<double> path_distance;  // nullopt == MISSING
  double edge_probability = 0.0;
  bool operator==(const InteractionEdge&) const = default;
};

struct InteractionGraph {
  int frame_index = 0;
  std::vector<std::string> agent_ids;
  std::vector<InteractionEdge> edges;
  bool operator==(const InteractionGraph&) const = default;
};

struct Scene {
  std::string scene_id;
  LaneGraph lane_graph;
  std::vector<AgentTrack> tracks;
  std::vector<InteractionGraph> interaction_graphs;
  std::string target_id;
  std::vector<Point2> future;
  bool operator==(const Scene&) const = default;

  const AgentTrack* find_track(std::string_view id) const {
    for (const auto& t : tracks) {
      if (t.id == id) return &t;
    }
    return nullptr;
  }

  const AgentTrack& target() const {
    const auto* t = find_track(target_id);
    if (!t) throw ValidationError("Scene.target_id: no track with id '" + target_id + "'");
    return *t;
  }
};

// ---------------------------------------------------------------------------
// Enum names

inline std::string_view to_string(LaneEdgeType t) {
  return t == LaneEdgeType::successor ? "successor" : "proximal";
}

inline std::string_view to_string(AgentType t) { return t == AgentType::vehicle ? "vehicle" : "human"; }

inline std::string_view to_string(Relation r) {
  switch (r) {
    case Relation::longitudinal: return "longitudinal";
    case Relation::lateral: return "lateral";
    case Relation::intersecting: return "intersecting";
    case Relation::pedestrian: return "pedestrian";
  }
  return "?";
}

inline std::optional<LaneEdgeType> lane_edge_type_from(std::string_view s) {
  if (s == "successor") return LaneEdgeType::successor;
  if (s == "proximal") return LaneEdgeType::proximal;
  return std::nullopt;
}

inline std::optional<AgentType> agent_type_from(std::string_view s) {
  if (s == "vehicle") return AgentType::vehicle;
  if (s == "human") return AgentType::human;
  return std::nullopt;
}

inline std::optional<Relation> relation_from(std::string_view s) {
  for (int i = 0; i < kRelationCount; ++i) {
    if (to_string(static_cast<Relation>(i)) == s) return static_cast<Relation>(i);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Validation

struct Violation {
  std::string type;
  std::string field;
  std::string rule;

  std::string message() const { return type + "." + field + ": " + rule; }
};

struct ValidationLimits {
  double lane_pose_spacing_max = 2.0;
};

namespace detail {

inline bool finite(double v) { return std::isfinite(v); }

inline bool is_zero_state(const AgentState& s) {
  return s.x == 0.0 && s.y == 0.0 && s.vel == 0.0 && s.acc == 0.0 && s.yaw_rate == 0.0;
}

inline void validate_lane_graph(const LaneGraph& g, const ValidationLimits& limits, std::vector<Violation>& out) {
  std::set<std::string> ids;
  for (const auto& node : g.nodes) {
    const std::string where = "LaneNode[" + node.id + "]";
    if (!ids.insert(node.id).second) out.push_back({"LaneNode", "id", where + " id is not unique"});
    if (node.poses.empty()) out.push_back({"LaneNode", "poses", where + " needs at least 1 valid pose"});
    if (node.poses.size() > static_cast<std::size_t>(kMaxLanePoses)) {
      out.push_back({"LaneNode", "poses", where + " exceeds capacity of " + std::to_string(kMaxLanePoses) + " poses"});
    }
    for (std::size_t i = 0; i < node.poses.size(); ++i) {
      const auto& p = node.poses[i];
      if (!finite(p.x) || !finite(p.y) || !finite(p.theta)) {
        out.push_back({"LanePose", "x/y/theta", where + " pose " + std::to_string(i) + " is not finite"});
        continue;
      }
      if (p.theta < -std::numbers::pi || p.theta >= std::numbers::pi) {
        out.push_back({"LanePose", "theta", where + " pose " + std::to_string(i) + " theta outside [-pi, pi)"});
      }
      if (i > 0) {
        const auto& q = node.poses[i - 1];
        if (std::hypot(p.x - q.x, p.y - q.y) > limits.lane_pose_spacing_max) {
          out.push_back({"LaneNode", "poses",
                         where + " consecutive poses " + std::to_string(i - 1) + "," + std::to_string(i) +
                             " farther apart than lane_pose_spacing_max"});
        }
      }
    }
  }

  std::map<std::string, std::vector<std::string>> successors;
  std::map<std::string, int> indegree;
  for (const auto& id : ids) indegree[id] = 0;
  std::set<std::tuple<std::string, std::string, LaneEdgeType>> seen_edges;
  for (const auto& e : g.edges) {
    const std::string where = "LaneEdge[" + e.src_id + "->" + e.dst_id + "]";
    if (!ids.count(e.src_id) || !ids.count(e.dst_id)) {
      out.push_back({"LaneGraph", "edges", where + " endpoint references a missing node"});
      continue;
    }
    if (e.src_id == e.dst_id) {
      out.push_back({"LaneGraph", "edges", where + " is a self-loop"});
      continue;
    }
    if (!seen_edges.insert({e.src_id, e.dst_id, e.edge_type}).second) {
      out.push_back({"LaneGraph", "edges", where + " is duplicated"});
      continue;
    }
    if (e.edge_type == LaneEdgeType::successor) {
      successors[e.src_id].push_back(e.dst_id);
      ++indegree[e.dst_id];
    }
  }
  // Kahn's algorithm: leftover nodes sit on a successor cycle.
  std::vector<std::string> ready;
  for (const auto& [id, d] : indegree) {
    if (d == 0) ready.push_back(id);
  }
  std::size_t visited = 0;
  while (!ready.empty()) {
    const auto id = ready.back();
    ready.pop_back();
    ++visited;
    for (const auto& nxt : successors[id]) {
      if (--indegree[nxt] == 0) ready.push_back(nxt);
    }
  }
  if (visited != indegree.size()) {
    out.push_back({"LaneGraph", "edges", "successor edges contain a cycle"});
  }
}

inline void validate_track(const AgentTrack& t, std::vector<Violation>& out) {
  const std::string where = "AgentTrack[" + t.id + "]";
  if (t.states.size() != static_cast<std::size_t>(kObservedFrames)) {
    out.push_back({"AgentTrack", "states", where + " must have exactly " + std::to_string(kObservedFrames) + " states"});
    return;
  }
  if (!t.states.back().present) {
    out.push_back({"AgentTrack", "states", where + " must be present at t=0"});
  }
  bool seen_present = false;
  for (std::size_t i = 0; i < t.states.size(); ++i) {
    const auto& s = t.states[i];
    const std::string at = where + " frame " + std::to_string(static_cast<int>(i) - (kObservedFrames - 1));
    if (s.present) {
      seen_present = true;
    } else if (seen_present) {
      out.push_back({"AgentTrack", "states", at + " present flags must form a contiguous suffix"});
    }
    if (!finite(s.x) || !finite(s.y) || !finite(s.vel) || !finite(s.acc) || !finite(s.yaw_rate)) {
      out.push_back({"AgentState", "x/y/vel/acc/yaw_rate", at + " is not finite"});
      continue;
    }
    if (!s.present && !is_zero_state(s)) {
      out.push_back({"AgentState", "present", at + " absent state must be zero-filled"});
    }
    if (s.vel < 0.0) out.push_back({"AgentState", "vel", at + " velocity must be >= 0"});
  }
}

inline void validate_edge(const InteractionEdge& e, const std::string& where, const Scene& scene,
                          std::vector<Violation>& out) {
  const std::string at = where + " edge " + e.src_id + "->" + e.dst_id;
  if (e.src_id == e.dst_id) out.push_back({"InteractionEdge", "dst_id", at + " src_id must differ from dst_id"});
  if (!finite(e.distance) || e.distance < 0.0) {
    out.push_back({"InteractionEdge", "distance", at + " distance must be finite and >= 0"});
  }
  if (!finite(e.edge_probability) || e.edge_probability < 0.0 || e.edge_probability > 1.0) {
    out.push_back({"InteractionEdge", "edge_probability", at + " edge_probability must lie in [0, 1]"});
  }
  if (e.relation == Relation::pedestrian) {
    if (e.path_distance.has_value()) {
      out.push_back({"InteractionEdge", "path_distance", at + " pedestrian edges must have MISSING path_distance"});
    }
  } else if (!e.path_distance.has_value()) {
    out.push_back({"InteractionEdge", "path_distance", at + " non-pedestrian edges require a path_distance"});
  } else if (!finite(*e.path_distance) || *e.path_distance < 0.0) {
    out.push_back({"InteractionEdge", "path_distance", at + " path_distance must be finite and >= 0"});
  }
  const auto* s = scene.find_track(e.src_id);
  const auto* d = scene.find_track(e.dst_id);
  if (s && d) {
    const bool has_human = s->agent_type == AgentType::human || d->agent_type == AgentType::human;
    if (e.relation == Relation::pedestrian && !has_human) {
      out.push_back({"InteractionEdge", "relation", at + " pedestrian edges need a human endpoint"});
    }
    if (e.relation != Relation::pedestrian && has_human) {
      out.push_back({"InteractionEdge", "relation", at + " only pedestrian edges may touch a human"});
    }
  }
}

}  // namespace detail

inline std::vector<Violation> validate_scene(const Scene& scene, const ValidationLimits& limits = {}) {
  std::vector<Violation> out;
  if (scene.scene_id.empty()) out.push_back({"Scene", "scene_id", "scene_id must be non-empty"});
  detail::validate_lane_graph(scene.lane_graph, limits, out);

  std::set<std::string> track_ids;
  for (const auto& t : scene.tracks) {
    if (!track_ids.insert(t.id).second) out.push_back({"AgentTrack", "id", "AgentTrack[" + t.id + "] id is not unique"});
    detail::validate_track(t, out);
  }

  const auto* target = scene.find_track(scene.target_id);
  if (!target) {
    out.push_back({"Scene", "target_id", "target_id '" + scene.target_id + "' does not name a track"});
  } else {
    if (target->agent_type != AgentType::vehicle) {
      out.push_back({"Scene", "target_id", "target agent must be a vehicle"});
    }
    if (target->states.size() == static_cast<std::size_t>(kObservedFrames) &&
        !std::all_of(target->states.begin(), target->states.end(), [](const AgentState& s) { return s.present; })) {
      out.push_back({"Scene", "target_id", "target agent must be present at all observed frames"});
    }
  }

  if (scene.future.size() != static_cast<std::size_t>(kFutureSteps)) {
    out.push_back({"Scene", "future", "future must have exactly " + std::to_string(kFutureSteps) + " positions"});
  }
  for (const auto& p : scene.future) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      out.push_back({"Scene", "future", "future positions must be finite"});
      break;
    }
  }

  if (scene.interaction_graphs.size() != static_cast<std::size_t>(kObservedFrames)) {
    out.push_back({"Scene", "interaction_graphs",
                   "exactly " + std::to_string(kObservedFrames) + " interaction graphs are required"});
  }
  for (std::size_t gi = 0; gi < scene.interaction_graphs.size(); ++gi) {
    const auto& g = scene.interaction_graphs[gi];
    const std::string where = "InteractionGraph[" + std::to_string(g.frame_index) + "]";
    const int expected = static_cast<int>(gi) - (kObservedFrames - 1);
    if (g.frame_index != expected) {
      out.push_back({"InteractionGraph", "frame_index", where + " expected frame " + std::to_string(expected)});
    }
    std::set<std::string> members;
    for (const auto& id : g.agent_ids) {
      if (!members.insert(id).second) {
        out.push_back({"InteractionGraph", "agent_ids", where + " duplicate agent '" + id + "'"});
      }
      const auto* t = scene.find_track(id);
      if (!t) {
        out.push_back({"InteractionGraph", "agent_ids", where + " unknown agent '" + id + "'"});
        continue;
      }
      const int slot = g.frame_index + (kObservedFrames - 1);
      if (slot >= 0 && slot < static_cast<int>(t->states.size()) && !t->states[static_cast<std::size_t>(slot)].present) {
        out.push_back({"InteractionGraph", "agent_ids", where + " agent '" + id + "' is not present at this frame"});
      }
    }
    std::set<std::tuple<std::string, std::string>> pairs;
    for (const auto& e : g.edges) {
      if (!members.count(e.src_id) || !members.count(e.dst_id)) {
        out.push_back({"InteractionGraph", "edges",
                       where + " edge " + e.src_id + "->" + e.dst_id + " endpoint is not in agent_ids"});
      }
      if (!pairs.insert({e.src_id, e.dst_id}).second) {
        out.push_back({"InteractionGraph", "edges",
                       where + " ordered pair " + e.src_id + "->" + e.dst_id + " has more than one edge"});
      }
      detail::validate_edge(e, where, scene, out);
    }
  }
  return out;
}

inline void require_valid(const Scene& scene, const ValidationLimits& limits = {}) {
  const auto violations = validate_scene(scene, limits);
  if (!violations.empty()) {
    std::string msg = "scene '" + scene.scene_id + "' is invalid: " + violations.front().message();
    if (violations.size() > 1) msg += " (+" + std::to_string(violations.size() - 1) + " more)";
    throw ValidationError(msg);
  }
}

// Sorts every set-valued member so that equal scenes compare equal.
inline Scene canonicalize(Scene s) {
  auto& g = s.lane_graph;
  std::sort(g.nodes.begin(), g.nodes.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  std::sort(g.edges.begin(), g.edges.end(), [](const auto& a, const auto& b) {
    return std::tie(a.src_id, a.dst_id, a.edge_type) < std::tie(b.src_id, b.dst_id, b.edge_type);
  });
  std::sort(s.tracks.begin(), s.tracks.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  std::sort(s.interaction_graphs.begin(), s.interaction_graphs.end(),
            [](const auto& a, const auto& b) { return a.frame_index < b.frame_index; });
  for (auto& ig : s.interaction_graphs) {
    std::sort(ig.agent_ids.begin(), ig.agent_ids.end());
    std::sort(ig.edges.begin(), ig.edges.end(), [](const auto& a, const auto& b) {
      return std::tie(a.src_id, a.dst_id, a.relation) < std::tie(b.src_id, b.dst_id, b.relation);
    });
  }
  return s;
}

inline bool structurally_equal(const Scene& a, const Scene& b) { return canonicalize(a) == canonicalize(b); }

// ---------------------------------------------------------------------------
// Record format

namespace detail {

using ojson = nlohmann::ordered_json;

[[noreturn]] inline void schema_error(const std::string& what, std::size_t offset) {
  throw ParseError("malformed scene record: " + what, offset);
}

template <typename T>
T field(const ojson& j, const char* name, std::size_t offset) {
  if (!j.is_object() || !j.contains(name)) schema_error(std::string("missing field '") + name + "'", offset);
  try {
    return j.at(name).get<T>();
  } catch (const nlohmann::json::exception& e) {
    schema_error(std::string("field '") + name + "': " + e.what(), offset);
  }
}

inline const ojson& array_field(const ojson& j, const char* name, std::size_t offset) {
  if (!j.is_object() || !j.contains(name) || !j.at(name).is_array()) {
    schema_error(std::string("field '") + name + "' must be an array", offset);
  }
  return j.at(name);
}

}  // namespace detail

inline nlohmann::ordered_json scene_to_json(const Scene& input) {
  using detail::ojson;
  const Scene s = canonicalize(input);
  ojson j;
  j["schema"] = kSceneSchema;
  j["scene_id"] = s.scene_id;

  ojson nodes = ojson::array();
  for (const auto& n : s.lane_graph.nodes) {
    ojson poses = ojson::array();
    for (const auto& p : n.poses) {
      poses.push_back(ojson{{"x", p.x}, {"y", p.y}, {"theta", p.theta},
                            {"stopline_flag", p.stopline_flag}, {"crosswalk_flag", p.crosswalk_flag}});
    }
    nodes.push_back(ojson{{"id", n.id}, {"poses", std::move(poses)}});
  }
  ojson edges = ojson::array();
  for (const auto& e : s.lane_graph.edges) {
    edges.push_back(ojson{{"src_id", e.src_id}, {"dst_id", e.dst_id}, {"edge_type", to_string(e.edge_type)}});
  }
  j["lane_graph"] = ojson{{"nodes", std::move(nodes)}, {"edges", std::move(edges)}};

  ojson tracks = ojson::array();
  for (const auto& t : s.tracks) {
    ojson states = ojson::array();
    for (const auto& st : t.states) {
      states.push_back(ojson{{"x", st.x}, {"y", st.y}, {"vel", st.vel}, {"acc", st.acc},
                             {"yaw_rate", st.yaw_rate}, {"present", st.present}});
    }
    tracks.push_back(ojson{{"id", t.id}, {"agent_type", to_string(t.agent_type)}, {"states", std::move(states)}});
  }
  j["tracks"] = std::move(tracks);

  ojson graphs = ojson::array();
  for (const auto& g : s.interaction_graphs) {
    ojson gedges = ojson::array();
    for (const auto& e : g.edges) {
      ojson je{{"src_id", e.src_id}, {"dst_id", e.dst_id}, {"relation", to_string(e.relation)}, {"distance", e.distance}};
      je["path_distance"] = e.path_distance ? ojson(*e.path_distance) : ojson(nullptr);
      je["edge_probability"] = e.edge_probability;
      gedges.push_back(std::move(je));
    }
    graphs.push_back(ojson{{"frame_index", g.frame_index}, {"agent_ids", g.agent_ids}, {"edges", std::move(gedges)}});
  }
  j["interaction_graphs"] = std::move(graphs);
  j["target_id"] = s.target_id;

  ojson future = ojson::array();
  for (const auto& p : s.future) future.push_back(ojson::array({p.x, p.y}));
  j["future"] = std::move(future);
  return j;
}

// Canonical single-line encoding (no trailing newline).
inline std::string serialize_scene(const Scene& scene, const ValidationLimits& limits = {}) {
  require_valid(scene, limits);
  return scene_to_json(scene).dump();
}

// Builds a Scene from an already-parsed record. `offset` is reported in errors.
inline Scene scene_from_json(const nlohmann::ordered_json& j, std::size_t offset = 0) {
  using detail::array_field;
  using detail::field;
  if (!j.is_object()) detail::schema_error("record must be an object", offset);
  const auto schema = field<std::string>(j, "schema", offset);
  if (schema != kSceneSchema) detail::schema_error("unsupported schema '" + schema + "'", offset);

  Scene s;
  s.scene_id = field<std::string>(j, "scene_id", offset);
  if (!j.contains("lane_graph")) detail::schema_error("missing field 'lane_graph'", offset);
  const auto& lg = j.at("lane_graph");
  for (const auto& jn : array_field(lg, "nodes", offset)) {
    LaneNode n;
    n.id = field<std::string>(jn, "id", offset);
    for (const auto& jp : array_field(jn, "poses", offset)) {
      n.poses.push_back(LanePose{field<double>(jp, "x", offset), field<double>(jp, "y", offset),
                                 field<double>(jp, "theta", offset), field<bool>(jp, "stopline_flag", offset),
                                 field<bool>(jp, "crosswalk_flag", offset)});
    }
    s.lane_graph.nodes.push_back(std::move(n));
  }
  for (const auto& je : array_field(lg, "edges", offset)) {
    const auto type = lane_edge_type_from(field<std::string>(je, "edge_type", offset));
    if (!type) detail::schema_error("unknown lane edge_type", offset);
    s.lane_graph.edges.push_back(
        LaneEdge{field<std::string>(je, "src_id", offset), field<std::string>(je, "dst_id", offset), *type});
  }
  for (const auto& jt : array_field(j, "tracks", offset)) {
    AgentTrack t;
    t.id = field<std::string>(jt, "id", offset);
    const auto type = agent_type_from(field<std::string>(jt, "agent_type", offset));
    if (!type) detail::schema_error("unknown agent_type", offset);
    t.agent_type = *type;
    for (const auto& js : array_field(jt, "states", offset)) {
      t.states.push_back(AgentState{field<double>(js, "x", offset), field<double>(js, "y", offset),
                                    field<double>(js, "vel", offset), field<double>(js, "acc", offset),
                                    field<double>(js, "yaw_rate", offset), field<bool>(js, "present", offset)});
    }
    s.tracks.push_back(std::move(t));
  }
  for (const auto& jg : array_field(j, "interaction_graphs", offset)) {
    InteractionGraph g;
    g.frame_index = field<int>(jg, "frame_index", offset);
    g.agent_ids = field<std::vector<std::string>>(jg, "agent_ids", offset);
    for (const auto& je : array_field(jg, "edges", offset)) {
      InteractionEdge e;
      e.src_id = field<std::string>(je, "src_id", offset);
      e.dst_id = field<std::string>(je, "dst_id", offset);
      const auto rel = relation_from(field<std::string>(je, "relation", offset));
      if (!rel) detail::schema_error("unknown relation", offset);
      e.relation = *rel;
      e.distance = field<double>(je, "distance", offset);
      if (!je.contains("path_distance")) detail::schema_error("missing field 'path_distance'", offset);
      if (!je.at("path_distance").is_null()) e.path_distance = field<double>(je, "path_distance", offset);
      e.edge_probability = field<double>(je, "edge_probability", offset);
      g.edges.push_back(std::move(e));
    }
    s.interaction_graphs.push_back(std::move(g));
  }
  s.target_id = field<std::string>(j, "target_id", offset);
  for (const auto& jp : array_field(j, "future", offset)) {
    if (!jp.is_array() || jp.size() != 2 || !jp[0].is_number() || !jp[1].is_number()) {
      detail::schema_error("future entries must be [x, y] pairs", offset);
    }
    s.future.push_back(Point2{jp[0].get<double>(), jp[1].get<double>()});
  }
  return s;
}

// Parses one record. `base_offset` is added to reported byte offsets so that
// file readers can point into the whole file.
inline Scene deserialize_scene(std::string_view bytes, std::size_t base_offset = 0,
                               const ValidationLimits& limits = {}) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("scene record is not valid JSON: ") + e.what(), base_offset + e.byte);
  }
  Scene s = scene_from_json(j, base_offset);
  require_valid(s, limits);
  return s;
}

// ---------------------------------------------------------------------------
// Line-delimited scene files

inline std::vector<Scene> parse_scene_stream(std::string_view text, const ValidationLimits& limits = {}) {
  std::vector<Scene> scenes;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(pos, end - pos);
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
      scenes.push_back(deserialize_scene(line, pos, limits));
    }
    pos = end + 1;
  }
  return scenes;
}

inline std::vector<Scene> read_scene_file(const std::string& path, const ValidationLimits& limits = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open scene file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scene_stream(buf.str(), limits);
}

inline void write_scene_file(const std::string& path, const std::vector<Scene>& scenes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  for (const auto& s : scenes) out << serialize_scene(s) << '\n';
  if (!out) throw Error("failed writing scene file '" + path + "'");
}

}  // namespace sf
