#pragma once

// Read-only index over a LaneGraph: map matching, along-lane distances over
// successor edges and forward path enumeration.

#include "socialformer/scene_model.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

namespace sf {

struct MatchedPose {
  std::size_t node = 0;
  std::size_t pose = 0;
  bool operator==(const MatchedPose&) const = default;
};

// A polyline following successor edges forward from a matched pose.
struct ForwardPath {
  std::vector<Point2> points;
  std::vector<double> arc;  // arc length at each point, arc[0] == 0
};

class LaneIndex {
 public:
  explicit LaneIndex(const LaneGraph& graph) : graph_(&graph) {
    const auto n = graph.nodes.size();
    successors_.resize(n);
    predecessors_.resize(n);
    proximal_.resize(n);
    prefix_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      ids_.emplace(graph.nodes[i].id, i);
      const auto& poses = graph.nodes[i].poses;
      auto& pre = prefix_[i];
      pre.assign(poses.size(), 0.0);
      for (std::size_t k = 1; k < poses.size(); ++k) {
        pre[k] = pre[k - 1] + std::hypot(poses[k].x - poses[k - 1].x, poses[k].y - poses[k - 1].y);
      }
    }
    for (const auto& e : graph.edges) {
      auto s = ids_.find(e.src_id);
      auto d = ids_.find(e.dst_id);
      if (s == ids_.end() || d == ids_.end() || s->second == d->second) continue;
      if (e.edge_type == LaneEdgeType::successor) {
        successors_[s->second].push_back(d->second);
        predecessors_[d->second].push_back(s->second);
      } else {
        proximal_[s->second].push_back(d->second);
        proximal_[d->second].push_back(s->second);
      }
    }
  }

  const LaneGraph& graph() const { return *graph_; }
  std::size_t size() const { return graph_->nodes.size(); }
  const std::vector<std::size_t>& successors(std::size_t node) const { return successors_[node]; }
  const std::vector<std::size_t>& predecessors(std::size_t node) const { return predecessors_[node]; }

  std::optional<std::size_t> index_of(const std::string& id) const {
    auto it = ids_.find(id);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

  const LanePose& pose(const MatchedPose& m) const { return graph_->nodes[m.node].poses[m.pose]; }

  bool proximal(std::size_t a, std::size_t b) const {
    for (auto x : proximal_[a]) {
      if (x == b) return true;
    }
    return false;
  }

  // Nearest lane pose within `radius`; ties resolve to the lowest
  // (node storage index, pose index).
  std::optional<MatchedPose> match(Point2 p, double radius) const {
    std::optional<MatchedPose> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < graph_->nodes.size(); ++i) {
      const auto& poses = graph_->nodes[i].poses;
      for (std::size_t k = 0; k < poses.size(); ++k) {
        const double d = std::hypot(poses[k].x - p.x, poses[k].y - p.y);
        if (d < best_d) {
          best_d = d;
          best = MatchedPose{i, k};
        }
      }
    }
    if (!best || best_d > radius) return std::nullopt;
    return best;
  }

  // Length along the node's pose polyline between two pose indices.
  double along_node(std::size_t node, std::size_t from, std::size_t to) const {
    return prefix_[node][to] - prefix_[node][from];
  }

  double node_length(std::size_t node) const { return prefix_[node].empty() ? 0.0 : prefix_[node].back(); }

  // Gap between the last pose of `from` and the first pose of `to`.
  double link_length(std::size_t from, std::size_t to) const {
    const auto& a = graph_->nodes[from].poses.back();
    const auto& b = graph_->nodes[to].poses.front();
    return std::hypot(b.x - a.x, b.y - a.y);
  }

  // Shortest distance travelling forward along successor edges from `a` to
  // `b`; nullopt when `b` is not reachable.
  std::optional<double> forward_distance(const MatchedPose& a, const MatchedPose& b) const {
    if (a.node == b.node && b.pose >= a.pose) return along_node(a.node, a.pose, b.pose);
    const double inf = std::numeric_limits<double>::infinity();
    // dist[n] = distance from `a` to the first pose of node n
    std::vector<double> dist(size(), inf);
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    const double tail = along_node(a.node, a.pose, graph_->nodes[a.node].poses.size() - 1);
    for (auto s : successors_[a.node]) {
      const double d = tail + link_length(a.node, s);
      if (d < dist[s]) {
        dist[s] = d;
        queue.emplace(d, s);
      }
    }
    while (!queue.empty()) {
      auto [d, n] = queue.top();
      queue.pop();
      if (d > dist[n]) continue;
      if (n == b.node) return d + along_node(n, 0, b.pose);
      for (auto s : successors_[n]) {
        const double nd = d + node_length(n) + link_length(n, s);
        if (nd < dist[s]) {
          dist[s] = nd;
          queue.emplace(nd, s);
        }
      }
    }
    return std::nullopt;
  }

  // Every forward polyline starting at `from`, extended through successors
  // until it is at least `horizon` long or dead-ends.
  std::vector<ForwardPath> forward_paths(const MatchedPose& from, double horizon) const {
    std::vector<ForwardPath> out;
    ForwardPath start;
    const auto& poses = graph_->nodes[from.node].poses;
    for (std::size_t k = from.pose; k < poses.size(); ++k) append(start, Point2{poses[k].x, poses[k].y});
    extend(from.node, std::move(start), horizon, out);
    return out;
  }

 private:
  static void append(ForwardPath& path, Point2 p) {
    if (path.points.empty()) {
      path.arc.push_back(0.0);
    } else {
      const auto& q = path.points.back();
      path.arc.push_back(path.arc.back() + std::hypot(p.x - q.x, p.y - q.y));
    }
    path.points.push_back(p);
  }

  void extend(std::size_t node, ForwardPath path, double horizon, std::vector<ForwardPath>& out) const {
    if (path.arc.back() >= horizon || successors_[node].empty()) {
      out.push_back(std::move(path));
      return;
    }
    for (auto s : successors_[node]) {
      ForwardPath next = path;
      for (const auto& p : graph_->nodes[s].poses) append(next, Point2{p.x, p.y});
      extend(s, std::move(next), horizon, out);
    }
  }

  const LaneGraph* graph_;
  std::map<std::string, std::size_t> ids_;
  std::vector<std::vector<std::size_t>> successors_;
  std::vector<std::vector<std::size_t>> predecessors_;
  std::vector<std::vector<std::size_t>> proximal_;
  std::vector<std::vector<double>> prefix_;
};

namespace geometry {

struct SegmentHit {
  double t = 0.0;  // fraction along the first segment
  double u = 0.0;  // fraction along the second segment
};

// Intersection of closed segments [a0,a1] and [b0,b1], including touching
// endpoints and collinear overlap (reported at the earliest overlap point on
// the first segment).
inline std::optional<SegmentHit> intersect(Point2 a0, Point2 a1, Point2 b0, Point2 b1) {
  constexpr double kEps = 1e-9;
  const double rx = a1.x - a0.x, ry = a1.y - a0.y;
  const double sx = b1.x - b0.x, sy = b1.y - b0.y;
  const double qpx = b0.x - a0.x, qpy = b0.y - a0.y;
  const double denom = rx * sy - ry * sx;
  const double rr = rx * rx + ry * ry;
  const double ss = sx * sx + sy * sy;
  if (rr < kEps * kEps || ss < kEps * kEps) return std::nullopt;
  if (std::abs(denom) < kEps * std::sqrt(rr * ss)) {
    // parallel
    if (std::abs(qpx * ry - qpy * rx) > kEps * std::sqrt(rr)) return std::nullopt;
    double t0 = (qpx * rx + qpy * ry) / rr;
    double t1 = t0 + (sx * rx + sy * ry) / rr;
    if (t0 > t1) std::swap(t0, t1);
    if (t1 < -kEps || t0 > 1.0 + kEps) return std::nullopt;
    const double t = std::max(0.0, t0);
    const double px = a0.x + t * rx, py = a0.y + t * ry;
    const double u = ((px - b0.x) * sx + (py - b0.y) * sy) / ss;
    return SegmentHit{t, std::clamp(u, 0.0, 1.0)};
  }
  const double t = (qpx * sy - qpy * sx) / denom;
  const double u = (qpx * ry - qpy * rx) / denom;
  if (t < -kEps || t > 1.0 + kEps || u < -kEps || u > 1.0 + kEps) return std::nullopt;
  return SegmentHit{std::clamp(t, 0.0, 1.0), std::clamp(u, 0.0, 1.0)};
}

// Smallest arc_a + arc_b over all crossings of the two polylines where both
// arcs are within `horizon`.
inline std::optional<double> first_crossing(const ForwardPath& a, const ForwardPath& b, double horizon) {
  std::optional<double> best;
  for (std::size_t i = 0; i + 1 < a.points.size(); ++i) {
    if (a.arc[i] > horizon) break;
    for (std::size_t j = 0; j + 1 < b.points.size(); ++j) {
      if (b.arc[j] > horizon) break;
      const auto hit = intersect(a.points[i], a.points[i + 1], b.points[j], b.points[j + 1]);
      if (!hit) continue;
      const double sa = a.arc[i] + hit->t * (a.arc[i + 1] - a.arc[i]);
      const double sb = b.arc[j] + hit->u * (b.arc[j + 1] - b.arc[j]);
      if (sa > horizon || sb > horizon) continue;
      if (!best || sa + sb < *best) best = sa + sb;
    }
  }
  return best;
}

}  // namespace geometry

}  // namespace sf
