#pragma once

// Prediction files (JSON Lines, schema "sf-pred/1") and SVG scene plots.

#include "socialformer/predictor.hpp"
#include "socialformer/scene_model.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <system_error>
#include <vector>

namespace sf {

inline constexpr std::string_view kPredictionSchema = "sf-pred/1";

inline const Scene& find_scene(const std::vector<Scene>& scenes, std::string_view id) {
  for (const auto& s : scenes) {
    if (s.scene_id == id) return s;
  }
  throw ValidationError("no scene with id '" + std::string(id) + "'");
}

inline nlohmann::ordered_json trajectories_json(const ad::Matrix& m) {
  auto out = nlohmann::ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto pts = nlohmann::ordered_json::array();
    for (Eigen::Index j = 0; j < kFutureSteps; ++j) pts.push_back({m(r, 2 * j), m(r, 2 * j + 1)});
    out.push_back(std::move(pts));
  }
  return out;
}

inline std::string prediction_line(const std::string& scene_id, const PredictionSet& p) {
  nlohmann::ordered_json j;
  j["schema"] = kPredictionSchema;
  j["scene_id"] = scene_id;
  j["modes"] = trajectories_json(p.modes);
  j["scores"] = std::vector<double>(p.scores.data(), p.scores.data() + p.scores.size());
  j["aux_modes"] = trajectories_json(p.aux_modes);
  return j.dump();
}

inline void write_predictions(const std::string& path, const std::vector<Scene>& scenes,
                              const std::vector<PredictionSet>& preds) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::system_error(errno, std::generic_category(), "cannot write predictions '" + path + "'");
  for (std::size_t i = 0; i < scenes.size(); ++i) f << prediction_line(scenes[i].scene_id, preds[i]) << "\n";
  if (!f) throw std::system_error(errno, std::generic_category(), "cannot write predictions '" + path + "'");
}

// Lane centrelines in grey, observed target track in black, ground truth in
// green, predicted modes in blue with opacity following their score.
inline std::string render_svg(const Scene& scene, const PredictionSet& p) {
  std::vector<Point2> all;
  for (const auto& n : scene.lane_graph.nodes) {
    for (const auto& q : n.poses) all.push_back({q.x, q.y});
  }
  for (const auto& t : scene.tracks) {
    for (const auto& s : t.states) {
      if (s.present) all.push_back({s.x, s.y});
    }
  }
  for (const auto& q : scene.future) all.push_back(q);
  for (Eigen::Index r = 0; r < p.modes.rows(); ++r) {
    for (Eigen::Index j = 0; j < kFutureSteps; ++j) all.push_back({p.modes(r, 2 * j), p.modes(r, 2 * j + 1)});
  }
  double x0 = -10, x1 = 10, y0 = -10, y1 = 10;
  for (const auto& q : all) {
    x0 = std::min(x0, q.x);
    x1 = std::max(x1, q.x);
    y0 = std::min(y0, q.y);
    y1 = std::max(y1, q.y);
  }
  const double pad = 5.0, scale = 6.0;
  const double w = (x1 - x0 + 2 * pad) * scale, h = (y1 - y0 + 2 * pad) * scale;
  auto X = [&](double x) { return (x - x0 + pad) * scale; };
  auto Y = [&](double y) { return (y1 - y + pad) * scale; };  // y up
  char buf[160];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  auto polyline = [&](const std::vector<Point2>& pts, const std::string& style) {
    std::string s = "<polyline fill=\"none\" " + style + " points=\"";
    for (const auto& q : pts) s += num(X(q.x)) + "," + num(Y(q.y)) + " ";
    return s + "\"/>\n";
  };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) + "\" height=\"" + num(h) + "\">\n";
  svg += "<title>" + scene.scene_id + "</title>\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (const auto& n : scene.lane_graph.nodes) {
    std::vector<Point2> pts;
    for (const auto& q : n.poses) pts.push_back({q.x, q.y});
    svg += polyline(pts, "stroke=\"#bbbbbb\" stroke-width=\"3\"");
  }
  for (const auto& t : scene.tracks) {
    std::vector<Point2> pts;
    for (const auto& s : t.states) {
      if (s.present) pts.push_back({s.x, s.y});
    }
    const bool target = t.id == scene.target_id;
    const std::string colour = target ? "#000000" : (t.agent_type == AgentType::human ? "#cc7700" : "#777777");
    svg += polyline(pts, "stroke=\"" + colour + "\" stroke-width=\"2\"");
    svg += "<circle cx=\"" + num(X(pts.back().x)) + "\" cy=\"" + num(Y(pts.back().y)) + "\" r=\"4\" fill=\"" + colour + "\"/>\n";
  }
  for (Eigen::Index r = p.modes.rows() - 1; r >= 0; --r) {
    std::vector<Point2> pts{{scene.target().states.back().x, scene.target().states.back().y}};
    for (Eigen::Index j = 0; j < kFutureSteps; ++j) pts.push_back({p.modes(r, 2 * j), p.modes(r, 2 * j + 1)});
    const double opacity = 0.25 + 0.75 * (p.scores.size() ? p.scores(r) / p.scores.maxCoeff() : 1.0);
    svg += polyline(pts, "stroke=\"#1f5fd0\" stroke-width=\"2\" stroke-opacity=\"" + num(opacity) + "\"");
  }
  std::vector<Point2> gt{{scene.target().states.back().x, scene.target().states.back().y}};
  gt.insert(gt.end(), scene.future.begin(), scene.future.end());
  svg += polyline(gt, "stroke=\"#20a040\" stroke-width=\"2\" stroke-dasharray=\"6,4\"");
  svg += "</svg>\n";
  return svg;
}

inline void write_svg(const std::string& path, const std::string& svg) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::system_error(errno, std::generic_category(), "cannot write plot '" + path + "'");
  f << svg;
  if (!f) throw std::system_error(errno, std::generic_category(), "cannot write plot '" + path + "'");
}

}  // namespace sf
