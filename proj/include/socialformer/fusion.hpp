#pragma once

// Combines the sequence and graph embeddings into one scene encoding through
// four cross-attention blocks and a small relational pass over lane nodes.

#include "socialformer/core/layers.hpp"
#include "socialformer/scene_model.hpp"

#include <map>
#include <string>
#include <vector>

namespace sf {

// Lane message passing distinguishes edge type and direction.
enum class LaneLink { successor_forward, successor_backward, proximal_forward, proximal_backward };
inline constexpr int kLaneLinkCount = 4;

inline std::string_view to_string(LaneLink l) {
  switch (l) {
    case LaneLink::successor_forward: return "successor_fwd";
    case LaneLink::successor_backward: return "successor_bwd";
    case LaneLink::proximal_forward: return "proximal_fwd";
    case LaneLink::proximal_backward: return "proximal_bwd";
  }
  return "";
}

// Row-normalised adjacency per link kind; row i averages the neighbours that
// reach node i through that kind. Rows without neighbours are zero.
inline std::array<ad::Matrix, kLaneLinkCount> lane_mean_operators(const LaneGraph& graph) {
  const auto n = static_cast<Eigen::Index>(graph.nodes.size());
  std::map<std::string, Eigen::Index> index;
  for (Eigen::Index i = 0; i < n; ++i) index[graph.nodes[static_cast<std::size_t>(i)].id] = i;
  std::array<ad::Matrix, kLaneLinkCount> ops;
  for (auto& m : ops) m = ad::Matrix::Zero(n, n);
  for (const auto& e : graph.edges) {
    const auto s = index.find(e.src_id), t = index.find(e.dst_id);
    if (s == index.end() || t == index.end()) {
      throw StructuralError("lane edge " + e.src_id + "->" + e.dst_id + " has an endpoint outside the lane graph");
    }
    const int base = e.edge_type == LaneEdgeType::successor ? 0 : 2;
    ops[static_cast<std::size_t>(base)](t->second, s->second) = 1.0;      // information flows along the edge
    ops[static_cast<std::size_t>(base + 1)](s->second, t->second) = 1.0;  // and against it
  }
  for (auto& m : ops) {
    for (Eigen::Index r = 0; r < n; ++r) {
      const double deg = m.row(r).sum();
      if (deg > 0.0) m.row(r) /= deg;
    }
  }
  return ops;
}

struct FusionConfig {
  Eigen::Index d_model = 32;
  int heads = 2;
  int lane_rounds = 2;
};

class Fusion {
 public:
  Fusion() = default;
  Fusion(ParameterStore& store, const FusionConfig& cfg, std::mt19937_64& rng) : cfg_(cfg) {
    surround_ = CrossAttention(store, "fusion.surround", cfg.d_model, cfg.heads, rng);
    lane_ = CrossAttention(store, "fusion.lane", cfg.d_model, cfg.heads, rng);
    target_ = CrossAttention(store, "fusion.target", cfg.d_model, cfg.heads, rng);
    final_ = CrossAttention(store, "fusion.final", cfg.d_model, cfg.heads, rng);
    for (int r = 0; r < cfg.lane_rounds; ++r) {
      std::array<Linear, kLaneLinkCount> maps;
      for (int k = 0; k < kLaneLinkCount; ++k) {
        maps[static_cast<std::size_t>(k)] =
            Linear(store, "fusion.lane_gnn.r" + std::to_string(r) + "." + std::string(to_string(static_cast<LaneLink>(k))),
                   cfg.d_model, cfg.d_model, rng, false);
      }
      gnn_.push_back(maps);
    }
  }

  const CrossAttention& surround_attention() const { return surround_; }
  const CrossAttention& lane_attention() const { return lane_; }
  const CrossAttention& target_attention() const { return target_; }
  const CrossAttention& final_attention() const { return final_; }
  const Linear& lane_map(int round, LaneLink k) const { return gnn_.at(static_cast<std::size_t>(round))[static_cast<std::size_t>(k)]; }
  int lane_rounds() const { return cfg_.lane_rounds; }

  // h_surr: n x d; g_surr: m x d with a 0/1 mask of length m.
  ad::Var fuse_surrounding(const ad::Var& h_surr, const ad::Var& g_surr, const Eigen::VectorXd& mask) const {
    std::vector<Eigen::Index> valid;
    for (Eigen::Index i = 0; i < mask.size(); ++i) {
      if (mask(i) != 0.0) valid.push_back(i);
    }
    if (valid.empty() || h_surr.rows() == 0) return h_surr;
    return h_surr + surround_(h_surr, ad::gather_rows(g_surr, valid));
  }

  // Rows follow lane_graph.nodes.
  ad::Var fuse_lanes(const ad::Var& h_lane, const ad::Var& sa, const LaneGraph& graph) const {
    if (h_lane.rows() == 0) return h_lane;
    auto x = h_lane + lane_(h_lane, sa);
    const auto ops = lane_mean_operators(graph);
    for (const auto& maps : gnn_) {
      std::vector<ad::Var> terms;
      for (int k = 0; k < kLaneLinkCount; ++k) {
        const auto& op = ops[static_cast<std::size_t>(k)];
        if (op.isZero(0.0)) continue;
        terms.push_back(maps[static_cast<std::size_t>(k)](ad::matmul(ad::constant(op), x)));
      }
      if (terms.empty()) continue;  // no neighbours anywhere: residual only
      auto agg = terms.front();
      for (std::size_t i = 1; i < terms.size(); ++i) agg = agg + terms[i];
      x = x + ad::gelu(agg);
    }
    return x;
  }

  ad::Var fuse_target(const ad::Var& h_target, const ad::Var& g_target_steps) const {
    return h_target + target_(h_target, g_target_steps);
  }

  // 1 x 2d
  ad::Var fuse_final(const ad::Var& ta, const ad::Var& h_lanefinal) const {
    return ad::concat_cols({ta, final_(ta, h_lanefinal)});
  }

 private:
  FusionConfig cfg_;
  CrossAttention surround_, lane_, target_, final_;
  std::vector<std::array<Linear, kLaneLinkCount>> gnn_;
};

}  // namespace sf
