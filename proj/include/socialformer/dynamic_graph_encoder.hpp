#pragma once

// Per-frame heterogeneous graph encoding followed by a recurrence over the
// target's per-frame embeddings.

#include "socialformer/ehgt.hpp"
#include "socialformer/sequence_encoders.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

namespace sf {

enum class SurroundMembership { both, in, out };

inline std::string_view to_string(SurroundMembership m) {
  switch (m) {
    case SurroundMembership::both: return "both";
    case SurroundMembership::in: return "in";
    case SurroundMembership::out: return "out";
  }
  return "both";
}

inline SurroundMembership surround_membership_from(std::string_view s) {
  if (s == "both") return SurroundMembership::both;
  if (s == "in") return SurroundMembership::in;
  if (s == "out") return SurroundMembership::out;
  throw ConfigError("unknown neighbour membership '" + std::string(s) + "'");
}

struct DynamicGraphConfig {
  Eigen::Index d_model = 32;
  int heads = 2;
  int layers = 1;
  int m_surr = 16;
  SurroundMembership membership = SurroundMembership::both;
  FeatureScaling scaling;
  std::array<AttrStandardization, kRelationCount> standardization{};
};

struct GraphEmbeddings {
  ad::Var g_target;        // 1 x d
  ad::Var g_target_steps;  // kObservedFrames x d, recurrent outputs in time order
  ad::Var g_surr;          // m_surr x d, rows past the valid count are zero padding
  Eigen::VectorXd g_surr_mask;
  std::vector<std::string> g_surr_ids;  // valid rows only, nearest first
};

class DynamicGraphEncoder {
 public:
  DynamicGraphEncoder() = default;
  DynamicGraphEncoder(ParameterStore& store, const DynamicGraphConfig& cfg, std::mt19937_64& rng) : cfg_(cfg) {
    if (cfg.layers < 1) throw ConfigError("at least one graph layer is required");
    if (cfg.m_surr < 0) throw ConfigError("neighbour capacity must be non-negative");
    for (int t = 0; t < kAgentTypeCount; ++t) {
      type_[static_cast<std::size_t>(t)] =
          Mlp(store, "type_encoder." + std::string(to_string(static_cast<AgentType>(t))), kAgentStateFeatures,
              cfg.d_model, cfg.d_model, rng);
    }
    for (int l = 0; l < cfg.layers; ++l) {
      layers_.emplace_back(store, "ehgt.l" + std::to_string(l), cfg.d_model, cfg.heads, rng, cfg.standardization);
    }
    temporal_ = Gru(store, "temporal.gru", cfg.d_model, cfg.d_model, rng);
  }

  const DynamicGraphConfig& config() const { return cfg_; }
  const Mlp& type_encoder(AgentType t) const { return type_[static_cast<std::size_t>(type_index(t))]; }
  const std::vector<EhgtLayer>& layers() const { return layers_; }
  const Gru& temporal() const { return temporal_; }

  // Node set of one frame: the graph's agents plus the target, in id order.
  TypedNodeSet type_encode(const Scene& scene, std::size_t frame) const {
    const auto& graph = scene.interaction_graphs.at(frame);
    std::set<std::string> ids(graph.agent_ids.begin(), graph.agent_ids.end());
    ids.insert(scene.target_id);
    TypedNodeSet nodes;
    const auto n = static_cast<Eigen::Index>(ids.size());
    std::array<std::vector<Eigen::Index>, kAgentTypeCount> rows;
    std::array<std::vector<Eigen::RowVectorXd>, kAgentTypeCount> feats;
    for (const auto& id : ids) {
      const auto* track = scene.find_track(id);
      if (!track || !track->states.at(frame).present) {
        throw StructuralError("agent '" + id + "' is not present in frame " + std::to_string(graph.frame_index));
      }
      const auto f = agent_state_features(track->states[frame], cfg_.scaling);
      if (!f.allFinite()) throw EncodingError("agent '" + id + "' has a non-finite state feature");
      const auto t = static_cast<std::size_t>(type_index(track->agent_type));
      rows[t].push_back(static_cast<Eigen::Index>(nodes.ids.size()));
      feats[t].push_back(f);
      nodes.ids.push_back(id);
      nodes.types.push_back(track->agent_type);
    }
    std::vector<ad::Var> parts;
    for (std::size_t t = 0; t < rows.size(); ++t) {
      if (rows[t].empty()) continue;
      ad::Matrix x(static_cast<Eigen::Index>(rows[t].size()), kAgentStateFeatures);
      for (std::size_t i = 0; i < feats[t].size(); ++i) x.row(static_cast<Eigen::Index>(i)) = feats[t][i];
      parts.push_back(ad::scatter_add_rows(type_[t](ad::constant(std::move(x))), rows[t], n));
    }
    nodes.h = parts.front();
    for (std::size_t i = 1; i < parts.size(); ++i) nodes.h = nodes.h + parts[i];
    return nodes;
  }

  TypedNodeSet encode_frame(const Scene& scene, std::size_t frame) const {
    auto nodes = type_encode(scene, frame);
    const std::set<std::string> all(nodes.ids.begin(), nodes.ids.end());
    const auto& edges = scene.interaction_graphs[frame].edges;
    for (const auto& layer : layers_) nodes = layer(nodes, edges, all).nodes;
    return nodes;
  }

  // Neighbours of the target in the last observed frame, nearest first.
  std::vector<std::string> surround_ids(const Scene& scene) const {
    const auto last = static_cast<std::size_t>(kObservedFrames - 1);
    const auto& graph = scene.interaction_graphs.at(last);
    std::set<std::string> ids;
    for (const auto& e : graph.edges) {
      if (cfg_.membership != SurroundMembership::out && e.dst_id == scene.target_id) ids.insert(e.src_id);
      if (cfg_.membership != SurroundMembership::in && e.src_id == scene.target_id) ids.insert(e.dst_id);
    }
    const auto& t0 = scene.target().states[last];
    std::vector<std::pair<double, std::string>> ranked;
    for (const auto& id : ids) {
      const auto& s = scene.find_track(id)->states[last];
      ranked.emplace_back(std::hypot(s.x - t0.x, s.y - t0.y), id);
    }
    std::sort(ranked.begin(), ranked.end());
    std::vector<std::string> out;
    for (const auto& [d, id] : ranked) {
      if (static_cast<int>(out.size()) == cfg_.m_surr) break;
      out.push_back(id);
    }
    return out;
  }

  GraphEmbeddings encode(const Scene& scene) const {
    GraphEmbeddings g;
    auto h = temporal_.zero_state(1);
    std::vector<ad::Var> steps;
    TypedNodeSet last;
    for (std::size_t f = 0; f < static_cast<std::size_t>(kObservedFrames); ++f) {
      auto nodes = encode_frame(scene, f);
      const auto row = static_cast<Eigen::Index>(
          std::find(nodes.ids.begin(), nodes.ids.end(), scene.target_id) - nodes.ids.begin());
      h = temporal_.step(ad::slice_rows(nodes.h, row, 1), h);
      steps.push_back(h);
      last = std::move(nodes);
    }
    g.g_target = h;
    g.g_target_steps = ad::concat_rows(steps);

    g.g_surr_ids = surround_ids(scene);
    const auto valid = static_cast<Eigen::Index>(g.g_surr_ids.size());
    g.g_surr_mask = Eigen::VectorXd::Zero(cfg_.m_surr);
    g.g_surr_mask.head(valid).setOnes();
    std::vector<Eigen::Index> rows;
    for (const auto& id : g.g_surr_ids) {
      rows.push_back(static_cast<Eigen::Index>(std::find(last.ids.begin(), last.ids.end(), id) - last.ids.begin()));
    }
    const auto pad = ad::constant(ad::Matrix::Zero(cfg_.m_surr - valid, cfg_.d_model));
    g.g_surr = valid == 0 ? pad : (valid == cfg_.m_surr ? ad::gather_rows(last.h, rows)
                                                        : ad::concat_rows({ad::gather_rows(last.h, rows), pad}));
    return g;
  }

 private:
  DynamicGraphConfig cfg_;
  std::array<Mlp, kAgentTypeCount> type_;
  std::vector<EhgtLayer> layers_;
  Gru temporal_;
};

inline GraphEmbeddings encode_dynamic(const Scene& scene, const DynamicGraphEncoder& enc) { return enc.encode(scene); }

}  // namespace sf
