#pragma once

// Edge-enhanced heterogeneous graph transformer layer over typed agent nodes
// and typed, attribute-carrying interaction edges.
//
// For an edge s -e-> t and head i:
//   W_attr     = diag(1 + a_e P_attr[phi(e), i])
//   score_i    = K_i(s) W_ATT[phi(e), i] W_attr Q_i(t)^T * mu<tau(s), phi(e), tau(t)> / sqrt(d_h)
//   message_i  = M_i(s) W_attr W_MSG[phi(e), i]
// Scores are normalised per head over the in-edges of t, messages are summed
// with those weights, and the update is H[t] + A_tau(t)(gelu(H~[t])).

#include "socialformer/core/layers.hpp"
#include "socialformer/scene_model.hpp"

#include <array>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace sf {

struct TypedNodeSet {
  std::vector<std::string> ids;
  std::vector<AgentType> types;
  ad::Var h;  // n x d_model, rows follow ids
};

// Affine standardisation of [distance, path_distance, edge_probability]:
// a = (raw - offset) * scale. MISSING path_distance enters as raw 0.
struct AttrStandardization {
  std::array<double, 3> offset{0.0, 0.0, 0.0};
  std::array<double, 3> scale{1.0 / 50.0, 1.0 / 50.0, 1.0};
};

inline Eigen::RowVector3d edge_attributes(const InteractionEdge& e, const AttrStandardization& s) {
  const std::array<double, 3> raw{e.distance, e.path_distance.value_or(0.0), e.edge_probability};
  Eigen::RowVector3d a;
  for (int k = 0; k < 3; ++k) a(k) = (raw[static_cast<std::size_t>(k)] - s.offset[static_cast<std::size_t>(k)]) * s.scale[static_cast<std::size_t>(k)];
  return a;
}

inline std::string head_name(int i) { return "head" + std::to_string(i); }

inline int type_index(AgentType t) { return static_cast<int>(t); }
inline int relation_index(Relation r) { return static_cast<int>(r); }

class EhgtLayer {
 public:
  struct Result {
    TypedNodeSet nodes;
    // Rows follow `edges`: the input-edge index of every edge that was
    // aggregated (dst in target_ids), with its attention weight per head.
    std::vector<std::size_t> edges;
    ad::Matrix attention;
  };

  EhgtLayer() = default;
  EhgtLayer(ParameterStore& store, const std::string& prefix, Eigen::Index d_model, int heads, std::mt19937_64& rng,
            std::array<AttrStandardization, kRelationCount> standardization = {})
      : d_model_(d_model), heads_(heads), standardization_(standardization) {
    if (heads <= 0 || d_model % heads != 0) throw ConfigError(prefix + ": d_model must be divisible by the head count");
    d_head_ = d_model / heads;
    for (int t = 0; t < kAgentTypeCount; ++t) {
      const std::string tn(to_string(static_cast<AgentType>(t)));
      q_[t] = Linear(store, prefix + ".Q_Linear." + tn, d_model, d_model, rng);
      k_[t] = Linear(store, prefix + ".K_Linear." + tn, d_model, d_model, rng);
      m_[t] = Linear(store, prefix + ".M_Linear." + tn, d_model, d_model, rng);
      a_[t] = Linear(store, prefix + ".A_Linear." + tn, d_model, d_model, rng);
    }
    for (int r = 0; r < kRelationCount; ++r) {
      const std::string rn(to_string(static_cast<Relation>(r)));
      for (int i = 0; i < heads; ++i) {
        w_att_[r].push_back(store.add_glorot(prefix + ".W_ATT." + rn + "." + head_name(i), d_head_, d_head_, rng));
        w_msg_[r].push_back(store.add_glorot(prefix + ".W_MSG." + rn + "." + head_name(i), d_head_, d_head_, rng));
        // zero start: the layer begins as the attribute-free transformer
        p_attr_[r].push_back(store.add_zeros(prefix + ".P_attr." + rn + "." + head_name(i), 3, d_head_));
      }
      for (int s = 0; s < kAgentTypeCount; ++s) {
        for (int t = 0; t < kAgentTypeCount; ++t) {
          mu_[r][s][t] = store.add(prefix + ".mu." + std::string(to_string(static_cast<AgentType>(s))) + "." + rn + "." +
                                       std::string(to_string(static_cast<AgentType>(t))),
                                   ad::Matrix::Ones(1, 1));
        }
      }
    }
  }

  Eigen::Index d_model() const { return d_model_; }
  Eigen::Index d_head() const { return d_head_; }
  int heads() const { return heads_; }
  const AttrStandardization& standardization(Relation r) const { return standardization_[static_cast<std::size_t>(relation_index(r))]; }

  const Linear& q_linear(AgentType t) const { return q_[type_index(t)]; }
  const Linear& k_linear(AgentType t) const { return k_[type_index(t)]; }
  const Linear& m_linear(AgentType t) const { return m_[type_index(t)]; }
  const Linear& a_linear(AgentType t) const { return a_[type_index(t)]; }
  const ad::Var& w_att(Relation r, int head) const { return w_att_[relation_index(r)][static_cast<std::size_t>(head)]; }
  const ad::Var& w_msg(Relation r, int head) const { return w_msg_[relation_index(r)][static_cast<std::size_t>(head)]; }
  const ad::Var& p_attr(Relation r, int head) const { return p_attr_[relation_index(r)][static_cast<std::size_t>(head)]; }
  const ad::Var& mu(AgentType src, Relation r, AgentType dst) const {
    return mu_[relation_index(r)][type_index(src)][type_index(dst)];
  }

  // d_h x d_h diagonal attribute matrix of one edge and head.
  ad::Matrix edge_attr_matrix(const InteractionEdge& e, int head) const {
    const auto a = edge_attributes(e, standardization(e.relation));
    if (!a.allFinite()) throw EncodingError("edge " + e.src_id + "->" + e.dst_id + " has non-finite attributes");
    const Eigen::RowVectorXd d = (a * p_attr(e.relation, head).value()).array() + 1.0;
    return d.asDiagonal();
  }

  Result operator()(const TypedNodeSet& nodes, const std::vector<InteractionEdge>& edges,
                    const std::set<std::string>& target_ids) const {
    const auto n = static_cast<Eigen::Index>(nodes.ids.size());
    if (nodes.types.size() != nodes.ids.size() || nodes.h.rows() != n) {
      throw StructuralError("node set: ids, types and embeddings disagree in size");
    }
    std::map<std::string, Eigen::Index> index;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!index.emplace(nodes.ids[static_cast<std::size_t>(i)], i).second) {
        throw StructuralError("node set: duplicate id '" + nodes.ids[static_cast<std::size_t>(i)] + "'");
      }
    }
    for (const auto& e : edges) {
      if (!index.count(e.src_id) || !index.count(e.dst_id)) {
        throw StructuralError("edge " + e.src_id + "->" + e.dst_id + " has an endpoint outside the node set");
      }
    }
    for (const auto& t : target_ids) {
      if (!index.count(t)) throw StructuralError("target id '" + t + "' is not in the node set");
    }

    Result out;
    out.nodes = nodes;

    // Edges grouped by meta-relation; group order fixes the row order of the
    // concatenated score and message columns.
    struct Group {
      std::vector<std::size_t> edge;
      std::vector<Eigen::Index> src, dst;
    };
    std::map<std::array<int, 3>, Group> groups;
    for (std::size_t k = 0; k < edges.size(); ++k) {
      const auto& e = edges[k];
      if (!target_ids.count(e.dst_id)) continue;
      const Eigen::Index s = index.at(e.src_id), t = index.at(e.dst_id);
      auto& g = groups[{relation_index(e.relation), type_index(nodes.types[static_cast<std::size_t>(s)]),
                        type_index(nodes.types[static_cast<std::size_t>(t)])}];
      g.edge.push_back(k);
      g.src.push_back(s);
      g.dst.push_back(t);
    }
    if (groups.empty() || n == 0) {
      out.attention = ad::Matrix::Zero(0, heads_);
      return out;
    }

    const auto q = per_type(q_, nodes);
    const auto k = per_type(k_, nodes);
    const auto m = per_type(m_, nodes);
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(d_head_));

    std::vector<Eigen::Index> segment;
    std::vector<std::vector<ad::Var>> scores(static_cast<std::size_t>(heads_)), messages(static_cast<std::size_t>(heads_));
    for (const auto& [key, g] : groups) {
      const auto [r, ts, tt] = key;
      const auto rows = static_cast<Eigen::Index>(g.edge.size());
      ad::Matrix attrs(rows, 3);
      for (Eigen::Index j = 0; j < rows; ++j) {
        const auto& e = edges[g.edge[static_cast<std::size_t>(j)]];
        attrs.row(j) = edge_attributes(e, standardization_[static_cast<std::size_t>(r)]);
        if (!attrs.row(j).allFinite()) throw EncodingError("edge " + e.src_id + "->" + e.dst_id + " has non-finite attributes");
      }
      const auto attr = ad::constant(std::move(attrs));
      const auto k_src = ad::gather_rows(k, g.src);
      const auto m_src = ad::gather_rows(m, g.src);
      const auto q_dst = ad::gather_rows(q, g.dst);
      for (int i = 0; i < heads_; ++i) {
        const auto hs = static_cast<std::size_t>(i);
        const auto diag = ad::add_scalar(ad::matmul(attr, p_attr_[r][hs]), 1.0);  // rows x d_h
        const auto kh = ad::slice_cols(k_src, i * d_head_, d_head_);
        const auto qh = ad::slice_cols(q_dst, i * d_head_, d_head_);
        const auto mh = ad::slice_cols(m_src, i * d_head_, d_head_);
        const auto raw = ad::row_sum(ad::mul(ad::mul(ad::matmul(kh, w_att_[r][hs]), diag), qh));
        scores[hs].push_back(ad::scale(ad::scale_by(raw, mu_[r][ts][tt]), inv_sqrt));
        messages[hs].push_back(ad::matmul(ad::mul(mh, diag), w_msg_[r][hs]));
      }
      segment.insert(segment.end(), g.dst.begin(), g.dst.end());
      out.edges.insert(out.edges.end(), g.edge.begin(), g.edge.end());
    }

    out.attention.resize(static_cast<Eigen::Index>(segment.size()), heads_);
    std::vector<ad::Var> aggregated;
    for (int i = 0; i < heads_; ++i) {
      const auto hs = static_cast<std::size_t>(i);
      const auto att = ad::segment_softmax(ad::concat_rows(scores[hs]), segment, n);
      out.attention.col(i) = att.value().col(0);
      const auto weighted = ad::mul_col(ad::concat_rows(messages[hs]), att);
      aggregated.push_back(ad::scatter_add_rows(weighted, segment, n));
    }
    const auto h_tilde = heads_ == 1 ? aggregated.front() : ad::concat_cols(aggregated);

    // Only targets with at least one in-edge are updated.
    std::set<Eigen::Index> updated(segment.begin(), segment.end());
    std::vector<ad::Var> deltas;
    for (int t = 0; t < kAgentTypeCount; ++t) {
      std::vector<Eigen::Index> rows;
      for (auto r : updated) {
        if (type_index(nodes.types[static_cast<std::size_t>(r)]) == t) rows.push_back(r);
      }
      if (rows.empty()) continue;
      const auto upd = a_[t](ad::gelu(ad::gather_rows(h_tilde, rows)));
      deltas.push_back(ad::scatter_add_rows(upd, rows, n));
    }
    auto h = nodes.h;
    for (const auto& d : deltas) h = h + d;
    out.nodes.h = h;
    return out;
  }

 private:
  // Applies the per-type linear map to each node's row.
  ad::Var per_type(const std::array<Linear, kAgentTypeCount>& maps, const TypedNodeSet& nodes) const {
    const auto n = static_cast<Eigen::Index>(nodes.ids.size());
    std::vector<ad::Var> parts;
    for (int t = 0; t < kAgentTypeCount; ++t) {
      std::vector<Eigen::Index> rows;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (type_index(nodes.types[static_cast<std::size_t>(i)]) == t) rows.push_back(i);
      }
      if (rows.empty()) continue;
      parts.push_back(ad::scatter_add_rows(maps[static_cast<std::size_t>(t)](ad::gather_rows(nodes.h, rows)), rows, n));
    }
    auto acc = parts.front();
    for (std::size_t i = 1; i < parts.size(); ++i) acc = acc + parts[i];
    return acc;
  }

  Eigen::Index d_model_ = 0;
  Eigen::Index d_head_ = 0;
  int heads_ = 1;
  std::array<AttrStandardization, kRelationCount> standardization_{};
  std::array<Linear, kAgentTypeCount> q_, k_, m_, a_;
  std::array<std::vector<ad::Var>, kRelationCount> w_att_, w_msg_, p_attr_;
  std::array<std::array<std::array<ad::Var, kAgentTypeCount>, kAgentTypeCount>, kRelationCount> mu_;
};

inline EhgtLayer::Result ehgt_layer(const TypedNodeSet& nodes, const std::vector<InteractionEdge>& edges,
                                    const EhgtLayer& layer, const std::set<std::string>& target_ids) {
  return layer(nodes, edges, target_ids);
}

// Zeroes every P_attr tensor under `prefix` and freezes it, which turns the
// layer into its attribute-free counterpart.
inline void freeze_edge_attributes(ParameterStore& store, const std::string& prefix = "ehgt") {
  for (const auto& path : store.paths_with_prefix(prefix)) {
    if (path.find(".P_attr.") == std::string::npos) continue;
    auto v = store.get(path);
    v.mutable_value().setZero();
    store.set_trainable(path, false);
  }
}

}  // namespace sf
