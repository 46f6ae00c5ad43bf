#pragma once

// Lane-node and agent-history encoders: a per-element perceptron followed by
// a GRU whose final hidden state is the embedding. Padding and absent frames
// are masked so they never touch the recurrent state.

#include "socialformer/core/layers.hpp"
#include "socialformer/scene_model.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace sf {

// Fixed input normalisation applied before any learned layer.
struct FeatureScaling {
  double position = 10.0;  // metres per unit
  double speed = 10.0;     // m/s per unit
};

// A batch of n sequences of length T with `width` features per element.
// steps[t] is n x width; mask(i, t) is 1 for valid elements.
struct PaddedSequence {
  std::vector<ad::Matrix> steps;
  ad::Matrix mask;
};

inline Eigen::RowVectorXd lane_pose_features(const LanePose& p, const FeatureScaling& s) {
  Eigen::RowVectorXd f(kLanePoseFeatures);
  f << p.x / s.position, p.y / s.position, p.theta, p.stopline_flag ? 1.0 : 0.0, p.crosswalk_flag ? 1.0 : 0.0;
  return f;
}

inline Eigen::RowVectorXd agent_state_features(const AgentState& st, const FeatureScaling& s) {
  Eigen::RowVectorXd f(kAgentStateFeatures);
  f << st.x / s.position, st.y / s.position, st.vel / s.speed, st.acc, st.yaw_rate;
  return f;
}

inline PaddedSequence lane_sequences(const LaneGraph& graph, const FeatureScaling& scaling) {
  const auto n = static_cast<Eigen::Index>(graph.nodes.size());
  PaddedSequence seq;
  seq.steps.assign(kMaxLanePoses, ad::Matrix::Zero(n, kLanePoseFeatures));
  seq.mask = ad::Matrix::Zero(n, kMaxLanePoses);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& node = graph.nodes[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < node.poses.size() && k < static_cast<std::size_t>(kMaxLanePoses); ++k) {
      const auto f = lane_pose_features(node.poses[k], scaling);
      if (!f.allFinite()) throw EncodingError("lane node '" + node.id + "' has a non-finite pose feature");
      seq.steps[k].row(i) = f;
      seq.mask(i, static_cast<Eigen::Index>(k)) = 1.0;
    }
  }
  return seq;
}

inline PaddedSequence track_sequences(const std::vector<const AgentTrack*>& tracks, const FeatureScaling& scaling) {
  const auto n = static_cast<Eigen::Index>(tracks.size());
  PaddedSequence seq;
  seq.steps.assign(kObservedFrames, ad::Matrix::Zero(n, kAgentStateFeatures));
  seq.mask = ad::Matrix::Zero(n, kObservedFrames);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& t = *tracks[static_cast<std::size_t>(i)];
    bool any = false;
    for (std::size_t f = 0; f < t.states.size() && f < static_cast<std::size_t>(kObservedFrames); ++f) {
      if (!t.states[f].present) continue;
      const auto feat = agent_state_features(t.states[f], scaling);
      if (!feat.allFinite()) throw EncodingError("agent '" + t.id + "' has a non-finite state feature");
      seq.steps[f].row(i) = feat;
      seq.mask(i, static_cast<Eigen::Index>(f)) = 1.0;
      any = true;
    }
    if (!any) throw EncodingError("agent '" + t.id + "' has no present frame to encode");
  }
  return seq;
}

// Perceptron (Linear -> GELU -> Linear, width d_model) per element, then a
// GRU from the zero state over the valid elements.
class SequenceEncoder {
 public:
  SequenceEncoder() = default;
  SequenceEncoder(ParameterStore& store, const std::string& prefix, Eigen::Index input_width, Eigen::Index d_model,
                  std::mt19937_64& rng)
      : mlp_(store, prefix + ".mlp", input_width, d_model, d_model, rng), gru_(store, prefix + ".gru", d_model, d_model, rng) {}

  // n x d_model final states.
  ad::Var encode(const PaddedSequence& seq) const {
    const auto steps = static_cast<Eigen::Index>(seq.steps.size());
    const Eigen::Index n = seq.mask.rows();
    if (n == 0) return ad::constant(ad::Matrix::Zero(0, gru_.hidden_size()));
    // all elements through the perceptron in one batch, step-major
    ad::Matrix stacked(n * steps, seq.steps.front().cols());
    for (Eigen::Index t = 0; t < steps; ++t) {
      // padding rows are zeroed so arbitrary padded values cannot leak
      stacked.middleRows(t * n, n) = seq.steps[static_cast<std::size_t>(t)].array().colwise() * seq.mask.col(t).array();
    }
    const auto embedded = mlp_(ad::constant(std::move(stacked)));
    auto h = gru_.zero_state(n);
    for (Eigen::Index t = 0; t < steps; ++t) {
      const Eigen::VectorXd m = seq.mask.col(t);
      if (m.isZero(0.0)) continue;
      h = gru_.masked_step(ad::slice_rows(embedded, t * n, n), h, m);
    }
    return h;
  }

  const Mlp& mlp() const { return mlp_; }
  const Gru& gru() const { return gru_; }

 private:
  Mlp mlp_;
  Gru gru_;
};

enum class AgentRole { target, surrounding };

// Three independent parameter sets: lane nodes, the target agent and
// surrounding agents.
struct SequenceEncoders {
  SequenceEncoder lane;
  SequenceEncoder target;
  SequenceEncoder surrounding;
  FeatureScaling scaling;

  SequenceEncoders() = default;
  SequenceEncoders(ParameterStore& store, const std::string& prefix, Eigen::Index d_model, std::mt19937_64& rng,
                   FeatureScaling s = {})
      : lane(store, prefix + ".lane", kLanePoseFeatures, d_model, rng),
        target(store, prefix + ".target", kAgentStateFeatures, d_model, rng),
        surrounding(store, prefix + ".surrounding", kAgentStateFeatures, d_model, rng),
        scaling(s) {}

  const SequenceEncoder& for_role(AgentRole role) const { return role == AgentRole::target ? target : surrounding; }
};

// Rows follow lane_graph.nodes order.
inline ad::Var encode_lane_nodes(const LaneGraph& graph, const SequenceEncoders& enc) {
  return enc.lane.encode(lane_sequences(graph, enc.scaling));
}

inline ad::Var encode_agent_track(const AgentTrack& track, AgentRole role, const SequenceEncoders& enc) {
  return enc.for_role(role).encode(track_sequences({&track}, enc.scaling));
}

// Rows follow `tracks` order.
inline ad::Var encode_agent_tracks(const std::vector<const AgentTrack*>& tracks, AgentRole role,
                                   const SequenceEncoders& enc) {
  return enc.for_role(role).encode(track_sequences(tracks, enc.scaling));
}

}  // namespace sf
