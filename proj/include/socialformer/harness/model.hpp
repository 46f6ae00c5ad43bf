#pragma once

// The full network: sequence encoders, dynamic graph encoder, fusion and the
// two decoders, with the combined winner-takes-all objective.

#include "socialformer/dynamic_graph_encoder.hpp"
#include "socialformer/fusion.hpp"
#include "socialformer/harness/config.hpp"
#include "socialformer/predictor.hpp"
#include "socialformer/sequence_encoders.hpp"

#include <string>
#include <vector>

namespace sf {

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finaliser over the combination
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t string_seed(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

struct ForwardResult {
  ad::Var samples;      // k x kTrajWidth
  ad::Var graph_modes;  // K x kTrajWidth
  ad::Var l_fr;
  ad::Var l_gr;
  ad::Var l_total;
};

class SocialFormer {
 public:
  explicit SocialFormer(const RunConfig& cfg) : cfg_(cfg) {
    check_config(cfg);
    std::mt19937_64 rng(mix_seed(cfg.seed, 0));
    const FeatureScaling scaling{cfg.position_scale, cfg.speed_scale};
    encoders_ = SequenceEncoders(store_, "encoder", cfg.d_model, rng, scaling);

    DynamicGraphConfig dyn;
    dyn.d_model = cfg.d_model;
    dyn.heads = cfg.heads;
    dyn.layers = cfg.layers;
    dyn.m_surr = cfg.m_surr;
    dyn.membership = surround_membership_from(cfg.surround_membership);
    dyn.scaling = scaling;
    for (auto& s : dyn.standardization) s.scale = {1.0 / cfg.attr_distance_scale, 1.0 / cfg.attr_path_scale, 1.0};
    graph_ = DynamicGraphEncoder(store_, dyn, rng);

    fusion_ = Fusion(store_, FusionConfig{cfg.d_model, cfg.heads, cfg.lane_rounds}, rng);

    PredictorConfig pred{cfg.d_model, cfg.d_z, cfg.decoder_hidden, cfg.k, cfg.K};
    sampler_ = SampleDecoder(store_, pred, rng);
    graph_head_ = GraphDecoder(store_, pred, rng);
    if (cfg.freeze_edge_attr) freeze_edge_attributes(store_);
    store_.seal();
  }

  SocialFormer(const SocialFormer&) = delete;
  SocialFormer& operator=(const SocialFormer&) = delete;

  const RunConfig& config() const { return cfg_; }
  ParameterStore& store() { return store_; }
  const ParameterStore& store() const { return store_; }
  const DynamicGraphEncoder& graph_encoder() const { return graph_; }

  ForwardResult forward(const Scene& scene, std::uint64_t z_seed) const {
    const auto& target = scene.target();
    const auto& now = target.states.back();
    const Point2 origin{now.x, now.y};

    const auto h_lane = encode_lane_nodes(scene.lane_graph, encoders_);
    const auto h_target = encode_agent_track(target, AgentRole::target, encoders_);
    std::vector<const AgentTrack*> others;
    for (const auto& t : scene.tracks) {
      if (t.id != scene.target_id) others.push_back(&t);
    }
    const auto h_surr = others.empty() ? ad::constant(ad::Matrix::Zero(0, cfg_.d_model))
                                       : encode_agent_tracks(others, AgentRole::surrounding, encoders_);
    const auto g = graph_.encode(scene);

    const auto sa = fusion_.fuse_surrounding(h_surr, g.g_surr, g.g_surr_mask);
    const auto lanes = fusion_.fuse_lanes(h_lane, sa, scene.lane_graph);
    const auto ta = fusion_.fuse_target(h_target, g.g_target_steps);
    const auto f = fusion_.fuse_final(ta, lanes);

    ForwardResult r;
    r.samples = decode_modes(f, sampler_, cfg_.k, z_seed, origin);
    r.graph_modes = graph_decode(g.g_target, graph_head_, origin);
    const auto gt = flatten(scene.future);
    r.l_fr = wta_loss(r.samples, gt);
    r.l_gr = wta_loss(r.graph_modes, gt);
    r.l_total = combined_loss(r.l_fr, r.l_gr, cfg_.lambda1, cfg_.lambda2);
    return r;
  }

  // Latent draws used at inference are a function of the scene id only.
  std::uint64_t inference_seed(const Scene& scene) const { return mix_seed(cfg_.seed, string_seed(scene.scene_id)); }

  PredictionSet predict(const Scene& scene) const {
    const auto r = forward(scene, inference_seed(scene));
    PredictionSet p;
    auto [modes, scores] = cluster_modes(r.samples.value(), cfg_.K, inference_seed(scene),
                                         KMeansOptions{cfg_.kmeans_max_iterations, cfg_.kmeans_tolerance});
    p.modes = std::move(modes);
    p.scores = std::move(scores);
    p.aux_modes = r.graph_modes.value();
    return p;
  }

 private:
  RunConfig cfg_;
  ParameterStore store_;
  SequenceEncoders encoders_;
  DynamicGraphEncoder graph_;
  Fusion fusion_;
  SampleDecoder sampler_;
  GraphDecoder graph_head_;
};

}  // namespace sf
