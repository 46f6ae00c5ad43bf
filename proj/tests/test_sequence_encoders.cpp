#include "scene_fixtures.hpp"
#include "socialformer/sequence_encoders.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <limits>

using namespace sf;
using sf::testing::random_matrix;

namespace {

SequenceEncoders make(ParameterStore& store, std::uint64_t seed, Eigen::Index d = 8) {
  std::mt19937_64 rng(seed);
  return SequenceEncoders(store, "enc", d, rng);
}

TEST(LaneEncoder, SinglePoseIsOneRecurrentStep) {
  ParameterStore store;
  auto enc = make(store, 1);
  sf::testing::randomize_store(store, 2);
  LaneGraph g;
  g.nodes.push_back(sf::testing::straight_node("solo", 3.0, -2.0, 1));
  const auto out = encode_lane_nodes(g, enc);
  const auto x = ad::constant(lane_pose_features(g.nodes[0].poses[0], enc.scaling));
  const auto expect = enc.lane.gru().step(enc.lane.mlp()(x), enc.lane.gru().zero_state(1));
  EXPECT_LT((out.value() - expect.value()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(LaneEncoder, PaddingValuesNeverMatter) {
  ParameterStore store;
  auto enc = make(store, 3);
  sf::testing::randomize_store(store, 4);
  LaneGraph g;
  g.nodes.push_back(sf::testing::straight_node("a", 0.0, 0.0, 4));
  g.nodes.push_back(sf::testing::straight_node("b", 0.0, 3.0, 10));
  auto seq = lane_sequences(g, enc.scaling);
  const auto clean = enc.lane.encode(seq).value();
  std::mt19937_64 rng(5);
  for (int t = 4; t < kMaxLanePoses; ++t) seq.steps[static_cast<std::size_t>(t)].row(0) = random_matrix(1, 5, rng, 100.0);
  const auto noisy = enc.lane.encode(seq).value();
  EXPECT_TRUE((clean.array() == noisy.array()).all());
  // and the row equals encoding the short node alone
  LaneGraph alone;
  alone.nodes.push_back(g.nodes[0]);
  EXPECT_TRUE((encode_lane_nodes(alone, enc).value().row(0).array() == clean.row(0).array()).all());
}

TEST(LaneEncoder, NonFiniteFeatureNamesNode) {
  ParameterStore store;
  auto enc = make(store, 6);
  LaneGraph g;
  g.nodes.push_back(sf::testing::straight_node("broken", 0.0, 0.0, 3));
  g.nodes[0].poses[1].x = std::numeric_limits<double>::quiet_NaN();
  try {
    (void)encode_lane_nodes(g, enc);
    FAIL();
  } catch (const EncodingError& e) {
    EXPECT_NE(std::string(e.what()).find("broken"), std::string::npos);
  }
}

TEST(AgentEncoder, ZeroWeightsGiveClosedFormState) {
  // With every weight and bias zero: r = z = 1/2, n = 0, so h' = h / 2 and
  // the state stays exactly zero from the zero start.
  ParameterStore store;
  auto enc = make(store, 7);
  for (const auto& [path, e] : store.entries()) {
    auto v = e.var;
    v.mutable_value().setZero();
  }
  const auto t = sf::testing::constant_track("a", AgentType::vehicle, 1.0, 2.0, 5.0);
  EXPECT_TRUE(encode_agent_track(t, AgentRole::target, enc).value().isZero(0.0));
  // nonzero candidate bias b: n = tanh(b) constant, h_k = n (1 - 2^-k)
  const double b = 0.3;
  store.get("enc.target.gru.b_input").mutable_value().rightCols(8).setConstant(b);
  const double expect = std::tanh(b) * (1.0 - std::pow(0.5, kObservedFrames));
  const auto h = encode_agent_track(t, AgentRole::target, enc).value();
  for (Eigen::Index c = 0; c < 8; ++c) EXPECT_NEAR(h(0, c), expect, 1e-15);
}

TEST(AgentEncoder, AbsentFramesAreSkipped) {
  ParameterStore store;
  auto enc = make(store, 8);
  sf::testing::randomize_store(store, 9);
  auto late = sf::testing::constant_track("late", AgentType::vehicle, 0.0, 0.0, 4.0);
  late.states[0].present = false;
  late.states[1].present = false;
  late.states[0].x = 1e6;  // garbage in absent slots is ignored
  auto shifted = late;
  shifted.states[0].x = -7.0;
  EXPECT_TRUE((encode_agent_track(late, AgentRole::surrounding, enc).value().array() ==
               encode_agent_track(shifted, AgentRole::surrounding, enc).value().array()).all());
  auto gone = late;
  for (auto& s : gone.states) s.present = false;
  EXPECT_THROW((void)encode_agent_track(gone, AgentRole::surrounding, enc), EncodingError);
}

TEST(AgentEncoder, RolesUseSeparateParameters) {
  ParameterStore store;
  auto enc = make(store, 10);
  const auto t = sf::testing::constant_track("a", AgentType::vehicle, 1.0, 2.0, 5.0);
  const auto a = encode_agent_track(t, AgentRole::target, enc).value();
  const auto b = encode_agent_track(t, AgentRole::surrounding, enc).value();
  EXPECT_GT((a - b).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(AgentEncoder, BatchRowsEqualSingleEncodings) {
  ParameterStore store;
  auto enc = make(store, 11);
  sf::testing::randomize_store(store, 12);
  const auto a = sf::testing::constant_track("a", AgentType::vehicle, 1.0, 2.0, 5.0);
  auto b = sf::testing::constant_track("b", AgentType::human, -3.0, 4.0, 1.0);
  b.states[0].present = false;
  const auto both = encode_agent_tracks({&a, &b}, AgentRole::surrounding, enc).value();
  EXPECT_LT((both.row(0) - encode_agent_track(a, AgentRole::surrounding, enc).value()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((both.row(1) - encode_agent_track(b, AgentRole::surrounding, enc).value()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(EncoderGradient, AllParametersMatchFiniteDifferences) {
  ParameterStore store;
  auto enc = make(store, 13);
  sf::testing::randomize_store(store, 14);
  const auto scene = sf::testing::small_scene();
  std::vector<const AgentTrack*> others{&scene.tracks[1], &scene.tracks[2]};
  auto loss = [&] {
    auto lanes = encode_lane_nodes(scene.lane_graph, enc);
    auto tgt = encode_agent_track(scene.tracks[0], AgentRole::target, enc);
    auto sur = encode_agent_tracks(others, AgentRole::surrounding, enc);
    return ad::sum(ad::square(lanes)) + ad::sum(tgt) + ad::sum(ad::mul(sur, sur));
  };
  const auto report = sf::testing::grad_check_store(store, loss);
  EXPECT_EQ(report.checked, store.scalar_count());
  EXPECT_TRUE(report.failures.empty()) << report.failures.size() << " failures, worst " << report.worst;
}

}  // namespace
