#include "scene_fixtures.hpp"
#include "test_support.hpp"

#include "socialformer/harness/checkpoint.hpp"
#include "socialformer/harness/output.hpp"
#include "socialformer/harness/training.hpp"
#include "socialformer/scenario_synth.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>

namespace sf {
namespace {

RunConfig tiny_config() {
  RunConfig c;
  c.d_model = 8;
  c.heads = 2;
  c.d_z = 4;
  c.decoder_hidden = 16;
  c.k = 12;
  c.K = 10;
  c.m_surr = 4;
  c.batch_size = 4;
  c.epochs = 1;
  c.seed = 3;
  return c;
}

std::vector<Scene> few_scenes(int n, std::uint64_t seed = 40) {
  SynthConfig sc;
  sc.n_agents = 3;
  sc.n_pedestrians = 1;
  sc.seed = seed;
  return generate_scenes(sc, n, std::nullopt);
}

std::string step_log(const TrainResult& r) {
  std::string s;
  for (const auto& x : r.steps) s += to_csv(x) + "\n";
  return s;
}

std::string epoch_log(const TrainResult& r) {
  std::string s;
  for (const auto& x : r.epochs) s += to_csv(x) + "\n";
  return s;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("sf_harness_" + name);
}

TEST(RunConfig, TextRoundTripIsExact) {
  RunConfig c = tiny_config();
  c.learning_rate = 0.1 + 0.2;  // not representable in short decimal
  c.lambda2 = 1.0 / 3.0;
  c.surround_membership = "in";
  c.freeze_edge_attr = true;
  c.train_scenes = "a/b.jsonl";
  c.seed = 18446744073709551615ULL;
  EXPECT_EQ(config_from_text(config_to_text(c)), c);
}

TEST(RunConfig, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(config_from_text("d_modle = 8\n"), ConfigError);
  EXPECT_THROW(config_from_text("d_model = eight\n"), ConfigError);
  EXPECT_THROW(config_from_text("d_model 8\n"), ConfigError);
  EXPECT_THROW(config_from_text("d_model = 9\nheads = 2\n"), ConfigError);
  EXPECT_THROW(config_from_text("lr_schedule = cosine\n"), ConfigError);
  EXPECT_EQ(config_from_text("# comment\n  epochs = 3  # trailing\n\n").epochs, 3);
}

TEST(Training, IdenticalSeededRunsGiveIdenticalLogs) {
  const auto scenes = few_scenes(10);
  const auto cfg = tiny_config();
  const auto a = train(cfg, scenes, {});
  const auto b = train(cfg, scenes, {});
  ASSERT_EQ(a.steps.size(), 3u);
  EXPECT_EQ(step_log(a), step_log(b));
  EXPECT_EQ(epoch_log(a), epoch_log(b));
  EXPECT_EQ(checkpoint_bytes(*a.model), checkpoint_bytes(*b.model));
}

TEST(Training, LoggedTotalIsTheWeightedSum) {
  const auto scenes = few_scenes(4);
  for (double l2 : {0.0, 0.2, 0.5, 1.0}) {
    auto cfg = tiny_config();
    cfg.lambda1 = 0.7;
    cfg.lambda2 = l2;
    cfg.batch_size = 2;
    for (const auto& s : train(cfg, scenes, {}).steps) {
      EXPECT_EQ(s.l_total, 0.7 * s.l_fr + l2 * s.l_gr);
    }
  }
}

TEST(Training, ZeroGraphWeightLeavesOnlyWeightDecayOnGraphHead) {
  const auto scenes = few_scenes(2);
  auto cfg = tiny_config();
  cfg.lambda2 = 0.0;
  cfg.max_steps = 1;
  SocialFormer before(cfg);
  const auto r = train(cfg, scenes, {});
  const double decay = 1.0 - cfg.learning_rate * cfg.weight_decay;
  const auto paths = before.store().paths_with_prefix("predictor.graph_head.");
  ASSERT_FALSE(paths.empty());
  for (const auto& p : paths) {
    ad::Matrix expected = before.store().at(p).var.value();
    expected *= decay;
    EXPECT_EQ(r.model->store().at(p).var.value(), expected) << p;
  }
  // the sample head does learn
  const auto& w0 = before.store().at("predictor.sample_head.fc1.weight").var.value();
  const auto& w1 = r.model->store().at("predictor.sample_head.fc1.weight").var.value();
  EXPECT_GT((w1 - w0 * decay).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(Training, FrozenEdgeAttributesStayZero) {
  const auto scenes = few_scenes(4);
  auto cfg = tiny_config();
  cfg.freeze_edge_attr = true;
  const auto r = train(cfg, scenes, {});
  const auto paths = r.model->store().paths_with_prefix("ehgt.");
  int p_attr = 0;
  for (const auto& p : paths) {
    if (p.find("P_attr") == std::string::npos) continue;
    ++p_attr;
    EXPECT_EQ(r.model->store().at(p).var.value().cwiseAbs().maxCoeff(), 0.0) << p;
  }
  EXPECT_EQ(p_attr, 4 * 2);
}

TEST(Training, NonFiniteLossNamesSceneAndStep) {
  auto scenes = few_scenes(2);
  scenes[1].future[3].x = std::numeric_limits<double>::quiet_NaN();
  auto cfg = tiny_config();
  cfg.batch_size = 1;
  try {
    train(cfg, scenes, {});
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find(scenes[1].scene_id), std::string::npos) << what;
    EXPECT_NE(what.find("step "), std::string::npos) << what;
  }
}

TEST(Evaluate, EmptySceneListIsAnError) {
  SocialFormer m(tiny_config());
  EXPECT_THROW(evaluate(m, {}, 5), ConfigError);
}

TEST(Evaluate, TenModesNeverWorseThanFive) {
  const auto scenes = few_scenes(6);
  const auto r = train(tiny_config(), scenes, {});
  const auto at5 = evaluate(*r.model, scenes, 5);
  const auto at10 = evaluate(*r.model, scenes, 10);
  EXPECT_LE(at10.ade, at5.ade);
  EXPECT_LE(at10.fde, at5.fde);
  EXPECT_LE(at10.mr, at5.mr);
}

TEST(Evaluate, CountsScenesWithoutRelations) {
  auto scenes = few_scenes(3);
  for (auto& g : scenes[0].interaction_graphs) g.edges.clear();
  scenes.push_back(testing::minimal_scene());
  SocialFormer m(tiny_config());
  EXPECT_EQ(evaluate(m, scenes, 5).empty_relation_scenes, 2u);
}

TEST(Pipeline, ScenesWithoutRelationsGiveFiniteTrajectories) {
  auto scenes = few_scenes(5);
  for (auto& s : scenes) {
    for (auto& g : s.interaction_graphs) g.edges.clear();
  }
  scenes.push_back(testing::minimal_scene());
  SocialFormer m(tiny_config());
  for (const auto& s : scenes) {
    const auto p = m.predict(s);
    EXPECT_EQ(p.modes.rows(), 10);
    EXPECT_TRUE(p.modes.allFinite()) << s.scene_id;
    EXPECT_TRUE(p.aux_modes.allFinite()) << s.scene_id;
    EXPECT_TRUE(p.scores.allFinite()) << s.scene_id;
  }
}

TEST(Checkpoint, RoundTripReproducesEvaluationBitExactly) {
  const auto scenes = few_scenes(5);
  const auto r = train(tiny_config(), scenes, {});
  const auto path = temp_path("ckpt.bin");
  save_checkpoint(*r.model, path.string());
  const auto loaded = load_checkpoint(path.string());
  std::filesystem::remove(path);
  EXPECT_EQ(loaded->config(), r.model->config());
  for (int k : {5, 10}) {
    std::vector<PredictionSet> pa, pb;
    const auto a = evaluate(*r.model, scenes, k, &pa);
    const auto b = evaluate(*loaded, scenes, k, &pb);
    EXPECT_EQ(a.ade, b.ade);
    EXPECT_EQ(a.fde, b.fde);
    EXPECT_EQ(a.mr, b.mr);
    for (std::size_t i = 0; i < pa.size(); ++i) {
      EXPECT_EQ(prediction_line(scenes[i].scene_id, pa[i]), prediction_line(scenes[i].scene_id, pb[i]));
    }
  }
  EXPECT_EQ(checkpoint_bytes(*loaded), checkpoint_bytes(*r.model));
}

TEST(Checkpoint, KeepsFrozenFlags) {
  auto cfg = tiny_config();
  cfg.freeze_edge_attr = true;
  SocialFormer m(cfg);
  const auto loaded = checkpoint_from_bytes(checkpoint_bytes(m));
  EXPECT_FALSE(loaded->store().entries().at("ehgt.l0.P_attr.longitudinal.head0").trainable);
}

TEST(Checkpoint, RejectsDamagedFiles) {
  SocialFormer m(tiny_config());
  const auto bytes = checkpoint_bytes(m);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(checkpoint_from_bytes(bad_magic), ParseError);
  EXPECT_THROW(checkpoint_from_bytes(bytes.substr(0, bytes.size() - 3)), ParseError);
  EXPECT_THROW(checkpoint_from_bytes(bytes + "x"), ParseError);
  EXPECT_THROW(load_checkpoint("/nonexistent/dir/ckpt.bin"), std::system_error);
}

TEST(Output, PredictionLinesFollowTheSchema) {
  const auto scenes = few_scenes(2);
  SocialFormer m(tiny_config());
  const auto p = m.predict(scenes[0]);
  const auto j = nlohmann::json::parse(prediction_line(scenes[0].scene_id, p));
  EXPECT_EQ(j["schema"], "sf-pred/1");
  EXPECT_EQ(j["scene_id"], scenes[0].scene_id);
  ASSERT_EQ(j["modes"].size(), 10u);
  ASSERT_EQ(j["modes"][0].size(), static_cast<std::size_t>(kFutureSteps));
  EXPECT_EQ(j["modes"][2][5][1].get<double>(), p.modes(2, 11));
  EXPECT_EQ(j["scores"].size(), 10u);
  EXPECT_EQ(j["aux_modes"].size(), 10u);
  EXPECT_THROW(write_predictions("/nonexistent/dir/p.jsonl", scenes, {p, p}), std::system_error);
}

TEST(Output, PlotIsDeterministicAndChecksInputs) {
  const auto scenes = few_scenes(3);
  SocialFormer m(tiny_config());
  const auto& s = find_scene(scenes, scenes[1].scene_id);
  const auto a = render_svg(s, m.predict(s));
  const auto b = render_svg(s, m.predict(s));
  EXPECT_EQ(a, b);
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n') > 10, true);
  EXPECT_NE(a.find("<svg"), std::string::npos);
  const auto path = temp_path("plot.svg");
  write_svg(path.string(), a);
  EXPECT_GT(std::filesystem::file_size(path), 0u);
  std::filesystem::remove(path);
  EXPECT_THROW(find_scene(scenes, "no-such-scene"), ValidationError);
  EXPECT_THROW(write_svg("/nonexistent/dir/p.svg", a), std::system_error);
}

TEST(Model, EndToEndGradientsMatchFiniteDifferences) {
  auto cfg = tiny_config();
  cfg.k = 3;
  cfg.K = 2;
  cfg.decoder_hidden = 4;
  cfg.d_z = 2;
  SocialFormer m(cfg);
  const Scene s = testing::two_agent_scene(0.5);
  std::vector<std::pair<std::string, ad::Var>> vars;
  for (const auto& [p, e] : m.store().entries()) vars.emplace_back(p, e.var);
  const auto report = testing::grad_check_vars(vars, [&] { return m.forward(s, 11).l_total; });
  EXPECT_EQ(report.checked, m.store().scalar_count());
  EXPECT_TRUE(report.failures.empty()) << report.failures.size() << " failures, worst " << report.worst;
}

}  // namespace
}  // namespace sf
