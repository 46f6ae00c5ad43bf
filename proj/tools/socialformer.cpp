// socialformer: synth | train | eval | predict | plot

#include "CLI11.hpp"

#include "socialformer/harness/checkpoint.hpp"
#include "socialformer/harness/output.hpp"
#include "socialformer/harness/training.hpp"
#include "socialformer/scenario_synth.hpp"

#include <cstdio>
#include <iostream>

namespace {

using namespace sf;

int run_synth(const std::string& topology, int count, std::uint64_t seed, int agents, int pedestrians, double noise,
              const std::string& out) {
  std::optional<Topology> t;
  if (topology != "mixed") {
    t = topology_from(topology);
    if (!t) throw GenerationError("unknown topology '" + topology + "'");
  }
  SynthConfig cfg;
  cfg.n_agents = agents;
  cfg.n_pedestrians = pedestrians;
  cfg.seed = seed;
  cfg.noise_std = noise;
  const auto scenes = generate_scenes(cfg, count, t);
  write_scene_file(out, scenes);
  std::size_t empty = 0;
  for (const auto& s : scenes) empty += has_no_relations(s) ? 1 : 0;
  std::printf("wrote %zu scenes to %s (%zu without relations)\n", scenes.size(), out.c_str(), empty);
  return 0;
}

int run_train(const std::string& config_path) {
  const auto cfg = read_config(config_path);
  if (cfg.train_scenes.empty()) throw ConfigError("config: train_scenes is required");
  if (cfg.checkpoint.empty()) throw ConfigError("config: checkpoint is required");
  const auto train_set = read_scene_file(cfg.train_scenes);
  const auto val = cfg.val_scenes.empty() ? std::vector<Scene>{} : read_scene_file(cfg.val_scenes);
  const auto r = train(cfg, train_set, val);
  for (const auto& e : r.epochs) {
    std::printf("epoch %d  l_fr %.4f  l_gr %.4f  l_total %.4f", e.epoch, e.l_fr, e.l_gr, e.l_total);
    if (e.evaluated) std::printf("  ADE_5 %.3f  MR_5 %.3f  ADE_10 %.3f  MR_10 %.3f", e.at5.ade, e.at5.mr, e.at10.ade, e.at10.mr);
    std::printf("\n");
  }
  write_logs(r, cfg.step_log, cfg.epoch_log);
  save_checkpoint(*r.model, cfg.checkpoint);
  std::printf("%zu steps, checkpoint written to %s\n", r.steps.size(), cfg.checkpoint.c_str());
  return 0;
}

int run_eval(const std::string& ckpt, const std::string& scenes_path, int k) {
  const auto model = load_checkpoint(ckpt);
  const auto scenes = read_scene_file(scenes_path);
  const auto r = evaluate(*model, scenes, k);
  std::printf("scenes %zu\nADE_%d %.6f\nFDE_%d %.6f\nMR_%d %.6f\nempty_relation_scenes %zu\n", r.scenes, k, r.ade, k,
              r.fde, k, r.mr, r.empty_relation_scenes);
  return 0;
}

int run_predict(const std::string& ckpt, const std::string& scenes_path, const std::string& out) {
  const auto model = load_checkpoint(ckpt);
  const auto scenes = read_scene_file(scenes_path);
  std::vector<PredictionSet> preds;
  for (const auto& s : scenes) preds.push_back(model->predict(s));
  write_predictions(out, scenes, preds);
  std::printf("wrote %zu predictions to %s\n", preds.size(), out.c_str());
  return 0;
}

int run_plot(const std::string& ckpt, const std::string& scenes_path, const std::string& scene_id,
             const std::string& out) {
  const auto model = load_checkpoint(ckpt);
  const auto scenes = read_scene_file(scenes_path);
  const auto& s = find_scene(scenes, scene_id);
  write_svg(out, render_svg(s, model->predict(s)));
  std::printf("wrote %s\n", out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SocialFormer trajectory prediction"};
  app.require_subcommand(1);

  std::string topology = "mixed", out, config, ckpt, scenes, scene_id;
  int count = 10, agents = 3, pedestrians = 1, k = 5;
  std::uint64_t seed = 0;
  double noise = 0.0;

  auto* synth = app.add_subcommand("synth", "generate synthetic scenes");
  synth->add_option("--topology", topology, "straight, curve, lane_change, intersection, roundabout or mixed");
  synth->add_option("--count", count, "number of scenes")->check(CLI::PositiveNumber);
  synth->add_option("--seed", seed, "seed of the first scene; later scenes use seed + i");
  synth->add_option("--agents", agents, "vehicles per scene, including the target")->check(CLI::PositiveNumber);
  synth->add_option("--pedestrians", pedestrians, "pedestrians per scene")->check(CLI::NonNegativeNumber);
  synth->add_option("--noise-std", noise, "observation noise in metres")->check(CLI::NonNegativeNumber);
  synth->add_option("--out", out, "scene file to write")->required();

  auto* tr = app.add_subcommand("train", "train a model");
  tr->add_option("--config", config, "key = value config file")->required();

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  ev->add_option("--ckpt", ckpt)->required();
  ev->add_option("--scenes", scenes)->required();
  ev->add_option("--k", k, "number of modes scored")->check(CLI::IsMember({5, 10}));

  auto* pr = app.add_subcommand("predict", "write predictions as JSON lines");
  pr->add_option("--ckpt", ckpt)->required();
  pr->add_option("--scenes", scenes)->required();
  pr->add_option("--out", out)->required();

  auto* pl = app.add_subcommand("plot", "render one scene with its predictions to SVG");
  pl->add_option("--ckpt", ckpt)->required();
  pl->add_option("--scenes", scenes)->required();
  pl->add_option("--scene-id", scene_id)->required();
  pl->add_option("--out", out)->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*synth) return run_synth(topology, count, seed, agents, pedestrians, noise, out);
    if (*tr) return run_train(config);
    if (*ev) return run_eval(ckpt, scenes, k);
    if (*pr) return run_predict(ckpt, scenes, out);
    if (*pl) return run_plot(ckpt, scenes, scene_id, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
