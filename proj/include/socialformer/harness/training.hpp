#pragma once

// Reference (single-threaded, deterministic) training and evaluation loops.

#include "socialformer/harness/model.hpp"
#include "socialformer/harness/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

namespace sf {

struct StepRecord {
  long step = 0;
  int epoch = 0;
  double l_fr = 0.0;  // batch means
  double l_gr = 0.0;
  double l_total = 0.0;
};

struct EvalReport {
  std::size_t scenes = 0;
  int k_eval = 0;
  double ade = 0.0;
  double fde = 0.0;
  double mr = 0.0;
  std::size_t empty_relation_scenes = 0;
};

struct EpochRecord {
  int epoch = 0;
  long steps = 0;
  double l_fr = 0.0;  // means over the epoch's steps
  double l_gr = 0.0;
  double l_total = 0.0;
  bool evaluated = false;
  EvalReport at5, at10;
};

inline bool has_no_relations(const Scene& s) {
  return std::all_of(s.interaction_graphs.begin(), s.interaction_graphs.end(),
                     [](const InteractionGraph& g) { return g.edges.empty(); });
}

inline EvalReport evaluate(const SocialFormer& model, const std::vector<Scene>& scenes, int k_eval,
                           std::vector<PredictionSet>* predictions = nullptr) {
  if (scenes.empty()) throw ConfigError("evaluation needs at least one scene");
  if (k_eval > model.config().K) throw ConfigError("k_eval exceeds the number of predicted modes");
  EvalReport r;
  r.k_eval = k_eval;
  for (const auto& s : scenes) {
    const auto p = model.predict(s);
    const auto m = metrics(p, flatten(s.future), k_eval);
    r.ade += m.ade;
    r.fde += m.fde;
    r.mr += m.mr;
    r.empty_relation_scenes += has_no_relations(s) ? 1 : 0;
    if (predictions) predictions->push_back(p);
  }
  r.scenes = scenes.size();
  const double n = static_cast<double>(scenes.size());
  r.ade /= n;
  r.fde /= n;
  r.mr /= n;
  return r;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string step_log_header() { return "step,epoch,l_fr,l_gr,l_total"; }

inline std::string to_csv(const StepRecord& s) {
  return std::to_string(s.step) + "," + std::to_string(s.epoch) + "," + format_double(s.l_fr) + "," +
         format_double(s.l_gr) + "," + format_double(s.l_total);
}

inline std::string epoch_log_header() {
  return "epoch,steps,l_fr,l_gr,l_total,ade_5,fde_5,mr_5,ade_10,fde_10,mr_10,eval_scenes";
}

inline std::string to_csv(const EpochRecord& e) {
  auto f = [&](double v) { return e.evaluated ? format_double(v) : std::string(); };
  return std::to_string(e.epoch) + "," + std::to_string(e.steps) + "," + format_double(e.l_fr) + "," +
         format_double(e.l_gr) + "," + format_double(e.l_total) + "," + f(e.at5.ade) + "," + f(e.at5.fde) + "," +
         f(e.at5.mr) + "," + f(e.at10.ade) + "," + f(e.at10.fde) + "," + f(e.at10.mr) + "," +
         (e.evaluated ? std::to_string(e.at5.scenes) : std::string());
}

// "constant", or "cosine": half a cosine from learning_rate down to zero over
// max_steps.
inline double scheduled_learning_rate(const RunConfig& cfg, long step) {
  if (cfg.lr_schedule != "cosine") return cfg.learning_rate;
  const double u = static_cast<double>(step) / static_cast<double>(cfg.max_steps);
  return 0.5 * cfg.learning_rate * (1.0 + std::cos(std::numbers::pi * std::min(u, 1.0)));
}

struct TrainResult {
  std::unique_ptr<SocialFormer> model;
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;
};

// Called after every optimiser step; return false to stop early.
using StepObserver = std::function<bool(const StepRecord&, const SocialFormer&)>;

// Trains on `train`; `val` (if non-empty) is used for the per-epoch metrics,
// otherwise the training scenes are evaluated.
inline TrainResult train(const RunConfig& cfg, const std::vector<Scene>& train_set, const std::vector<Scene>& val,
                         const StepObserver& observer = {}) {
  if (train_set.empty()) throw ConfigError("training needs at least one scene");
  TrainResult out;
  out.model = std::make_unique<SocialFormer>(cfg);
  auto& model = *out.model;
  AdamW opt({cfg.learning_rate, cfg.weight_decay, cfg.beta1, cfg.beta2, cfg.adam_eps});
  const auto& eval_set = val.empty() ? train_set : val;
  const bool eval_top10 = cfg.K >= 10;

  std::vector<std::size_t> order(train_set.size());
  long step = 0;
  bool stop = false;
  for (int epoch = 0; epoch < cfg.epochs && !stop; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 shuffle_rng(mix_seed(cfg.seed, 1000003ULL + static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    EpochRecord rec;
    rec.epoch = epoch;
    for (std::size_t start = 0; start < order.size() && !stop; start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      model.store().zero_grad();
      std::vector<ad::Var> fr, gr;
      for (std::size_t i = start; i < end; ++i) {
        const auto& scene = train_set[order[i]];
        const auto r = model.forward(scene, mix_seed(mix_seed(cfg.seed, static_cast<std::uint64_t>(step)), order[i]));
        if (!std::isfinite(r.l_fr.scalar()) || !std::isfinite(r.l_gr.scalar())) {
          throw TrainingError("non-finite loss on scene '" + scene.scene_id + "' at step " + std::to_string(step));
        }
        fr.push_back(r.l_fr);
        gr.push_back(r.l_gr);
      }
      const double inv = 1.0 / static_cast<double>(fr.size());
      auto sum_fr = fr.front(), sum_gr = gr.front();
      for (std::size_t i = 1; i < fr.size(); ++i) {
        sum_fr = sum_fr + fr[i];
        sum_gr = sum_gr + gr[i];
      }
      const auto mean_fr = ad::scale(sum_fr, inv), mean_gr = ad::scale(sum_gr, inv);
      const auto total = combined_loss(mean_fr, mean_gr, cfg.lambda1, cfg.lambda2);
      ad::backward(total);
      opt.set_learning_rate(scheduled_learning_rate(cfg, step));
      opt.step(model.store());

      StepRecord s{step, epoch, mean_fr.scalar(), mean_gr.scalar(), total.scalar()};
      out.steps.push_back(s);
      rec.l_fr += s.l_fr;
      rec.l_gr += s.l_gr;
      rec.l_total += s.l_total;
      ++rec.steps;
      ++step;
      if (observer && !observer(s, model)) stop = true;
      if (cfg.max_steps > 0 && step >= cfg.max_steps) stop = true;
    }
    if (rec.steps > 0) {
      rec.l_fr /= static_cast<double>(rec.steps);
      rec.l_gr /= static_cast<double>(rec.steps);
      rec.l_total /= static_cast<double>(rec.steps);
    }
    const bool last = stop || epoch + 1 == cfg.epochs;
    if ((cfg.eval_every > 0 && (epoch + 1) % cfg.eval_every == 0) || last) {
      rec.evaluated = true;
      rec.at5 = evaluate(model, eval_set, std::min(5, cfg.K));
      rec.at10 = eval_top10 ? evaluate(model, eval_set, 10) : rec.at5;
    }
    out.epochs.push_back(rec);
  }
  return out;
}

inline void write_logs(const TrainResult& r, const std::string& step_path, const std::string& epoch_path) {
  auto dump = [](const std::string& path, const std::string& header, const auto& rows) {
    if (path.empty()) return;
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::system_error(errno, std::generic_category(), "cannot write log '" + path + "'");
    f << header << "\n";
    for (const auto& row : rows) f << to_csv(row) << "\n";
  };
  dump(step_path, step_log_header(), r.steps);
  dump(epoch_path, epoch_log_header(), r.epochs);
}

}  // namespace sf
