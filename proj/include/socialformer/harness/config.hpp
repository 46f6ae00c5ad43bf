#pragma once

// Run configuration: every hyperparameter the model and the training loop
// consume. Stored as flat `key = value` text, one entry per line; `#` starts
// a comment. Unknown keys are rejected.

#include "socialformer/core/errors.hpp"

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

namespace sf {

struct RunConfig {
  // model
  int d_model = 32;
  int heads = 2;
  int layers = 1;
  int k = 64;
  int K = 10;
  int d_z = 16;
  int decoder_hidden = 64;
  int m_surr = 16;
  std::string surround_membership = "both";
  int lane_rounds = 2;
  double position_scale = 10.0;
  double speed_scale = 10.0;
  double attr_distance_scale = 50.0;
  double attr_path_scale = 50.0;
  bool freeze_edge_attr = false;
  int kmeans_max_iterations = 100;
  double kmeans_tolerance = 1e-6;

  // objective and optimiser
  double lambda1 = 1.0;
  double lambda2 = 0.5;
  double learning_rate = 0.001;
  std::string lr_schedule = "constant";
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  // loop
  int batch_size = 8;
  int epochs = 10;
  int max_steps = 0;   // 0: no cap
  int eval_every = 1;  // epochs between evaluations; 0: only after the last epoch
  std::uint64_t seed = 0;

  // files
  std::string train_scenes;
  std::string val_scenes;
  std::string checkpoint;
  std::string step_log;
  std::string epoch_log;

  bool operator==(const RunConfig&) const = default;
};

namespace config_detail {

inline std::string format(int v) { return std::to_string(v); }
inline std::string format(std::uint64_t v) { return std::to_string(v); }
inline std::string format(bool v) { return v ? "true" : "false"; }
inline std::string format(const std::string& v) { return v; }
inline std::string format(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
void parse_number(std::string_view key, std::string_view text, T& out) {
  const auto* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(text.data(), end, out);
  if (ec != std::errc() || p != end) throw ConfigError("config key '" + std::string(key) + "': cannot parse '" + std::string(text) + "'");
}

inline void parse(std::string_view key, std::string_view text, int& out) { parse_number(key, text, out); }
inline void parse(std::string_view key, std::string_view text, std::uint64_t& out) { parse_number(key, text, out); }
inline void parse(std::string_view key, std::string_view text, double& out) { parse_number(key, text, out); }
inline void parse(std::string_view, std::string_view text, std::string& out) { out = std::string(text); }
inline void parse(std::string_view key, std::string_view text, bool& out) {
  if (text == "true" || text == "1") {
    out = true;
  } else if (text == "false" || text == "0") {
    out = false;
  } else {
    throw ConfigError("config key '" + std::string(key) + "': expected true or false");
  }
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace config_detail

// Calls f(name, field) for every field, in file order.
template <class C, class F>
void visit_fields(C& c, F&& f) {
  f("d_model", c.d_model);
  f("heads", c.heads);
  f("layers", c.layers);
  f("k", c.k);
  f("K", c.K);
  f("d_z", c.d_z);
  f("decoder_hidden", c.decoder_hidden);
  f("m_surr", c.m_surr);
  f("surround_membership", c.surround_membership);
  f("lane_rounds", c.lane_rounds);
  f("position_scale", c.position_scale);
  f("speed_scale", c.speed_scale);
  f("attr_distance_scale", c.attr_distance_scale);
  f("attr_path_scale", c.attr_path_scale);
  f("freeze_edge_attr", c.freeze_edge_attr);
  f("kmeans_max_iterations", c.kmeans_max_iterations);
  f("kmeans_tolerance", c.kmeans_tolerance);
  f("lambda1", c.lambda1);
  f("lambda2", c.lambda2);
  f("learning_rate", c.learning_rate);
  f("lr_schedule", c.lr_schedule);
  f("weight_decay", c.weight_decay);
  f("beta1", c.beta1);
  f("beta2", c.beta2);
  f("adam_eps", c.adam_eps);
  f("batch_size", c.batch_size);
  f("epochs", c.epochs);
  f("max_steps", c.max_steps);
  f("eval_every", c.eval_every);
  f("seed", c.seed);
  f("train_scenes", c.train_scenes);
  f("val_scenes", c.val_scenes);
  f("checkpoint", c.checkpoint);
  f("step_log", c.step_log);
  f("epoch_log", c.epoch_log);
}

inline void check_config(const RunConfig& c) {
  auto positive = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("config: ") + what);
  };
  positive(c.d_model > 0 && c.heads > 0 && c.d_model % c.heads == 0, "d_model must be a positive multiple of heads");
  positive(c.layers > 0, "layers must be positive");
  positive(c.K > 0 && c.k >= c.K, "need k >= K > 0");
  positive(c.d_z > 0 && c.decoder_hidden > 0, "d_z and decoder_hidden must be positive");
  positive(c.m_surr >= 0 && c.lane_rounds >= 0, "m_surr and lane_rounds must be non-negative");
  positive(c.position_scale > 0 && c.speed_scale > 0, "feature scales must be positive");
  positive(c.attr_distance_scale > 0 && c.attr_path_scale > 0, "attribute scales must be positive");
  positive(c.kmeans_max_iterations > 0 && c.kmeans_tolerance >= 0, "bad clustering limits");
  positive(c.lambda1 >= 0 && c.lambda2 >= 0, "loss weights must be non-negative");
  positive(c.learning_rate > 0 && c.weight_decay >= 0, "learning_rate > 0 and weight_decay >= 0 required");
  positive(c.beta1 >= 0 && c.beta1 < 1 && c.beta2 >= 0 && c.beta2 < 1 && c.adam_eps > 0, "bad moment parameters");
  positive(c.lr_schedule == "constant" || c.lr_schedule == "cosine", "lr_schedule must be constant or cosine");
  positive(c.lr_schedule != "cosine" || c.max_steps > 0, "the cosine schedule needs max_steps > 0");
  positive(c.batch_size > 0 && c.epochs > 0 && c.max_steps >= 0 && c.eval_every >= 0, "bad loop limits");
  positive(c.surround_membership == "both" || c.surround_membership == "in" || c.surround_membership == "out",
           "surround_membership must be both, in or out");
}

inline std::string config_to_text(const RunConfig& c) {
  std::string out;
  visit_fields(c, [&](const char* name, const auto& v) { out += std::string(name) + " = " + config_detail::format(v) + "\n"; });
  return out;
}

inline RunConfig config_from_text(std::string_view text) {
  RunConfig c;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = config_detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const auto key = config_detail::trim(line.substr(0, eq));
    const auto value = config_detail::trim(line.substr(eq + 1));
    bool known = false;
    visit_fields(c, [&](const char* name, auto& field) {
      if (key != name) return;
      config_detail::parse(key, value, field);
      known = true;
    });
    if (!known) throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
  }
  check_config(c);
  return c;
}

inline RunConfig read_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_text(ss.str());
}

}  // namespace sf
