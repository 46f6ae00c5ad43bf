#pragma once

// Multimodal trajectory decoding, mode clustering, losses and metrics.
// Trajectories are flattened rows of 2 * kFutureSteps values
// [x1, y1, x2, y2, ...] in the scene frame.

#include "socialformer/core/layers.hpp"
#include "socialformer/scene_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace sf {

inline constexpr Eigen::Index kTrajWidth = 2 * kFutureSteps;

inline Eigen::RowVectorXd flatten(const std::vector<Point2>& pts) {
  Eigen::RowVectorXd r(2 * static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    r(2 * static_cast<Eigen::Index>(i)) = pts[i].x;
    r(2 * static_cast<Eigen::Index>(i) + 1) = pts[i].y;
  }
  return r;
}

// Maps per-step offsets to positions relative to the start: column 2j + c
// sums offsets 2i + c for i <= j.
inline const ad::Matrix& cumulative_operator() {
  static const ad::Matrix c = [] {
    ad::Matrix m = ad::Matrix::Zero(kTrajWidth, kTrajWidth);
    for (Eigen::Index j = 0; j < kFutureSteps; ++j) {
      for (Eigen::Index i = 0; i <= j; ++i) {
        m(2 * i, 2 * j) = 1.0;
        m(2 * i + 1, 2 * j + 1) = 1.0;
      }
    }
    return m;
  }();
  return c;
}

inline ad::Var offsets_to_positions(const ad::Var& offsets, Point2 origin) {
  Eigen::RowVectorXd o(kTrajWidth);
  for (Eigen::Index j = 0; j < kFutureSteps; ++j) {
    o(2 * j) = origin.x;
    o(2 * j + 1) = origin.y;
  }
  return ad::add_row(ad::matmul(offsets, ad::constant(cumulative_operator())), ad::constant(o));
}

// k x d_z standard normal draws from a seeded generator.
inline ad::Matrix sample_latents(Eigen::Index k, Eigen::Index d_z, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  ad::Matrix z(k, d_z);
  for (Eigen::Index r = 0; r < k; ++r) {
    for (Eigen::Index c = 0; c < d_z; ++c) z(r, c) = n(rng);
  }
  return z;
}

struct PredictorConfig {
  Eigen::Index d_model = 32;
  Eigen::Index d_z = 16;
  Eigen::Index hidden = 64;
  int k = 64;
  int modes = 10;
};

class SampleDecoder {
 public:
  SampleDecoder() = default;
  SampleDecoder(ParameterStore& store, const PredictorConfig& cfg, std::mt19937_64& rng)
      : cfg_(cfg), mlp_(store, "predictor.sample_head", 2 * cfg.d_model + cfg.d_z, cfg.hidden, kTrajWidth, rng) {}

  const Mlp& mlp() const { return mlp_; }
  const PredictorConfig& config() const { return cfg_; }

  // f_fused: 1 x 2d; z: k x d_z  ->  k x kTrajWidth positions
  ad::Var decode(const ad::Var& f_fused, const ad::Matrix& z, Point2 origin) const {
    const std::vector<Eigen::Index> repeat(static_cast<std::size_t>(z.rows()), 0);
    const auto input = ad::concat_cols({ad::gather_rows(f_fused, repeat), ad::constant(z)});
    return offsets_to_positions(mlp_(input), origin);
  }

 private:
  PredictorConfig cfg_;
  Mlp mlp_;
};

inline ad::Var decode_modes(const ad::Var& f_fused, const SampleDecoder& dec, int k, std::uint64_t seed, Point2 origin) {
  if (k < dec.config().modes) throw ConfigError("sample count k must be at least the mode count K");
  return dec.decode(f_fused, sample_latents(k, dec.config().d_z, seed), origin);
}

// K independent branches decoding the graph embedding directly.
class GraphDecoder {
 public:
  GraphDecoder() = default;
  GraphDecoder(ParameterStore& store, const PredictorConfig& cfg, std::mt19937_64& rng) {
    for (int j = 0; j < cfg.modes; ++j) {
      branches_.emplace_back(store, "predictor.graph_head.branch" + std::to_string(j), cfg.d_model, cfg.hidden, kTrajWidth, rng);
    }
  }

  const Mlp& branch(int j) const { return branches_.at(static_cast<std::size_t>(j)); }
  int modes() const { return static_cast<int>(branches_.size()); }

  // g_target: 1 x d  ->  K x kTrajWidth
  ad::Var decode(const ad::Var& g_target, Point2 origin) const {
    std::vector<ad::Var> rows;
    for (const auto& b : branches_) rows.push_back(b(g_target));
    return offsets_to_positions(ad::concat_rows(rows), origin);
  }

 private:
  std::vector<Mlp> branches_;
};

inline ad::Var graph_decode(const ad::Var& g_target, const GraphDecoder& dec, Point2 origin) {
  return dec.decode(g_target, origin);
}

// Sums squared x and y of each step: kTrajWidth x kFutureSteps.
inline const ad::Matrix& step_pair_operator() {
  static const ad::Matrix s = [] {
    ad::Matrix m = ad::Matrix::Zero(kTrajWidth, kFutureSteps);
    for (Eigen::Index j = 0; j < kFutureSteps; ++j) m(2 * j, j) = m(2 * j + 1, j) = 1.0;
    return m;
  }();
  return s;
}

// Per-mode average displacement (m x 1).
inline ad::Var mode_displacements(const ad::Var& trajectories, const Eigen::RowVectorXd& gt) {
  if (trajectories.cols() != kTrajWidth || gt.size() != kTrajWidth) {
    throw ValidationError("trajectory and ground truth must both have " + std::to_string(kFutureSteps) + " steps");
  }
  const auto diff = ad::add_row(trajectories, ad::constant(-gt));
  const auto dist = ad::sqrt(ad::matmul(ad::square(diff), ad::constant(step_pair_operator())));
  return ad::scale(ad::row_sum(dist), 1.0 / kFutureSteps);
}

// Winner-takes-all: the smallest average displacement over modes.
inline ad::Var wta_loss(const ad::Var& trajectories, const Eigen::RowVectorXd& gt) {
  if (trajectories.rows() == 0) throw ValidationError("at least one trajectory is required");
  return ad::min_entry(mode_displacements(trajectories, gt));
}

struct LossReport {
  double l_fr = 0.0;
  double l_gr = 0.0;
  double l_total = 0.0;
  double lambda1 = 1.0;
  double lambda2 = 0.5;
};

inline LossReport combined_loss(double l_fr, double l_gr, double lambda1 = 1.0, double lambda2 = 0.5) {
  if (lambda1 < 0.0 || lambda2 < 0.0) throw ConfigError("loss weights must be non-negative");
  return {l_fr, l_gr, lambda1 * l_fr + lambda2 * l_gr, lambda1, lambda2};
}

// Differentiable counterpart evaluated in the same order, so its value equals
// combined_loss(l_fr, l_gr, ...).l_total bit for bit.
inline ad::Var combined_loss(const ad::Var& l_fr, const ad::Var& l_gr, double lambda1, double lambda2) {
  return ad::scale(l_fr, lambda1) + ad::scale(l_gr, lambda2);
}

struct PredictionSet {
  ad::Matrix modes;  // K x kTrajWidth, best-scored first
  Eigen::VectorXd scores;
  ad::Matrix aux_modes;
};

struct KMeansOptions {
  int max_iterations = 100;
  double tolerance = 1e-6;
};

// Lloyd's algorithm on flattened trajectories. Samples are put in canonical
// lexicographic order first, so the result does not depend on their order.
inline std::pair<ad::Matrix, Eigen::VectorXd> cluster_modes(const ad::Matrix& samples, int K, std::uint64_t seed,
                                                             KMeansOptions opt = {}) {
  const Eigen::Index k = samples.rows();
  if (K <= 0 || k < K) throw ConfigError("clustering needs at least K samples");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index c = 0; c < samples.cols(); ++c) {
      if (samples(a, c) != samples(b, c)) return samples(a, c) < samples(b, c);
    }
    return false;
  });
  ad::Matrix x(k, samples.cols());
  for (Eigen::Index i = 0; i < k; ++i) x.row(i) = samples.row(order[static_cast<std::size_t>(i)]);

  // farthest-point initialisation from a seeded first pick
  ad::Matrix centers(K, x.cols());
  std::mt19937_64 rng(seed);
  centers.row(0) = x.row(std::uniform_int_distribution<Eigen::Index>(0, k - 1)(rng));
  Eigen::VectorXd nearest = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < K; ++c) {
    Eigen::Index pick = 0;
    nearest.maxCoeff(&pick);
    centers.row(c) = x.row(pick);
    nearest = nearest.cwiseMin((x.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }

  std::vector<int> label(static_cast<std::size_t>(k), 0);
  Eigen::VectorXi count = Eigen::VectorXi::Zero(K);
  for (int it = 0; it < opt.max_iterations; ++it) {
    Eigen::VectorXd own(k);
    count.setZero();
    for (Eigen::Index i = 0; i < k; ++i) {
      Eigen::Index best = 0;
      own(i) = (centers.rowwise() - x.row(i)).rowwise().squaredNorm().minCoeff(&best);
      label[static_cast<std::size_t>(i)] = static_cast<int>(best);
      ++count(best);
    }
    ad::Matrix next = ad::Matrix::Zero(K, x.cols());
    for (Eigen::Index i = 0; i < k; ++i) next.row(label[static_cast<std::size_t>(i)]) += x.row(i);
    for (int c = 0; c < K; ++c) {
      if (count(c) > 0) {
        next.row(c) /= count(c);
        continue;
      }
      // empty cluster: move it to the sample worst served by its centre
      Eigen::Index far = 0;
      own.maxCoeff(&far);
      next.row(c) = x.row(far);
      own(far) = 0.0;
    }
    const double shift = (next - centers).rowwise().norm().maxCoeff();
    centers = next;
    if (shift < opt.tolerance) break;
  }
  // final assignment against the final centres
  count.setZero();
  for (Eigen::Index i = 0; i < k; ++i) {
    Eigen::Index best = 0;
    (centers.rowwise() - x.row(i)).rowwise().squaredNorm().minCoeff(&best);
    ++count(best);
  }
  std::vector<int> rank(static_cast<std::size_t>(K));
  std::iota(rank.begin(), rank.end(), 0);
  std::stable_sort(rank.begin(), rank.end(), [&](int a, int b) { return count(a) > count(b); });
  ad::Matrix modes(K, x.cols());
  Eigen::VectorXd scores(K);
  for (int i = 0; i < K; ++i) {
    modes.row(i) = centers.row(rank[static_cast<std::size_t>(i)]);
    scores(i) = static_cast<double>(count(rank[static_cast<std::size_t>(i)])) / static_cast<double>(k);
  }
  return {modes, scores};
}

struct Metrics {
  double ade = 0.0;
  double fde = 0.0;
  double mr = 0.0;
};

inline constexpr double kMissThreshold = 2.0;

// Over the first k_eval modes (assumed sorted by score).
inline Metrics metrics(const ad::Matrix& modes, const Eigen::RowVectorXd& gt, int k_eval,
                       double miss_threshold = kMissThreshold) {
  if (k_eval <= 0 || modes.rows() < k_eval) throw ConfigError("prediction has fewer modes than k_eval");
  if (modes.cols() != kTrajWidth || gt.size() != kTrajWidth) throw ValidationError("trajectory length mismatch");
  Metrics m{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), 1.0};
  double best_max = std::numeric_limits<double>::infinity();
  for (Eigen::Index r = 0; r < k_eval; ++r) {
    double sum = 0.0, worst = 0.0, last = 0.0;
    for (Eigen::Index j = 0; j < kFutureSteps; ++j) {
      last = std::hypot(modes(r, 2 * j) - gt(2 * j), modes(r, 2 * j + 1) - gt(2 * j + 1));
      sum += last;
      worst = std::max(worst, last);
    }
    m.ade = std::min(m.ade, sum / kFutureSteps);
    m.fde = std::min(m.fde, last);
    best_max = std::min(best_max, worst);
  }
  m.mr = best_max > miss_threshold ? 1.0 : 0.0;
  return m;
}

inline Metrics metrics(const PredictionSet& pred, const Eigen::RowVectorXd& gt, int k_eval) {
  return metrics(pred.modes, gt, k_eval);
}

}  // namespace sf
