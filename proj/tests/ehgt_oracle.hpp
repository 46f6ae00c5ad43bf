#pragma once

// Reference evaluation of one graph-transformer layer written with explicit
// scalar loops over plain vectors. It reads parameter values by store path
// and shares no arithmetic with the library implementation.

#include "socialformer/core/parameter_store.hpp"
#include "socialformer/scene_model.hpp"

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace sf::testing {

using Vec = std::vector<double>;

struct OracleNode {
  std::string id;
  AgentType type;
  Vec h;
};

inline Vec oracle_linear(const ParameterStore& store, const std::string& prefix, const Vec& x) {
  const auto& w = store.get(prefix + ".weight").value();
  const bool biased = store.contains(prefix + ".bias");
  Vec y(static_cast<std::size_t>(w.cols()), 0.0);
  for (Eigen::Index j = 0; j < w.cols(); ++j) {
    double acc = biased ? store.get(prefix + ".bias").value()(0, j) : 0.0;
    for (Eigen::Index i = 0; i < w.rows(); ++i) acc += x[static_cast<std::size_t>(i)] * w(i, j);
    y[static_cast<std::size_t>(j)] = acc;
  }
  return y;
}

inline double oracle_gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

struct OracleAttrScale {
  double distance = 50.0;
  double path = 50.0;
};

// Returns the updated embedding of every node, keyed by id.
inline std::map<std::string, Vec> oracle_ehgt(const ParameterStore& store, const std::string& prefix, int heads,
                                              const std::vector<OracleNode>& nodes,
                                              const std::vector<InteractionEdge>& edges,
                                              const std::set<std::string>& targets, OracleAttrScale scale = {}) {
  std::map<std::string, const OracleNode*> by_id;
  for (const auto& n : nodes) by_id[n.id] = &n;
  const std::size_t d = nodes.front().h.size();
  const std::size_t dh = d / static_cast<std::size_t>(heads);
  auto tname = [](AgentType t) { return std::string(to_string(t)); };

  std::map<std::string, Vec> out;
  for (const auto& tnode : nodes) {
    out[tnode.id] = tnode.h;
    if (!targets.count(tnode.id)) continue;
    std::vector<const InteractionEdge*> in;
    for (const auto& e : edges) {
      if (e.dst_id == tnode.id) in.push_back(&e);
    }
    if (in.empty()) continue;

    const Vec q = oracle_linear(store, prefix + ".Q_Linear." + tname(tnode.type), tnode.h);
    Vec agg(d, 0.0);
    for (int i = 0; i < heads; ++i) {
      const std::string head = "head" + std::to_string(i);
      std::vector<double> score;
      std::vector<Vec> msg;
      for (const auto* e : in) {
        const auto& src = *by_id.at(e->src_id);
        const std::string rel(to_string(e->relation));
        const Vec k = oracle_linear(store, prefix + ".K_Linear." + tname(src.type), src.h);
        const Vec m = oracle_linear(store, prefix + ".M_Linear." + tname(src.type), src.h);
        const auto& watt = store.get(prefix + ".W_ATT." + rel + "." + head).value();
        const auto& wmsg = store.get(prefix + ".W_MSG." + rel + "." + head).value();
        const auto& p = store.get(prefix + ".P_attr." + rel + "." + head).value();
        const double mu = store.get(prefix + ".mu." + tname(src.type) + "." + rel + "." + tname(tnode.type)).value()(0, 0);
        const double a[3] = {e->distance / scale.distance, (e->path_distance ? *e->path_distance : 0.0) / scale.path,
                             e->edge_probability};
        // dense d_h x d_h attribute matrix
        std::vector<Vec> attr(dh, Vec(dh, 0.0));
        for (std::size_t c = 0; c < dh; ++c) {
          double dot = 0.0;
          for (int r = 0; r < 3; ++r) dot += a[r] * p(r, static_cast<Eigen::Index>(c));
          attr[c][c] = 1.0 + dot;
        }
        // K W_ATT W_attr Q^T
        Vec kw(dh, 0.0);
        for (std::size_t c = 0; c < dh; ++c) {
          for (std::size_t r = 0; r < dh; ++r) {
            kw[c] += k[i * dh + r] * watt(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
          }
        }
        Vec kwa(dh, 0.0);
        for (std::size_t c = 0; c < dh; ++c) {
          for (std::size_t r = 0; r < dh; ++r) kwa[c] += kw[r] * attr[r][c];
        }
        double s = 0.0;
        for (std::size_t c = 0; c < dh; ++c) s += kwa[c] * q[i * dh + c];
        score.push_back(s * mu / std::sqrt(static_cast<double>(dh)));
        // M W_attr W_MSG
        Vec ma(dh, 0.0);
        for (std::size_t c = 0; c < dh; ++c) {
          for (std::size_t r = 0; r < dh; ++r) ma[c] += m[i * dh + r] * attr[r][c];
        }
        Vec mm(dh, 0.0);
        for (std::size_t c = 0; c < dh; ++c) {
          for (std::size_t r = 0; r < dh; ++r) {
            mm[c] += ma[r] * wmsg(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
          }
        }
        msg.push_back(mm);
      }
      double mx = score.front();
      for (double s : score) mx = std::max(mx, s);
      double z = 0.0;
      for (double s : score) z += std::exp(s - mx);
      for (std::size_t j = 0; j < score.size(); ++j) {
        const double w = std::exp(score[j] - mx) / z;
        for (std::size_t c = 0; c < dh; ++c) agg[i * dh + c] += w * msg[j][c];
      }
    }
    Vec act(d);
    for (std::size_t c = 0; c < d; ++c) act[c] = oracle_gelu(agg[c]);
    const Vec upd = oracle_linear(store, prefix + ".A_Linear." + tname(tnode.type), act);
    for (std::size_t c = 0; c < d; ++c) out[tnode.id][c] = tnode.h[c] + upd[c];
  }
  return out;
}

}  // namespace sf::testing
