#pragma once

// Scalar-loop references for the perceptron, recurrent and attention blocks,
// reading parameters by store path.

#include "ehgt_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace sf::testing {

inline Vec oracle_mlp(const ParameterStore& store, const std::string& prefix, const Vec& x) {
  Vec h = oracle_linear(store, prefix + ".fc0", x);
  for (double& v : h) v = oracle_gelu(v);
  return oracle_linear(store, prefix + ".fc1", h);
}

inline double oracle_sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Vec oracle_gru_step(const ParameterStore& store, const std::string& prefix, const Vec& x, const Vec& h) {
  const auto& wi = store.get(prefix + ".W_input").value();
  const auto& wh = store.get(prefix + ".W_hidden").value();
  const auto& bi = store.get(prefix + ".b_input").value();
  const auto& bh = store.get(prefix + ".b_hidden").value();
  const std::size_t n = h.size();
  auto gate = [&](const ad::Matrix& w, const ad::Matrix& b, const Vec& v, std::size_t col) {
    double acc = b(0, static_cast<Eigen::Index>(col));
    for (std::size_t i = 0; i < v.size(); ++i) acc += v[i] * w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col));
    return acc;
  };
  Vec out(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double r = oracle_sigmoid(gate(wi, bi, x, j) + gate(wh, bh, h, j));
    const double z = oracle_sigmoid(gate(wi, bi, x, n + j) + gate(wh, bh, h, n + j));
    const double c = std::tanh(gate(wi, bi, x, 2 * n + j) + r * gate(wh, bh, h, 2 * n + j));
    out[j] = (1.0 - z) * c + z * h[j];
  }
  return out;
}

// queries and memory given as lists of rows.
inline std::vector<Vec> oracle_attention(const ParameterStore& store, const std::string& prefix, int heads,
                                         const std::vector<Vec>& queries, const std::vector<Vec>& memory) {
  const std::size_t d = queries.empty() ? 0 : queries.front().size();
  std::vector<Vec> out(queries.size(), Vec(d, 0.0));
  if (memory.empty()) return out;
  const std::size_t dh = d / static_cast<std::size_t>(heads);
  std::vector<Vec> keys, values;
  for (const auto& m : memory) {
    keys.push_back(oracle_linear(store, prefix + ".key", m));
    values.push_back(oracle_linear(store, prefix + ".value", m));
  }
  for (std::size_t qi = 0; qi < queries.size(); ++qi) {
    const Vec q = oracle_linear(store, prefix + ".query", queries[qi]);
    Vec mixed(d, 0.0);
    for (int i = 0; i < heads; ++i) {
      std::vector<double> s(memory.size());
      for (std::size_t j = 0; j < memory.size(); ++j) {
        double dot = 0.0;
        for (std::size_t c = 0; c < dh; ++c) dot += q[i * dh + c] * keys[j][i * dh + c];
        s[j] = dot / std::sqrt(static_cast<double>(dh));
      }
      const double mx = *std::max_element(s.begin(), s.end());
      double z = 0.0;
      for (double& v : s) z += (v = std::exp(v - mx));
      for (std::size_t j = 0; j < memory.size(); ++j) {
        for (std::size_t c = 0; c < dh; ++c) mixed[i * dh + c] += s[j] / z * values[j][i * dh + c];
      }
    }
    out[qi] = oracle_linear(store, prefix + ".output", mixed);
  }
  return out;
}

inline std::vector<Vec> rows_of(const ad::Matrix& m) {
  std::vector<Vec> out;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Vec v(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) v[static_cast<std::size_t>(c)] = m(r, c);
    out.push_back(v);
  }
  return out;
}

inline double max_abs_diff(const ad::Matrix& m, const std::vector<Vec>& ref) {
  double worst = 0.0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      worst = std::max(worst, std::abs(m(r, c) - ref[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]));
    }
  }
  return worst;
}

}  // namespace sf::testing
