#pragma once

#include "socialformer/core/autodiff.hpp"
#include "socialformer/core/errors.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace sf {

// Named learnable tensors addressed by hierarchical dotted paths, e.g.
// "ehgt.l0.W_ATT.longitudinal.head0". The path set is fixed once the model
// has been built; checkpoints address parameters by path.
class ParameterStore {
 public:
  struct Entry {
    ad::Var var;
    bool trainable = true;
  };

  ad::Var add(const std::string& path, ad::Matrix init, bool trainable = true) {
    if (sealed_) throw ConfigError("parameter store is sealed; cannot add '" + path + "'");
    if (entries_.count(path)) throw ConfigError("duplicate parameter path '" + path + "'");
    Entry e{ad::leaf(std::move(init)), trainable};
    entries_.emplace(path, e);
    return e.var;
  }

  // Glorot-uniform initialised (rows x cols) matrix.
  ad::Var add_glorot(const std::string& path, Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> dist(-limit, limit);
    ad::Matrix m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
      for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = dist(rng);
    }
    return add(path, std::move(m));
  }

  ad::Var add_zeros(const std::string& path, Eigen::Index rows, Eigen::Index cols, bool trainable = true) {
    return add(path, ad::Matrix::Zero(rows, cols), trainable);
  }

  void seal() { sealed_ = true; }

  bool contains(const std::string& path) const { return entries_.count(path) != 0; }

  const Entry& at(const std::string& path) const {
    auto it = entries_.find(path);
    if (it == entries_.end()) throw ConfigError("unknown parameter path '" + path + "'");
    return it->second;
  }

  ad::Var get(const std::string& path) const { return at(path).var; }

  const std::map<std::string, Entry>& entries() const { return entries_; }

  std::vector<std::string> paths_with_prefix(std::string_view prefix) const {
    std::vector<std::string> out;
    for (const auto& [path, e] : entries_) {
      if (std::string_view(path).substr(0, prefix.size()) == prefix) out.push_back(path);
    }
    return out;
  }

  void set_trainable(std::string_view prefix, bool trainable) {
    for (auto& [path, e] : entries_) {
      if (std::string_view(path).substr(0, prefix.size()) == prefix) e.trainable = trainable;
    }
  }

  void zero_grad() {
    for (auto& [path, e] : entries_) e.var.zero_grad();
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& [path, e] : entries_) n += static_cast<std::size_t>(e.var.value().size());
    return n;
  }

 private:
  std::map<std::string, Entry> entries_;
  bool sealed_ = false;
};

}  // namespace sf
