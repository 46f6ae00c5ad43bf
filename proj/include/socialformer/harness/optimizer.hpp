#pragma once

// Adam with decoupled weight decay. Frozen (non-trainable) tensors are left
// untouched, including by the decay term.

#include "socialformer/core/parameter_store.hpp"

#include <cmath>
#include <map>
#include <string>

namespace sf {

struct AdamWOptions {
  double learning_rate = 0.001;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class AdamW {
 public:
  explicit AdamW(AdamWOptions opt = {}) : opt_(opt) {}

  void step(ParameterStore& store) {
    ++t_;
    const double c1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
    for (const auto& [path, e] : store.entries()) {
      if (!e.trainable) continue;
      auto v = e.var;
      auto& theta = v.mutable_value();
      const ad::Matrix g = v.grad().size() == 0 ? ad::Matrix::Zero(theta.rows(), theta.cols()) : v.grad();
      auto& st = state_.try_emplace(path, Moments{ad::Matrix::Zero(theta.rows(), theta.cols()),
                                                  ad::Matrix::Zero(theta.rows(), theta.cols())}).first->second;
      st.m = opt_.beta1 * st.m + (1.0 - opt_.beta1) * g;
      st.v = opt_.beta2 * st.v + (1.0 - opt_.beta2) * g.cwiseProduct(g);
      theta *= 1.0 - opt_.learning_rate * opt_.weight_decay;
      theta.array() -= opt_.learning_rate * (st.m.array() / c1) / ((st.v.array() / c2).sqrt() + opt_.eps);
    }
  }

  long steps() const { return t_; }
  void set_learning_rate(double lr) { opt_.learning_rate = lr; }

 private:
  struct Moments {
    ad::Matrix m, v;
  };
  AdamWOptions opt_;
  long t_ = 0;
  std::map<std::string, Moments> state_;
};

}  // namespace sf
