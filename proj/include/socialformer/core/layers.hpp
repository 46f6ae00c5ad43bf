#pragma once

// Differentiable building blocks shared by the encoders, the fusion stack and
// the decoders. Each block registers its tensors in a ParameterStore under a
// path prefix and keeps Var handles to them.

#include "socialformer/core/autodiff.hpp"
#include "socialformer/core/parameter_store.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace sf {

class Linear {
 public:
  Linear() = default;
  Linear(ParameterStore& store, const std::string& prefix, Eigen::Index in, Eigen::Index out,
         std::mt19937_64& rng, bool with_bias = true)
      : weight_(store.add_glorot(prefix + ".weight", in, out, rng)) {
    if (with_bias) bias_ = store.add_zeros(prefix + ".bias", 1, out);
  }

  // x: n x in  ->  n x out
  ad::Var operator()(const ad::Var& x) const {
    auto y = ad::matmul(x, weight_);
    return bias_.defined() ? ad::add_row(y, bias_) : y;
  }

  const ad::Var& weight() const { return weight_; }
  const ad::Var& bias() const { return bias_; }
  Eigen::Index in_features() const { return weight_.rows(); }
  Eigen::Index out_features() const { return weight_.cols(); }

 private:
  ad::Var weight_;
  ad::Var bias_;
};

// Two-layer perceptron: Linear -> GELU -> Linear.
class Mlp {
 public:
  Mlp() = default;
  Mlp(ParameterStore& store, const std::string& prefix, Eigen::Index in, Eigen::Index hidden,
      Eigen::Index out, std::mt19937_64& rng)
      : first_(store, prefix + ".fc0", in, hidden, rng), second_(store, prefix + ".fc1", hidden, out, rng) {}

  ad::Var operator()(const ad::Var& x) const { return second_(ad::gelu(first_(x))); }

  const Linear& first() const { return first_; }
  const Linear& second() const { return second_; }

 private:
  Linear first_;
  Linear second_;
};

// Gated recurrent unit with the standard reset/update/candidate gates.
// Gate blocks are laid out column-wise as [reset | update | candidate]:
//   r  = sigmoid(x Wi_r + bi_r + h Wh_r + bh_r)
//   z  = sigmoid(x Wi_z + bi_z + h Wh_z + bh_z)
//   n  = tanh(x Wi_n + bi_n + r * (h Wh_n + bh_n))
//   h' = (1 - z) * n + z * h
class Gru {
 public:
  Gru() = default;
  Gru(ParameterStore& store, const std::string& prefix, Eigen::Index in, Eigen::Index hidden,
      std::mt19937_64& rng)
      : hidden_(hidden),
        w_input_(store.add_glorot(prefix + ".W_input", in, 3 * hidden, rng)),
        w_hidden_(store.add_glorot(prefix + ".W_hidden", hidden, 3 * hidden, rng)),
        b_input_(store.add_zeros(prefix + ".b_input", 1, 3 * hidden)),
        b_hidden_(store.add_zeros(prefix + ".b_hidden", 1, 3 * hidden)) {}

  Eigen::Index hidden_size() const { return hidden_; }

  ad::Var zero_state(Eigen::Index batch) const { return ad::constant(ad::Matrix::Zero(batch, hidden_)); }

  // x: n x in, h: n x hidden
  ad::Var step(const ad::Var& x, const ad::Var& h) const {
    const auto gi = ad::add_row(ad::matmul(x, w_input_), b_input_);
    const auto gh = ad::add_row(ad::matmul(h, w_hidden_), b_hidden_);
    const auto r = ad::sigmoid(ad::slice_cols(gi, 0, hidden_) + ad::slice_cols(gh, 0, hidden_));
    const auto z = ad::sigmoid(ad::slice_cols(gi, hidden_, hidden_) + ad::slice_cols(gh, hidden_, hidden_));
    const auto n = ad::tanh(ad::slice_cols(gi, 2 * hidden_, hidden_) +
                            ad::mul(r, ad::slice_cols(gh, 2 * hidden_, hidden_)));
    return n + ad::mul(z, h - n);
  }

  // Rows whose mask entry is 0 keep their previous state bit-for-bit.
  ad::Var masked_step(const ad::Var& x, const ad::Var& h, const Eigen::VectorXd& mask) const {
    const auto next = step(x, h);
    ad::Matrix keep = (1.0 - mask.array()).matrix();
    return ad::mul_col(next, ad::constant(mask)) + ad::mul_col(h, ad::constant(keep));
  }

  const ad::Var& w_input() const { return w_input_; }
  const ad::Var& w_hidden() const { return w_hidden_; }
  const ad::Var& b_input() const { return b_input_; }
  const ad::Var& b_hidden() const { return b_hidden_; }

 private:
  Eigen::Index hidden_ = 0;
  ad::Var w_input_;
  ad::Var w_hidden_;
  ad::Var b_input_;
  ad::Var b_hidden_;
};

// Multi-head scaled dot-product cross attention. The first argument supplies
// the queries, the second the keys and values. An empty key set yields an
// all-zero output. The key map has no bias: it would add the same amount to
// every score of a query and cancel in the softmax.
class CrossAttention {
 public:
  CrossAttention() = default;
  CrossAttention(ParameterStore& store, const std::string& prefix, Eigen::Index d_model, int heads,
                 std::mt19937_64& rng)
      : d_model_(d_model),
        heads_(heads),
        query_(store, prefix + ".query", d_model, d_model, rng),
        key_(store, prefix + ".key", d_model, d_model, rng, false),
        value_(store, prefix + ".value", d_model, d_model, rng),
        output_(store, prefix + ".output", d_model, d_model, rng) {
    if (heads <= 0 || d_model % heads != 0) {
      throw ConfigError(prefix + ": d_model must be divisible by the head count");
    }
  }

  // queries: nq x d, memory: nk x d  ->  nq x d
  ad::Var operator()(const ad::Var& queries, const ad::Var& memory) const {
    if (memory.rows() == 0 || queries.rows() == 0) {
      return ad::constant(ad::Matrix::Zero(queries.rows(), d_model_));
    }
    const Eigen::Index dh = d_model_ / heads_;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    const auto q = query_(queries);
    const auto k = key_(memory);
    const auto v = value_(memory);
    std::vector<ad::Var> per_head;
    per_head.reserve(static_cast<std::size_t>(heads_));
    for (int i = 0; i < heads_; ++i) {
      const auto qh = ad::slice_cols(q, i * dh, dh);
      const auto kh = ad::slice_cols(k, i * dh, dh);
      const auto vh = ad::slice_cols(v, i * dh, dh);
      const auto weights = ad::softmax_rows(ad::scale(ad::matmul(qh, ad::transpose(kh)), inv_sqrt));
      per_head.push_back(ad::matmul(weights, vh));
    }
    return output_(heads_ == 1 ? per_head.front() : ad::concat_cols(per_head));
  }

  int heads() const { return heads_; }
  const Linear& query() const { return query_; }
  const Linear& key() const { return key_; }
  const Linear& value() const { return value_; }
  const Linear& output() const { return output_; }

 private:
  Eigen::Index d_model_ = 0;
  int heads_ = 1;
  Linear query_;
  Linear key_;
  Linear value_;
  Linear output_;
};

}  // namespace sf
