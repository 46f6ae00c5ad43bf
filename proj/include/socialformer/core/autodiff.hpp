#pragma once

// Minimal reverse-mode automatic differentiation over dense Eigen matrices.
//
// Every value is a 2-D matrix. Row vectors (1 x d) are the embedding
// convention; batches of embeddings are stacked as rows. A Var is a cheap
// shared handle to a graph node; the graph is freed when the last handle to
// the output goes away.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace sf::ad {

using Matrix = Eigen::MatrixXd;

struct Node {
  Matrix value;
  Matrix grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  void accumulate(const Matrix& g) {
    if (grad.size() == 0) {
      grad = g;
    } else {
      grad += g;
    }
  }
};

class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  const Matrix& value() const { return node_->value; }
  Matrix& mutable_value() { return node_->value; }
  const Matrix& grad() const { return node_->grad; }
  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  bool requires_grad() const { return node_->requires_grad; }
  bool defined() const { return static_cast<bool>(node_); }
  double scalar() const { return node_->value(0, 0); }

  Node& node() const { return *node_; }
  const std::shared_ptr<Node>& shared() const { return node_; }

  void zero_grad() { node_->grad.resize(0, 0); }

 private:
  std::shared_ptr<Node> node_;
};

inline Var constant(Matrix value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  return Var(std::move(n));
}

inline Var leaf(Matrix value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = true;
  return Var(std::move(n));
}

inline Var scalar_constant(double v) { return constant(Matrix::Constant(1, 1, v)); }

namespace detail {

// Builds a result node; the backward closure is attached only when some
// parent participates in differentiation.
inline Var make(Matrix value, std::vector<Var> parents,
                std::function<void(Node&)> backward) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  for (const auto& p : parents) {
    if (p.requires_grad()) n->requires_grad = true;
  }
  if (n->requires_grad) {
    n->parents.reserve(parents.size());
    for (auto& p : parents) n->parents.push_back(p.shared());
    n->backward = std::move(backward);
  }
  return Var(std::move(n));
}

inline void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch (" +
                                std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                " vs " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()) + ")");
  }
}

inline Node& parent(Node& n, std::size_t i) { return *n.parents[i]; }

}  // namespace detail

// Runs reverse accumulation from a 1x1 output. Leaf gradients accumulate
// across calls until zero_grad().
inline void backward(const Var& output) {
  if (output.rows() != 1 || output.cols() != 1) {
    throw std::invalid_argument("backward: output must be 1x1");
  }
  if (!output.requires_grad()) return;

  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, bool>> stack{{&output.node(), false}};
  while (!stack.empty()) {
    auto [n, expanded] = stack.back();
    stack.pop_back();
    if (expanded) {
      order.push_back(n);
      continue;
    }
    if (!seen.insert(n).second) continue;
    stack.emplace_back(n, true);
    for (const auto& p : n->parents) {
      if (p->requires_grad && !seen.count(p.get())) stack.emplace_back(p.get(), false);
    }
  }

  // Interior gradients are scratch; only leaves keep theirs.
  for (Node* n : order) {
    if (n->backward) n->grad.resize(0, 0);
  }
  output.node().accumulate(Matrix::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && n->grad.size() != 0) n->backward(*n);
  }
}

// ---------------------------------------------------------------------------
// Elementary operations

inline Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimension mismatch (" + std::to_string(a.cols()) +
                                " vs " + std::to_string(b.rows()) + ")");
  }
  return detail::make(a.value() * b.value(), {a, b}, [](Node& n) {
    auto& pa = detail::parent(n, 0);
    auto& pb = detail::parent(n, 1);
    if (pa.requires_grad) pa.accumulate(n.grad * pb.value.transpose());
    if (pb.requires_grad) pb.accumulate(pa.value.transpose() * n.grad);
  });
}

inline Var add(const Var& a, const Var& b) {
  detail::check_same_shape(a, b, "add");
  return detail::make(a.value() + b.value(), {a, b}, [](Node& n) {
    for (auto& p : n.parents) {
      if (p->requires_grad) p->accumulate(n.grad);
    }
  });
}

inline Var sub(const Var& a, const Var& b) {
  detail::check_same_shape(a, b, "sub");
  return detail::make(a.value() - b.value(), {a, b}, [](Node& n) {
    auto& pa = detail::parent(n, 0);
    auto& pb = detail::parent(n, 1);
    if (pa.requires_grad) pa.accumulate(n.grad);
    if (pb.requires_grad) pb.accumulate(-n.grad);
  });
}

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }

// a (n x m) + row (1 x m), row broadcast over every row of a.
inline Var add_row(const Var& a, const Var& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw std::invalid_argument("add_row: row must be 1x" + std::to_string(a.cols()));
  }
  Matrix v = a.value().rowwise() + row.value().row(0);
  return detail::make(std::move(v), {a, row}, [](Node& n) {
    auto& pa = detail::parent(n, 0);
    auto& pr = detail::parent(n, 1);
    if (pa.requires_grad) pa.accumulate(n.grad);
    if (pr.requires_grad) pr.accumulate(n.grad.colwise().sum());
  });
}

inline Var mul(const Var& a, const Var& b) {
  detail::check_same_shape(a, b, "mul");
  return detail::make(a.value().cwiseProduct(b.value()), {a, b}, [](Node& n) {
    auto& pa = detail::parent(n, 0);
    auto& pb = detail::parent(n, 1);
    if (pa.requires_grad) pa.accumulate(n.grad.cwiseProduct(pb.value));
    if (pb.requires_grad) pb.accumulate(n.grad.cwiseProduct(pa.value));
  });
}

// a (n x m) scaled row-wise by col (n x 1).
inline Var mul_col(const Var& a, const Var& col) {
  if (col.cols() != 1 || col.rows() != a.rows()) {
    throw std::invalid_argument("mul_col: column must be " + std::to_string(a.rows()) + "x1");
  }
  Matrix v = a.value().array().colwise() * col.value().col(0).array();
  return detail::make(std::move(v), {a, col}, [](Node& n) {
    auto& pa = detail::parent(n, 0);
    auto& pc = detail::parent(n, 1);
    if (pa.requires_grad) {
      Matrix g = n.grad.array().colwise() * pc.value.col(0).array();
      pa.accumulate(g);
    }
    if (pc.requires_grad) pc.accumulate(n.grad.cwiseProduct(pa.value).rowwise().sum());
  });
}

inline Var scale(const Var& a, double s) {
  return detail::make(a.value() * s, {a}, [s](Node& n) {
    detail::parent(n, 0).accumulate(n.grad * s);
  });
}

// a scaled by a 1x1 variable.
inline Var scale_by(const Var& a, const Var& s) {
  if (s.rows() != 1 || s.cols() != 1) throw std::invalid_argument("scale_by: scalar must be 1x1");
  return detail::make(a.value() * s.scalar(), {a, s}, [](Node& n) {
    auto& pa = detail::parent(n, 0);
    auto& ps = detail::parent(n, 1);
    if (pa.requires_grad) pa.accumulate(n.grad * ps.value(0, 0));
    if (ps.requires_grad) ps.accumulate(Matrix::Constant(1, 1, n.grad.cwiseProduct(pa.value).sum()));
  });
}

inline Var add_scalar(const Var& a, double c) {
  return detail::make(a.value().array() + c, {a}, [](Node& n) {
    detail::parent(n, 0).accumulate(n.grad);
  });
}

inline Var transpose(const Var& a) {
  return detail::make(a.value().transpose(), {a}, [](Node& n) {
    detail::parent(n, 0).accumulate(n.grad.transpose());
  });
}

// ---------------------------------------------------------------------------
// Pointwise nonlinearities

inline double gelu_scalar(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

inline double gelu_derivative(double x) {
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

// Exact (erf-based) GELU.
inline Var gelu(const Var& a) {
  return detail::make(a.value().unaryExpr(&gelu_scalar), {a}, [](Node& n) {
    auto& pa = detail::parent(n, 0);
    pa.accumulate(n.grad.cwiseProduct(pa.value.unaryExpr(&gelu_derivative)));
  });
}

inline Var sigmoid(const Var& a) {
  Matrix v = a.value().unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
  return detail::make(std::move(v), {a}, [](Node& n) {
    Matrix d = n.value.array() * (1.0 - n.value.array());
    detail::parent(n, 0).accumulate(n.grad.cwiseProduct(d));
  });
}

inline Var tanh(const Var& a) {
  Matrix v = a.value().array().tanh();
  return detail::make(std::move(v), {a}, [](Node& n) {
    Matrix d = 1.0 - n.value.array().square();
    detail::parent(n, 0).accumulate(n.grad.cwiseProduct(d));
  });
}

inline Var square(const Var& a) {
  return detail::make(a.value().array().square(), {a}, [](Node& n) {
    auto& pa = detail::parent(n, 0);
    pa.accumulate(2.0 * n.grad.cwiseProduct(pa.value));
  });
}

// Elementwise square root. The derivative at exactly 0 is taken as 0.
inline Var sqrt(const Var& a) {
  return detail::make(a.value().array().sqrt(), {a}, [](Node& n) {
    Matrix d = n.value.unaryExpr([](double r) { return r > 0.0 ? 0.5 / r : 0.0; });
    detail::parent(n, 0).accumulate(n.grad.cwiseProduct(d));
  });
}

// ---------------------------------------------------------------------------
// Reductions

inline Var sum(const Var& a) {
  return detail::make(Matrix::Constant(1, 1, a.value().sum()), {a}, [](Node& n) {
    auto& pa = detail::parent(n, 0);
    pa.accumulate(Matrix::Constant(pa.value.rows(), pa.value.cols(), n.grad(0, 0)));
  });
}

inline Var mean(const Var& a) {
  if (a.value().size() == 0) throw std::invalid_argument("mean: empty input");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

// n x m -> n x 1
inline Var row_sum(const Var& a) {
  return detail::make(a.value().rowwise().sum(), {a}, [](Node& n) {
    auto& pa = detail::parent(n, 0);
    pa.accumulate(n.grad.replicate(1, pa.value.cols()));
  });
}

// Smallest entry of an n x 1 column; the gradient flows to the first minimiser.
inline Var min_entry(const Var& col) {
  if (col.cols() != 1 || col.rows() == 0) throw std::invalid_argument("min_entry: need n x 1, n > 0");
  Eigen::Index arg = 0;
  const double v = col.value().col(0).minCoeff(&arg);
  return detail::make(Matrix::Constant(1, 1, v), {col}, [arg](Node& n) {
    auto& pc = detail::parent(n, 0);
    Matrix g = Matrix::Zero(pc.value.rows(), 1);
    g(arg, 0) = n.grad(0, 0);
    pc.accumulate(g);
  });
}

// ---------------------------------------------------------------------------
// Structural operations

inline Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw std::invalid_argument("concat_cols: row mismatch");
    cols += p.cols();
  }
  Matrix v(rows, cols);
  Eigen::Index c = 0;
  for (const auto& p : parts) {
    v.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  return detail::make(std::move(v), parts, [](Node& n) {
    Eigen::Index c0 = 0;
    for (auto& p : n.parents) {
      const auto w = p->value.cols();
      if (p->requires_grad) p->accumulate(n.grad.middleCols(c0, w));
      c0 += w;
    }
  });
}

inline Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  const Eigen::Index cols = parts.front().cols();
  Eigen::Index rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) throw std::invalid_argument("concat_rows: column mismatch");
    rows += p.rows();
  }
  Matrix v(rows, cols);
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    v.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  return detail::make(std::move(v), parts, [](Node& n) {
    Eigen::Index r0 = 0;
    for (auto& p : n.parents) {
      const auto h = p->value.rows();
      if (p->requires_grad) p->accumulate(n.grad.middleRows(r0, h));
      r0 += h;
    }
  });
}

inline Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) throw std::out_of_range("slice_cols");
  return detail::make(a.value().middleCols(start, count), {a}, [start, count](Node& n) {
    auto& pa = detail::parent(n, 0);
    Matrix g = Matrix::Zero(pa.value.rows(), pa.value.cols());
    g.middleCols(start, count) = n.grad;
    pa.accumulate(g);
  });
}

inline Var slice_rows(const Var& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) throw std::out_of_range("slice_rows");
  return detail::make(a.value().middleRows(start, count), {a}, [start, count](Node& n) {
    auto& pa = detail::parent(n, 0);
    Matrix g = Matrix::Zero(pa.value.rows(), pa.value.cols());
    g.middleRows(start, count) = n.grad;
    pa.accumulate(g);
  });
}

// out[i] = a[index[i]]
inline Var gather_rows(const Var& a, std::vector<Eigen::Index> index) {
  Matrix v(static_cast<Eigen::Index>(index.size()), a.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || index[i] >= a.rows()) throw std::out_of_range("gather_rows: index");
    v.row(static_cast<Eigen::Index>(i)) = a.value().row(index[i]);
  }
  return detail::make(std::move(v), {a}, [index = std::move(index)](Node& n) {
    auto& pa = detail::parent(n, 0);
    Matrix g = Matrix::Zero(pa.value.rows(), pa.value.cols());
    for (std::size_t i = 0; i < index.size(); ++i) g.row(index[i]) += n.grad.row(static_cast<Eigen::Index>(i));
    pa.accumulate(g);
  });
}

// out (n_out x m), out[index[i]] += a[i]
inline Var scatter_add_rows(const Var& a, std::vector<Eigen::Index> index, Eigen::Index n_out) {
  if (static_cast<Eigen::Index>(index.size()) != a.rows()) {
    throw std::invalid_argument("scatter_add_rows: index size must equal row count");
  }
  Matrix v = Matrix::Zero(n_out, a.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || index[i] >= n_out) throw std::out_of_range("scatter_add_rows: index");
    v.row(index[i]) += a.value().row(static_cast<Eigen::Index>(i));
  }
  return detail::make(std::move(v), {a}, [index = std::move(index)](Node& n) {
    auto& pa = detail::parent(n, 0);
    Matrix g(pa.value.rows(), pa.value.cols());
    for (std::size_t i = 0; i < index.size(); ++i) g.row(static_cast<Eigen::Index>(i)) = n.grad.row(index[i]);
    pa.accumulate(g);
  });
}

// Softmax over each row of a.
inline Var softmax_rows(const Var& a) {
  Matrix v = a.value();
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    const double m = v.row(r).maxCoeff();
    v.row(r) = (v.row(r).array() - m).exp();
    v.row(r) /= v.row(r).sum();
  }
  return detail::make(std::move(v), {a}, [](Node& n) {
    const Matrix& y = n.value;
    Eigen::VectorXd dot = n.grad.cwiseProduct(y).rowwise().sum();
    Matrix g = y.array() * (n.grad.colwise() - dot).array();
    detail::parent(n, 0).accumulate(g);
  });
}

// Softmax of an E x 1 score column within groups: entries sharing
// segment[i] are normalised together.
inline Var segment_softmax(const Var& scores, std::vector<Eigen::Index> segment, Eigen::Index n_segments) {
  if (scores.cols() != 1 || static_cast<Eigen::Index>(segment.size()) != scores.rows()) {
    throw std::invalid_argument("segment_softmax: expected E x 1 scores with E segment ids");
  }
  const auto& s = scores.value();
  Eigen::VectorXd seg_max = Eigen::VectorXd::Constant(n_segments, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < segment.size(); ++i) {
    seg_max(segment[i]) = std::max(seg_max(segment[i]), s(static_cast<Eigen::Index>(i), 0));
  }
  Matrix v(s.rows(), 1);
  Eigen::VectorXd seg_sum = Eigen::VectorXd::Zero(n_segments);
  for (std::size_t i = 0; i < segment.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    v(r, 0) = std::exp(s(r, 0) - seg_max(segment[i]));
    seg_sum(segment[i]) += v(r, 0);
  }
  for (std::size_t i = 0; i < segment.size(); ++i) v(static_cast<Eigen::Index>(i), 0) /= seg_sum(segment[i]);
  return detail::make(std::move(v), {scores}, [segment = std::move(segment), n_segments](Node& n) {
    Eigen::VectorXd dot = Eigen::VectorXd::Zero(n_segments);
    for (std::size_t i = 0; i < segment.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      dot(segment[i]) += n.grad(r, 0) * n.value(r, 0);
    }
    Matrix g(n.value.rows(), 1);
    for (std::size_t i = 0; i < segment.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      g(r, 0) = n.value(r, 0) * (n.grad(r, 0) - dot(segment[i]));
    }
    detail::parent(n, 0).accumulate(g);
  });
}

}  // namespace sf::ad
