#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "mird/common.hpp"

namespace mird {

namespace detail {

struct Node {
  std::vector<int> shape;
  std::vector<double> val;
  std::vector<double> grad;  // sized on first backward pass through this node
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> bwd;  // accumulates into parents' grad buffers
  bool requires_grad = false;      // leaf marker
  bool needs_grad = false;         // true if this node or any ancestor requires grad
  const char* op = "leaf";
};

}  // namespace detail

/// Dense float64 tensor participating in tape-based reverse-mode autodiff.
/// The graph is rebuilt on every forward pass; backward(loss) zeroes the
/// gradients of the reachable subgraph before accumulating fresh ones.
/// Copies share the underlying node (cheap handles).
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor full(std::vector<int> shape, double v, bool requires_grad = false);
  static Tensor from(std::vector<int> shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor scalar(double v);

  bool defined() const { return node_ != nullptr; }
  const std::vector<int>& shape() const { return node_->shape; }
  int ndim() const { return static_cast<int>(node_->shape.size()); }
  int size() const { return static_cast<int>(node_->val.size()); }
  bool requires_grad() const { return node_->requires_grad; }
  bool needs_grad() const { return node_->needs_grad; }

  std::vector<double>& data() { return node_->val; }
  const std::vector<double>& data() const { return node_->val; }
  const std::vector<double>& grad() const { return node_->grad; }
  void zero_grad() { node_->grad.assign(node_->val.size(), 0.0); }

  /// Value of a scalar (0-d) or single-element tensor.
  double item() const;
  double at(int i) const;         // 1-d
  double at(int i, int j) const;  // 2-d

  /// New leaf sharing nothing with the graph; same values, no gradient flow.
  Tensor detach() const;

  detail::Node* node() const { return node_.get(); }
  std::shared_ptr<detail::Node> handle() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}
  std::shared_ptr<detail::Node> node_;
  friend Tensor wrap_node(std::shared_ptr<detail::Node>);
};

Tensor wrap_node(std::shared_ptr<detail::Node> n);

/// Runs reverse-mode accumulation from a scalar loss. Gradients of every
/// node reachable from the loss are zeroed first, then repopulated; leaves
/// with requires_grad end up holding dLoss/dLeaf.
void backward(const Tensor& loss);

// ---- primitives ------------------------------------------------------------
// Shapes are validated eagerly; mismatches throw Error naming the primitive
// and both operand shapes.

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor matmul(const Tensor& a, const Tensor& b);  // 2dx2d, 1dx2d, 2dx1d
Tensor transpose(const Tensor& a);                // 2-d
Tensor concat(const Tensor& a, const Tensor& b, int axis);
Tensor row(const Tensor& a, int i);               // 2-d -> 1-d copy of row i
Tensor stack_rows(const std::vector<Tensor>& rows);      // 1-d rows -> 2-d
Tensor stack_scalars(const std::vector<Tensor>& items);  // scalars -> 1-d
Tensor embedding(const Tensor& table, const std::vector<int>& ids);

Tensor sigmoid(const Tensor& a);
Tensor tanh_(const Tensor& a);
Tensor exp_(const Tensor& a);
Tensor log_(const Tensor& a);
Tensor scale(const Tensor& a, double c);
Tensor offset(const Tensor& a, double c);
Tensor clamp(const Tensor& a, double lo, double hi);

Tensor add_rowwise(const Tensor& a, const Tensor& v);   // [m,n] + [n] per row
Tensor scale_rows(const Tensor& a, const Tensor& v);    // row k scaled by v[k]
// out[k] = nh[k] > 0 ? min(eps * nw[k] / nh[k], 1) : 1; zero gradient on the
// clamped and zero-denominator branches.
Tensor clamped_norm_ratio(const Tensor& nw, const Tensor& nh, double eps);

Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);
Tensor mean_axis(const Tensor& a, int axis);  // 2-d; 0 -> column means, 1 -> row means
Tensor l2_norm(const Tensor& v);              // 1-d -> scalar
Tensor l2_norm_rows(const Tensor& a);         // 2-d -> per-row norms
Tensor mse(const Tensor& a, const Tensor& b);
Tensor cross_entropy_logits(const Tensor& logits, const std::vector<int>& targets);
Tensor frobenius_sq(const Tensor& a);
Tensor frobenius_norm(const Tensor& a);

// ---- extension hook --------------------------------------------------------

/// View of one input of a custom op during its backward pass. `grad` is null
/// when that input does not need gradients.
struct OpIn {
  const std::vector<double>* val;
  const std::vector<int>* shape;
  std::vector<double>* grad;
};

/// Registers an externally computed op on the tape. `bwd` receives the output
/// gradient and per-input views and must accumulate (+=) into OpIn::grad.
Tensor custom_op(const char* name, std::vector<Tensor> inputs,
                 std::vector<int> out_shape, std::vector<double> out_val,
                 std::function<void(const std::vector<double>& out_grad,
                                    std::vector<OpIn>& ins)> bwd);

inline Tensor one_minus(const Tensor& a) { return offset(scale(a, -1.0), 1.0); }

}  // namespace mird
