#include "mird/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace mird {

using detail::Node;

namespace {

std::shared_ptr<Node> make_leaf(std::vector<int> shape, std::vector<double> val,
                                bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->val = std::move(val);
  n->requires_grad = requires_grad;
  n->needs_grad = requires_grad;
  return n;
}

std::size_t shape_size(const std::vector<int>& shape) {
  std::size_t s = 1;
  for (int d : shape) {
    if (d < 0) throw Error("tensor: negative extent in shape " + shape_str(shape));
    s *= static_cast<std::size_t>(d);
  }
  return s;
}

// Builds the result node; records parents and the backward closure only when
// some parent needs gradients.
Tensor make_result(const char* op, std::vector<Tensor> inputs,
                   std::vector<int> shape, std::vector<double> val,
                   std::function<void(Node&)> bwd) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->shape = std::move(shape);
  n->val = std::move(val);
  bool needs = false;
  for (const auto& t : inputs) needs = needs || t.needs_grad();
  n->needs_grad = needs;
  if (needs) {
    n->parents.reserve(inputs.size());
    for (auto& t : inputs) n->parents.push_back(t.handle());
    n->bwd = std::move(bwd);
  }
  return wrap_node(std::move(n));
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw Error(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                " vs " + shape_str(b.shape()));
}

void check_2d(const char* op, const Tensor& a) {
  if (a.ndim() != 2)
    throw Error(std::string(op) + ": expected 2-d tensor, got " + shape_str(a.shape()));
}

bool grad_wanted(Node& self, std::size_t i) {
  return self.parents[i]->needs_grad;
}

std::vector<double>& pgrad(Node& self, std::size_t i) {
  Node& p = *self.parents[i];
  if (p.grad.size() != p.val.size()) p.grad.assign(p.val.size(), 0.0);
  return p.grad;
}

Tensor elementwise(const char* op, const Tensor& a, std::function<double(double)> f,
                   std::function<double(double x, double y)> df /* (input, output) */) {
  std::vector<double> out(a.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a.data()[i]);
  return make_result(op, {a}, a.shape(), std::move(out), [df](Node& self) {
    if (!grad_wanted(self, 0)) return;
    auto& g = pgrad(self, 0);
    const auto& x = self.parents[0]->val;
    for (std::size_t i = 0; i < g.size(); ++i)
      g[i] += self.grad[i] * df(x[i], self.val[i]);
  });
}

}  // namespace

Tensor wrap_node(std::shared_ptr<Node> n) { return Tensor(std::move(n)); }

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  std::size_t n = shape_size(shape);
  return wrap_node(make_leaf(std::move(shape), std::vector<double>(n, 0.0), requires_grad));
}

Tensor Tensor::full(std::vector<int> shape, double v, bool requires_grad) {
  std::size_t n = shape_size(shape);
  return wrap_node(make_leaf(std::move(shape), std::vector<double>(n, v), requires_grad));
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> values, bool requires_grad) {
  if (shape_size(shape) != values.size())
    throw Error("tensor: shape " + shape_str(shape) + " does not match " +
                std::to_string(values.size()) + " values");
  return wrap_node(make_leaf(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::scalar(double v) { return wrap_node(make_leaf({}, {v}, false)); }

double Tensor::item() const {
  if (node_->val.size() != 1)
    throw Error("item: tensor has " + std::to_string(node_->val.size()) + " elements");
  return node_->val[0];
}

double Tensor::at(int i) const { return node_->val[static_cast<std::size_t>(i)]; }

double Tensor::at(int i, int j) const {
  return node_->val[static_cast<std::size_t>(i) * node_->shape[1] + j];
}

Tensor Tensor::detach() const {
  return wrap_node(make_leaf(node_->shape, node_->val, false));
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1 || loss.ndim() != 0)
    throw Error("backward: loss must be a scalar, got shape " +
                (loss.defined() ? shape_str(loss.shape()) : std::string("<empty>")));

  // Post-order topological sort over the needs_grad subgraph.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  Node* root = loss.node();
  if (!root->needs_grad) {
    root->grad.assign(1, 1.0);
    return;
  }
  stack.emplace_back(root, 0);
  seen.insert(root);
  while (!stack.empty()) {
    auto& [n, idx] = stack.back();
    if (idx < n->parents.size()) {
      Node* p = n->parents[idx++].get();
      if (p->needs_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  for (Node* n : order) n->grad.assign(n->val.size(), 0.0);
  root->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->bwd) (*it)->bwd(**it);
  }
}

// ---- arithmetic ------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape("add", a, b);
  std::vector<double> out(a.data());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.data()[i];
  return make_result("add", {a, b}, a.shape(), std::move(out), [](Node& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      if (!grad_wanted(self, k)) continue;
      auto& g = pgrad(self, k);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape("sub", a, b);
  std::vector<double> out(a.data());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.data()[i];
  return make_result("sub", {a, b}, a.shape(), std::move(out), [](Node& self) {
    if (grad_wanted(self, 0)) {
      auto& g = pgrad(self, 0);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (grad_wanted(self, 1)) {
      auto& g = pgrad(self, 1);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  check_same_shape("hadamard", a, b);
  std::vector<double> out(a.data());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.data()[i];
  return make_result("hadamard", {a, b}, a.shape(), std::move(out), [](Node& self) {
    const auto& av = self.parents[0]->val;
    const auto& bv = self.parents[1]->val;
    if (grad_wanted(self, 0)) {
      auto& g = pgrad(self, 0);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * bv[i];
    }
    if (grad_wanted(self, 1)) {
      auto& g = pgrad(self, 1);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * av[i];
    }
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  // Accepts [m,k]x[k,n], [k]x[k,n] -> [n], [m,k]x[k] -> [m].
  const bool avec = a.ndim() == 1;
  const bool bvec = b.ndim() == 1;
  if ((a.ndim() != 1 && a.ndim() != 2) || (b.ndim() != 1 && b.ndim() != 2) || (avec && bvec))
    throw Error("matmul: unsupported ranks " + shape_str(a.shape()) + " x " +
                shape_str(b.shape()));
  const int m = avec ? 1 : a.shape()[0];
  const int k = avec ? a.shape()[0] : a.shape()[1];
  const int k2 = bvec ? b.shape()[0] : b.shape()[0];
  const int n = bvec ? 1 : b.shape()[1];
  if (k != k2)
    throw Error("matmul: inner dimension mismatch " + shape_str(a.shape()) + " x " +
                shape_str(b.shape()));
  std::vector<double> out(static_cast<std::size_t>(m) * n, 0.0);
  const double* ap = a.data().data();
  const double* bp = b.data().data();
  for (int i = 0; i < m; ++i)
    for (int kk = 0; kk < k; ++kk) {
      const double aik = ap[i * k + kk];
      if (aik == 0.0) continue;
      const double* brow = bp + static_cast<std::size_t>(kk) * n;
      double* orow = out.data() + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) orow[j] += aik * brow[j];
    }
  std::vector<int> out_shape;
  if (avec)
    out_shape = {n};
  else if (bvec)
    out_shape = {m};
  else
    out_shape = {m, n};
  return make_result("matmul", {a, b}, std::move(out_shape), std::move(out),
                     [m, k, n](Node& self) {
    const auto& av = self.parents[0]->val;
    const auto& bv = self.parents[1]->val;
    if (grad_wanted(self, 0)) {  // dA = G * B^T
      auto& ga = pgrad(self, 0);
      for (int i = 0; i < m; ++i)
        for (int kk = 0; kk < k; ++kk) {
          double s = 0.0;
          for (int j = 0; j < n; ++j) s += self.grad[i * n + j] * bv[kk * n + j];
          ga[i * k + kk] += s;
        }
    }
    if (grad_wanted(self, 1)) {  // dB = A^T * G
      auto& gb = pgrad(self, 1);
      for (int kk = 0; kk < k; ++kk)
        for (int i = 0; i < m; ++i) {
          const double aik = av[i * k + kk];
          if (aik == 0.0) continue;
          for (int j = 0; j < n; ++j) gb[kk * n + j] += aik * self.grad[i * n + j];
        }
    }
  });
}

Tensor transpose(const Tensor& a) {
  check_2d("transpose", a);
  const int m = a.shape()[0], n = a.shape()[1];
  std::vector<double> out(a.data().size());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out[j * m + i] = a.data()[i * n + j];
  return make_result("transpose", {a}, {n, m}, std::move(out), [m, n](Node& self) {
    if (!grad_wanted(self, 0)) return;
    auto& g = pgrad(self, 0);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) g[i * n + j] += self.grad[j * m + i];
  });
}

Tensor concat(const Tensor& a, const Tensor& b, int axis) {
  if (a.ndim() == 1 && b.ndim() == 1 && axis == 0) {
    std::vector<double> out(a.data());
    out.insert(out.end(), b.data().begin(), b.data().end());
    const int na = a.size();
    return make_result("concat", {a, b}, {a.size() + b.size()}, std::move(out),
                       [na](Node& self) {
      if (grad_wanted(self, 0)) {
        auto& g = pgrad(self, 0);
        for (int i = 0; i < na; ++i) g[i] += self.grad[i];
      }
      if (grad_wanted(self, 1)) {
        auto& g = pgrad(self, 1);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[na + i];
      }
    });
  }
  if (a.ndim() == 2 && b.ndim() == 2 && (axis == 0 || axis == 1)) {
    const int ra = a.shape()[0], ca = a.shape()[1];
    const int rb = b.shape()[0], cb = b.shape()[1];
    if (axis == 0) {
      if (ca != cb)
        throw Error("concat: column mismatch " + shape_str(a.shape()) + " vs " +
                    shape_str(b.shape()));
      std::vector<double> out(a.data());
      out.insert(out.end(), b.data().begin(), b.data().end());
      const std::size_t na = a.data().size();
      return make_result("concat", {a, b}, {ra + rb, ca}, std::move(out),
                         [na](Node& self) {
        if (grad_wanted(self, 0)) {
          auto& g = pgrad(self, 0);
          for (std::size_t i = 0; i < na; ++i) g[i] += self.grad[i];
        }
        if (grad_wanted(self, 1)) {
          auto& g = pgrad(self, 1);
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[na + i];
        }
      });
    }
    if (ra != rb)
      throw Error("concat: row mismatch " + shape_str(a.shape()) + " vs " +
                  shape_str(b.shape()));
    std::vector<double> out(static_cast<std::size_t>(ra) * (ca + cb));
    for (int i = 0; i < ra; ++i) {
      std::copy_n(a.data().begin() + static_cast<std::size_t>(i) * ca, ca,
                  out.begin() + static_cast<std::size_t>(i) * (ca + cb));
      std::copy_n(b.data().begin() + static_cast<std::size_t>(i) * cb, cb,
                  out.begin() + static_cast<std::size_t>(i) * (ca + cb) + ca);
    }
    return make_result("concat", {a, b}, {ra, ca + cb}, std::move(out),
                       [ra, ca, cb](Node& self) {
      if (grad_wanted(self, 0)) {
        auto& g = pgrad(self, 0);
        for (int i = 0; i < ra; ++i)
          for (int j = 0; j < ca; ++j) g[i * ca + j] += self.grad[i * (ca + cb) + j];
      }
      if (grad_wanted(self, 1)) {
        auto& g = pgrad(self, 1);
        for (int i = 0; i < ra; ++i)
          for (int j = 0; j < cb; ++j)
            g[i * cb + j] += self.grad[i * (ca + cb) + ca + j];
      }
    });
  }
  throw Error("concat: unsupported ranks/axis " + shape_str(a.shape()) + ", " +
              shape_str(b.shape()) + ", axis " + std::to_string(axis));
}

Tensor row(const Tensor& a, int i) {
  check_2d("row", a);
  const int m = a.shape()[0], n = a.shape()[1];
  if (i < 0 || i >= m) throw Error("row: index " + std::to_string(i) + " out of range");
  std::vector<double> out(a.data().begin() + static_cast<std::size_t>(i) * n,
                          a.data().begin() + static_cast<std::size_t>(i + 1) * n);
  return make_result("row", {a}, {n}, std::move(out), [i, n](Node& self) {
    if (!grad_wanted(self, 0)) return;
    auto& g = pgrad(self, 0);
    for (int j = 0; j < n; ++j) g[static_cast<std::size_t>(i) * n + j] += self.grad[j];
  });
}

Tensor stack_rows(const std::vector<Tensor>& rows) {
  if (rows.empty()) throw Error("stack_rows: no rows");
  const int n = rows[0].size();
  std::vector<double> out;
  out.reserve(rows.size() * static_cast<std::size_t>(n));
  for (const auto& r : rows) {
    if (r.ndim() != 1 || r.size() != n)
      throw Error("stack_rows: row shape mismatch " + shape_str(r.shape()) +
                  " vs [" + std::to_string(n) + "]");
    out.insert(out.end(), r.data().begin(), r.data().end());
  }
  return make_result("stack_rows", rows, {static_cast<int>(rows.size()), n},
                     std::move(out), [n](Node& self) {
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      if (!grad_wanted(self, k)) continue;
      auto& g = pgrad(self, k);
      for (int j = 0; j < n; ++j) g[j] += self.grad[k * n + j];
    }
  });
}

Tensor stack_scalars(const std::vector<Tensor>& items) {
  if (items.empty()) throw Error("stack_scalars: no items");
  std::vector<double> out;
  out.reserve(items.size());
  for (const auto& t : items) {
    if (t.size() != 1)
      throw Error("stack_scalars: non-scalar element of shape " + shape_str(t.shape()));
    out.push_back(t.data()[0]);
  }
  return make_result("stack_scalars", items, {static_cast<int>(items.size())},
                     std::move(out), [](Node& self) {
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      if (!grad_wanted(self, k)) continue;
      pgrad(self, k)[0] += self.grad[k];
    }
  });
}

Tensor embedding(const Tensor& table, const std::vector<int>& ids) {
  check_2d("embedding", table);
  const int vocab = table.shape()[0], dim = table.shape()[1];
  if (ids.empty()) throw Error("embedding: empty id list");
  std::vector<double> out;
  out.reserve(ids.size() * static_cast<std::size_t>(dim));
  for (int id : ids) {
    if (id < 0 || id >= vocab)
      throw Error("embedding: id " + std::to_string(id) + " outside vocab " +
                  std::to_string(vocab));
    out.insert(out.end(), table.data().begin() + static_cast<std::size_t>(id) * dim,
               table.data().begin() + static_cast<std::size_t>(id + 1) * dim);
  }
  return make_result("embedding", {table}, {static_cast<int>(ids.size()), dim},
                     std::move(out), [ids, dim](Node& self) {
    if (!grad_wanted(self, 0)) return;
    auto& g = pgrad(self, 0);
    for (std::size_t t = 0; t < ids.size(); ++t)
      for (int j = 0; j < dim; ++j)
        g[static_cast<std::size_t>(ids[t]) * dim + j] += self.grad[t * dim + j];
  });
}

// ---- elementwise -----------------------------------------------------------

Tensor sigmoid(const Tensor& a) {
  return elementwise("sigmoid", a,
                     [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                     [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh_(const Tensor& a) {
  return elementwise("tanh", a, [](double x) { return std::tanh(x); },
                     [](double, double y) { return 1.0 - y * y; });
}

Tensor exp_(const Tensor& a) {
  return elementwise("exp", a, [](double x) { return std::exp(x); },
                     [](double, double y) { return y; });
}

Tensor log_(const Tensor& a) {
  return elementwise("log", a, [](double x) { return std::log(x); },
                     [](double x, double) { return 1.0 / x; });
}

Tensor scale(const Tensor& a, double c) {
  return elementwise("scale", a, [c](double x) { return c * x; },
                     [c](double, double) { return c; });
}

Tensor offset(const Tensor& a, double c) {
  return elementwise("offset", a, [c](double x) { return x + c; },
                     [](double, double) { return 1.0; });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  if (lo > hi) throw Error("clamp: lo > hi");
  return elementwise("clamp", a,
                     [lo, hi](double x) { return std::min(std::max(x, lo), hi); },
                     [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

// ---- structured ------------------------------------------------------------

Tensor add_rowwise(const Tensor& a, const Tensor& v) {
  check_2d("add_rowwise", a);
  if (v.ndim() != 1 || v.size() != a.shape()[1])
    throw Error("add_rowwise: shape mismatch " + shape_str(a.shape()) + " vs " +
                shape_str(v.shape()));
  const int m = a.shape()[0], n = a.shape()[1];
  std::vector<double> out(a.data());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out[i * n + j] += v.data()[j];
  return make_result("add_rowwise", {a, v}, a.shape(), std::move(out),
                     [m, n](Node& self) {
    if (grad_wanted(self, 0)) {
      auto& g = pgrad(self, 0);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (grad_wanted(self, 1)) {
      auto& g = pgrad(self, 1);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) g[j] += self.grad[i * n + j];
    }
  });
}

Tensor scale_rows(const Tensor& a, const Tensor& v) {
  check_2d("scale_rows", a);
  if (v.ndim() != 1 || v.size() != a.shape()[0])
    throw Error("scale_rows: shape mismatch " + shape_str(a.shape()) + " vs " +
                shape_str(v.shape()));
  const int m = a.shape()[0], n = a.shape()[1];
  std::vector<double> out(a.data());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out[i * n + j] *= v.data()[i];
  return make_result("scale_rows", {a, v}, a.shape(), std::move(out),
                     [m, n](Node& self) {
    const auto& av = self.parents[0]->val;
    const auto& vv = self.parents[1]->val;
    if (grad_wanted(self, 0)) {
      auto& g = pgrad(self, 0);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) g[i * n + j] += self.grad[i * n + j] * vv[i];
    }
    if (grad_wanted(self, 1)) {
      auto& g = pgrad(self, 1);
      for (int i = 0; i < m; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += self.grad[i * n + j] * av[i * n + j];
        g[i] += s;
      }
    }
  });
}

Tensor clamped_norm_ratio(const Tensor& nw, const Tensor& nh, double eps) {
  if (eps <= 0.0) throw Error("clamped_norm_ratio: epsilon must be positive");
  if (nw.ndim() != 1 || nh.ndim() != 1 || nw.size() != nh.size())
    throw Error("clamped_norm_ratio: shape mismatch " + shape_str(nw.shape()) +
                " vs " + shape_str(nh.shape()));
  const int n = nw.size();
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double h = nh.data()[i];
    out[i] = h > 0.0 ? std::min(eps * nw.data()[i] / h, 1.0) : 1.0;
  }
  return make_result("clamped_norm_ratio", {nw, nh}, {n}, std::move(out),
                     [eps, n](Node& self) {
    const auto& w = self.parents[0]->val;
    const auto& h = self.parents[1]->val;
    for (int i = 0; i < n; ++i) {
      if (!(h[i] > 0.0)) continue;
      const double r = eps * w[i] / h[i];
      if (r >= 1.0) continue;  // clamped branch, zero gradient
      const double g = self.grad[i];
      if (grad_wanted(self, 0)) pgrad(self, 0)[i] += g * eps / h[i];
      if (grad_wanted(self, 1)) pgrad(self, 1)[i] -= g * eps * w[i] / (h[i] * h[i]);
    }
  });
}

// ---- reductions ------------------------------------------------------------

Tensor sum_all(const Tensor& a) {
  double s = 0.0;
  for (double x : a.data()) s += x;
  return make_result("sum_all", {a}, {}, {s}, [](Node& self) {
    if (!grad_wanted(self, 0)) return;
    auto& g = pgrad(self, 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[0];
  });
}

Tensor mean_all(const Tensor& a) {
  if (a.size() == 0) throw Error("mean_all: empty tensor");
  double s = 0.0;
  for (double x : a.data()) s += x;
  const double inv = 1.0 / a.size();
  return make_result("mean_all", {a}, {}, {s * inv}, [inv](Node& self) {
    if (!grad_wanted(self, 0)) return;
    auto& g = pgrad(self, 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[0] * inv;
  });
}

Tensor mean_axis(const Tensor& a, int axis) {
  check_2d("mean_axis", a);
  const int m = a.shape()[0], n = a.shape()[1];
  if (axis == 0) {
    if (m == 0) throw Error("mean_axis: empty axis");
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) out[j] += a.data()[i * n + j];
    for (double& x : out) x /= m;
    return make_result("mean_axis", {a}, {n}, std::move(out), [m, n](Node& self) {
      if (!grad_wanted(self, 0)) return;
      auto& g = pgrad(self, 0);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) g[i * n + j] += self.grad[j] / m;
    });
  }
  if (axis == 1) {
    if (n == 0) throw Error("mean_axis: empty axis");
    std::vector<double> out(static_cast<std::size_t>(m), 0.0);
    for (int i = 0; i < m; ++i) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += a.data()[i * n + j];
      out[i] = s / n;
    }
    return make_result("mean_axis", {a}, {m}, std::move(out), [m, n](Node& self) {
      if (!grad_wanted(self, 0)) return;
      auto& g = pgrad(self, 0);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) g[i * n + j] += self.grad[i] / n;
    });
  }
  throw Error("mean_axis: axis must be 0 or 1");
}

namespace {
double norm_of(const double* x, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += x[i] * x[i];
  return std::sqrt(s);
}
}  // namespace

Tensor l2_norm(const Tensor& v) {
  if (v.ndim() != 1) throw Error("l2_norm: expected 1-d tensor, got " + shape_str(v.shape()));
  const int n = v.size();
  const double nv = norm_of(v.data().data(), n);
  return make_result("l2_norm", {v}, {}, {nv}, [n](Node& self) {
    if (!grad_wanted(self, 0)) return;
    const double nv2 = self.val[0];
    if (nv2 == 0.0) return;  // subgradient 0 at the origin
    auto& g = pgrad(self, 0);
    const auto& x = self.parents[0]->val;
    for (int i = 0; i < n; ++i) g[i] += self.grad[0] * x[i] / nv2;
  });
}

Tensor l2_norm_rows(const Tensor& a) {
  check_2d("l2_norm_rows", a);
  const int m = a.shape()[0], n = a.shape()[1];
  std::vector<double> out(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) out[i] = norm_of(a.data().data() + static_cast<std::size_t>(i) * n, n);
  return make_result("l2_norm_rows", {a}, {m}, std::move(out), [m, n](Node& self) {
    if (!grad_wanted(self, 0)) return;
    auto& g = pgrad(self, 0);
    const auto& x = self.parents[0]->val;
    for (int i = 0; i < m; ++i) {
      const double nv = self.val[i];
      if (nv == 0.0) continue;
      for (int j = 0; j < n; ++j) g[i * n + j] += self.grad[i] * x[i * n + j] / nv;
    }
  });
}

Tensor mse(const Tensor& a, const Tensor& b) {
  check_same_shape("mse", a, b);
  if (a.size() == 0) throw Error("mse: empty tensors");
  double s = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    s += d * d;
  }
  const double inv = 1.0 / a.size();
  return make_result("mse", {a, b}, {}, {s * inv}, [inv](Node& self) {
    const auto& av = self.parents[0]->val;
    const auto& bv = self.parents[1]->val;
    for (std::size_t i = 0; i < av.size(); ++i) {
      const double d = 2.0 * inv * (av[i] - bv[i]) * self.grad[0];
      if (grad_wanted(self, 0)) pgrad(self, 0)[i] += d;
      if (grad_wanted(self, 1)) pgrad(self, 1)[i] -= d;
    }
  });
}

Tensor cross_entropy_logits(const Tensor& logits, const std::vector<int>& targets) {
  check_2d("cross_entropy_logits", logits);
  const int t = logits.shape()[0], v = logits.shape()[1];
  if (static_cast<int>(targets.size()) != t)
    throw Error("cross_entropy_logits: " + std::to_string(targets.size()) +
                " targets for " + shape_str(logits.shape()) + " logits");
  if (t == 0) throw Error("cross_entropy_logits: empty batch");
  double total = 0.0;
  for (int i = 0; i < t; ++i) {
    if (targets[i] < 0 || targets[i] >= v)
      throw Error("cross_entropy_logits: target " + std::to_string(targets[i]) +
                  " outside vocab " + std::to_string(v));
    const double* l = logits.data().data() + static_cast<std::size_t>(i) * v;
    const double mx = *std::max_element(l, l + v);
    double z = 0.0;
    for (int j = 0; j < v; ++j) z += std::exp(l[j] - mx);
    total += (std::log(z) + mx) - l[targets[i]];
  }
  return make_result("cross_entropy_logits", {logits}, {}, {total / t},
                     [t, v, targets](Node& self) {
    if (!grad_wanted(self, 0)) return;
    auto& g = pgrad(self, 0);
    const auto& lv = self.parents[0]->val;
    for (int i = 0; i < t; ++i) {
      const double* l = lv.data() + static_cast<std::size_t>(i) * v;
      const double mx = *std::max_element(l, l + v);
      double z = 0.0;
      for (int j = 0; j < v; ++j) z += std::exp(l[j] - mx);
      for (int j = 0; j < v; ++j) {
        double p = std::exp(l[j] - mx) / z;
        if (j == targets[i]) p -= 1.0;
        g[i * v + j] += self.grad[0] * p / t;
      }
    }
  });
}

Tensor frobenius_sq(const Tensor& a) {
  double s = 0.0;
  for (double x : a.data()) s += x * x;
  return make_result("frobenius_sq", {a}, {}, {s}, [](Node& self) {
    if (!grad_wanted(self, 0)) return;
    auto& g = pgrad(self, 0);
    const auto& x = self.parents[0]->val;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += 2.0 * x[i] * self.grad[0];
  });
}

Tensor frobenius_norm(const Tensor& a) {
  double s = 0.0;
  for (double x : a.data()) s += x * x;
  const double nv = std::sqrt(s);
  return make_result("frobenius_norm", {a}, {}, {nv}, [](Node& self) {
    if (!grad_wanted(self, 0)) return;
    const double nv2 = self.val[0];
    if (nv2 == 0.0) return;
    auto& g = pgrad(self, 0);
    const auto& x = self.parents[0]->val;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[0] * x[i] / nv2;
  });
}

Tensor custom_op(const char* name, std::vector<Tensor> inputs,
                 std::vector<int> out_shape, std::vector<double> out_val,
                 std::function<void(const std::vector<double>& out_grad,
                                    std::vector<OpIn>& ins)> bwd) {
  if (shape_size(out_shape) != out_val.size())
    throw Error(std::string(name) + ": output shape/value size mismatch");
  return make_result(name, std::move(inputs), std::move(out_shape), std::move(out_val),
                     [bwd = std::move(bwd)](Node& self) {
    std::vector<OpIn> ins;
    ins.reserve(self.parents.size());
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      Node& p = *self.parents[k];
      ins.push_back(OpIn{&p.val, &p.shape, p.needs_grad ? &pgrad(self, k) : nullptr});
    }
    bwd(self.grad, ins);
  });
}

}  // namespace mird
