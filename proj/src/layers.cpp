#include "mird/layers.hpp"

#include <cmath>
#include <random>

namespace mird {

Tensor fan_uniform(std::vector<int> shape, int fan_in, int fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return Tensor::from(std::move(shape), std::move(v), true);
}

Linear::Linear(int in, int out, Rng& rng, bool bias)
    : w(fan_uniform({in, out}, in, out, rng)) {
  if (bias) b = Tensor::zeros({out}, true);
}

Tensor Linear::operator()(const Tensor& x) const {
  Tensor y = matmul(x, w);
  if (!b.defined()) return y;
  if (y.ndim() == 1) return add(y, b);
  return add_rowwise(y, b);
}

void Linear::collect(ParamRegistry& reg, const std::string& prefix) const {
  reg.emplace_back(prefix + ".w", w);
  if (b.defined()) reg.emplace_back(prefix + ".b", b);
}

GruCell::GruCell(int in, int hidden_, Rng& rng) : in_dim(in), hidden(hidden_) {
  if (in > 0) {
    wz = fan_uniform({in, hidden}, in, hidden, rng);
    wr = fan_uniform({in, hidden}, in, hidden, rng);
    wh = fan_uniform({in, hidden}, in, hidden, rng);
  }
  uz = fan_uniform({hidden, hidden}, hidden, hidden, rng);
  ur = fan_uniform({hidden, hidden}, hidden, hidden, rng);
  uh = fan_uniform({hidden, hidden}, hidden, hidden, rng);
  bz = Tensor::zeros({hidden}, true);
  br = Tensor::zeros({hidden}, true);
  bh = Tensor::zeros({hidden}, true);
}

Tensor GruCell::step(const Tensor& x, const Tensor& h) const {
  if (in_dim == 0) throw Error("GruCell: input given to an input-free cell");
  Tensor z = sigmoid(add(add(matmul(x, wz), matmul(h, uz)), bz));
  Tensor r = sigmoid(add(add(matmul(x, wr), matmul(h, ur)), br));
  Tensor cand = tanh_(add(add(matmul(x, wh), matmul(hadamard(r, h), uh)), bh));
  return add(hadamard(one_minus(z), h), hadamard(z, cand));
}

Tensor GruCell::step(const Tensor& h) const {
  if (in_dim != 0) throw Error("GruCell: missing input for a cell with in_dim > 0");
  Tensor z = sigmoid(add(matmul(h, uz), bz));
  Tensor r = sigmoid(add(matmul(h, ur), br));
  Tensor cand = tanh_(add(matmul(hadamard(r, h), uh), bh));
  return add(hadamard(one_minus(z), h), hadamard(z, cand));
}

std::vector<Tensor> GruCell::unroll(const Tensor& seq) const {
  if (seq.ndim() != 2 || seq.shape()[1] != in_dim)
    throw Error("GruCell: sequence shape " + shape_str(seq.shape()) +
                " does not match in_dim " + std::to_string(in_dim));
  const int t_len = seq.shape()[0];
  if (t_len == 0) throw Error("GruCell: empty sequence");
  std::vector<Tensor> hs;
  hs.reserve(t_len);
  Tensor h = Tensor::zeros({hidden});
  for (int t = 0; t < t_len; ++t) {
    h = step(row(seq, t), h);
    hs.push_back(h);
  }
  return hs;
}

void GruCell::collect(ParamRegistry& reg, const std::string& prefix) const {
  if (in_dim > 0) {
    reg.emplace_back(prefix + ".wz", wz);
    reg.emplace_back(prefix + ".wr", wr);
    reg.emplace_back(prefix + ".wh", wh);
  }
  reg.emplace_back(prefix + ".uz", uz);
  reg.emplace_back(prefix + ".ur", ur);
  reg.emplace_back(prefix + ".uh", uh);
  reg.emplace_back(prefix + ".bz", bz);
  reg.emplace_back(prefix + ".br", br);
  reg.emplace_back(prefix + ".bh", bh);
}

Embedding::Embedding(int vocab, int dim, Rng& rng)
    : table(fan_uniform({vocab, dim}, vocab, dim, rng)) {}

Tensor Embedding::operator()(const std::vector<int>& ids) const {
  return embedding(table, ids);
}

void Embedding::collect(ParamRegistry& reg, const std::string& prefix) const {
  reg.emplace_back(prefix + ".table", table);
}

}  // namespace mird
