#pragma once

#include <string>
#include <vector>

#include "mird/optim.hpp"
#include "mird/tensor.hpp"

namespace mird {

// Fan-based uniform init, bound sqrt(6/(fan_in+fan_out)). Biases start at 0.
Tensor fan_uniform(std::vector<int> shape, int fan_in, int fan_out, Rng& rng);

struct Linear {
  Tensor w;  // [in, out]
  Tensor b;  // [out], undefined when bias-free

  Linear() = default;
  Linear(int in, int out, Rng& rng, bool bias = true);

  // x: [in] or [n, in]
  Tensor operator()(const Tensor& x) const;
  void collect(ParamRegistry& reg, const std::string& prefix) const;
};

// Single-layer gated recurrent cell (update + reset gates). in == 0 builds an
// input-free cell whose step depends only on the previous hidden state.
struct GruCell {
  int in_dim = 0;
  int hidden = 0;
  Tensor wz, wr, wh;  // [in, hidden], only when in_dim > 0
  Tensor uz, ur, uh;  // [hidden, hidden]
  Tensor bz, br, bh;  // [hidden]

  GruCell() = default;
  GruCell(int in, int hidden, Rng& rng);

  Tensor step(const Tensor& x, const Tensor& h) const;
  Tensor step(const Tensor& h) const;  // input-free variant

  // Runs over the rows of seq ([T, in]) from a zero initial state and
  // returns all T hidden states.
  std::vector<Tensor> unroll(const Tensor& seq) const;

  void collect(ParamRegistry& reg, const std::string& prefix) const;
};

struct Embedding {
  Tensor table;  // [vocab, dim]

  Embedding() = default;
  Embedding(int vocab, int dim, Rng& rng);

  Tensor operator()(const std::vector<int>& ids) const;  // [len, dim]
  void collect(ParamRegistry& reg, const std::string& prefix) const;
};

}  // namespace mird
