#pragma once

#include <vector>

#include "mird/tensor.hpp"

namespace mird {

// Euclidean projection of v onto the probability simplex, computed by the
// descending-sort threshold algorithm. Shift invariant by construction: the
// input is first normalized by subtracting its maximum.
std::vector<double> sparsemax(const std::vector<double>& v);

// J^T g where J is the sparsemax Jacobian at v: on the support S,
// J = I_S - (1/|S|) 1_S 1_S^T, zero elsewhere. J is symmetric, so this is
// also the JVP.
std::vector<double> sparsemax_jvp(const std::vector<double>& v,
                                  const std::vector<double>& g_out);

// Row-wise sparsemax as a differentiable tensor op.
Tensor sparsemax_rows(const Tensor& scores);

}  // namespace mird
