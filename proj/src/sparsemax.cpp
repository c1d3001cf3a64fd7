#include "mird/sparsemax.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mird {

namespace {

void project_into(const double* v, int n, double* out) {
  // work on z = v - max(v); the projection is shift invariant and this keeps
  // the arithmetic identical for shifted inputs
  double mx = v[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, v[i]);
  std::vector<double> z(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) z[i] = v[i] - mx;

  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return z[a] > z[b]; });

  double cum = 0.0, tau = 0.0;
  int k = 0;
  for (int r = 0; r < n; ++r) {
    const double zr = z[idx[r]];
    cum += zr;
    if (1.0 + (r + 1) * zr > cum) {
      k = r + 1;
      tau = (cum - 1.0) / k;
    } else {
      break;
    }
  }
  for (int i = 0; i < n; ++i) out[i] = std::max(z[i] - tau, 0.0);
}

}  // namespace

std::vector<double> sparsemax(const std::vector<double>& v) {
  if (v.empty()) throw Error("sparsemax: empty vector");
  for (double x : v)
    if (!std::isfinite(x)) throw Error("sparsemax: non-finite entry");
  std::vector<double> out(v.size());
  project_into(v.data(), static_cast<int>(v.size()), out.data());
  return out;
}

std::vector<double> sparsemax_jvp(const std::vector<double>& v,
                                  const std::vector<double>& g_out) {
  if (v.size() != g_out.size())
    throw Error("sparsemax_jvp: length mismatch " + std::to_string(v.size()) +
                " vs " + std::to_string(g_out.size()));
  const std::vector<double> p = sparsemax(v);
  std::vector<double> out(v.size(), 0.0);
  double sum = 0.0;
  int support = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) {
      sum += g_out[i];
      ++support;
    }
  const double mean = sum / support;  // support is never empty
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) out[i] = g_out[i] - mean;
  return out;
}

Tensor sparsemax_rows(const Tensor& scores) {
  if (scores.ndim() != 2)
    throw Error("sparsemax_rows: expected 2-d tensor, got " + shape_str(scores.shape()));
  const int m = scores.shape()[0], n = scores.shape()[1];
  if (n == 0) throw Error("sparsemax_rows: empty rows");
  for (double x : scores.data())
    if (!std::isfinite(x)) throw Error("sparsemax_rows: non-finite entry");
  std::vector<double> out(scores.data().size());
  for (int i = 0; i < m; ++i)
    project_into(scores.data().data() + static_cast<std::size_t>(i) * n, n,
                 out.data() + static_cast<std::size_t>(i) * n);
  const std::vector<double> probs = out;  // support mask for the backward pass
  return custom_op("sparsemax_rows", {scores}, scores.shape(), std::move(out),
                   [probs, m, n](const std::vector<double>& g, std::vector<OpIn>& ins) {
                     if (!ins[0].grad) return;
                     auto& gi = *ins[0].grad;
                     for (int i = 0; i < m; ++i) {
                       const double* p = probs.data() + static_cast<std::size_t>(i) * n;
                       const double* go = g.data() + static_cast<std::size_t>(i) * n;
                       double sum = 0.0;
                       int support = 0;
                       for (int j = 0; j < n; ++j)
                         if (p[j] > 0.0) {
                           sum += go[j];
                           ++support;
                         }
                       const double mean = sum / support;
                       for (int j = 0; j < n; ++j)
                         if (p[j] > 0.0)
                           gi[static_cast<std::size_t>(i) * n + j] += go[j] - mean;
                     }
                   });
}

}  // namespace mird
