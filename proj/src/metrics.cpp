#include "mird/metrics.hpp"

#include <cmath>
#include <limits>

namespace mird {

MetricsReport compute_metrics(const std::vector<double>& preds,
                              const std::vector<double>& labels) {
  const std::size_t n = preds.size();
  if (n != labels.size())
    throw Error("compute_metrics: " + std::to_string(n) + " preds vs " +
                std::to_string(labels.size()) + " labels");
  if (n < 2) throw Error("compute_metrics: need at least 2 samples");

  MetricsReport r;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  double abs_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) abs_sum += std::fabs(preds[i] - labels[i]);
  r.mae = abs_sum / n;

  double mp = 0.0, ml = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mp += preds[i];
    ml += labels[i];
  }
  mp /= n;
  ml /= n;
  double cov = 0.0, vp = 0.0, vl = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cov += (preds[i] - mp) * (labels[i] - ml);
    vp += (preds[i] - mp) * (preds[i] - mp);
    vl += (labels[i] - ml) * (labels[i] - ml);
  }
  if (vl == 0.0 || vp == 0.0) {
    r.corr = nan;
    r.corr_defined = false;
  } else {
    r.corr = cov / std::sqrt(vp * vl);
  }

  // 2x2 confusion over nonzero labels; prediction positive iff > 0
  long long tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] == 0.0) continue;
    const bool lab_pos = labels[i] > 0.0;
    const bool pred_pos = preds[i] > 0.0;
    if (lab_pos && pred_pos) ++tp;
    else if (!lab_pos && pred_pos) ++fp;
    else if (lab_pos && !pred_pos) ++fn;
    else ++tn;
  }
  const long long kept = tp + fp + fn + tn;
  if (kept == 0) {
    r.acc = r.f1 = nan;
    r.accf1_defined = false;
    return r;
  }
  r.acc = 100.0 * static_cast<double>(tp + tn) / kept;

  auto f1_of = [](long long tp_c, long long fp_c, long long fn_c) {
    const double denom = 2.0 * tp_c + fp_c + fn_c;
    return denom == 0.0 ? 0.0 : 2.0 * tp_c / denom;
  };
  const double f1_pos = f1_of(tp, fp, fn);
  const double f1_neg = f1_of(tn, fn, fp);
  const long long support_pos = tp + fn, support_neg = tn + fp;
  r.f1 = 100.0 * (f1_pos * support_pos + f1_neg * support_neg) / kept;
  return r;
}

namespace {

// Solves (A + lambda I) X = B in place via Gaussian elimination with partial
// pivoting. A: d x d, B: d x k, both row-major.
void ridge_solve(std::vector<double>& a, std::vector<double>& b, int d, int k,
                 double lambda) {
  for (int i = 0; i < d; ++i) a[static_cast<std::size_t>(i) * d + i] += lambda;
  for (int col = 0; col < d; ++col) {
    int piv = col;
    double best = std::fabs(a[static_cast<std::size_t>(col) * d + col]);
    for (int r2 = col + 1; r2 < d; ++r2) {
      const double v = std::fabs(a[static_cast<std::size_t>(r2) * d + col]);
      if (v > best) {
        best = v;
        piv = r2;
      }
    }
    if (best == 0.0) throw Error("ridge_probe: singular system");
    if (piv != col) {
      for (int j = 0; j < d; ++j)
        std::swap(a[static_cast<std::size_t>(piv) * d + j],
                  a[static_cast<std::size_t>(col) * d + j]);
      for (int j = 0; j < k; ++j)
        std::swap(b[static_cast<std::size_t>(piv) * k + j],
                  b[static_cast<std::size_t>(col) * k + j]);
    }
    const double inv = 1.0 / a[static_cast<std::size_t>(col) * d + col];
    for (int r2 = col + 1; r2 < d; ++r2) {
      const double f = a[static_cast<std::size_t>(r2) * d + col] * inv;
      if (f == 0.0) continue;
      for (int j = col; j < d; ++j)
        a[static_cast<std::size_t>(r2) * d + j] -=
            f * a[static_cast<std::size_t>(col) * d + j];
      for (int j = 0; j < k; ++j)
        b[static_cast<std::size_t>(r2) * k + j] -=
            f * b[static_cast<std::size_t>(col) * k + j];
    }
  }
  for (int col = d - 1; col >= 0; --col) {
    const double inv = 1.0 / a[static_cast<std::size_t>(col) * d + col];
    for (int j = 0; j < k; ++j) {
      double s = b[static_cast<std::size_t>(col) * k + j];
      for (int r2 = col + 1; r2 < d; ++r2)
        s -= a[static_cast<std::size_t>(col) * d + r2] *
             b[static_cast<std::size_t>(r2) * k + j];
      b[static_cast<std::size_t>(col) * k + j] = s * inv;
    }
  }
}

}  // namespace

double ridge_probe_r2(const Rows& x, const Rows& y) {
  const std::size_t n = x.size();
  if (n != y.size()) throw Error("ridge_probe: row mismatch");
  if (n < 4) throw Error("ridge_probe: too few samples");
  const int d = static_cast<int>(x[0].size());
  const int k = static_cast<int>(y[0].size());
  std::vector<std::size_t> fit_idx, eval_idx;
  for (std::size_t i = 0; i < n; ++i) (i % 2 == 0 ? fit_idx : eval_idx).push_back(i);
  if (static_cast<int>(fit_idx.size()) < d)
    throw Error("ridge_probe: fewer fit samples (" + std::to_string(fit_idx.size()) +
                ") than latent dimension (" + std::to_string(d) + ")");

  std::vector<double> xm(d, 0.0), ym(k, 0.0);
  for (auto i : fit_idx) {
    for (int j = 0; j < d; ++j) xm[j] += x[i][j];
    for (int j = 0; j < k; ++j) ym[j] += y[i][j];
  }
  for (auto& v : xm) v /= fit_idx.size();
  for (auto& v : ym) v /= fit_idx.size();

  std::vector<double> xtx(static_cast<std::size_t>(d) * d, 0.0);
  std::vector<double> xty(static_cast<std::size_t>(d) * k, 0.0);
  double trace = 0.0;
  for (auto i : fit_idx) {
    for (int p = 0; p < d; ++p) {
      const double xp = x[i][p] - xm[p];
      for (int q = 0; q < d; ++q)
        xtx[static_cast<std::size_t>(p) * d + q] += xp * (x[i][q] - xm[q]);
      for (int j = 0; j < k; ++j)
        xty[static_cast<std::size_t>(p) * k + j] += xp * (y[i][j] - ym[j]);
    }
  }
  for (int p = 0; p < d; ++p) trace += xtx[static_cast<std::size_t>(p) * d + p];
  const double lambda = 1e-3 * std::max(trace / d, 1e-12);
  ridge_solve(xtx, xty, d, k, lambda);  // xty now holds the weights W: d x k

  double ss_res = 0.0, ss_tot = 0.0;
  for (auto i : eval_idx) {
    for (int j = 0; j < k; ++j) {
      double pred = ym[j];
      for (int p = 0; p < d; ++p)
        pred += (x[i][p] - xm[p]) * xty[static_cast<std::size_t>(p) * k + j];
      ss_res += (y[i][j] - pred) * (y[i][j] - pred);
      ss_tot += (y[i][j] - ym[j]) * (y[i][j] - ym[j]);
    }
  }
  if (ss_tot == 0.0) throw Error("ridge_probe: constant target on eval split");
  return 1.0 - ss_res / ss_tot;
}

std::array<std::array<double, 4>, 4> probe_factors(
    const std::array<const Rows*, 4>& latents,
    const std::array<const Rows*, 4>& factors) {
  std::array<std::array<double, 4>, 4> r2{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) r2[i][j] = ridge_probe_r2(*latents[i], *factors[j]);
  return r2;
}

}  // namespace mird
