#pragma once

#include <array>
#include <vector>

#include "mird/common.hpp"

namespace mird {

// Binary accuracy and weighted F1 use sign at threshold 0; exact-zero labels
// are excluded from Acc/F1 but kept for MAE/Corr. When an aggregate is
// undefined (constant labels for Corr, no nonzero labels for Acc/F1) the
// value is NaN and the matching flag is false.
struct MetricsReport {
  double acc = 0.0;   // percent
  double f1 = 0.0;    // percent, support-weighted over {+,-}
  double mae = 0.0;
  double corr = 0.0;
  bool accf1_defined = true;
  bool corr_defined = true;
};

MetricsReport compute_metrics(const std::vector<double>& preds,
                              const std::vector<double>& labels);

using Rows = std::vector<std::vector<double>>;

// Out-of-sample R^2 of a ridge probe from x-rows to y-rows: fit on even
// indices, evaluate on odd, centered, uniform average over target dims.
double ridge_probe_r2(const Rows& x, const Rows& y);

// R^2 matrix, rows ordered (z_v, z_l, z_a, z_s), columns ordered
// (shared, priv_v, priv_l, priv_a).
std::array<std::array<double, 4>, 4> probe_factors(
    const std::array<const Rows*, 4>& latents,
    const std::array<const Rows*, 4>& factors);

}  // namespace mird
