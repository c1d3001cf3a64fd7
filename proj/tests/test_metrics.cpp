#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "mird/metrics.hpp"

using namespace mird;

TEST_CASE("perfect predictions") {
  std::vector<double> y{1.0, -0.5, 2.0, -1.5};
  auto r = compute_metrics(y, y);
  CHECK(r.mae == 0.0);
  CHECK(r.corr == 1.0);
  CHECK(r.acc == 100.0);
  CHECK(r.f1 == 100.0);
  CHECK(r.accf1_defined);
  CHECK(r.corr_defined);
}

TEST_CASE("anti-aligned pair") {
  auto r = compute_metrics({1.0, -1.0}, {-1.0, 1.0});
  CHECK(r.acc == 0.0);
  CHECK(r.f1 == 0.0);
  CHECK(r.mae == 2.0);
  CHECK(r.corr == -1.0);
}

TEST_CASE("weighted F1, hand-computed confusion") {
  // labels: one positive, three negative. One false positive gives
  // F1+ = 2/3 (support 1) and F1- = 4/5 (support 3), so the
  // support-weighted F1 is (1*(2/3) + 3*(4/5))/4 = 23/30.
  auto r = compute_metrics({1.0, 1.0, -1.0, -1.0}, {1.0, -1.0, -1.0, -1.0});
  CHECK(r.acc == 75.0);
  CHECK(r.f1 == 100.0 * ((2.0 / 3.0) * 1 + (4.0 / 5.0) * 3) / 4);
  CHECK(r.f1 == doctest::Approx(76.6666666667));
}

TEST_CASE("exact-zero labels are excluded from Acc/F1 only") {
  auto r = compute_metrics({1.0, -1.0, 5.0}, {1.0, -1.0, 0.0});
  CHECK(r.acc == 100.0);
  CHECK(r.f1 == 100.0);
  CHECK(r.mae == 5.0 / 3);
}

TEST_CASE("degenerate inputs give NaN plus cleared flags") {
  auto zeros = compute_metrics({1.0, -1.0}, {0.0, 0.0});
  CHECK(!zeros.accf1_defined);
  CHECK(std::isnan(zeros.acc));
  CHECK(std::isnan(zeros.f1));
  CHECK(!zeros.corr_defined);  // constant labels
  CHECK(std::isnan(zeros.corr));
  CHECK(zeros.mae == 1.0);

  auto flat_pred = compute_metrics({0.5, 0.5}, {1.0, -1.0});
  CHECK(!flat_pred.corr_defined);
  CHECK(flat_pred.accf1_defined);
}

TEST_CASE("pair permutation leaves every metric unchanged") {
  // four dyadic values keep all the internal sums and means exact, so the
  // comparison can be bitwise
  std::vector<double> p{1.0, -0.5, 0.25, 2.0};
  std::vector<double> y{0.5, -1.0, 1.0, -2.0};
  auto base = compute_metrics(p, y);
  std::vector<int> idx{2, 0, 3, 1};
  std::vector<double> p2, y2;
  for (int i : idx) {
    p2.push_back(p[i]);
    y2.push_back(y[i]);
  }
  auto perm = compute_metrics(p2, y2);
  CHECK(base.acc == perm.acc);
  CHECK(base.f1 == perm.f1);
  CHECK(base.mae == perm.mae);
  CHECK(base.corr == perm.corr);
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(compute_metrics({1.0}, {1.0}), Error);
  CHECK_THROWS_AS(compute_metrics({1.0, 2.0}, {1.0}), Error);
}

TEST_CASE("ridge probe recovers a linear map and rejects noise") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 1.0);
  const int n = 200, d = 5;
  Rows x(n, std::vector<double>(d));
  Rows y_lin(n, std::vector<double>(2));
  Rows y_noise(n, std::vector<double>(2));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) x[i][j] = g(rng);
    y_lin[i][0] = 2.0 * x[i][0] - x[i][3] + 0.5;
    y_lin[i][1] = x[i][1] + x[i][2] + x[i][4];
    y_noise[i][0] = g(rng);
    y_noise[i][1] = g(rng);
  }
  CHECK(ridge_probe_r2(x, y_lin) > 0.99);
  CHECK(std::fabs(ridge_probe_r2(x, y_noise)) < 0.2);
}

TEST_CASE("ridge probe input validation") {
  Rows x(10, std::vector<double>(6));
  Rows y(9, std::vector<double>(1));
  CHECK_THROWS_AS(ridge_probe_r2(x, y), Error);  // row count mismatch
  Rows y2(10, std::vector<double>(1, 1.0));
  // only 5 fit rows for 6 features
  CHECK_THROWS_AS(ridge_probe_r2(x, y2), Error);
}

TEST_CASE("probe_factors row/column ordering") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  const int n = 120;
  Rows a(n, std::vector<double>(3)), b(n, std::vector<double>(3));
  Rows c(n, std::vector<double>(3)), s(n, std::vector<double>(3));
  for (auto* rows : {&a, &b, &c, &s})
    for (auto& row : *rows)
      for (auto& v : row) v = g(rng);
  // each "latent" literally equals one factor, so the diagonal of the
  // mapped cells should be ~1 and the off-diagonal ~0
  auto m = probe_factors({&b, &c, &s, &a}, {&a, &b, &c, &s});
  CHECK(m[3][0] > 0.99);  // z_s = a predicts factor a
  CHECK(m[0][1] > 0.99);  // z_v = b predicts factor b
  CHECK(m[1][2] > 0.99);
  CHECK(m[2][3] > 0.99);
  CHECK(std::fabs(m[0][0]) < 0.2);
  CHECK(std::fabs(m[3][3]) < 0.2);
}
