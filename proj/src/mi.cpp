#include "mird/mi.hpp"

#include <cmath>

namespace mird {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;  // ln(2*pi)

void check_pair_batch(const char* op, const GaussianConditional& q,
                      const Tensor& x, const Tensor& y) {
  if (x.ndim() != 2 || y.ndim() != 2)
    throw Error(std::string(op) + ": expected 2-d pair batches, got " +
                shape_str(x.shape()) + " and " + shape_str(y.shape()));
  if (x.shape()[0] != y.shape()[0])
    throw Error(std::string(op) + ": row mismatch " + shape_str(x.shape()) +
                " vs " + shape_str(y.shape()));
  if (x.shape()[0] < 1) throw Error(std::string(op) + ": empty pair batch");
  if (x.shape()[1] != q.in_dim || y.shape()[1] != q.out_dim)
    throw Error(std::string(op) + ": batch dims " + shape_str(x.shape()) + "/" +
                shape_str(y.shape()) + " do not match conditional " +
                std::to_string(q.in_dim) + "->" + std::to_string(q.out_dim));
}
}  // namespace

GaussianConditional::GaussianConditional(int in, int out, Rng& rng)
    : in_dim(in),
      out_dim(out),
      h1(in, kHidden, rng),
      mu(kHidden, out, rng),
      logvar(kHidden, out, rng) {}

std::pair<Tensor, Tensor> GaussianConditional::heads(const Tensor& x,
                                                     bool frozen) const {
  auto apply = [frozen](const Linear& lin, const Tensor& v) {
    Tensor w = frozen ? lin.w.detach() : lin.w;
    Tensor b = frozen ? lin.b.detach() : lin.b;
    Tensor y = matmul(v, w);
    return y.ndim() == 1 ? add(y, b) : add_rowwise(y, b);
  };
  Tensor h = tanh_(apply(h1, x));
  Tensor m = apply(mu, h);
  Tensor lv = clamp(apply(logvar, h), kLogVarMin, kLogVarMax);
  return {m, lv};
}

Tensor GaussianConditional::log_prob(const Tensor& x, const Tensor& y) const {
  if (x.ndim() != 1 || x.size() != in_dim || y.ndim() != 1 || y.size() != out_dim)
    throw Error("log_prob: shapes " + shape_str(x.shape()) + "/" +
                shape_str(y.shape()) + " do not match conditional " +
                std::to_string(in_dim) + "->" + std::to_string(out_dim));
  auto [m, lv] = heads(x, false);
  Tensor diff = sub(y, m);
  Tensor quad = hadamard(hadamard(diff, diff), exp_(scale(lv, -1.0)));
  Tensor per_dim = add(offset(scale(lv, -0.5), -0.5 * kLog2Pi), scale(quad, -0.5));
  return sum_all(per_dim);
}

void GaussianConditional::collect(ParamRegistry& reg, const std::string& prefix) const {
  h1.collect(reg, prefix + ".h1");
  mu.collect(reg, prefix + ".mu");
  logvar.collect(reg, prefix + ".logvar");
}

Tensor club_estimate(const GaussianConditional& q, const Tensor& x, const Tensor& y) {
  check_pair_batch("club_estimate", q, x, y);
  auto [m, lv] = q.heads(x, /*frozen=*/true);

  const int n = y.shape()[0], dim = y.shape()[1];
  const auto& mv = m.data();
  const auto& lvv = lv.data();
  const auto& yv = y.data();
  // mean over (i,j) of l(i,i) - l(i,j); the log(2*pi) and log-variance terms
  // cancel analytically, and the quadratic terms are computed with identical
  // arithmetic so the diagonal and constant-y cases cancel bit-exactly
  double acc = 0.0;
  std::vector<double> w(static_cast<std::size_t>(n) * dim);
  for (std::size_t e = 0; e < w.size(); ++e) w[e] = std::exp(-lvv[e]);
  for (int i = 0; i < n; ++i) {
    const std::size_t ri = static_cast<std::size_t>(i) * dim;
    for (int j = 0; j < n; ++j) {
      const std::size_t rj = static_cast<std::size_t>(j) * dim;
      double diff = 0.0;
      for (int k = 0; k < dim; ++k) {
        const double a = yv[rj + k] - mv[ri + k];
        const double b = yv[ri + k] - mv[ri + k];
        diff += w[ri + k] * (a * a - b * b);
      }
      acc += 0.5 * diff;
    }
  }
  const double value = acc / (static_cast<double>(n) * n);

  return custom_op(
      "club_score", {m, lv, y}, {}, {value},
      [n, dim](const std::vector<double>& out_grad, std::vector<OpIn>& ins) {
        const double g = out_grad[0] / (static_cast<double>(n) * n);
        const auto& mv2 = *ins[0].val;
        const auto& lvv2 = *ins[1].val;
        const auto& yv2 = *ins[2].val;
        std::vector<double> w2(static_cast<std::size_t>(n) * dim);
        for (std::size_t e = 0; e < w2.size(); ++e) w2[e] = std::exp(-lvv2[e]);
        for (int i = 0; i < n; ++i) {
          const std::size_t ri = static_cast<std::size_t>(i) * dim;
          for (int j = 0; j < n; ++j) {
            const std::size_t rj = static_cast<std::size_t>(j) * dim;
            for (int k = 0; k < dim; ++k) {
              const double wk = w2[ri + k];
              const double a = yv2[rj + k] - mv2[ri + k];
              const double b = yv2[ri + k] - mv2[ri + k];
              if (ins[0].grad) (*ins[0].grad)[ri + k] += g * wk * (b - a);
              if (ins[1].grad)
                (*ins[1].grad)[ri + k] += -g * 0.5 * wk * (a * a - b * b);
              if (ins[2].grad) {
                (*ins[2].grad)[rj + k] += g * wk * a;
                (*ins[2].grad)[ri + k] -= g * wk * b;
              }
            }
          }
        }
      });
}

Tensor nll_loss(const GaussianConditional& q, const Tensor& x, const Tensor& y) {
  check_pair_batch("nll_loss", q, x, y);
  Tensor xd = x.detach();
  Tensor yd = y.detach();
  auto [m, lv] = q.heads(xd, /*frozen=*/false);
  Tensor diff = sub(yd, m);
  Tensor quad = hadamard(hadamard(diff, diff), exp_(scale(lv, -1.0)));
  Tensor per_elem = add(offset(scale(lv, 0.5), 0.5 * kLog2Pi), scale(quad, 0.5));
  return scale(sum_all(per_elem), 1.0 / y.shape()[0]);
}

Tensor orthogonality_loss(const Tensor& z_a, const Tensor& z_b) {
  if (z_a.shape() != z_b.shape())
    throw Error("orthogonality_loss: shape mismatch " + shape_str(z_a.shape()) +
                " vs " + shape_str(z_b.shape()));
  return frobenius_sq(matmul(z_a, transpose(z_b)));
}

const char* mi_pair_name(int idx) {
  static const char* names[kNumMiPairs] = {"V-L",  "V-A",  "L-A",  "V-S", "L-S",
                                           "A-S",  "XV-S", "XL-S", "XA-S"};
  if (idx < 0 || idx >= kNumMiPairs) throw Error("mi_pair_name: bad index");
  return names[idx];
}

std::vector<double> pooled_summary(const ModalitySequence& x, int vocab) {
  if (x.length <= 0) throw Error("pooled_summary: empty sequence");
  if (x.modality == Modality::L) {
    std::vector<double> hist(static_cast<std::size_t>(vocab), 0.0);
    for (int t = 0; t < x.length; ++t) hist[x.tokens[t]] += 1.0;
    for (auto& h : hist) h /= x.length;
    return hist;
  }
  std::vector<double> mean(static_cast<std::size_t>(x.d), 0.0);
  for (int t = 0; t < x.length; ++t)
    for (int k = 0; k < x.d; ++k) mean[k] += x.frames[static_cast<std::size_t>(t) * x.d + k];
  for (auto& v : mean) v /= x.length;
  return mean;
}

MiEstimators MiEstimators::make_all(int d, int d_v, int vocab, int d_a, Rng& rng) {
  MiEstimators est;
  for (int idx : {kPairVL, kPairVA, kPairLA, kPairVS, kPairLS, kPairAS})
    est.q[idx].emplace(d, d, rng);
  est.q[kPairXVS].emplace(d_v, d, rng);
  est.q[kPairXLS].emplace(vocab, d, rng);
  est.q[kPairXAS].emplace(d_a, d, rng);
  return est;
}

ParamRegistry MiEstimators::params() const {
  static const char* slugs[kNumMiPairs] = {"v_l",  "v_a",  "l_a",  "v_s", "l_s",
                                           "a_s",  "xv_s", "xl_s", "xa_s"};
  ParamRegistry reg;
  for (int i = 0; i < kNumMiPairs; ++i)
    if (q[i]) q[i]->collect(reg, std::string("mi.q_") + slugs[i]);
  return reg;
}

const GaussianConditional& MiEstimators::require(int idx) const {
  if (!q[idx])
    throw Error(std::string("mi: missing estimator ") + mi_pair_name(idx));
  return *q[idx];
}

namespace {

void check_present(const char* op, const MiEstimators& est, bool with_input_terms) {
  std::string missing;
  const int upto = with_input_terms ? kNumMiPairs : kPairXVS;
  for (int i = 0; i < upto; ++i)
    if (!est.q[i]) missing += missing.empty() ? mi_pair_name(i)
                                              : std::string(", ") + mi_pair_name(i);
  if (!missing.empty())
    throw Error(std::string(op) + ": missing estimators: " + missing);
}

// Conditioning directions cycle V->L, L->A, A->V across the private pairs so
// each private latent sits on the predicted side of exactly one conditional.
// The predicted side is where the estimator pushes hardest, so this spreads
// the dependence-removal pressure evenly instead of leaving one modality
// untouched. z^S is the predicted side of all its pairs.
template <typename TermFn>
Tensor nine_term_sum(const LatentBatch& b, const MiEstimators& est,
                     bool with_input_terms, TermFn term) {
  std::vector<Tensor> terms;
  terms.push_back(term(est.require(kPairVL), b.z_v, b.z_l));
  terms.push_back(term(est.require(kPairVA), b.z_a, b.z_v));
  terms.push_back(term(est.require(kPairLA), b.z_l, b.z_a));
  terms.push_back(term(est.require(kPairVS), b.z_v, b.z_s));
  terms.push_back(term(est.require(kPairLS), b.z_l, b.z_s));
  terms.push_back(term(est.require(kPairAS), b.z_a, b.z_s));
  if (with_input_terms) {
    terms.push_back(term(est.require(kPairXVS), b.x_v, b.z_s));
    terms.push_back(term(est.require(kPairXLS), b.x_l, b.z_s));
    terms.push_back(term(est.require(kPairXAS), b.x_a, b.z_s));
  }
  return sum_all(stack_scalars(terms));
}

}  // namespace

Tensor mim_loss(const LatentBatch& batch, const MiEstimators& est,
                bool with_input_terms) {
  check_present("mim_loss", est, with_input_terms);
  return nine_term_sum(batch, est, with_input_terms, club_estimate);
}

Tensor mim_latent_pairs(const LatentBatch& batch, const MiEstimators& est) {
  check_present("mim_latent_pairs", est, /*with_input_terms=*/false);
  return nine_term_sum(batch, est, /*with_input_terms=*/false, club_estimate);
}

Tensor mim_input_terms(const LatentBatch& batch, const MiEstimators& est) {
  std::string missing;
  for (int i = kPairXVS; i < kNumMiPairs; ++i)
    if (!est.q[i]) missing += missing.empty() ? mi_pair_name(i)
                                              : std::string(", ") + mi_pair_name(i);
  if (!missing.empty()) throw Error("mim_input_terms: missing estimators: " + missing);
  std::vector<Tensor> terms{
      club_estimate(est.require(kPairXVS), batch.x_v, batch.z_s),
      club_estimate(est.require(kPairXLS), batch.x_l, batch.z_s),
      club_estimate(est.require(kPairXAS), batch.x_a, batch.z_s)};
  return sum_all(stack_scalars(terms));
}

Tensor lld_loss(const LatentBatch& batch, const MiEstimators& est,
                bool with_input_terms) {
  check_present("lld_loss", est, with_input_terms);
  return nine_term_sum(batch, est, with_input_terms, nll_loss);
}

Tensor oc_loss(const LatentBatch& batch) {
  const double n = batch.z_v.shape()[0];
  std::vector<Tensor> terms{
      orthogonality_loss(batch.z_v, batch.z_l), orthogonality_loss(batch.z_v, batch.z_a),
      orthogonality_loss(batch.z_l, batch.z_a), orthogonality_loss(batch.z_v, batch.z_s),
      orthogonality_loss(batch.z_l, batch.z_s), orthogonality_loss(batch.z_a, batch.z_s)};
  return scale(sum_all(stack_scalars(terms)), 1.0 / (n * n));
}

}  // namespace mird
