#pragma once

#include <array>
#include <optional>

#include "mird/layers.hpp"
#include "mird/modality.hpp"

namespace mird {

// Trainable diagonal-Gaussian conditional q(y|x): two-layer MLP with hidden
// width 32 and mean / log-variance heads, log-variance clamped to
// [-3, 10]. The floor bounds 1/sigma^2 at ~20, which keeps the gradients the
// constraint sends into the latents from exploding once q fits tightly.
struct GaussianConditional {
  int in_dim = 0;
  int out_dim = 0;
  Linear h1;      // in -> 32
  Linear mu;      // 32 -> out
  Linear logvar;  // 32 -> out

  static constexpr int kHidden = 32;
  static constexpr double kLogVarMin = -2.0;
  static constexpr double kLogVarMax = 10.0;

  GaussianConditional() = default;
  GaussianConditional(int in, int out, Rng& rng);

  // Batched heads for x: [n, in] -> (mu, logvar) each [n, out]. frozen=true
  // evaluates detached parameter copies so no gradient reaches q.
  std::pair<Tensor, Tensor> heads(const Tensor& x, bool frozen) const;

  // Single-pair log-density with live parameters, summed over dimensions.
  Tensor log_prob(const Tensor& x, const Tensor& y) const;

  void collect(ParamRegistry& reg, const std::string& prefix) const;
};

// CLUB mutual-information upper bound on aligned pairs (rows of x and y):
//   (1/N) sum_i log q(y_i|x_i) - (1/N^2) sum_i sum_j log q(y_j|x_i)
// computed as the mean over (i,j) of [l(i,i) - l(i,j)] with one shared
// scalar routine, so N=1 and constant-y batches cancel bit-exactly.
// Gradients flow to x and y, never to q.
Tensor club_estimate(const GaussianConditional& q, const Tensor& x, const Tensor& y);

// -(1/N) sum_i log q(y_i|x_i); x and y are detached internally, so gradients
// flow only to q.
Tensor nll_loss(const GaussianConditional& q, const Tensor& x, const Tensor& y);

// Squared Frobenius norm of Z_a Z_b^T (orthogonal-constraint baseline).
Tensor orthogonality_loss(const Tensor& z_a, const Tensor& z_b);

// Fixed pair ordering V < L < A < S; six latent pairs then three
// input-summary pairs.
enum MiPairIndex {
  kPairVL = 0,
  kPairVA,
  kPairLA,
  kPairVS,
  kPairLS,
  kPairAS,
  kPairXVS,
  kPairXLS,
  kPairXAS,
  kNumMiPairs
};

const char* mi_pair_name(int idx);

// One training batch's latents plus pooled input summaries, rows aligned.
struct LatentBatch {
  Tensor z_v, z_l, z_a, z_s;  // [N, d]
  Tensor x_v, x_l, x_a;       // [N, d_v] / [N, vocab] / [N, d_a], constants
};

// Masked pooled summary of one sequence: mean frame for V/A, normalized
// token histogram over the vocabulary for L.
std::vector<double> pooled_summary(const ModalitySequence& x, int vocab);

// The nine variational conditionals. Individual slots may be absent so the
// missing-estimator error path is exercisable.
struct MiEstimators {
  std::array<std::optional<GaussianConditional>, kNumMiPairs> q;

  static MiEstimators make_all(int d, int d_v, int vocab, int d_a, Rng& rng);

  ParamRegistry params() const;
  const GaussianConditional& require(int idx) const;
};

// Sum of CLUB estimates: six latent pairs, plus three input terms unless
// with_input_terms is false (ablation row). May be negative; never clamped.
Tensor mim_loss(const LatentBatch& batch, const MiEstimators& est,
                bool with_input_terms = true);

// Sum over the six latent pairs only, used for the per-epoch MI trace.
Tensor mim_latent_pairs(const LatentBatch& batch, const MiEstimators& est);

// Sum over the three (pooled input, z^S) terms only.
Tensor mim_input_terms(const LatentBatch& batch, const MiEstimators& est);

// Sum of NLL losses over the same term structure; trains only q.
Tensor lld_loss(const LatentBatch& batch, const MiEstimators& est,
                bool with_input_terms = true);

// Sum of orthogonality losses over the six latent pairs, scaled by 1/N^2 so
// its magnitude is comparable with the averaged CLUB terms.
Tensor oc_loss(const LatentBatch& batch);

}  // namespace mird
