#include "mird/codecs.hpp"

namespace mird {

SequenceEncoder::SequenceEncoder(Modality m, int in_or_vocab, int hidden, int d,
                                 Rng& rng)
    : modality(m) {
  if (m == Modality::L) {
    embed = Embedding(in_or_vocab, hidden, rng);
    gru = GruCell(hidden, hidden, rng);
  } else {
    gru = GruCell(in_or_vocab, hidden, rng);
  }
  out = Linear(hidden, d, rng);
}

Tensor SequenceEncoder::encode(const ModalitySequence& x) const {
  if (x.modality != modality)
    throw Error(std::string("SequenceEncoder(") + modality_name(modality) +
                "): got modality " + modality_name(x.modality));
  if (x.length <= 0)
    throw Error(std::string("SequenceEncoder(") + modality_name(modality) +
                "): empty sequence");
  Tensor seq = modality == Modality::L ? embed(x.valid_tokens()) : x.valid_frames();
  return out(gru.unroll(seq).back());
}

void SequenceEncoder::collect(ParamRegistry& reg, const std::string& prefix) const {
  if (modality == Modality::L) embed.collect(reg, prefix + ".embed");
  gru.collect(reg, prefix + ".gru");
  out.collect(reg, prefix + ".out");
}

SequenceDecoder::SequenceDecoder(Modality m, int d, int hidden, int out_dim,
                                 Rng& rng)
    : modality(m),
      seed(2 * d, hidden, rng),
      gru(0, hidden, rng),
      emit(hidden, out_dim, rng) {}

Tensor SequenceDecoder::decode(const Tensor& z_m, const Tensor& z_s,
                               int target_len) const {
  if (target_len <= 0) throw Error("SequenceDecoder: target_len must be positive");
  Tensor h = tanh_(seed(concat(z_m, z_s, 0)));
  std::vector<Tensor> rows;
  rows.reserve(target_len);
  for (int t = 0; t < target_len; ++t) {
    h = gru.step(h);
    rows.push_back(emit(h));
  }
  return stack_rows(rows);
}

void SequenceDecoder::collect(ParamRegistry& reg, const std::string& prefix) const {
  seed.collect(reg, prefix + ".seed");
  gru.collect(reg, prefix + ".gru");
  emit.collect(reg, prefix + ".emit");
}

Tensor recon_loss_batch(const std::vector<Tensor>& rec_v,
                        const std::vector<Tensor>& rec_l,
                        const std::vector<Tensor>& rec_a,
                        const std::vector<const Sample*>& batch, double guard) {
  const std::size_t n = batch.size();
  if (n == 0) throw Error("recon_loss: empty batch");
  if (rec_v.size() != n || rec_l.size() != n || rec_a.size() != n)
    throw Error("recon_loss: reconstruction count does not match batch");

  std::vector<Tensor> sq_v, sq_a, ce_l;
  long long cnt_v = 0, cnt_a = 0, cnt_l = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Sample& s = *batch[i];
    {
      Tensor target = s.v.valid_frames();
      if (rec_v[i].shape() != target.shape())
        throw Error("recon_loss: V reconstruction shape " + shape_str(rec_v[i].shape()) +
                    " vs target " + shape_str(target.shape()));
      sq_v.push_back(frobenius_sq(sub(rec_v[i], target)));
      cnt_v += static_cast<long long>(s.v.length) * s.v.d;
    }
    {
      Tensor target = s.a.valid_frames();
      if (rec_a[i].shape() != target.shape())
        throw Error("recon_loss: A reconstruction shape " + shape_str(rec_a[i].shape()) +
                    " vs target " + shape_str(target.shape()));
      sq_a.push_back(frobenius_sq(sub(rec_a[i], target)));
      cnt_a += static_cast<long long>(s.a.length) * s.a.d;
    }
    {
      const auto tokens = s.l.valid_tokens();
      if (rec_l[i].ndim() != 2 || rec_l[i].shape()[0] != s.l.length)
        throw Error("recon_loss: L reconstruction shape " + shape_str(rec_l[i].shape()) +
                    " vs " + std::to_string(s.l.length) + " tokens");
      // cross_entropy_logits averages over the sample; rescale to a sum so
      // the batch average weights every token equally
      ce_l.push_back(scale(cross_entropy_logits(rec_l[i], tokens),
                           static_cast<double>(tokens.size())));
      cnt_l += static_cast<long long>(tokens.size());
    }
  }
  Tensor mse_v = scale(sum_all(stack_scalars(sq_v)), 1.0 / cnt_v);
  Tensor mse_a = scale(sum_all(stack_scalars(sq_a)), 1.0 / cnt_a);
  Tensor ce = scale(sum_all(stack_scalars(ce_l)), 1.0 / cnt_l);
  return add(add(log_(offset(mse_v, guard)), log_(offset(ce, guard))),
             log_(offset(mse_a, guard)));
}

}  // namespace mird
