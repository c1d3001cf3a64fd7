#include "mird/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

namespace mird {

const char* train_mode_name(TrainMode m) {
  switch (m) {
    case TrainMode::MIM: return "mim";
    case TrainMode::OC: return "oc";
    case TrainMode::NC: return "nc";
  }
  return "?";
}

TrainMode parse_train_mode(const std::string& s) {
  if (s == "mim") return TrainMode::MIM;
  if (s == "oc") return TrainMode::OC;
  if (s == "nc") return TrainMode::NC;
  throw ConfigError("unknown mode '" + s + "' (expected mim, oc, or nc)");
}

void TrainConfig::validate() const {
  if (batch_size < 2) throw ConfigError("batch_size must be at least 2");
  if (inner_steps < 1) throw ConfigError("inner_steps must be at least 1");
  if (split_rate < 0) throw ConfigError("split_rate must be non-negative");
  if (alpha < 0) throw ConfigError("alpha must be non-negative");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (eta1 <= 0 || eta2 <= 0) throw ConfigError("learning rates must be positive");
  if (d < 1 || d_w < 1) throw ConfigError("latent dimensions must be positive");
  if (epsilon <= 0) throw ConfigError("epsilon must be positive");
  if (loss_guard <= 0) throw ConfigError("loss_guard must be positive");
  if (clip_norm < 0) throw ConfigError("clip_norm must be non-negative");
  if (weight_decay < 0) throw ConfigError("weight_decay must be non-negative");
}

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

LatentBatch build_latent_batch(const std::vector<LatentBundle>& bundles,
                               const std::vector<const Sample*>& samples,
                               const std::vector<const std::vector<double>*>& px_v,
                               const std::vector<const std::vector<double>*>& px_l,
                               const std::vector<const std::vector<double>*>& px_a) {
  const int n = static_cast<int>(bundles.size());
  std::vector<Tensor> zv, zl, za, zs;
  zv.reserve(n); zl.reserve(n); za.reserve(n); zs.reserve(n);
  for (const auto& b : bundles) {
    zv.push_back(b.z_v);
    zl.push_back(b.z_l);
    za.push_back(b.z_a);
    zs.push_back(b.z_s);
  }
  LatentBatch lb;
  lb.z_v = stack_rows(zv);
  lb.z_l = stack_rows(zl);
  lb.z_a = stack_rows(za);
  lb.z_s = stack_rows(zs);
  auto flatten = [n](const std::vector<const std::vector<double>*>& rows) {
    const int dim = static_cast<int>(rows[0]->size());
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(n) * dim);
    for (const auto* r : rows) flat.insert(flat.end(), r->begin(), r->end());
    return Tensor::from({n, dim}, std::move(flat));
  };
  (void)samples;
  lb.x_v = flatten(px_v);
  lb.x_l = flatten(px_l);
  lb.x_a = flatten(px_a);
  return lb;
}

void check_dims(const MirdModel& model, const Dataset& ds, const char* what) {
  if (ds.d_v != model.meta.d_v || ds.d_a != model.meta.d_a ||
      ds.vocab != model.meta.vocab)
    throw Error(std::string(what) + ": dataset dims (d_v=" + std::to_string(ds.d_v) +
                ", d_a=" + std::to_string(ds.d_a) + ", vocab=" +
                std::to_string(ds.vocab) + ") do not match model (d_v=" +
                std::to_string(model.meta.d_v) + ", d_a=" +
                std::to_string(model.meta.d_a) + ", vocab=" +
                std::to_string(model.meta.vocab) + ")");
}

}  // namespace

TrainResult run_training(const TrainConfig& cfg, const Dataset& labeled,
                         const Dataset& unlabeled, TrainMode mode,
                         const Dataset* val, const TrainHooks& hooks) {
  cfg.validate();
  labeled.validate();
  unlabeled.validate();
  if (val) val->validate();
  if (labeled.samples.size() < 2)
    throw Error("run_training: labeled dataset needs at least 2 samples");
  for (const auto& s : labeled.samples)
    if (!s.label)
      throw Error("run_training: labeled sample " + std::to_string(s.id) +
                  " has no label");
  const int n_u_per_iter = cfg.split_rate * cfg.batch_size;
  if (n_u_per_iter > 0 && unlabeled.samples.empty())
    throw Error("run_training: split_rate > 0 but the unlabeled set is empty");

  TrainResult result;
  result.trace.warnings = {};
  long long labeled_in_unlabeled = 0;
  for (const auto& s : unlabeled.samples)
    if (s.label) ++labeled_in_unlabeled;
  if (labeled_in_unlabeled > 0)
    result.trace.warnings.push_back(
        "ignored labels on " + std::to_string(labeled_in_unlabeled) +
        " unlabeled samples");

  Rng rng(cfg.seed);
  ModelMeta meta{cfg.d, cfg.d_w, labeled.d_v, labeled.d_a, labeled.vocab,
                 cfg.epsilon};
  auto model = std::make_shared<MirdModel>(meta, rng);
  // estimators are always constructed so the parameter draw sequence (and
  // therefore theta's init) is identical across modes under one seed
  auto est = std::make_shared<MiEstimators>(MiEstimators::make_all(
      cfg.d, labeled.d_v, labeled.vocab, labeled.d_a, rng));

  Adam theta_opt(model->params(),
                 AdamConfig{.lr = cfg.eta2,
                            .weight_decay = cfg.weight_decay,
                            .decoupled = true,
                            .clip_norm = cfg.clip_norm});
  Adam var_opt(est->params(), AdamConfig{.lr = cfg.eta1});

  // pooled input summaries are pure data; compute them once
  auto summarize = [&](const Dataset& ds) {
    std::vector<std::vector<double>> v, l, a;
    v.reserve(ds.samples.size());
    l.reserve(ds.samples.size());
    a.reserve(ds.samples.size());
    for (const auto& s : ds.samples) {
      v.push_back(pooled_summary(s.v, ds.vocab));
      l.push_back(pooled_summary(s.l, ds.vocab));
      a.push_back(pooled_summary(s.a, ds.vocab));
    }
    return std::array<std::vector<std::vector<double>>, 3>{std::move(v), std::move(l),
                                                           std::move(a)};
  };
  const auto lab_pool = summarize(labeled);
  const auto unl_pool = summarize(unlabeled);

  const int n_lab = static_cast<int>(labeled.samples.size());
  std::vector<int> lab_idx(n_lab);
  std::iota(lab_idx.begin(), lab_idx.end(), 0);
  std::vector<int> unl_queue(unlabeled.samples.size());
  std::iota(unl_queue.begin(), unl_queue.end(), 0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(lab_idx.begin(), lab_idx.end(), rng);
    std::size_t unl_pos = unl_queue.size();  // forces a reshuffle on first draw

    double sum_reg = 0.0, sum_recon = 0.0, sum_c = 0.0, sum_mi6 = 0.0;
    int iters = 0;

    for (int start = 0; start < n_lab; start += cfg.batch_size) {
      const int n_b = std::min(cfg.batch_size, n_lab - start);
      if (n_b < 2) continue;  // a single-sample tail cannot feed CLUB

      std::vector<const Sample*> batch;
      std::vector<const std::vector<double>*> px_v, px_l, px_a;
      for (int k = 0; k < n_b; ++k) {
        const int i = lab_idx[start + k];
        batch.push_back(&labeled.samples[i]);
        px_v.push_back(&lab_pool[0][i]);
        px_l.push_back(&lab_pool[1][i]);
        px_a.push_back(&lab_pool[2][i]);
      }
      for (int k = 0; k < n_u_per_iter; ++k) {
        if (unl_pos >= unl_queue.size()) {
          std::shuffle(unl_queue.begin(), unl_queue.end(), rng);
          unl_pos = 0;
        }
        const int i = unl_queue[unl_pos++];
        batch.push_back(&unlabeled.samples[i]);
        px_v.push_back(&unl_pool[0][i]);
        px_l.push_back(&unl_pool[1][i]);
        px_a.push_back(&unl_pool[2][i]);
      }

      std::vector<LatentBundle> bundles;
      bundles.reserve(batch.size());
      for (const Sample* s : batch) bundles.push_back(model->encode(*s));
      LatentBatch lbatch = build_latent_batch(bundles, batch, px_v, px_l, px_a);

      ++result.trace.outer_iterations;
      const long long outer = result.trace.outer_iterations;

      if (mode == TrainMode::MIM) {
        for (int t = 1; t <= cfg.inner_steps; ++t) {
          var_opt.zero_grad();
          theta_opt.zero_grad();
          Tensor lld = lld_loss(lbatch, *est, cfg.with_input_terms);
          backward(lld);
          if (hooks.after_inner_backward)
            hooks.after_inner_backward(*model, *est, outer, t);
          var_opt.step();
          ++result.trace.theta_var_updates;
        }
      }

      theta_opt.zero_grad();
      var_opt.zero_grad();

      std::vector<Tensor> preds;
      std::vector<double> label_vals;
      preds.reserve(n_b);
      label_vals.reserve(n_b);
      for (int k = 0; k < n_b; ++k) {
        preds.push_back(model->predict(bundles[k]));
        label_vals.push_back(*batch[k]->label);
      }
      Tensor l_reg = log_(offset(
          mse(stack_scalars(preds), Tensor::from({n_b}, std::move(label_vals))),
          cfg.loss_guard));
      Tensor total = l_reg;

      double recon_val = kNan;
      if (cfg.with_recon) {
        std::vector<Tensor> rv, rl, ra;
        rv.reserve(batch.size());
        rl.reserve(batch.size());
        ra.reserve(batch.size());
        for (std::size_t k = 0; k < batch.size(); ++k) {
          Reconstructions rec = model->decode(bundles[k], *batch[k]);
          rv.push_back(rec.v);
          rl.push_back(rec.l);
          ra.push_back(rec.a);
        }
        Tensor l_recon = recon_loss_batch(rv, rl, ra, batch, cfg.loss_guard);
        recon_val = l_recon.item();
        total = add(total, l_recon);
      }

      double c_val = 0.0, mi6_val = kNan;
      if (mode == TrainMode::MIM) {
        Tensor l6 = mim_latent_pairs(lbatch, *est);
        mi6_val = l6.item();
        Tensor l_c =
            cfg.with_input_terms ? add(l6, mim_input_terms(lbatch, *est)) : l6;
        c_val = l_c.item();
        total = add(total, scale(l_c, cfg.alpha));
      } else if (mode == TrainMode::OC) {
        Tensor l_c = oc_loss(lbatch);
        c_val = l_c.item();
        total = add(total, scale(l_c, cfg.alpha));
      }

      backward(total);
      if (hooks.after_theta_backward)
        hooks.after_theta_backward(*model, *est, outer);
      theta_opt.step();
      ++result.trace.theta_updates;

      sum_reg += l_reg.item();
      sum_recon += recon_val;
      sum_c += c_val;
      sum_mi6 += mi6_val;
      ++iters;
    }

    if (iters == 0)
      throw Error("run_training: no usable batch (labeled set too small)");

    EpochRecord rec;
    rec.epoch = epoch;
    rec.l_reg = sum_reg / iters;
    rec.l_recon = cfg.with_recon ? sum_recon / iters : kNan;
    rec.l_mim = sum_c / iters;
    rec.mi_latent = mode == TrainMode::MIM ? sum_mi6 / iters : kNan;
    if (val) {
      MetricsReport m = evaluate(*model, *val);
      rec.val_acc = m.acc;
      rec.val_f1 = m.f1;
      rec.val_mae = m.mae;
      rec.val_corr = m.corr;
    } else {
      rec.val_acc = rec.val_f1 = rec.val_mae = rec.val_corr = kNan;
    }
    result.trace.epochs.push_back(rec);
  }

  result.model = model;
  result.estimators = est;
  return result;
}

std::vector<double> predict_all(const MirdModel& model, const Dataset& ds) {
  check_dims(model, ds, "predict_all");
  std::vector<double> out;
  out.reserve(ds.samples.size());
  for (const auto& s : ds.samples)
    out.push_back(model.predict(model.encode(s)).item());
  return out;
}

MetricsReport evaluate(const MirdModel& model, const Dataset& ds) {
  check_dims(model, ds, "evaluate");
  std::vector<double> labels;
  labels.reserve(ds.samples.size());
  for (const auto& s : ds.samples) {
    if (!s.label)
      throw Error("evaluate: sample " + std::to_string(s.id) + " has no label");
    labels.push_back(*s.label);
  }
  return compute_metrics(predict_all(model, ds), labels);
}

LatentRows collect_latents(const MirdModel& model, const Dataset& ds) {
  check_dims(model, ds, "collect_latents");
  LatentRows rows;
  for (const auto& s : ds.samples) {
    LatentBundle b = model.encode(s);
    rows.z_v.push_back(b.z_v.data());
    rows.z_l.push_back(b.z_l.data());
    rows.z_a.push_back(b.z_a.data());
    rows.z_s.push_back(b.z_s.data());
  }
  return rows;
}

void write_trace_csv(const TrainTrace& trace, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("write_trace_csv: cannot open " + path);
  os << "epoch,l_reg,l_recon,l_mim,val_acc,val_f1,val_mae,val_corr\n";
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << ',' << buf;
  };
  for (const auto& r : trace.epochs) {
    os << r.epoch;
    put(r.l_reg);
    put(r.l_recon);
    put(r.l_mim);
    put(r.val_acc);
    put(r.val_f1);
    put(r.val_mae);
    put(r.val_corr);
    os << '\n';
  }
  if (!os) throw Error("write_trace_csv: write failure on " + path);
}

}  // namespace mird
