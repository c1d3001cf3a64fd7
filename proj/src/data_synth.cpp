#include "mird/data_synth.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

namespace mird {

using nlohmann::json;

void SyntheticSpec::validate() const {
  if (n_train <= 0 || n_val <= 0 || n_test <= 0 || n_unlabeled < 0)
    throw Error("SyntheticSpec: counts must be positive (unlabeled may be 0)");
  if (len_min < 1 || len_max < len_min)
    throw Error("SyntheticSpec: bad sequence-length range");
  if (d_v < 1 || d_a < 1 || vocab < 2)
    throw Error("SyntheticSpec: bad modality dimensions");
  if (shared_dim < 1 || private_dim < 1)
    throw Error("SyntheticSpec: factor dimensions must be positive");
  if (noise < 0) throw Error("SyntheticSpec: noise must be non-negative");
}

namespace {

struct Mixer {
  // frame = tanh(A s + B u + b) + noise * eps_t. The shared loading is kept
  // deliberately weaker than the private one: a single modality should see
  // the shared factor only faintly behind its private interference, so that
  // recovering it well requires combining modalities.
  std::vector<double> a, b, bias;  // a: d x shared, b: d x private
  int d, sd, pd;

  Mixer(int d_, int sd_, int pd_, double shared_scale, double private_scale,
        Rng& rng)
      : d(d_), sd(sd_), pd(pd_) {
    std::normal_distribution<double> n01(0.0, 1.0);
    a.resize(static_cast<std::size_t>(d) * sd);
    b.resize(static_cast<std::size_t>(d) * pd);
    bias.resize(d);
    const double sa = shared_scale / std::sqrt(sd);
    const double sb = private_scale / std::sqrt(pd);
    for (auto& v : a) v = sa * n01(rng);
    for (auto& v : b) v = sb * n01(rng);
    for (auto& v : bias) v = 0.3 * n01(rng);
  }

  std::vector<double> base(const std::vector<double>& s,
                           const std::vector<double>& u) const {
    std::vector<double> out(d);
    for (int i = 0; i < d; ++i) {
      double acc = bias[i];
      for (int j = 0; j < sd; ++j) acc += a[static_cast<std::size_t>(i) * sd + j] * s[j];
      for (int j = 0; j < pd; ++j) acc += b[static_cast<std::size_t>(i) * pd + j] * u[j];
      out[i] = std::tanh(acc);
    }
    return out;
  }
};

std::vector<double> draw_vec(int n, Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = n01(rng);
  return v;
}

}  // namespace

SyntheticData generate(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_int_distribution<int> len_dist(spec.len_min, spec.len_max);

  // fixed random process parameters, shared by all splits
  Mixer mix_v(spec.d_v, spec.shared_dim, spec.private_dim, 0.55, 1.25, rng);
  Mixer mix_a(spec.d_a, spec.shared_dim, spec.private_dim, 0.55, 1.25, rng);
  // language: per-token logits from the factors, scaled for sharpness
  const int fdim = spec.shared_dim + spec.private_dim;
  std::vector<double> w_lang(static_cast<std::size_t>(spec.vocab) * fdim);
  {
    const double s = 3.0 / std::sqrt(fdim);
    for (auto& v : w_lang) v = s * n01(rng);
  }
  // label direction over the shared factor, norm 1.5
  std::vector<double> w_y = draw_vec(spec.shared_dim, rng);
  {
    double nrm = 0.0;
    for (double v : w_y) nrm += v * v;
    nrm = std::sqrt(nrm);
    for (auto& v : w_y) v *= 1.5 / nrm;
  }

  long long next_id = 1;
  auto make_split = [&](int count, bool labeled, Dataset& ds, FactorSet& fs) {
    ds.d_v = spec.d_v;
    ds.d_a = spec.d_a;
    ds.vocab = spec.vocab;
    for (int i = 0; i < count; ++i) {
      std::vector<double> s = draw_vec(spec.shared_dim, rng);
      std::vector<double> uv = draw_vec(spec.private_dim, rng);
      std::vector<double> ul = draw_vec(spec.private_dim, rng);
      std::vector<double> ua = draw_vec(spec.private_dim, rng);

      Sample sample;
      sample.id = next_id++;
      if (labeled) {
        double y = spec.noise * n01(rng);
        for (int j = 0; j < spec.shared_dim; ++j) y += w_y[j] * s[j];
        sample.label = y;
      }

      auto frames_for = [&](const Mixer& mx, const std::vector<double>& u,
                            Modality m) {
        const int t_len = len_dist(rng);
        std::vector<double> base = mx.base(s, u);
        std::vector<double> flat;
        flat.reserve(static_cast<std::size_t>(t_len) * mx.d);
        for (int t = 0; t < t_len; ++t)
          for (int k = 0; k < mx.d; ++k)
            flat.push_back(base[k] + spec.noise * n01(rng));
        return make_frame_sequence(m, mx.d, std::move(flat));
      };
      sample.v = frames_for(mix_v, uv, Modality::V);
      sample.a = frames_for(mix_a, ua, Modality::A);

      {
        const int t_len = len_dist(rng);
        std::vector<double> f(fdim);
        for (int j = 0; j < spec.shared_dim; ++j) f[j] = s[j];
        for (int j = 0; j < spec.private_dim; ++j) f[spec.shared_dim + j] = ul[j];
        std::vector<int> tokens(t_len);
        std::vector<double> weights(spec.vocab);
        for (int t = 0; t < t_len; ++t) {
          double mx_logit = -1e300;
          for (int k = 0; k < spec.vocab; ++k) {
            double logit = spec.noise * n01(rng);
            for (int j = 0; j < fdim; ++j)
              logit += w_lang[static_cast<std::size_t>(k) * fdim + j] * f[j];
            weights[k] = logit;
            mx_logit = std::max(mx_logit, logit);
          }
          for (auto& w : weights) w = std::exp(w - mx_logit);
          std::discrete_distribution<int> cat(weights.begin(), weights.end());
          tokens[t] = cat(rng);
        }
        sample.l = make_token_sequence(std::move(tokens));
      }

      ds.samples.push_back(std::move(sample));
      fs.shared.push_back(s);
      fs.priv_v.push_back(uv);
      fs.priv_l.push_back(ul);
      fs.priv_a.push_back(ua);
    }
  };

  SyntheticData out;
  make_split(spec.n_train, true, out.train, out.train_factors);
  make_split(spec.n_val, true, out.val, out.val_factors);
  make_split(spec.n_test, true, out.test, out.test_factors);
  make_split(spec.n_unlabeled, false, out.unlabeled, out.unlabeled_factors);
  return out;
}

// ---- NDJSON IO -------------------------------------------------------------

namespace {

json frames_to_json(const ModalitySequence& s) {
  json rows = json::array();
  for (int t = 0; t < s.length; ++t) {
    json row = json::array();
    for (int k = 0; k < s.d; ++k) row.push_back(s.frames[static_cast<std::size_t>(t) * s.d + k]);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string dataset_to_ndjson(const Dataset& ds) {
  std::string out =
      json{{"d_v", ds.d_v}, {"d_a", ds.d_a}, {"vocab", ds.vocab}}.dump() + "\n";
  for (const auto& s : ds.samples) {
    json rec{{"id", s.id},
             {"v", frames_to_json(s.v)},
             {"l", s.l.valid_tokens()},
             {"a", frames_to_json(s.a)}};
    if (s.label) rec["label"] = *s.label;
    out += rec.dump();
    out += '\n';
  }
  return out;
}

void save_dataset(const std::string& path, const Dataset& ds) {
  std::ofstream os(path, std::ios::trunc | std::ios::binary);
  if (!os) throw Error("save_dataset: cannot open " + path);
  os << dataset_to_ndjson(ds);
  if (!os) throw Error("save_dataset: write failure on " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("load_dataset: cannot open " + path);
  std::string line;
  long long line_no = 0;
  auto fail = [&](const std::string& what) {
    throw Error("load_dataset: " + path + ":" + std::to_string(line_no) + ": " + what);
  };

  Dataset ds;
  if (!std::getline(is, line)) throw Error("load_dataset: " + path + " is empty");
  ++line_no;
  try {
    json header = json::parse(line);
    ds.d_v = header.at("d_v").get<int>();
    ds.d_a = header.at("d_a").get<int>();
    ds.vocab = header.at("vocab").get<int>();
  } catch (const json::exception& e) {
    fail(std::string("bad header: ") + e.what());
  }

  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      json rec = json::parse(line);
      Sample s;
      s.id = rec.at("id").get<long long>();
      if (rec.contains("label")) s.label = rec.at("label").get<double>();

      auto frames_from = [&](const json& rows, int d, Modality m) {
        std::vector<double> flat;
        for (const auto& row : rows) {
          if (static_cast<int>(row.size()) != d)
            fail("frame of width " + std::to_string(row.size()) + ", header says " +
                 std::to_string(d));
          for (const auto& v : row) flat.push_back(v.get<double>());
        }
        if (flat.empty()) fail("empty sequence");
        return make_frame_sequence(m, d, std::move(flat));
      };
      s.v = frames_from(rec.at("v"), ds.d_v, Modality::V);
      s.a = frames_from(rec.at("a"), ds.d_a, Modality::A);
      s.l = make_token_sequence(rec.at("l").get<std::vector<int>>());
      for (int tok : s.l.tokens)
        if (tok < 0 || tok >= ds.vocab)
          fail("token " + std::to_string(tok) + " outside vocab " +
               std::to_string(ds.vocab));
      ds.samples.push_back(std::move(s));
    } catch (const json::exception& e) {
      fail(std::string("malformed record: ") + e.what());
    }
  }
  ds.validate();
  return ds;
}

void save_factors(const std::string& path, const FactorSet& f) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("save_factors: cannot open " + path);
  for (std::size_t i = 0; i < f.shared.size(); ++i)
    os << json{{"shared", f.shared[i]},
               {"pv", f.priv_v[i]},
               {"pl", f.priv_l[i]},
               {"pa", f.priv_a[i]}}
              .dump()
       << '\n';
  if (!os) throw Error("save_factors: write failure on " + path);
}

FactorSet load_factors(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("load_factors: cannot open " + path);
  FactorSet f;
  std::string line;
  long long line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      json rec = json::parse(line);
      f.shared.push_back(rec.at("shared").get<std::vector<double>>());
      f.priv_v.push_back(rec.at("pv").get<std::vector<double>>());
      f.priv_l.push_back(rec.at("pl").get<std::vector<double>>());
      f.priv_a.push_back(rec.at("pa").get<std::vector<double>>());
    } catch (const json::exception& e) {
      throw Error("load_factors: " + path + ":" + std::to_string(line_no) + ": " +
                  e.what());
    }
  }
  return f;
}

}  // namespace mird
