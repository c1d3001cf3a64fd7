#pragma once

#include <string>

#include "mird/metrics.hpp"
#include "mird/modality.hpp"

namespace mird {

// Generator with known shared/private factors. Labels depend only on the
// shared factor; every modality mixes its own private factor with the shared
// one through fixed random linear maps and a tanh nonlinearity.
struct SyntheticSpec {
  int n_train = 96;
  int n_val = 64;
  int n_test = 128;
  int n_unlabeled = 192;
  int len_min = 4;
  int len_max = 10;
  int d_v = 12;
  int d_a = 12;
  int vocab = 64;
  int shared_dim = 4;
  int private_dim = 4;
  double noise = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

// Ground-truth factors aligned with a dataset's samples.
struct FactorSet {
  Rows shared, priv_v, priv_l, priv_a;
};

struct SyntheticData {
  Dataset train, val, test, unlabeled;
  FactorSet train_factors, val_factors, test_factors, unlabeled_factors;
};

SyntheticData generate(const SyntheticSpec& spec);

// Newline-delimited JSON: a header object fixing d_v/d_a/vocab, then one
// record per line with fields "id", optional "label", "v", "l", "a".
std::string dataset_to_ndjson(const Dataset& ds);
void save_dataset(const std::string& path, const Dataset& ds);
Dataset load_dataset(const std::string& path);

// Factor sidecar, same NDJSON style.
void save_factors(const std::string& path, const FactorSet& f);
FactorSet load_factors(const std::string& path);

}  // namespace mird
