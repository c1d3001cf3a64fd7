#include "mird/optim.hpp"

#include <cmath>
#include <unordered_set>

namespace mird {

Adam::Adam(ParamRegistry params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  std::unordered_set<std::string> names;
  for (auto& [name, p] : params_) {
    if (!p.requires_grad())
      throw Error("Adam: parameter '" + name + "' does not require gradients");
    if (!names.insert(name).second)
      throw Error("Adam: duplicate parameter name '" + name + "'");
    m_.emplace_back(p.data().size(), 0.0);
    v_.emplace_back(p.data().size(), 0.0);
  }
}

void Adam::step() {
  if (cfg_.clip_norm > 0.0) clip_global_norm(params_, cfg_.clip_norm);
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& p = params_[k].second;
    auto& val = p.node()->val;
    const auto& grad = p.node()->grad;
    const bool has_grad = grad.size() == val.size();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < val.size(); ++i) {
      double g = has_grad ? grad[i] : 0.0;
      if (cfg_.weight_decay != 0.0 && !cfg_.decoupled) g += cfg_.weight_decay * val[i];
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      if (cfg_.weight_decay != 0.0 && cfg_.decoupled)
        val[i] -= cfg_.lr * cfg_.weight_decay * val[i];
      val[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

void Adam::zero_grad() {
  for (auto& [name, p] : params_) p.zero_grad();
}

double clip_global_norm(ParamRegistry& params, double max_norm) {
  double sq = 0.0;
  for (auto& [name, p] : params) {
    const auto& g = p.node()->grad;
    for (double x : g) sq += x * x;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (auto& [name, p] : params)
      for (double& x : p.node()->grad) x *= s;
  }
  return norm;
}

}  // namespace mird
