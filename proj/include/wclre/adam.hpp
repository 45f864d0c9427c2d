#pragma once

#include <cmath>

#include "wclre/encoder.hpp"

namespace wclre {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip = 1.0;  // global gradient norm; <= 0 disables clipping
};

struct AdamState {
  EncoderParameters m;
  EncoderParameters v;
  std::uint64_t t = 0;

  static AdamState init(const EncoderParameters& params) {
    return {zeros_like(params), zeros_like(params), 0};
  }
};

// Scales gradients in place so their global L2 norm is at most max_norm;
// returns the pre-clip norm.
inline double clip_global_norm(EncoderParameters& grads, double max_norm) {
  double sq = 0.0;
  grads.for_each_tensor([&](const std::string&, TensorKind, const Mat& g) {
    for (double x : g.a) sq += x * x;
  });
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    grads.for_each_tensor(
        [&](const std::string&, TensorKind, Mat& g) {
          for (auto& x : g.a) x *= scale;
        });
  }
  return norm;
}

// One Adam update with bias correction; lr_scale multiplies the base rate
// (used for warmup schedules).
inline void adam_step(EncoderParameters& params, const EncoderParameters& grads, AdamState& state,
                      const AdamConfig& cfg, double lr_scale = 1.0) {
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  const double lr = cfg.lr * lr_scale;

  auto pm = tensor_ptrs(params);
  auto gm = tensor_ptrs(grads);
  auto mm = tensor_ptrs(state.m);
  auto vm = tensor_ptrs(state.v);
  for (std::size_t i = 0; i < pm.size(); ++i) {
    Mat& p = *pm[i];
    const Mat& g = *gm[i];
    Mat& m = *mm[i];
    Mat& v = *vm[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m.a[j] = cfg.beta1 * m.a[j] + (1.0 - cfg.beta1) * g.a[j];
      v.a[j] = cfg.beta2 * v.a[j] + (1.0 - cfg.beta2) * g.a[j] * g.a[j];
      const double mhat = m.a[j] / bc1;
      const double vhat = v.a[j] / bc2;
      p.a[j] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

}  // namespace wclre
