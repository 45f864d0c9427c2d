#pragma once

#include <cmath>
#include <functional>

#include "wclre/encoder.hpp"
#include "wclre/rng.hpp"

namespace wclre {

// Compares an analytic gradient against central finite differences on a
// random coordinate subsample covering every parameter tensor, and returns
// the maximum relative error. The relative error of a coordinate is
// |a - n| / max(|a|, |n|, floor); the floor absorbs finite-difference noise
// where the true gradient is near zero.
inline double gradient_check(
    EncoderParameters& params, const std::function<double(const EncoderParameters&)>& loss_fn,
    const std::function<double(const EncoderParameters&, EncoderParameters&)>& loss_and_grad,
    std::uint64_t seed, double epsilon = 1e-5, std::size_t min_coords = 200,
    double floor = 1e-5) {
  EncoderParameters grads = zeros_like(params);
  const double base = loss_and_grad(params, grads);
  if (!std::isfinite(base)) throw numeric_error("non-finite loss in gradient check");

  auto param_mats = tensor_ptrs(params);
  auto grad_mats = tensor_ptrs(static_cast<const EncoderParameters&>(grads));
  const std::size_t per_tensor =
      (min_coords + param_mats.size() - 1) / param_mats.size();

  Rng rng(seed);
  double max_rel = 0.0;
  for (std::size_t t = 0; t < param_mats.size(); ++t) {
    Mat& m = *param_mats[t];
    if (m.size() == 0) continue;
    auto coords = rng.sample_without_replacement(m.size(), per_tensor);
    for (std::size_t c : coords) {
      const double saved = m.a[c];
      m.a[c] = saved + epsilon;
      const double up = loss_fn(params);
      m.a[c] = saved - epsilon;
      const double down = loss_fn(params);
      m.a[c] = saved;
      if (!std::isfinite(up) || !std::isfinite(down))
        throw numeric_error("non-finite loss in gradient check");
      const double numeric = (up - down) / (2.0 * epsilon);
      const double analytic = grad_mats[t]->a[c];
      const double denom = std::max({std::fabs(analytic), std::fabs(numeric), floor});
      max_rel = std::max(max_rel, std::fabs(analytic - numeric) / denom);
    }
  }
  return max_rel;
}

}  // namespace wclre
