#pragma once

#include "ussci/sensing.hpp"

namespace ussci {

inline constexpr double kPsnrCap = 99.0;

struct MetricsResult {
  double psnr = 0.0;
  double ssim = 0.0;
};

/// Mean over frames of 10 log10(peak^2 / MSE_frame); a frame with zero error
/// (or a value above the cap) scores kPsnrCap. Accepts [T,H,W] or a single [H,W].
template <typename T>
double psnr(const Tensor<T>& a, const Tensor<T>& b, double peak = 1.0);

struct SsimOptions {
  std::size_t window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double data_range = 1.0;
};

/// Gaussian-weighted local SSIM over every full window position (no padding),
/// averaged per frame and then over frames. Throws if a frame is smaller than
/// the window.
template <typename T>
double ssim(const Tensor<T>& a, const Tensor<T>& b, const SsimOptions& opt = {});

template <typename T>
MetricsResult compare(const Tensor<T>& estimate, const Tensor<T>& truth) {
  return {psnr(estimate, truth), ssim(estimate, truth)};
}

}  // namespace ussci
