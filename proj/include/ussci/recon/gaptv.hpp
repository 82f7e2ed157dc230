#pragma once

#include <functional>
#include <vector>

#include "ussci/masking.hpp"
#include "ussci/sensing.hpp"

namespace ussci {

struct GapTvConfig {
  std::size_t iterations = 60;
  double tv_weight = 0.1;
  std::size_t tv_inner_steps = 5;
  bool acceleration = false;
  bool temporal_tv = false;  // also difference along T (default: per-frame spatial TV)

  void validate() const;
};

struct GapTvResult {
  VideoCube<double> video;                  // last projected iterate, clipped to [0,1]
  std::vector<double> denoise_residual;     // ||y - Phi v|| after each TV step
  std::vector<double> projection_residual;  // ||y - Phi x|| right after each projection
};

/// Called after every projection with the iteration index and the unclipped iterate.
using GapTvObserver = std::function<void(std::size_t, const VideoCube<double>&)>;

/// Generalised alternating projection with a TV prior:
///   x = v + Phi^T ((y - Phi v) / diag(Phi Phi^T))   (pixels with no coverage are left as is)
///   v = argmin_u 1/2 ||u - x||^2 + tv_weight * TV(u)  (projected dual iterations, warm started)
/// With acceleration the target is y_k = y_{k-1} + (y - Phi x_{k-1}).
GapTvResult gap_tv(const Tensor<double>& y, const MaskSet& masks, const GapTvConfig& cfg = {},
                   const GapTvObserver& observer = {});

template <typename T>
VideoCube<T> gap_tv_decode(const Measurement<T>& y, const MaskSet& masks, const GapTvConfig& cfg = {});

/// Anisotropic TV denoising of a [T,H,W] cube by `steps` projected dual ascent
/// iterations z <- clip(z + tau D(x - D^T z), +-weight). `dual` holds the state
/// between calls ([3, T,H,W] or empty to start from zero).
VideoCube<double> tv_denoise(const VideoCube<double>& x, double weight, std::size_t steps, bool temporal,
                             Tensor<double>* dual = nullptr);

}  // namespace ussci
