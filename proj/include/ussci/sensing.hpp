#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ussci/core/tensor.hpp"
#include "ussci/masking.hpp"

namespace ussci {

/// T frames of H x W, nominal range [0,1]. Stored as a [T,H,W] tensor.
template <typename T>
using VideoCube = Tensor<T>;

template <typename T>
VideoCube<T> make_video(std::size_t frames, std::size_t height, std::size_t width, T fill = T{}) {
  return VideoCube<T>(Shape{frames, height, width}, fill);
}

struct NoiseModel {
  enum class Kind { None, Gaussian };
  Kind kind = Kind::None;
  double sigma = 0.0;
  std::uint64_t seed = 0;

  static NoiseModel none() { return {}; }
  static NoiseModel gaussian(double sigma, std::uint64_t seed) { return {Kind::Gaussian, sigma, seed}; }
  bool active() const { return kind == Kind::Gaussian && sigma > 0.0; }
};

struct QuantSpec {
  int bits = 8;
  double full_scale = 1.0;  // analog value mapped to the top code at gain 1
  double gain = 1.0;        // exposure multiplier applied before the ADC

  void validate() const;
  double max_code() const { return static_cast<double>((1u << bits) - 1u); }
};

/// A single coded snapshot [H,W]. Analog values are unclipped sums; quantized
/// values are integer ADC codes in [0, 2^bits - 1].
template <typename T>
struct Measurement {
  Tensor<T> values;
  bool quantized = false;
  QuantSpec quant{};
  double saturation_fraction = 0.0;

  std::size_t height() const { return values.dim(0); }
  std::size_t width() const { return values.dim(1); }
};

/// Y = sum_m X_m * M_m + G, analog and unclipped. Noise is drawn per pixel from
/// the noise seed, so vectorized_encode reproduces it exactly.
template <typename T>
Measurement<T> encode(const VideoCube<T>& x, const MaskSet& masks, const NoiseModel& noise = {});

/// codes = clip(round(gain * y / full_scale * (2^bits - 1)), 0, 2^bits - 1).
template <typename T>
Measurement<T> quantize(const Measurement<T>& y, const QuantSpec& q);

/// Maps ADC codes back to analog units: code / (2^bits - 1) * full_scale / gain.
template <typename T>
Measurement<T> dequantize(const Measurement<T>& y);

/// Phi = [D_1, ..., D_T] with D_m = Diag(vec(M_m)); vec is row-major over (H, W).
struct SensingMatrix {
  std::size_t frames = 0;
  std::size_t n = 0;  // H * W
  Tensor<float> diagonals;  // [T, n]

  float diag(std::size_t m, std::size_t i) const { return diagonals[m * n + i]; }

  /// y = Phi x for x = [x_1; ...; x_T].
  template <typename T>
  std::vector<T> apply(const std::vector<T>& x) const;
  /// x = Phi^T y.
  template <typename T>
  std::vector<T> apply_transpose(const std::vector<T>& y) const;
  /// Diagonal of Phi Phi^T (it is always diagonal): sum_m diag_m^2.
  std::vector<double> gram_diagonal() const;
  /// Dense n x nT matrix, row-major. Refused for n > 4096.
  std::vector<double> to_dense() const;
};

inline constexpr std::size_t kMaxDenseSensingPixels = 4096;

SensingMatrix build_sensing_matrix(const MaskSet& masks);

template <typename T>
std::vector<T> vectorized_encode(const std::vector<T>& x, const SensingMatrix& phi, const NoiseModel& noise = {});

template <typename T>
std::vector<T> vectorize(const VideoCube<T>& x) {
  return std::vector<T>(x.values().begin(), x.values().end());
}

/// Y_m = Y * M_m for ideal USS masks; the parts sum to Y.
template <typename T>
std::vector<Tensor<T>> decompose_uss(const Measurement<T>& y, const MaskSet& masks);

inline constexpr double kCoverageFloor = 1e-6;

/// Ybar = Y / max(sum_m M_m, 1e-6); X_e,m = Ybar * M_m + Ybar.
template <typename T>
VideoCube<T> coarse_estimate(const Tensor<T>& y, const MaskSet& masks);

/// Vector-Jacobian product of coarse_estimate w.r.t. Y.
template <typename T>
Tensor<T> coarse_estimate_backward(const MaskSet& masks, const VideoCube<T>& upstream);

}  // namespace ussci
