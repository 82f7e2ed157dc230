#include "ussci/sensing.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "ussci/core/random.hpp"

namespace ussci {
namespace {

void require_match(const Shape& video, const MaskSet& m, const char* op) {
  if (video.size() != 3 || video[0] != m.frames || video[1] != m.height || video[2] != m.width) {
    throw ShapeError(std::string(op) + ": video " + shape_string(video) + " does not match masks [" +
                     std::to_string(m.frames) + "," + std::to_string(m.height) + "," + std::to_string(m.width) + "]");
  }
}

void require_plane(const Shape& plane, const MaskSet& m, const char* op) {
  if (plane != Shape{m.height, m.width}) {
    throw ShapeError(std::string(op) + ": measurement " + shape_string(plane) + " does not match masks [" +
                     std::to_string(m.height) + "," + std::to_string(m.width) + "]");
  }
}

template <typename T>
T noise_at(const NoiseModel& noise, const CounterRng& rng, std::size_t i) {
  return noise.active() ? static_cast<T>(noise.sigma * rng.normal(i)) : T(0);
}

}  // namespace

void QuantSpec::validate() const {
  if (bits != 8 && bits != 10 && bits != 12 && bits != 16) {
    throw std::invalid_argument("QuantSpec: bits must be 8, 10, 12 or 16, got " + std::to_string(bits));
  }
  if (!(full_scale > 0.0)) throw std::invalid_argument("QuantSpec: full_scale must be > 0");
  if (!(gain >= 0.0)) throw std::invalid_argument("QuantSpec: gain must be >= 0");
}

template <typename T>
Measurement<T> encode(const VideoCube<T>& x, const MaskSet& masks, const NoiseModel& noise) {
  require_match(x.shape(), masks, "encode");
  if (noise.sigma < 0.0) throw std::invalid_argument("encode: noise sigma must be >= 0");
  const std::size_t n = masks.pixels();
  Measurement<T> y{Tensor<T>(Shape{masks.height, masks.width})};
  const CounterRng rng(noise.seed, 3);
  const long long np = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
  for (long long ip = 0; ip < np; ++ip) {
    const auto p = static_cast<std::size_t>(ip);
    T s = 0;
    for (std::size_t m = 0; m < masks.frames; ++m) s += x[m * n + p] * static_cast<T>(masks.planes[m * n + p]);
    y.values[p] = s + noise_at<T>(noise, rng, p);
  }
  return y;
}

template <typename T>
Measurement<T> quantize(const Measurement<T>& y, const QuantSpec& q) {
  q.validate();
  if (y.quantized) throw std::invalid_argument("quantize: measurement is already quantized");
  Measurement<T> out{Tensor<T>(y.values.shape()), true, q, 0.0};
  const double top = q.max_code();
  std::size_t clipped = 0;
  for (std::size_t i = 0; i < y.values.size(); ++i) {
    const double raw = std::round(q.gain * static_cast<double>(y.values[i]) / q.full_scale * top);
    if (raw > top) ++clipped;
    out.values[i] = static_cast<T>(std::clamp(raw, 0.0, top));
  }
  out.saturation_fraction = static_cast<double>(clipped) / static_cast<double>(y.values.size());
  return out;
}

template <typename T>
Measurement<T> dequantize(const Measurement<T>& y) {
  if (!y.quantized) return y;
  if (!(y.quant.gain > 0.0)) throw std::invalid_argument("dequantize: gain must be > 0");
  Measurement<T> out{Tensor<T>(y.values.shape())};
  const double scale = y.quant.full_scale / (y.quant.max_code() * y.quant.gain);
  for (std::size_t i = 0; i < y.values.size(); ++i) out.values[i] = static_cast<T>(y.values[i] * scale);
  return out;
}

template <typename T>
std::vector<T> SensingMatrix::apply(const std::vector<T>& x) const {
  if (x.size() != frames * n) {
    throw ShapeError("SensingMatrix::apply: vector of " + std::to_string(x.size()) + ", expected " +
                     std::to_string(frames * n));
  }
  std::vector<T> y(n, T(0));
  for (std::size_t i = 0; i < n; ++i) {
    T s = 0;
    for (std::size_t m = 0; m < frames; ++m) s += x[m * n + i] * static_cast<T>(diag(m, i));
    y[i] = s;
  }
  return y;
}

template <typename T>
std::vector<T> SensingMatrix::apply_transpose(const std::vector<T>& y) const {
  if (y.size() != n) {
    throw ShapeError("SensingMatrix::apply_transpose: vector of " + std::to_string(y.size()) + ", expected " +
                     std::to_string(n));
  }
  std::vector<T> x(frames * n);
  for (std::size_t m = 0; m < frames; ++m) {
    for (std::size_t i = 0; i < n; ++i) x[m * n + i] = y[i] * static_cast<T>(diag(m, i));
  }
  return x;
}

std::vector<double> SensingMatrix::gram_diagonal() const {
  std::vector<double> g(n, 0.0);
  for (std::size_t m = 0; m < frames; ++m) {
    for (std::size_t i = 0; i < n; ++i) g[i] += static_cast<double>(diag(m, i)) * diag(m, i);
  }
  return g;
}

std::vector<double> SensingMatrix::to_dense() const {
  if (n > kMaxDenseSensingPixels) {
    throw std::invalid_argument("SensingMatrix::to_dense: refusing to materialize n = " + std::to_string(n));
  }
  const std::size_t cols = n * frames;
  std::vector<double> dense(n * cols, 0.0);
  for (std::size_t m = 0; m < frames; ++m) {
    for (std::size_t i = 0; i < n; ++i) dense[i * cols + m * n + i] = diag(m, i);
  }
  return dense;
}

SensingMatrix build_sensing_matrix(const MaskSet& masks) {
  SensingMatrix phi;
  phi.frames = masks.frames;
  phi.n = masks.pixels();
  phi.diagonals = masks.planes.reshaped(Shape{masks.frames, masks.pixels()});
  return phi;
}

template <typename T>
std::vector<T> vectorized_encode(const std::vector<T>& x, const SensingMatrix& phi, const NoiseModel& noise) {
  if (noise.sigma < 0.0) throw std::invalid_argument("vectorized_encode: noise sigma must be >= 0");
  std::vector<T> y = phi.apply(x);
  if (noise.active()) {
    const CounterRng rng(noise.seed, 3);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += noise_at<T>(noise, rng, i);
  }
  return y;
}

template <typename T>
std::vector<Tensor<T>> decompose_uss(const Measurement<T>& y, const MaskSet& masks) {
  if (masks.scheme != MaskScheme::USS || !masks.ideal) {
    throw std::invalid_argument("decompose_uss: requires ideal USS masks; RS or degraded measurements do not decompose");
  }
  require_plane(y.values.shape(), masks, "decompose_uss");
  const std::size_t n = masks.pixels();
  std::vector<Tensor<T>> parts;
  parts.reserve(masks.frames);
  for (std::size_t m = 0; m < masks.frames; ++m) {
    Tensor<T> part(y.values.shape());
    for (std::size_t p = 0; p < n; ++p) part[p] = y.values[p] * static_cast<T>(masks.planes[m * n + p]);
    parts.push_back(std::move(part));
  }
  return parts;
}

template <typename T>
VideoCube<T> coarse_estimate(const Tensor<T>& y, const MaskSet& masks) {
  require_plane(y.shape(), masks, "coarse_estimate");
  const std::size_t n = masks.pixels();
  const Tensor<float> cover = masks.coverage();
  VideoCube<T> xe = make_video<T>(masks.frames, masks.height, masks.width);
  for (std::size_t p = 0; p < n; ++p) {
    const T ybar = y[p] / std::max(static_cast<T>(cover[p]), static_cast<T>(kCoverageFloor));
    for (std::size_t m = 0; m < masks.frames; ++m) {
      xe[m * n + p] = ybar * static_cast<T>(masks.planes[m * n + p]) + ybar;
    }
  }
  return xe;
}

template <typename T>
Tensor<T> coarse_estimate_backward(const MaskSet& masks, const VideoCube<T>& upstream) {
  require_match(upstream.shape(), masks, "coarse_estimate_backward");
  const std::size_t n = masks.pixels();
  const Tensor<float> cover = masks.coverage();
  Tensor<T> dy(Shape{masks.height, masks.width});
  for (std::size_t p = 0; p < n; ++p) {
    T s = 0;
    for (std::size_t m = 0; m < masks.frames; ++m) {
      s += upstream[m * n + p] * (static_cast<T>(masks.planes[m * n + p]) + T(1));
    }
    dy[p] = s / std::max(static_cast<T>(cover[p]), static_cast<T>(kCoverageFloor));
  }
  return dy;
}

#define USSCI_INSTANTIATE(T)                                                                         \
  template Measurement<T> encode(const VideoCube<T>&, const MaskSet&, const NoiseModel&);            \
  template Measurement<T> quantize(const Measurement<T>&, const QuantSpec&);                         \
  template Measurement<T> dequantize(const Measurement<T>&);                                         \
  template std::vector<T> SensingMatrix::apply(const std::vector<T>&) const;                         \
  template std::vector<T> SensingMatrix::apply_transpose(const std::vector<T>&) const;               \
  template std::vector<T> vectorized_encode(const std::vector<T>&, const SensingMatrix&, const NoiseModel&); \
  template std::vector<Tensor<T>> decompose_uss(const Measurement<T>&, const MaskSet&);              \
  template VideoCube<T> coarse_estimate(const Tensor<T>&, const MaskSet&);                           \
  template Tensor<T> coarse_estimate_backward(const MaskSet&, const VideoCube<T>&);

USSCI_INSTANTIATE(float)
USSCI_INSTANTIATE(double)

#undef USSCI_INSTANTIATE

}  // namespace ussci
