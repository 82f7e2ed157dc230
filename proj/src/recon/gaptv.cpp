#include "ussci/recon/gaptv.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ussci/core/errors.hpp"

namespace ussci {

void GapTvConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("GapTvConfig: iterations must be >= 1");
  if (!(tv_weight >= 0.0) || !std::isfinite(tv_weight)) throw std::invalid_argument("GapTvConfig: tv_weight must be >= 0");
}

namespace {

// D maps [T,H,W] to three forward-difference fields (along W, H, T), each
// [T,H,W] with zero at the far boundary.
void apply_d(const VideoCube<double>& u, Tensor<double>& out, bool temporal) {
  const std::size_t T = u.dim(0), H = u.dim(1), W = u.dim(2), n = T * H * W;
#pragma omp parallel for schedule(static)
  for (long long tl = 0; tl < static_cast<long long>(T); ++tl) {
    const std::size_t t = static_cast<std::size_t>(tl);
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t w = 0; w < W; ++w) {
        const std::size_t i = (t * H + h) * W + w;
        out[i] = w + 1 < W ? u[i + 1] - u[i] : 0.0;
        out[n + i] = h + 1 < H ? u[i + W] - u[i] : 0.0;
        out[2 * n + i] = temporal && t + 1 < T ? u[i + H * W] - u[i] : 0.0;
      }
  }
}

// D^T z.
void apply_dt(const Tensor<double>& z, VideoCube<double>& out, std::size_t T, std::size_t H, std::size_t W) {
  const std::size_t n = T * H * W;
#pragma omp parallel for schedule(static)
  for (long long tl = 0; tl < static_cast<long long>(T); ++tl) {
    const std::size_t t = static_cast<std::size_t>(tl);
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t w = 0; w < W; ++w) {
        const std::size_t i = (t * H + h) * W + w;
        double s = -z[i] - z[n + i] - z[2 * n + i];
        if (w > 0) s += z[i - 1];
        if (h > 0) s += z[n + i - W];
        if (t > 0) s += z[2 * n + i - H * W];
        out[i] = s;
      }
  }
}

double residual_norm(const Tensor<double>& y, const MaskSet& m, const VideoCube<double>& x) {
  const std::size_t n = m.pixels();
  double s = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    double phix = 0.0;
    for (std::size_t f = 0; f < m.frames; ++f) phix += static_cast<double>(m.planes[f * n + p]) * x[f * n + p];
    const double r = y[p] - phix;
    s += r * r;
  }
  return std::sqrt(s);
}

}  // namespace

VideoCube<double> tv_denoise(const VideoCube<double>& x, double weight, std::size_t steps, bool temporal,
                             Tensor<double>* dual) {
  if (x.rank() != 3) throw ShapeError("tv_denoise: expected [T,H,W], got " + shape_string(x.shape()));
  const std::size_t T = x.dim(0), H = x.dim(1), W = x.dim(2);
  if (weight == 0.0 || steps == 0) return x;
  const double tau = temporal ? 1.0 / 12.0 : 1.0 / 8.0;
  Tensor<double> local;
  Tensor<double>& z = dual ? *dual : local;
  if (z.shape() != Shape{3, T, H, W}) z = Tensor<double>(Shape{3, T, H, W});
  VideoCube<double> u(x.shape());
  Tensor<double> grad(z.shape());
  for (std::size_t k = 0; k < steps; ++k) {
    apply_dt(z, u, T, H, W);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = x[i] - u[i];
    apply_d(u, grad, temporal);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = std::clamp(z[i] + tau * grad[i], -weight, weight);
  }
  apply_dt(z, u, T, H, W);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = x[i] - u[i];
  return u;
}

GapTvResult gap_tv(const Tensor<double>& y, const MaskSet& m, const GapTvConfig& cfg, const GapTvObserver& observer) {
  cfg.validate();
  if (y.shape() != Shape{m.height, m.width}) {
    throw ShapeError("gap_tv: measurement " + shape_string(y.shape()) + " does not match masks " +
                     std::to_string(m.height) + "x" + std::to_string(m.width));
  }
  const std::size_t n = m.pixels(), T = m.frames;
  std::vector<double> gram(n, 0.0);
  for (std::size_t f = 0; f < T; ++f)
    for (std::size_t p = 0; p < n; ++p) {
      const double v = m.planes[f * n + p];
      gram[p] += v * v;
    }

  Tensor<double> target = y;
  auto project = [&](const VideoCube<double>& v) {
    VideoCube<double> x = v;
#pragma omp parallel for schedule(static)
    for (long long pl = 0; pl < static_cast<long long>(n); ++pl) {
      const std::size_t p = static_cast<std::size_t>(pl);
      if (gram[p] < kCoverageFloor) continue;
      double phiv = 0.0;
      for (std::size_t f = 0; f < T; ++f) phiv += static_cast<double>(m.planes[f * n + p]) * v[f * n + p];
      const double r = (target[p] - phiv) / gram[p];
      for (std::size_t f = 0; f < T; ++f) x[f * n + p] += static_cast<double>(m.planes[f * n + p]) * r;
    }
    return x;
  };

  GapTvResult res;
  VideoCube<double> v(Shape{T, m.height, m.width});
  VideoCube<double> x;
  Tensor<double> dual;
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    if (cfg.acceleration && it > 0) {
      const std::size_t nn = n;
      for (std::size_t p = 0; p < nn; ++p) {
        double phix = 0.0;
        for (std::size_t f = 0; f < T; ++f) phix += static_cast<double>(m.planes[f * n + p]) * x[f * n + p];
        target[p] += y[p] - phix;
      }
    }
    x = project(v);
    ensure_finite(x, "gap_tv");
    res.projection_residual.push_back(residual_norm(y, m, x));
    if (observer) observer(it, x);
    v = tv_denoise(x, cfg.tv_weight, cfg.tv_inner_steps, cfg.temporal_tv, &dual);
    res.denoise_residual.push_back(residual_norm(y, m, v));
  }
  for (auto& e : x.values()) e = std::clamp(e, 0.0, 1.0);
  res.video = std::move(x);
  return res;
}

template <typename T>
VideoCube<T> gap_tv_decode(const Measurement<T>& y, const MaskSet& masks, const GapTvConfig& cfg) {
  const Measurement<T> analog = y.quantized ? dequantize(y) : y;
  return gap_tv(analog.values.template cast<double>(), masks, cfg).video.template cast<T>();
}

template VideoCube<float> gap_tv_decode<float>(const Measurement<float>&, const MaskSet&, const GapTvConfig&);
template VideoCube<double> gap_tv_decode<double>(const Measurement<double>&, const MaskSet&, const GapTvConfig&);

}  // namespace ussci
