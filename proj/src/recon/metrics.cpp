#include "ussci/recon/metrics.hpp"

#include <cmath>
#include <vector>

#include "ussci/core/errors.hpp"

namespace ussci {
namespace {

template <typename T>
void frame_extents(const Tensor<T>& a, const Tensor<T>& b, const char* op, std::size_t& frames, std::size_t& h,
                   std::size_t& w) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": extents differ, " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
  if (a.rank() == 2) {
    frames = 1, h = a.dim(0), w = a.dim(1);
  } else if (a.rank() == 3) {
    frames = a.dim(0), h = a.dim(1), w = a.dim(2);
  } else {
    throw ShapeError(std::string(op) + ": expected [T,H,W] or [H,W], got " + shape_string(a.shape()));
  }
}

std::vector<double> gaussian_window(std::size_t n, double sigma) {
  std::vector<double> g(n);
  const double c = (static_cast<double>(n) - 1.0) / 2.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(i) - c;
    g[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += g[i];
  }
  for (double& v : g) v /= sum;
  return g;
}

// Separable valid-mode filtering of an h x w plane.
std::vector<double> filter_valid(const std::vector<double>& src, std::size_t h, std::size_t w,
                                 const std::vector<double>& g) {
  const std::size_t n = g.size(), oh = h - n + 1, ow = w - n + 1;
  std::vector<double> rows(h * ow);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += g[k] * src[y * w + x + k];
      rows[y * ow + x] = s;
    }
  std::vector<double> out(oh * ow);
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += g[k] * rows[(y + k) * ow + x];
      out[y * ow + x] = s;
    }
  return out;
}

}  // namespace

template <typename T>
double psnr(const Tensor<T>& a, const Tensor<T>& b, double peak) {
  std::size_t frames = 0, h = 0, w = 0;
  frame_extents(a, b, "psnr", frames, h, w);
  if (!(peak > 0.0)) throw std::invalid_argument("psnr: peak must be positive");
  const std::size_t n = h * w;
  double total = 0.0;
  for (std::size_t f = 0; f < frames; ++f) {
    double se = 0.0;
    for (std::size_t i = f * n; i < (f + 1) * n; ++i) {
      const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
      se += d * d;
    }
    const double mse = se / static_cast<double>(n);
    total += mse == 0.0 ? kPsnrCap : std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
  }
  return total / static_cast<double>(frames);
}

template <typename T>
double ssim(const Tensor<T>& a, const Tensor<T>& b, const SsimOptions& opt) {
  std::size_t frames = 0, h = 0, w = 0;
  frame_extents(a, b, "ssim", frames, h, w);
  if (opt.window == 0 || h < opt.window || w < opt.window) {
    throw ShapeError("ssim: frame " + std::to_string(h) + "x" + std::to_string(w) + " smaller than the " +
                     std::to_string(opt.window) + "-pixel window");
  }
  const auto g = gaussian_window(opt.window, opt.sigma);
  const double c1 = (opt.k1 * opt.data_range) * (opt.k1 * opt.data_range);
  const double c2 = (opt.k2 * opt.data_range) * (opt.k2 * opt.data_range);
  const std::size_t n = h * w;
  std::vector<double> per_frame(frames);

#pragma omp parallel for schedule(static)
  for (long long fl = 0; fl < static_cast<long long>(frames); ++fl) {
    const std::size_t f = static_cast<std::size_t>(fl);
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(a[f * n + i]);
      y[i] = static_cast<double>(b[f * n + i]);
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = filter_valid(x, h, w, g), my = filter_valid(y, h, w, g);
    const auto sxx = filter_valid(xx, h, w, g), syy = filter_valid(yy, h, w, g), sxy = filter_valid(xy, h, w, g);
    double sum = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double vx = sxx[i] - mx[i] * mx[i], vy = syy[i] - my[i] * my[i], cxy = sxy[i] - mx[i] * my[i];
      sum += ((2 * mx[i] * my[i] + c1) * (2 * cxy + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    per_frame[f] = sum / static_cast<double>(mx.size());
  }
  double total = 0.0;
  for (double s : per_frame) total += s;
  return total / static_cast<double>(frames);
}

template double psnr<float>(const Tensor<float>&, const Tensor<float>&, double);
template double psnr<double>(const Tensor<double>&, const Tensor<double>&, double);
template double ssim<float>(const Tensor<float>&, const Tensor<float>&, const SsimOptions&);
template double ssim<double>(const Tensor<double>&, const Tensor<double>&, const SsimOptions&);

}  // namespace ussci
