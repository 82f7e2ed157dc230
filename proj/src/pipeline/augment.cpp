#include "ussci/pipeline/augment.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ussci/core/errors.hpp"
#include "ussci/core/random.hpp"

namespace ussci {
namespace {

void require_clip(const VideoCube<double>& c, const char* op) {
  if (c.rank() != 3) throw ShapeError(std::string(op) + ": expected [T,H,W], got " + shape_string(c.shape()));
}

}  // namespace

VideoCube<double> hflip(const VideoCube<double>& c) {
  require_clip(c, "hflip");
  const std::size_t T = c.dim(0), H = c.dim(1), W = c.dim(2);
  VideoCube<double> out(c.shape());
  for (std::size_t r = 0; r < T * H; ++r)
    for (std::size_t w = 0; w < W; ++w) out[r * W + w] = c[r * W + (W - 1 - w)];
  return out;
}

VideoCube<double> resize_bilinear(const VideoCube<double>& c, std::size_t oh, std::size_t ow) {
  require_clip(c, "resize_bilinear");
  if (!oh || !ow) throw ShapeError("resize_bilinear: target extents must be positive");
  const std::size_t T = c.dim(0), H = c.dim(1), W = c.dim(2);
  VideoCube<double> out(Shape{T, oh, ow});
  const double sy = static_cast<double>(H) / static_cast<double>(oh);
  const double sx = static_cast<double>(W) / static_cast<double>(ow);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t y = 0; y < oh; ++y) {
      const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, static_cast<double>(H - 1));
      const std::size_t y0 = static_cast<std::size_t>(fy), y1 = std::min(y0 + 1, H - 1);
      const double wy = fy - static_cast<double>(y0);
      for (std::size_t x = 0; x < ow; ++x) {
        const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, static_cast<double>(W - 1));
        const std::size_t x0 = static_cast<std::size_t>(fx), x1 = std::min(x0 + 1, W - 1);
        const double wx = fx - static_cast<double>(x0);
        const double* f = c.data() + t * H * W;
        out[(t * oh + y) * ow + x] = (1 - wy) * ((1 - wx) * f[y0 * W + x0] + wx * f[y0 * W + x1]) +
                                     wy * ((1 - wx) * f[y1 * W + x0] + wx * f[y1 * W + x1]);
      }
    }
  return out;
}

VideoCube<double> crop(const VideoCube<double>& c, std::size_t top, std::size_t left, std::size_t h, std::size_t w) {
  require_clip(c, "crop");
  const std::size_t T = c.dim(0), H = c.dim(1), W = c.dim(2);
  if (top + h > H || left + w > W) {
    throw ShapeError("crop: " + std::to_string(h) + "x" + std::to_string(w) + " at (" + std::to_string(top) + "," +
                     std::to_string(left) + ") exceeds " + std::to_string(H) + "x" + std::to_string(W));
  }
  VideoCube<double> out(Shape{T, h, w});
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t y = 0; y < h; ++y)
      std::copy_n(c.data() + (t * H + top + y) * W + left, w, out.data() + (t * h + y) * w);
  return out;
}

VideoCube<double> frame_window(const VideoCube<double>& c, std::size_t start, std::size_t count) {
  require_clip(c, "frame_window");
  if (count == 0 || start + count > c.dim(0)) {
    throw ShapeError("frame_window: frames [" + std::to_string(start) + "," + std::to_string(start + count) +
                     ") outside a clip of " + std::to_string(c.dim(0)));
  }
  const std::size_t plane = c.dim(1) * c.dim(2);
  VideoCube<double> out(Shape{count, c.dim(1), c.dim(2)});
  std::copy_n(c.data() + start * plane, count * plane, out.data());
  return out;
}

VideoCube<double> augment(const VideoCube<double>& clip, const AugmentConfig& cfg, std::uint64_t seed) {
  require_clip(clip, "augment");
  const std::size_t H = clip.dim(1), W = clip.dim(2);
  if (!cfg.crop_height || !cfg.crop_width) throw ShapeError("augment: crop extents must be positive");
  if (H < cfg.crop_height || W < cfg.crop_width) {
    throw ShapeError("augment: clip " + std::to_string(H) + "x" + std::to_string(W) + " smaller than crop " +
                     std::to_string(cfg.crop_height) + "x" + std::to_string(cfg.crop_width));
  }
  const CounterRng rng(seed, 21);
  VideoCube<double> cur = clip;
  if (cfg.rescale) {
    std::vector<std::pair<std::size_t, std::size_t>> sizes;
    for (double f : kRescaleFactors) {
      const auto h = static_cast<std::size_t>(std::lround(f * static_cast<double>(H)));
      const auto w = static_cast<std::size_t>(std::lround(f * static_cast<double>(W)));
      if (h >= cfg.crop_height && w >= cfg.crop_width) sizes.emplace_back(h, w);
    }
    const auto [h, w] = sizes[rng.below(0, sizes.size())];
    if (h != H || w != W) cur = resize_bilinear(cur, h, w);
  }
  const std::size_t ch = cur.dim(1), cw = cur.dim(2);
  std::size_t top = (ch - cfg.crop_height) / 2, left = (cw - cfg.crop_width) / 2;
  if (cfg.random_crop) {
    top = rng.below(1, ch - cfg.crop_height + 1);
    left = rng.below(2, cw - cfg.crop_width + 1);
  }
  cur = crop(cur, top, left, cfg.crop_height, cfg.crop_width);
  if (cfg.flip && rng.uniform(3) < 0.5) cur = hflip(cur);
  return cur;
}

}  // namespace ussci
