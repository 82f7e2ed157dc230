#include "ussci/pipeline/synth.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "ussci/core/random.hpp"

namespace ussci {

std::string to_string(SceneKind k) {
  switch (k) {
    case SceneKind::MovingSquare: return "moving-square";
    case SceneKind::DriftingGradient: return "drifting-gradient";
    case SceneKind::BouncingDot: return "bouncing-dot";
  }
  return "?";
}

SceneKind parse_scene_kind(const std::string& text) {
  if (text == "moving-square") return SceneKind::MovingSquare;
  if (text == "drifting-gradient") return SceneKind::DriftingGradient;
  if (text == "bouncing-dot") return SceneKind::BouncingDot;
  throw std::invalid_argument("unknown scene kind '" + text + "'");
}

namespace {

constexpr std::uint64_t kSceneStream = 11;

double wrap(double v, double period) {
  const double r = std::fmod(v, period);
  return r < 0 ? r + period : r;
}

// Triangle wave: reflects a free coordinate into [0, span].
double reflect(double v, double span) {
  if (span <= 0) return 0;
  const double r = wrap(v, 2 * span);
  return r <= span ? r : 2 * span - r;
}

}  // namespace

SquareMotion square_motion(std::size_t height, std::size_t width, std::uint64_t seed, double speed) {
  const CounterRng rng(seed, kSceneStream);
  SquareMotion m{};
  m.side = std::max(2.0, std::floor(static_cast<double>(std::min(height, width)) / 4.0));
  m.y0 = std::floor(rng.uniform(0) * static_cast<double>(height));
  m.x0 = std::floor(rng.uniform(1) * static_cast<double>(width));
  m.vy = speed * (rng.uniform(2) * 4.0 - 2.0);
  m.vx = speed * (rng.uniform(3) * 4.0 - 2.0);
  m.intensity = 0.75 + 0.2 * rng.uniform(4);
  return m;
}

VideoCube<double> synth_scene(SceneKind kind, std::size_t frames, std::size_t height, std::size_t width,
                              std::uint64_t seed, const SceneParams& prm) {
  if (!frames || !height || !width) throw std::invalid_argument("synth_scene: extents must be positive");
  if (!(prm.level >= 0.0 && prm.level <= 1.0)) throw std::invalid_argument("synth_scene: level must lie in [0,1]");
  const double H = static_cast<double>(height), W = static_cast<double>(width);
  const CounterRng rng(seed, kSceneStream);
  VideoCube<double> v(Shape{frames, height, width});

  switch (kind) {
    case SceneKind::MovingSquare: {
      const SquareMotion m = square_motion(height, width, seed, prm.speed);
      for (std::size_t t = 0; t < frames; ++t) {
        const double top = std::floor(wrap(m.y0 + m.vy * static_cast<double>(t), H));
        const double left = std::floor(wrap(m.x0 + m.vx * static_cast<double>(t), W));
        for (std::size_t h = 0; h < height; ++h)
          for (std::size_t w = 0; w < width; ++w) {
            const bool in = wrap(static_cast<double>(h) - top, H) < m.side && wrap(static_cast<double>(w) - left, W) < m.side;
            v[(t * height + h) * width + w] = in ? m.intensity : 0.15 + 0.1 * static_cast<double>(h) / H;
          }
      }
      break;
    }
    case SceneKind::DriftingGradient: {
      const double kx = 1.0 + std::floor(rng.uniform(10) * 2.0);
      const double ky = 1.0 + std::floor(rng.uniform(11) * 2.0);
      const double omega = prm.speed * (0.2 + 0.4 * rng.uniform(12));
      const double phi = 2.0 * std::numbers::pi * rng.uniform(13);
      for (std::size_t t = 0; t < frames; ++t)
        for (std::size_t h = 0; h < height; ++h)
          for (std::size_t w = 0; w < width; ++w) {
            const double arg = 2.0 * std::numbers::pi * (kx * static_cast<double>(w) / W + ky * static_cast<double>(h) / H) +
                               omega * static_cast<double>(t) + phi;
            v[(t * height + h) * width + w] = 0.5 + 0.4 * std::sin(arg);
          }
      break;
    }
    case SceneKind::BouncingDot: {
      const double sigma = std::max(1.0, std::min(H, W) / 10.0);
      const double cy0 = rng.uniform(20) * (H - 1), cx0 = rng.uniform(21) * (W - 1);
      const double vy = prm.speed * (1.0 + 2.0 * rng.uniform(22)) * (rng.uniform(23) < 0.5 ? -1 : 1);
      const double vx = prm.speed * (1.0 + 2.0 * rng.uniform(24)) * (rng.uniform(25) < 0.5 ? -1 : 1);
      for (std::size_t t = 0; t < frames; ++t) {
        const double cy = reflect(cy0 + vy * static_cast<double>(t), H - 1);
        const double cx = reflect(cx0 + vx * static_cast<double>(t), W - 1);
        for (std::size_t h = 0; h < height; ++h)
          for (std::size_t w = 0; w < width; ++w) {
            const double dy = static_cast<double>(h) - cy, dx = static_cast<double>(w) - cx;
            v[(t * height + h) * width + w] = 0.1 + 0.85 * std::exp(-(dy * dy + dx * dx) / (2 * sigma * sigma));
          }
      }
      break;
    }
  }
  if (prm.level != 1.0) {
    for (auto& e : v.values()) e *= prm.level;
  }
  return v;
}

}  // namespace ussci
