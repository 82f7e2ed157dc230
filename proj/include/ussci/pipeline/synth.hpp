#pragma once

#include <cstdint>
#include <string>

#include "ussci/sensing.hpp"

namespace ussci {

enum class SceneKind { MovingSquare, DriftingGradient, BouncingDot };

std::string to_string(SceneKind k);
SceneKind parse_scene_kind(const std::string& text);

struct SceneParams {
  double speed = 1.0;   // scales every velocity; 0 freezes the scene
  double level = 1.0;   // multiplies all intensities (kept <= 1 by the caller)
};

/// Seeded analytic motion. Frame t is a closed-form function of t:
///   moving-square     top-left ((y0 + vy t) mod H, (x0 + vx t) mod W), side max(2, min(H,W)/4),
///                     intensity a on a static vertical ramp bg(h) = 0.15 + 0.1 h / H
///   drifting-gradient 0.5 + 0.4 sin(2 pi (kx w / W + ky h / H) + omega t + phi)
///   bouncing-dot      Gaussian blob (sigma = min(H,W)/10) whose centre reflects off the borders
/// All values lie in [0, level].
VideoCube<double> synth_scene(SceneKind kind, std::size_t frames, std::size_t height, std::size_t width,
                              std::uint64_t seed, const SceneParams& params = {});

/// Parameters drawn for a seed, exposed so tests can evaluate the formulas.
struct SquareMotion {
  double y0, x0, vy, vx, side, intensity;
};
SquareMotion square_motion(std::size_t height, std::size_t width, std::uint64_t seed, double speed);

}  // namespace ussci
