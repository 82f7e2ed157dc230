#pragma once

#include <cstdint>

#include "ussci/sensing.hpp"

namespace ussci {

struct AugmentConfig {
  std::size_t crop_height = 32;
  std::size_t crop_width = 32;
  bool random_crop = true;  // off: centre crop
  bool flip = true;         // horizontal flip with probability 1/2
  bool rescale = true;      // bilinear rescale by one of {0.75, 1, 1.25} before cropping
};

inline constexpr double kRescaleFactors[] = {0.75, 1.0, 1.25};

/// Seeded crop/flip/rescale of a [T,H,W] clip to exactly crop_height x crop_width.
/// Rescale factors that would shrink the clip below the crop are skipped.
VideoCube<double> augment(const VideoCube<double>& clip, const AugmentConfig& cfg, std::uint64_t seed);

VideoCube<double> hflip(const VideoCube<double>& clip);
/// Bilinear resize of every frame (pixel centres aligned, edges clamped).
VideoCube<double> resize_bilinear(const VideoCube<double>& clip, std::size_t height, std::size_t width);
VideoCube<double> crop(const VideoCube<double>& clip, std::size_t top, std::size_t left, std::size_t height,
                       std::size_t width);
/// Frames [start, start + count).
VideoCube<double> frame_window(const VideoCube<double>& clip, std::size_t start, std::size_t count);

}  // namespace ussci
