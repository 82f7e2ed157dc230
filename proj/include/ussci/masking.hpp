#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ussci/core/tensor.hpp"

namespace ussci {

enum class MaskScheme { RS, USS };

std::string to_string(MaskScheme s);
MaskScheme parse_scheme(const std::string& text);

/// T modulation planes of H x W. Ideal sets hold exact {0,1}; degraded sets hold [0,1].
struct MaskSet {
  MaskScheme scheme = MaskScheme::RS;
  std::size_t frames = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  Tensor<float> planes;  // [T,H,W]
  std::uint64_t seed = 0;
  double density = 0.5;  // meaningful for RS only
  bool ideal = true;

  float at(std::size_t t, std::size_t h, std::size_t w) const {
    return planes[(t * height + h) * width + w];
  }
  std::size_t pixels() const { return height * width; }
  /// Per-pixel sum over frames, [H,W].
  Tensor<float> coverage() const;
};

struct MaskReport {
  bool pass = false;
  bool binary = false;
  bool one_hot_checked = false;
  std::vector<double> fill_fraction;  // per frame
  std::size_t violations = 0;
  std::optional<std::array<std::size_t, 2>> first_violation;  // (h, w)
};

inline constexpr double kDefaultRsDensity = 0.5;

/// i.i.d. Bernoulli(density) entries, one counter-based draw per (frame, pixel).
MaskSet gen_rs(std::size_t frames, std::size_t height, std::size_t width, double density, std::uint64_t seed);

/// One uniformly drawn active frame per pixel; the planes sum to the all-one matrix.
MaskSet gen_uss(std::size_t frames, std::size_t height, std::size_t width, std::uint64_t seed);

/// Binarity for ideal sets, plus exactly-one-hot per pixel for ideal USS sets.
MaskReport validate(const MaskSet& m);

/// Truncated Gaussian blur (radius ceil(3 sigma), zero outside the plane) followed by a
/// bilinear sub-pixel shift by (dy, dx). Clears `ideal`.
MaskSet degrade(const MaskSet& m, double blur_sigma, double shift_y, double shift_x);

/// Writes `<path>` (STNS, u8 when ideal else f32) and the `<path>.meta` key=value sidecar.
void save_masks(const MaskSet& m, const std::filesystem::path& path);
MaskSet load_masks(const std::filesystem::path& path);

std::filesystem::path mask_sidecar_path(const std::filesystem::path& path);

}  // namespace ussci
