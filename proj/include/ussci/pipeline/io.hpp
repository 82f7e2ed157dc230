#pragma once

#include <filesystem>

#include "ussci/sensing.hpp"

namespace ussci {

/// f64 STNS of the [H,W] values plus "<path>.meta" (quantized, bits, full_scale,
/// gain, saturation_fraction).
void save_measurement(const Measurement<double>& y, const std::filesystem::path& path);
Measurement<double> load_measurement(const std::filesystem::path& path);

/// A [T,H,W] STNS file (any dtype) or a directory of PNG frames.
VideoCube<double> load_video(const std::filesystem::path& path);
void save_video(const VideoCube<double>& v, const std::filesystem::path& path);

}  // namespace ussci
