#include "ussci/pipeline/io.hpp"

#include <cstdio>

#include "ussci/core/errors.hpp"
#include "ussci/core/kv.hpp"
#include "ussci/core/stns.hpp"
#include "ussci/masking.hpp"
#include "ussci/pipeline/dataset.hpp"

namespace fs = std::filesystem;

namespace ussci {
namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void save_measurement(const Measurement<double>& y, const fs::path& path) {
  if (y.values.rank() != 2) throw ShapeError("save_measurement: expected [H,W], got " + shape_string(y.values.shape()));
  const KeyValues meta{{"quantized", y.quantized ? "1" : "0"},
                       {"bits", std::to_string(y.quant.bits)},
                       {"full_scale", num(y.quant.full_scale)},
                       {"gain", num(y.quant.gain)},
                       {"saturation_fraction", num(y.saturation_fraction)}};
  write_stns(path, y.values);
  write_text_atomic(mask_sidecar_path(path), format_kv(meta));
}

Measurement<double> load_measurement(const fs::path& path) {
  Measurement<double> y;
  y.values = as_tensor<double>(read_stns(path));
  if (y.values.rank() != 2) throw ShapeError(path.string() + ": measurement must be [H,W], got " + shape_string(y.values.shape()));
  const fs::path meta = mask_sidecar_path(path);
  if (fs::exists(meta)) {
    const KeyValues kv = parse_kv(read_text_file(meta));
    std::size_t bits = static_cast<std::size_t>(y.quant.bits);
    kv_read(kv, "quantized", y.quantized);
    kv_read(kv, "bits", bits);
    kv_read(kv, "full_scale", y.quant.full_scale);
    kv_read(kv, "gain", y.quant.gain);
    kv_read(kv, "saturation_fraction", y.saturation_fraction);
    y.quant.bits = static_cast<int>(bits);
    if (y.quantized) y.quant.validate();
  }
  return y;
}

VideoCube<double> load_video(const fs::path& path) {
  if (fs::is_directory(path)) {
    ClipEntry clip;
    clip.name = path.filename().string();
    clip.directory = path;
    return load_clip(clip);
  }
  VideoCube<double> v = as_tensor<double>(read_stns(path));
  if (v.rank() != 3) throw ShapeError(path.string() + ": video must be [T,H,W], got " + shape_string(v.shape()));
  return v;
}

void save_video(const VideoCube<double>& v, const fs::path& path) {
  if (v.rank() != 3) throw ShapeError("save_video: expected [T,H,W], got " + shape_string(v.shape()));
  write_stns(path, v);
}

}  // namespace ussci
