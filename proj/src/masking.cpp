#include "ussci/masking.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "ussci/core/kv.hpp"
#include "ussci/core/random.hpp"
#include "ussci/core/stns.hpp"

namespace ussci {
namespace {

void require_extents(std::size_t t, std::size_t h, std::size_t w) {
  if (t == 0 || h == 0 || w == 0) {
    throw std::invalid_argument("mask extents must be positive, got T=" + std::to_string(t) +
                                " H=" + std::to_string(h) + " W=" + std::to_string(w));
  }
}

MaskSet empty_set(MaskScheme scheme, std::size_t t, std::size_t h, std::size_t w, std::uint64_t seed) {
  MaskSet m;
  m.scheme = scheme;
  m.frames = t;
  m.height = h;
  m.width = w;
  m.planes = Tensor<float>(Shape{t, h, w});
  m.seed = seed;
  return m;
}

std::vector<double> gaussian_taps(double sigma) {
  const auto radius = static_cast<std::size_t>(std::ceil(3.0 * sigma));
  std::vector<double> taps(2 * radius + 1);
  double sum = 0;
  for (std::size_t i = 0; i < taps.size(); ++i) {
    const double d = static_cast<double>(i) - static_cast<double>(radius);
    taps[i] = std::exp(-0.5 * d * d / (sigma * sigma));
    sum += taps[i];
  }
  for (double& v : taps) v /= sum;
  return taps;
}

// Separable blur with zero padding; light leaving the plane is lost.
std::vector<double> blur_plane(const float* src, std::size_t h, std::size_t w, const std::vector<double>& taps) {
  const long long r = static_cast<long long>(taps.size() / 2);
  std::vector<double> tmp(h * w, 0.0), out(h * w, 0.0);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double s = 0;
      for (long long k = -r; k <= r; ++k) {
        const long long xx = static_cast<long long>(x) + k;
        if (xx < 0 || xx >= static_cast<long long>(w)) continue;
        s += taps[static_cast<std::size_t>(k + r)] * src[y * w + static_cast<std::size_t>(xx)];
      }
      tmp[y * w + x] = s;
    }
  }
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double s = 0;
      for (long long k = -r; k <= r; ++k) {
        const long long yy = static_cast<long long>(y) + k;
        if (yy < 0 || yy >= static_cast<long long>(h)) continue;
        s += taps[static_cast<std::size_t>(k + r)] * tmp[static_cast<std::size_t>(yy) * w + x];
      }
      out[y * w + x] = s;
    }
  }
  return out;
}

// out(y, x) = bilinear sample of src at (y - dy, x - dx), zero outside.
std::vector<double> shift_plane(const std::vector<double>& src, std::size_t h, std::size_t w, double dy, double dx) {
  std::vector<double> out(h * w, 0.0);
  auto sample = [&](long long y, long long x) {
    if (y < 0 || x < 0 || y >= static_cast<long long>(h) || x >= static_cast<long long>(w)) return 0.0;
    return src[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)];
  };
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double sy = static_cast<double>(y) - dy;
      const double sx = static_cast<double>(x) - dx;
      const double fy = std::floor(sy), fx = std::floor(sx);
      const double ay = sy - fy, ax = sx - fx;
      const auto y0 = static_cast<long long>(fy), x0 = static_cast<long long>(fx);
      out[y * w + x] = (1 - ay) * ((1 - ax) * sample(y0, x0) + ax * sample(y0, x0 + 1)) +
                       ay * ((1 - ax) * sample(y0 + 1, x0) + ax * sample(y0 + 1, x0 + 1));
    }
  }
  return out;
}

}  // namespace

std::string to_string(MaskScheme s) { return s == MaskScheme::USS ? "uss" : "rs"; }

MaskScheme parse_scheme(const std::string& text) {
  if (text == "uss" || text == "USS") return MaskScheme::USS;
  if (text == "rs" || text == "RS") return MaskScheme::RS;
  throw std::invalid_argument("unknown mask scheme '" + text + "' (expected rs or uss)");
}

Tensor<float> MaskSet::coverage() const {
  Tensor<float> sum(Shape{height, width});
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t p = 0; p < pixels(); ++p) sum[p] += planes[t * pixels() + p];
  }
  return sum;
}

MaskSet gen_rs(std::size_t frames, std::size_t height, std::size_t width, double density, std::uint64_t seed) {
  require_extents(frames, height, width);
  if (!(density > 0.0 && density < 1.0)) throw std::invalid_argument("RS density must lie in (0,1)");
  MaskSet m = empty_set(MaskScheme::RS, frames, height, width, seed);
  m.density = density;
  const CounterRng rng(seed, 1);
  const long long n = static_cast<long long>(m.planes.size());
  float* out = m.planes.data();
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < n; ++i) {
    out[i] = rng.uniform(static_cast<std::uint64_t>(i)) < density ? 1.0f : 0.0f;
  }
  return m;
}

MaskSet gen_uss(std::size_t frames, std::size_t height, std::size_t width, std::uint64_t seed) {
  require_extents(frames, height, width);
  MaskSet m = empty_set(MaskScheme::USS, frames, height, width, seed);
  m.density = 1.0 / static_cast<double>(frames);
  const CounterRng rng(seed, 2);
  const std::size_t npix = m.pixels();
  float* out = m.planes.data();
  const long long n = static_cast<long long>(npix);
#pragma omp parallel for schedule(static)
  for (long long p = 0; p < n; ++p) {
    const auto k = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(p), frames));
    out[k * npix + static_cast<std::size_t>(p)] = 1.0f;
  }
  return m;
}

MaskReport validate(const MaskSet& m) {
  MaskReport rep;
  const std::size_t npix = m.pixels();
  rep.fill_fraction.assign(m.frames, 0.0);
  rep.binary = true;
  for (std::size_t t = 0; t < m.frames; ++t) {
    double sum = 0;
    for (std::size_t p = 0; p < npix; ++p) {
      const float v = m.planes[t * npix + p];
      if (v != 0.0f && v != 1.0f) rep.binary = false;
      sum += v;
    }
    rep.fill_fraction[t] = sum / static_cast<double>(npix);
  }

  auto record = [&](std::size_t p) {
    if (rep.violations++ == 0) rep.first_violation = std::array<std::size_t, 2>{p / m.width, p % m.width};
  };
  if (m.ideal) {
    rep.one_hot_checked = m.scheme == MaskScheme::USS;
    for (std::size_t p = 0; p < npix; ++p) {
      bool nonbinary = false;
      std::size_t ones = 0;
      for (std::size_t t = 0; t < m.frames; ++t) {
        const float v = m.planes[t * npix + p];
        nonbinary = nonbinary || (v != 0.0f && v != 1.0f);
        ones += v == 1.0f;
      }
      if (nonbinary || (rep.one_hot_checked && ones != 1)) record(p);
    }
  }
  rep.pass = rep.violations == 0;
  return rep;
}

MaskSet degrade(const MaskSet& m, double blur_sigma, double shift_y, double shift_x) {
  if (!(blur_sigma >= 0.0)) throw std::invalid_argument("degrade: blur_sigma must be >= 0");
  MaskSet out = m;
  out.ideal = false;
  if (blur_sigma == 0.0 && shift_y == 0.0 && shift_x == 0.0) return out;

  std::vector<double> taps;
  if (blur_sigma > 0.0) {
    taps = gaussian_taps(blur_sigma);
    if (taps.size() > m.height || taps.size() > m.width) {
      throw std::invalid_argument("degrade: blur kernel of " + std::to_string(taps.size()) +
                                  " taps exceeds the " + std::to_string(m.height) + "x" +
                                  std::to_string(m.width) + " plane");
    }
  }
  const std::size_t npix = m.pixels();
  const long long frames = static_cast<long long>(m.frames);
#pragma omp parallel for schedule(static)
  for (long long t = 0; t < frames; ++t) {
    const float* src = m.planes.data() + static_cast<std::size_t>(t) * npix;
    std::vector<double> plane = taps.empty() ? std::vector<double>(src, src + npix) : blur_plane(src, m.height, m.width, taps);
    if (shift_y != 0.0 || shift_x != 0.0) plane = shift_plane(plane, m.height, m.width, shift_y, shift_x);
    float* dst = out.planes.data() + static_cast<std::size_t>(t) * npix;
    for (std::size_t p = 0; p < npix; ++p) dst[p] = static_cast<float>(std::clamp(plane[p], 0.0, 1.0));
  }
  return out;
}

std::filesystem::path mask_sidecar_path(const std::filesystem::path& path) {
  std::filesystem::path meta = path;
  meta += ".meta";
  return meta;
}

void save_masks(const MaskSet& m, const std::filesystem::path& path) {
  std::ostringstream meta;
  meta.precision(17);
  meta << "scheme=" << to_string(m.scheme) << "\n"
       << "seed=" << m.seed << "\n"
       << "density=" << m.density << "\n"
       << "ideal=" << (m.ideal ? 1 : 0) << "\n"
       << "frames=" << m.frames << "\n"
       << "height=" << m.height << "\n"
       << "width=" << m.width << "\n";
  if (m.ideal) {
    write_stns(path, m.planes.cast<std::uint8_t>());
  } else {
    write_stns(path, m.planes);
  }
  write_text_atomic(mask_sidecar_path(path), meta.str());
}

MaskSet load_masks(const std::filesystem::path& path) {
  const AnyTensor payload = read_stns(path);
  KeyValues kv;
  try {
    kv = parse_kv(read_text_file(mask_sidecar_path(path)));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error("mask sidecar: " + std::string(e.what()));
  }
  for (const char* key : {"scheme", "seed", "density", "ideal", "frames", "height", "width"}) {
    if (!kv.contains(key)) throw std::runtime_error("mask sidecar: missing '" + std::string(key) + "'");
  }

  MaskSet m;
  m.scheme = parse_scheme(kv.at("scheme"));
  kv_read(kv, "seed", m.seed);
  kv_read(kv, "density", m.density);
  kv_read(kv, "ideal", m.ideal);
  kv_read(kv, "frames", m.frames);
  kv_read(kv, "height", m.height);
  kv_read(kv, "width", m.width);

  const Shape expect{m.frames, m.height, m.width};
  if (any_shape(payload) != expect) {
    throw FormatError("mask payload shape " + shape_string(any_shape(payload)) + " disagrees with sidecar " +
                          shape_string(expect),
                      8);
  }
  const std::string dtype = dtype_name(payload);
  if (m.ideal && dtype != "u8") throw FormatError("ideal mask set stored as " + dtype + ", expected u8", 8);
  if (!m.ideal && dtype != "f32") throw FormatError("degraded mask set stored as " + dtype + ", expected f32", 8);
  m.planes = as_tensor<float>(payload);
  if (m.ideal) {
    const MaskReport rep = validate(m);
    if (!rep.pass) {
      throw FormatError("payload violates the " + to_string(m.scheme) + " scheme at " +
                            std::to_string(rep.violations) + " pixels",
                        8);
    }
  }
  return m;
}

}  // namespace ussci
