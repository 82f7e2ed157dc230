#include "ussci/pipeline/evaluate.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>

#include "ussci/core/errors.hpp"
#include "ussci/net/network.hpp"

namespace ussci {

Decoder gap_tv_decoder(const GapTvConfig& cfg) {
  cfg.validate();
  return [cfg](const Measurement<double>& y, const MaskSet& m) { return gap_tv_decode(y, m, cfg); };
}

VideoCube<double> decode(const Measurement<double>& y, const MaskSet& masks, const Checkpoint& ck) {
  BstNetwork<float> net(ck.config);
  net.check_extents(masks);
  if (y.values.shape() != Shape{masks.height, masks.width}) {
    throw ShapeError("decode: measurement " + shape_string(y.values.shape()) + " does not match masks " +
                     std::to_string(masks.height) + "x" + std::to_string(masks.width));
  }
  const Measurement<double> analog = y.quantized ? dequantize(y) : y;
  VideoCube<double> out = net.forward(ck.params, analog.values.cast<float>(), masks).cast<double>();
  for (auto& v : out.values()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

Decoder network_decoder(const Checkpoint& ck) {
  return [ck](const Measurement<double>& y, const MaskSet& m) { return decode(y, m, ck); };
}

Decoder oracle_decoder(const VideoCube<double>& truth) {
  return [truth](const Measurement<double>&, const MaskSet&) { return truth; };
}

EvalTable evaluate(const std::vector<EvalClip>& clips, const MaskSet& masks, const Decoder& decoder,
                   const std::string& method) {
  if (clips.empty()) throw std::invalid_argument("evaluate: no clips");
  for (const auto& c : clips) {
    if (c.video.shape() != Shape{masks.frames, masks.height, masks.width}) {
      throw ShapeError("evaluate: clip '" + c.name + "' is " + shape_string(c.video.shape()) + ", masks are " +
                       std::to_string(masks.frames) + "x" + std::to_string(masks.height) + "x" +
                       std::to_string(masks.width));
    }
  }
  EvalTable table;
  table.method = method;
  EvalRow avg{"average"};
  for (const auto& c : clips) {
    const Measurement<double> y = encode(c.video, masks);
    const auto t0 = std::chrono::steady_clock::now();
    const VideoCube<double> est = decoder(y, masks);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    EvalRow r{c.name, psnr(est, c.video), ssim(est, c.video), secs};
    avg.psnr += r.psnr;
    avg.ssim += r.ssim;
    avg.seconds += r.seconds;
    table.rows.push_back(r);
  }
  const double n = static_cast<double>(clips.size());
  avg.psnr /= n;
  avg.ssim /= n;
  avg.seconds /= n;
  table.rows.push_back(avg);
  return table;
}

std::string format_table(const EvalTable& t) {
  std::size_t width = 8;
  for (const auto& r : t.rows) width = std::max(width, r.name.size());
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s %9s %7s %10s   [%s]\n", static_cast<int>(width), "clip", "PSNR(dB)", "SSIM",
                "time(s)", t.method.c_str());
  out += buf;
  for (const auto& r : t.rows) {
    std::snprintf(buf, sizeof buf, "%-*s %9.2f %7.4f %10.4f\n", static_cast<int>(width), r.name.c_str(), r.psnr, r.ssim,
                  r.seconds);
    out += buf;
  }
  return out;
}

std::vector<DynrangeRow> dynrange_experiment(const VideoCube<double>& scene, const DynrangeConfig& cfg,
                                             const Decoder& rs_decoder, const Decoder& uss_decoder) {
  if (scene.rank() != 3 || scene.dim(0) != cfg.frames) {
    throw ShapeError("dynrange: scene " + shape_string(scene.shape()) + " does not have " + std::to_string(cfg.frames) +
                     " frames");
  }
  if (cfg.gains.empty()) throw std::invalid_argument("dynrange: no gains");
  for (std::size_t i = 0; i < cfg.gains.size(); ++i) {
    if (!(cfg.gains[i] > 0.0)) throw std::invalid_argument("dynrange: gains must be positive");
    if (i && cfg.gains[i] < cfg.gains[i - 1]) throw std::invalid_argument("dynrange: gains must be sorted ascending");
  }
  const std::size_t H = scene.dim(1), W = scene.dim(2);
  const MaskSet rs = gen_rs(cfg.frames, H, W, cfg.rs_density, cfg.seed);
  const MaskSet uss = gen_uss(cfg.frames, H, W, cfg.seed);
  const Measurement<double> yrs = encode(scene, rs), yuss = encode(scene, uss);

  std::vector<DynrangeRow> rows;
  for (double gain : cfg.gains) {
    QuantSpec q = cfg.quant;
    q.gain = gain;
    const auto qrs = quantize(yrs, q), quss = quantize(yuss, q);
    DynrangeRow r;
    r.gain = gain;
    r.rs_saturation = qrs.saturation_fraction;
    r.uss_saturation = quss.saturation_fraction;
    r.rs_psnr = psnr(rs_decoder(dequantize(qrs), rs), scene);
    r.uss_psnr = psnr(uss_decoder(dequantize(quss), uss), scene);
    rows.push_back(r);
  }
  return rows;
}

std::string format_dynrange(const std::vector<DynrangeRow>& rows) {
  std::string out = "    gain   RS sat  USS sat  RS PSNR  USS PSNR\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%8.3f %8.4f %8.4f %8.2f %9.2f\n", r.gain, r.rs_saturation, r.uss_saturation,
                  r.rs_psnr, r.uss_psnr);
    out += buf;
  }
  return out;
}

}  // namespace ussci
