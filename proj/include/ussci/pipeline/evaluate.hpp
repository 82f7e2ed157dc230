#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ussci/masking.hpp"
#include "ussci/net/checkpoint.hpp"
#include "ussci/recon/gaptv.hpp"
#include "ussci/recon/metrics.hpp"
#include "ussci/sensing.hpp"

namespace ussci {

/// Reconstructs a [T,H,W] cube from a measurement and its masks.
using Decoder = std::function<VideoCube<double>(const Measurement<double>&, const MaskSet&)>;

Decoder gap_tv_decoder(const GapTvConfig& cfg = {});
/// Loads nothing itself; checks the config against the masks on every call.
Decoder network_decoder(const Checkpoint& ck);
/// Passes the truth through; used to check the harness itself.
Decoder oracle_decoder(const VideoCube<double>& truth);

/// Loads parameters, runs the network on the (dequantised) measurement and
/// clips to [0,1]. Extent mismatches are rejected before any compute.
VideoCube<double> decode(const Measurement<double>& y, const MaskSet& masks, const Checkpoint& ck);

struct EvalClip {
  std::string name;
  VideoCube<double> video;  // exactly T frames at the mask extents
};

struct EvalRow {
  std::string name;
  double psnr = 0.0;
  double ssim = 0.0;
  double seconds = 0.0;  // decode wall-clock per measurement
};

struct EvalTable {
  std::string method;
  std::vector<EvalRow> rows;  // one per clip, then the average row named "average"
};

/// Encodes each clip noiselessly with `masks`, decodes and scores it.
EvalTable evaluate(const std::vector<EvalClip>& clips, const MaskSet& masks, const Decoder& decoder,
                   const std::string& method);

std::string format_table(const EvalTable& table);

struct DynrangeConfig {
  std::vector<double> gains;  // ascending
  std::size_t frames = 10;
  QuantSpec quant{};          // gain field is overwritten per row
  double rs_density = 0.5;
  std::uint64_t seed = 0;
};

struct DynrangeRow {
  double gain = 0.0;
  double rs_saturation = 0.0;
  double uss_saturation = 0.0;
  double rs_psnr = 0.0;
  double uss_psnr = 0.0;
};

/// For each gain: encode the scene with RS and USS masks (seeded), quantise,
/// dequantise, decode with the scheme's decoder and score against the scene.
std::vector<DynrangeRow> dynrange_experiment(const VideoCube<double>& scene, const DynrangeConfig& cfg,
                                             const Decoder& rs_decoder, const Decoder& uss_decoder);

std::string format_dynrange(const std::vector<DynrangeRow>& rows);

}  // namespace ussci
