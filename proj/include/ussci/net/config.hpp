#pragma once

#include <cstddef>
#include <map>
#include <string>

namespace ussci {

struct BranchEnable {
  bool lba = true;
  bool gsa = true;
  bool gta = true;

  std::size_t count() const { return std::size_t{lba} + std::size_t{gsa} + std::size_t{gta}; }
  friend bool operator==(const BranchEnable&, const BranchEnable&) = default;
};

/// Network hyperparameters. Attention runs on the half-resolution feature map,
/// so window and grid sizes divide H/2 and W/2.
struct NetworkConfig {
  std::size_t channels = 24;      // C, split evenly across the enabled branches
  std::size_t blocks = 2;
  std::size_t window = 4;         // S: LBA window side in feature pixels
  std::size_t grid = 4;           // G: GSA grid count per spatial axis
  std::size_t heads = 2;          // per branch
  double leaky_slope = 0.1;
  BranchEnable branches{};
  std::size_t frames = 8;         // T
  std::size_t height = 32;        // H of the input video
  std::size_t width = 32;         // W of the input video
  std::size_t stem_channels = 0;  // width of the inner convolutions; 0 means C/2

  void validate() const;

  std::size_t branch_channels() const { return channels / branches.count(); }
  std::size_t stem() const { return stem_channels ? stem_channels : channels / 2; }
  std::size_t feature_height() const { return height / 2; }
  std::size_t feature_width() const { return width / 2; }

  std::map<std::string, std::string> to_kv() const;
  static NetworkConfig from_kv(const std::map<std::string, std::string>& kv);

  /// T=8, 32x32, C=24, S=G=4, 2 blocks.
  static NetworkConfig toy();
  /// T=2, 8x8, C=6, 1 head, 1 block; used by the end-to-end gradient checks.
  static NetworkConfig tiny();
  /// C=192, S=G=7, 4 blocks, 4 heads, T=8 at 224x224 (the nearest extent where
  /// the half-resolution map divides by 7).
  static NetworkConfig full_size();

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

}  // namespace ussci
