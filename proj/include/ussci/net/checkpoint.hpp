#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ussci/net/config.hpp"
#include "ussci/net/params.hpp"

namespace ussci {

inline constexpr std::uint32_t kCheckpointFormat = 1;

struct Checkpoint {
  NetworkConfig config;
  ParamMap<float> params;
  std::uint64_t step = 0;
  std::vector<double> loss_history;
};

// File layout:
//   "SCKP", u32 format, u64 manifest length (little-endian)
//   manifest text: "key=value" config lines, "step=N", "loss=v0,v1,...",
//                  then one "param <name> <e0,e1,...>" line per tensor
//   one STNS record per parameter, in manifest order
std::vector<std::byte> encode_checkpoint(const Checkpoint& ck);
Checkpoint decode_checkpoint(std::span<const std::byte> bytes);

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
/// Rejects unknown formats, malformed manifests, and parameter sets that do not
/// match the network the stored config describes.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ussci
