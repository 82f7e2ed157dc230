#pragma once

#include <cstdint>

#include "ussci/net/config.hpp"

namespace ussci {

/// Closed-form attention complexity. One unit is one multiply-accumulate of
/// the four C x C projections (Q, K, V, output) or of the two S x S x C
/// products (Q K^T and P V), i.e. Omega(MSA) = 4 S C^2 + 2 S^2 C for a
/// sequence of length S.
struct FlopInputs {
  std::uint64_t height = 0;
  std::uint64_t width = 0;
  std::uint64_t frames = 0;
  std::uint64_t channels = 0;  // C, split in thirds across branches
  std::uint64_t grid = 0;      // G in the GSA closed form
  std::uint64_t window = 0;    // S: the LBA sequence length is S^2
};

struct FlopReport {
  std::uint64_t lba = 0;
  std::uint64_t gsa = 0;
  std::uint64_t gta = 0;
  std::uint64_t bstf = 0;    // lba + gsa + gta
  std::uint64_t global = 0;  // dense global attention over all H*W*T tokens
};

std::uint64_t msa_flops(std::uint64_t sequence, std::uint64_t channels);

/// LBA  = 4/9 HWTC^2 + 2/3 S^2 HWTC
/// GSA  = 4/9 HWTC^2 + 2/3 G^2 HWTC
/// GTA  = 4/9 HWTC^2 + 2/3 HWT^2 C
/// G-MSA = 4 HWTC^2 + 2 (HWT)^2 C
/// Exact in integers; C must be a multiple of 3. Throws on overflow.
FlopReport count_flops(const FlopInputs& in);

/// Evaluates the closed forms at the config's input extents H, W, T.
FlopReport count_flops(const NetworkConfig& cfg);

}  // namespace ussci
