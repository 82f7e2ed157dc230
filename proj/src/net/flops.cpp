#include "ussci/net/flops.hpp"

#include <stdexcept>

namespace ussci {
namespace {

std::uint64_t mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = 0;
  if (__builtin_mul_overflow(a, b, &r)) throw std::overflow_error("count_flops: 64-bit overflow");
  return r;
}

std::uint64_t plus(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = 0;
  if (__builtin_add_overflow(a, b, &r)) throw std::overflow_error("count_flops: 64-bit overflow");
  return r;
}

}  // namespace

std::uint64_t msa_flops(std::uint64_t s, std::uint64_t c) {
  return plus(mul(4, mul(s, mul(c, c))), mul(2, mul(mul(s, s), c)));
}

FlopReport count_flops(const FlopInputs& in) {
  if (in.channels == 0 || in.channels % 3 != 0) throw std::invalid_argument("count_flops: C must be a multiple of 3");
  if (!in.height || !in.width || !in.frames) throw std::invalid_argument("count_flops: extents must be positive");
  const std::uint64_t c3 = in.channels / 3;
  const std::uint64_t hwt = mul(mul(in.height, in.width), in.frames);
  // 4/9 HWTC^2 = 4 HWT (C/3)^2 and 2/3 X HWTC = 2 X HWT (C/3)
  const std::uint64_t proj = mul(4, mul(hwt, mul(c3, c3)));
  FlopReport r;
  r.lba = plus(proj, mul(2, mul(mul(mul(in.window, in.window), hwt), c3)));
  r.gsa = plus(proj, mul(2, mul(mul(mul(in.grid, in.grid), hwt), c3)));
  r.gta = plus(proj, mul(2, mul(mul(hwt, in.frames), c3)));
  r.bstf = plus(plus(r.lba, r.gsa), r.gta);
  r.global = plus(mul(4, mul(hwt, mul(in.channels, in.channels))), mul(2, mul(mul(hwt, hwt), in.channels)));
  return r;
}

FlopReport count_flops(const NetworkConfig& cfg) {
  return count_flops(FlopInputs{cfg.height, cfg.width, cfg.frames, cfg.channels, cfg.grid, cfg.window});
}

}  // namespace ussci
