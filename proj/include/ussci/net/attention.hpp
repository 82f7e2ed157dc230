#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "ussci/core/tensor.hpp"

namespace ussci {

/// Projection weights for multi-head self-attention. Q = X wq, K = X wk, V = X wv
/// split evenly across heads; head outputs are concatenated and mapped by wo, bo.
template <typename T>
struct AttentionParams {
  Tensor<T> wq;  // [d, dqk]
  Tensor<T> wk;  // [d, dqk]
  Tensor<T> wv;  // [d, dv]
  Tensor<T> wo;  // [dv, dout]
  Tensor<T> bo;  // [dout]
  std::size_t heads = 1;
};

template <typename T>
struct AttentionCache {
  Tensor<T> x;      // [L*J, d]
  Tensor<T> q, k, v;
  Tensor<T> probs;  // [L, heads, J, J]
  Tensor<T> o;      // [L*J, dv], concatenated heads
  std::size_t groups = 0;
  std::size_t tokens = 0;
};

template <typename T>
struct AttentionGrads {
  Tensor<T> tokens;
  Tensor<T> wq, wk, wv, wo, bo;
};

/// Multiply-accumulates performed by attention() forward calls while a
/// ScopedMacCount is alive: projections counts the Q, K, V and output matmuls,
/// products the Q K^T scores and the P V weighted sums.
struct MacCount {
  std::uint64_t projections = 0;
  std::uint64_t products = 0;
  std::uint64_t total() const { return projections + products; }
};

class ScopedMacCount {
 public:
  ScopedMacCount();
  ~ScopedMacCount();
  ScopedMacCount(const ScopedMacCount&) = delete;
  ScopedMacCount& operator=(const ScopedMacCount&) = delete;

  MacCount counts() const { return {projections_.load(), products_.load()}; }
  static void record(std::uint64_t projections, std::uint64_t products);

 private:
  std::atomic<std::uint64_t> projections_{0};
  std::atomic<std::uint64_t> products_{0};
  ScopedMacCount* previous_ = nullptr;
};

/// softmax(Q K^T / sqrt(d_head)) V independently per group of J tokens.
/// `tokens` is [L, J, d]; returns [L, J, dout].
template <typename T>
Tensor<T> attention(const Tensor<T>& tokens, const AttentionParams<T>& params, AttentionCache<T>* cache = nullptr);

template <typename T>
AttentionGrads<T> attention_backward(const AttentionParams<T>& params, const AttentionCache<T>& cache,
                                     const Tensor<T>& upstream);

/// Maps token (group l, slot j) to a site t*H*W + h*W + w of a [T,H,W,C] map.
struct TokenLayout {
  std::size_t groups = 0;  // L
  std::size_t tokens = 0;  // J
  std::vector<std::size_t> source;
};

/// S x S non-overlapping windows per frame: L = T*H*W/S^2, J = S^2.
TokenLayout window_layout(std::size_t frames, std::size_t height, std::size_t width, std::size_t window);
/// G^2 dilated grids spanning every frame: grid (h mod G, w mod G), J = T*H*W/G^2.
TokenLayout grid_layout(std::size_t frames, std::size_t height, std::size_t width, std::size_t grid);
/// One group per spatial site holding its T temporal tokens: L = H*W, J = T.
TokenLayout temporal_layout(std::size_t frames, std::size_t height, std::size_t width);

template <typename T>
Tensor<T> gather_tokens(const Tensor<T>& feature, const TokenLayout& layout);
template <typename T>
Tensor<T> scatter_tokens(const Tensor<T>& tokens, const TokenLayout& layout, const Shape& feature_shape);

template <typename T>
Tensor<T> window_partition(const Tensor<T>& feature, std::size_t window) {
  return gather_tokens(feature, window_layout(feature.dim(0), feature.dim(1), feature.dim(2), window));
}
template <typename T>
Tensor<T> window_unpartition(const Tensor<T>& tokens, std::size_t window, const Shape& feature_shape) {
  return scatter_tokens(tokens, window_layout(feature_shape[0], feature_shape[1], feature_shape[2], window),
                        feature_shape);
}
template <typename T>
Tensor<T> grid_partition(const Tensor<T>& feature, std::size_t grid) {
  return gather_tokens(feature, grid_layout(feature.dim(0), feature.dim(1), feature.dim(2), grid));
}
template <typename T>
Tensor<T> grid_unpartition(const Tensor<T>& tokens, std::size_t grid, const Shape& feature_shape) {
  return scatter_tokens(tokens, grid_layout(feature_shape[0], feature_shape[1], feature_shape[2], grid),
                        feature_shape);
}

}  // namespace ussci
