#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ussci/core/ops.hpp"
#include "ussci/net/attention.hpp"
#include "ussci/net/config.hpp"
#include "ussci/net/params.hpp"

namespace ussci {

// Layers keep the activations of their last forward call; backward must follow
// the matching forward. Parameters live in a ParamMap under "<name>.<field>".

template <typename T>
class ConvLayer {
 public:
  ConvLayer() = default;
  ConvLayer(std::string name, ConvSpec spec, bool transposed = false);

  /// Uniform(+-1/sqrt(fan_in)) weights and zero bias, or all zeros when `zero`.
  void init(ParamMap<T>& p, std::uint64_t seed, bool zero = false) const;
  Tensor<T> forward(const ParamMap<T>& p, const Tensor<T>& x);
  Tensor<T> backward(const ParamMap<T>& p, const Tensor<T>& dy, ParamMap<T>& grads, bool need_input = true);

  const std::string& name() const { return name_; }
  const ConvSpec& spec() const { return spec_; }

 private:
  std::string name_;
  ConvSpec spec_;
  bool transposed_ = false;
  Tensor<T> input_;
};

/// X + W1(leaky(W2(X))), W2 a 3x3x3 and W1 a 1x1x1 convolution.
template <typename T>
class FeedForward {
 public:
  FeedForward() = default;
  FeedForward(std::string name, std::size_t channels, double slope);

  void init(ParamMap<T>& p, std::uint64_t seed) const;
  Tensor<T> forward(const ParamMap<T>& p, const Tensor<T>& x);
  Tensor<T> backward(const ParamMap<T>& p, const Tensor<T>& dy, ParamMap<T>& grads);

 private:
  ConvLayer<T> w2_, w1_;
  T slope_ = T(0.1);
  Tensor<T> hidden_;
};

enum class BranchKind { Local, GlobalSparse, GlobalTemporal };

const char* branch_tag(BranchKind k);

/// One attention branch: pre = x + Attn(Norm(partition(x))), out = FFN(pre).
template <typename T>
class AttentionBranch {
 public:
  struct Output {
    Tensor<T> pre;  // before the FFN; feeds the next branch's skip connection
    Tensor<T> out;
  };

  AttentionBranch() = default;
  AttentionBranch(std::string name, BranchKind kind, std::size_t channels, std::size_t heads,
                  std::size_t partition, double slope);

  void init(ParamMap<T>& p, std::uint64_t seed) const;
  Output forward(const ParamMap<T>& p, const Tensor<T>& x);
  /// `dpre` is the gradient reaching `pre` from outside the branch; may be empty.
  Tensor<T> backward(const ParamMap<T>& p, const Tensor<T>& dout, const Tensor<T>& dpre, ParamMap<T>& grads);

  BranchKind kind() const { return kind_; }

 private:
  TokenLayout layout_for(const Shape& s) const;
  AttentionParams<T> attention_params(const ParamMap<T>& p) const;

  std::string name_;
  BranchKind kind_ = BranchKind::Local;
  std::size_t channels_ = 0;
  std::size_t heads_ = 1;
  std::size_t partition_ = 1;
  FeedForward<T> ffn_;
  TokenLayout layout_;
  Shape shape_;
  Tensor<T> tokens_;
  AttentionCache<T> cache_;
};

/// Channel split across enabled branches chained by skip connections (each
/// branch input adds the previous branch's pre-FFN output), concatenation,
/// a 1x1x1 fusion convolution and the block residual.
template <typename T>
class BstBlock {
 public:
  BstBlock() = default;
  BstBlock(std::string name, const NetworkConfig& cfg);

  void init(ParamMap<T>& p, std::uint64_t seed) const;
  Tensor<T> forward(const ParamMap<T>& p, const Tensor<T>& x);
  Tensor<T> backward(const ParamMap<T>& p, const Tensor<T>& dy, ParamMap<T>& grads);

 private:
  std::string name_;
  std::size_t width_ = 0;
  std::vector<AttentionBranch<T>> branches_;
  ConvLayer<T> fuse_;
};

/// 3x7x7, 3x3x3, 3x3x3 (stride 1x2x2) convolutions, each followed by LeakyReLU.
/// Maps [T,H,W,1] to [T,H/2,W/2,C].
template <typename T>
class FeatureExtractor {
 public:
  FeatureExtractor() = default;
  FeatureExtractor(std::string name, const NetworkConfig& cfg);

  void init(ParamMap<T>& p, std::uint64_t seed) const;
  Tensor<T> forward(const ParamMap<T>& p, const Tensor<T>& x);
  Tensor<T> backward(const ParamMap<T>& p, const Tensor<T>& dy, ParamMap<T>& grads);

 private:
  std::vector<ConvLayer<T>> convs_;
  std::vector<Tensor<T>> pre_act_;
  T slope_ = T(0.1);
};

/// Transposed 1x3x3 (stride 1x2x2) back to full resolution, then 1x1x1 and
/// 3x3x3 convolutions down to one channel. Maps [T,H/2,W/2,C] to [T,H,W,1].
template <typename T>
class ReconstructionHead {
 public:
  ReconstructionHead() = default;
  ReconstructionHead(std::string name, const NetworkConfig& cfg);

  void init(ParamMap<T>& p, std::uint64_t seed) const;
  Tensor<T> forward(const ParamMap<T>& p, const Tensor<T>& x);
  Tensor<T> backward(const ParamMap<T>& p, const Tensor<T>& dy, ParamMap<T>& grads);

 private:
  ConvLayer<T> up_, mix_, out_;
  Tensor<T> up_pre_, mix_pre_;
  T slope_ = T(0.1);
};

template <typename T>
Tensor<T> slice_channels(const Tensor<T>& x, std::size_t start, std::size_t count);
template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts);

}  // namespace ussci
