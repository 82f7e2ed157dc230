#pragma once

#include <cstdint>
#include <vector>

#include "ussci/core/gradcheck.hpp"
#include "ussci/masking.hpp"
#include "ussci/net/config.hpp"
#include "ussci/net/layers.hpp"
#include "ussci/net/params.hpp"
#include "ussci/sensing.hpp"

namespace ussci {

/// Coarse estimate -> feature extraction -> BSTFormer blocks -> reconstruction head.
template <typename T>
class BstNetwork {
 public:
  explicit BstNetwork(NetworkConfig cfg);

  const NetworkConfig& config() const { return cfg_; }

  ParamMap<T> init_params(std::uint64_t seed) const;

  /// Full decode path from a measurement [H,W] and its masks; returns [T,H,W].
  VideoCube<T> forward(const ParamMap<T>& p, const Tensor<T>& measurement, const MaskSet& masks);
  /// Network body on an already formed coarse estimate [T,H,W].
  VideoCube<T> forward_from_estimate(const ParamMap<T>& p, const VideoCube<T>& estimate);

  /// Accumulates parameter gradients into `grads`; returns d(loss)/d(estimate).
  VideoCube<T> backward(const ParamMap<T>& p, const VideoCube<T>& upstream, ParamMap<T>& grads);
  /// Chains backward through the coarse estimate to the measurement.
  Tensor<T> backward_to_measurement(const ParamMap<T>& p, const VideoCube<T>& upstream, ParamMap<T>& grads,
                                    const MaskSet& masks);

  void check_extents(const MaskSet& masks) const;

 private:
  NetworkConfig cfg_;
  FeatureExtractor<T> stem_;
  std::vector<BstBlock<T>> blocks_;
  ReconstructionHead<T> head_;
};

template <typename T>
VideoCube<T> network_forward(const Tensor<T>& measurement, const MaskSet& masks, const ParamMap<T>& params,
                             const NetworkConfig& cfg) {
  BstNetwork<T> net(cfg);
  return net.forward(params, measurement, masks);
}

/// Registers differentiable wrappers of the network pieces under "attention",
/// "lba", "gsa", "gta", "ffn", "block", "feature_extract", "reconstruct_head" and
/// "network". Inputs are [x, parameters in ParamMap order]; for "network" x is
/// the measurement and `masks` are held fixed.
template <typename T>
void register_network_ops(OpRegistry<T>& registry, const NetworkConfig& cfg, const MaskSet& masks);

/// A random evaluation point for a registered network op: input drawn N(0,1)
/// (uniform [0,1] for the measurement) and parameters from init_params with
/// N(0, param_jitter) added so zero-initialised tensors are exercised too.
std::vector<Tensor<double>> network_op_point(const std::string& op, const NetworkConfig& cfg, const MaskSet& masks,
                                             std::uint64_t seed, double param_jitter = 0.3);

}  // namespace ussci
