#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ussci/masking.hpp"
#include "ussci/net/checkpoint.hpp"
#include "ussci/net/network.hpp"
#include "ussci/pipeline/augment.hpp"

namespace ussci {

/// (1 / (T H W)) sum (pred - truth)^2.
template <typename T>
double mse_loss(const Tensor<T>& pred, const Tensor<T>& truth);
/// d mse / d pred = 2 (pred - truth) / (T H W).
template <typename T>
Tensor<T> mse_loss_grad(const Tensor<T>& pred, const Tensor<T>& truth);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  /// One bias-corrected update p -= lr * mhat / (sqrt(vhat) + eps) for every
  /// parameter that has a gradient.
  void step(ParamMap<T>& params, const ParamMap<T>& grads, double lr);
  std::uint64_t steps() const { return t_; }

 private:
  AdamConfig cfg_;
  std::uint64_t t_ = 0;
  ParamMap<T> m_, v_;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t decay_every = 0;  // steps between decays; 0 keeps the rate constant
  double decay_factor = 0.5;
  std::size_t steps = 500;
  std::size_t batch = 2;
  std::uint64_t seed = 0;
  bool augment = false;
  AugmentConfig augmentation{};  // crop extents are overwritten by the network's H, W
  double noise_sigma = 0.0;      // measurement noise during training
  AdamConfig adam{};
  std::size_t checkpoint_every = 0;  // write `checkpoint_path` every N steps (0: only at the end)
  std::filesystem::path checkpoint_path;

  void validate() const;
  double rate_at(std::size_t step) const;
  std::map<std::string, std::string> to_kv() const;
  static TrainConfig from_kv(const std::map<std::string, std::string>& kv);
};

struct TrainResult {
  Checkpoint checkpoint;   // the last finite parameters
  bool diverged = false;
  std::string message;
  double seconds = 0.0;
};

/// Called after every step with (step index, batch loss before the update).
using TrainObserver = std::function<void(std::size_t, double)>;

/// Each step draws `batch` samples: a clip (round robin from a seeded start),
/// a random T-frame window, optional augmentation, then encode with the fixed
/// masks, forward, MSE, backward and one Adam update on the batch mean.
/// loss_history[k] is the batch loss at step k (k < steps) and
/// loss_history[steps] is the loss of the final parameters on the same
/// samples as step 0. A non-finite loss or gradient aborts with the last good
/// parameters. `init` resumes from existing parameters.
TrainResult train(const std::vector<VideoCube<double>>& clips, const MaskSet& masks, const NetworkConfig& net,
                  const TrainConfig& cfg, const std::optional<Checkpoint>& init = std::nullopt,
                  const TrainObserver& observer = {});

}  // namespace ussci
