#pragma once

// Shared helpers for the unit tests: seeded generators and small oracles.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>

#include <unistd.h>

#include "ussci/core/random.hpp"
#include "ussci/core/tensor.hpp"

namespace ussci::testing {

/// Seeded value source for hand-rolled property generators.
class Gen {
 public:
  explicit Gen(std::uint64_t seed, std::uint64_t stream = 99) : rng_(seed, stream) {}
  double uniform() { return rng_.uniform(i_++); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() { return rng_.normal(i_++); }
  /// Integer in [lo, hi].
  std::size_t range(std::size_t lo, std::size_t hi) { return lo + rng_.below(i_++, hi - lo + 1); }
  bool coin() { return uniform() < 0.5; }

  template <typename T>
  Tensor<T> normal_tensor(Shape s, double scale = 1.0) {
    Tensor<T> t(std::move(s));
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = static_cast<T>(scale * normal());
    return t;
  }
  template <typename T>
  Tensor<T> uniform_tensor(Shape s, double lo = 0.0, double hi = 1.0) {
    Tensor<T> t(std::move(s));
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = static_cast<T>(uniform(lo, hi));
    return t;
  }

 private:
  CounterRng rng_;
  std::uint64_t i_ = 0;
};

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("ussci-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

template <typename T>
double max_abs(const Tensor<T>& a, const Tensor<T>& b) {
  return static_cast<double>(max_abs_diff(a, b));
}

}  // namespace ussci::testing

#include <vector>

#include "ussci/core/gradcheck.hpp"

namespace ussci::testing {

/// Evaluation point for a core registry op; the parameters are scaled so that
/// activations stay O(1).
inline std::vector<Tensor<double>> core_op_point(const std::string& op, std::uint64_t seed) {
  Gen g(seed, 7);
  if (op == "conv3d") return {g.normal_tensor<double>({2, 4, 4, 2}), g.normal_tensor<double>({3, 3, 3, 2, 3}, 0.3),
                              g.normal_tensor<double>({3})};
  if (op == "transposed_conv3d") return {g.normal_tensor<double>({2, 2, 2, 3}),
                                         g.normal_tensor<double>({1, 3, 3, 2, 3}, 0.3), g.normal_tensor<double>({2})};
  if (op == "leaky_relu") return {g.normal_tensor<double>({3, 4})};
  if (op == "softmax") return {g.normal_tensor<double>({3, 5})};
  if (op == "linear") return {g.normal_tensor<double>({3, 4}), g.normal_tensor<double>({4, 5}),
                              g.normal_tensor<double>({5})};
  if (op == "layer_norm") return {g.normal_tensor<double>({4, 6}), g.normal_tensor<double>({6}),
                                  g.normal_tensor<double>({6})};
  return {g.normal_tensor<double>({3, 3})};
}

}  // namespace ussci::testing
