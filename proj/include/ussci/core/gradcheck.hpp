#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ussci/core/ops.hpp"
#include "ussci/core/tensor.hpp"

namespace ussci {

/// A forward map over a list of tensors (inputs and parameters alike) with its
/// analytic vector-Jacobian product.
template <typename T>
struct DifferentiableOp {
  using Inputs = std::span<const Tensor<T>>;

  std::string name;
  std::function<Tensor<T>(Inputs)> forward;
  std::function<std::vector<Tensor<T>>(Inputs, const Tensor<T>& upstream)> backward;
};

template <typename T>
class OpRegistry {
 public:
  void add(DifferentiableOp<T> op);
  bool contains(std::string_view name) const;
  /// Throws std::invalid_argument for an unregistered name.
  const DifferentiableOp<T>& find(std::string_view name) const;
  std::vector<std::string> names() const;

 private:
  std::map<std::string, DifferentiableOp<T>, std::less<>> ops_;
};

/// Process-wide registry, preloaded with the core ops below.
template <typename T>
OpRegistry<T>& op_registry();

/// Analytic gradients of `<op(inputs), upstream>` w.r.t. every input.
template <typename T>
std::vector<Tensor<T>> backward(std::string_view op, std::span<const Tensor<T>> inputs,
                                const Tensor<T>& upstream);

// Core op factories. Kernel extents and channel counts come from the weight
// tensor shape; only stride/padding are fixed per instance.
template <typename T>
DifferentiableOp<T> make_conv3d_op(Extent3 stride, Extent3 padding);
template <typename T>
DifferentiableOp<T> make_transposed_conv3d_op(Extent3 stride, Extent3 padding, Extent3 output_padding);
template <typename T>
DifferentiableOp<T> make_leaky_relu_op(T slope);
template <typename T>
DifferentiableOp<T> make_softmax_op(std::size_t axis);
template <typename T>
DifferentiableOp<T> make_linear_op(bool with_bias);
template <typename T>
DifferentiableOp<T> make_layer_norm_op();
template <typename T>
DifferentiableOp<T> make_identity_op();

struct GradCheckReport {
  std::string op;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  std::size_t coords_checked = 0;
  std::string failure;  // set when a non-finite value aborted the check
};

struct GradCheckOptions {
  double epsilon = 1e-6;
  double tolerance = 1e-6;
  std::uint64_t seed = 0;                   // drives the random upstream and coordinate sampling
  std::size_t max_coords_per_input = 0;     // 0 checks every coordinate
  std::vector<bool> skip_input;             // inputs to leave unchecked (e.g. integer-like data)
  double relative_floor = 1e-3;             // denominator floor as a fraction of the largest gradient
};

/// Central-difference check of the analytic backward in 64-bit. Relative error per
/// coordinate is |a - n| / max(|a|, |n|, floor) with floor = max(1e-8,
/// relative_floor * max|a| over all inputs), so coordinates far below the op's
/// gradient scale are judged against that scale rather than against
/// finite-difference round-off. The report holds the maximum.
GradCheckReport grad_check(const DifferentiableOp<double>& op, std::span<const Tensor<double>> point,
                           const GradCheckOptions& options = {});

/// Checks a 32-bit backward: analytic gradients from `op32` at the rounded point,
/// numeric reference from central differences of `op64`.
GradCheckReport grad_check_f32(const DifferentiableOp<float>& op32, const DifferentiableOp<double>& op64,
                               std::span<const Tensor<double>> point, const GradCheckOptions& options);

}  // namespace ussci
