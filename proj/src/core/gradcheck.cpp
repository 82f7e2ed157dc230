#include "ussci/core/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ussci/core/random.hpp"

namespace ussci {

template <typename T>
void OpRegistry<T>::add(DifferentiableOp<T> op) {
  std::string key = op.name;
  ops_.insert_or_assign(std::move(key), std::move(op));
}

template <typename T>
bool OpRegistry<T>::contains(std::string_view name) const {
  return ops_.find(name) != ops_.end();
}

template <typename T>
const DifferentiableOp<T>& OpRegistry<T>::find(std::string_view name) const {
  auto it = ops_.find(name);
  if (it == ops_.end()) throw std::invalid_argument("unregistered op '" + std::string(name) + "'");
  return it->second;
}

template <typename T>
std::vector<std::string> OpRegistry<T>::names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : ops_) out.push_back(k);
  return out;
}

namespace {

template <typename T>
void require_inputs(std::span<const Tensor<T>> in, std::size_t n, const std::string& op) {
  if (in.size() != n) {
    throw std::invalid_argument(op + ": expected " + std::to_string(n) + " inputs, got " +
                                std::to_string(in.size()));
  }
}

template <typename T>
ConvSpec spec_from_weight(const Tensor<T>& w, Extent3 stride, Extent3 padding, Extent3 output_padding,
                          bool transposed) {
  if (w.rank() != 5) throw ShapeError("conv weight must be rank 5, got " + shape_string(w.shape()));
  ConvSpec s;
  s.kernel = {w.dim(0), w.dim(1), w.dim(2)};
  s.stride = stride;
  s.padding = padding;
  s.output_padding = output_padding;
  s.in_channels = transposed ? w.dim(4) : w.dim(3);
  s.out_channels = transposed ? w.dim(3) : w.dim(4);
  return s;
}

template <typename T>
OpRegistry<T> make_default_registry() {
  OpRegistry<T> r;
  r.add(make_conv3d_op<T>({1, 2, 2}, {1, 1, 1}));
  r.add(make_transposed_conv3d_op<T>({1, 2, 2}, {0, 1, 1}, {0, 1, 1}));
  r.add(make_leaky_relu_op<T>(T(0.1)));
  r.add(make_softmax_op<T>(1));
  r.add(make_linear_op<T>(true));
  r.add(make_layer_norm_op<T>());
  r.add(make_identity_op<T>());
  return r;
}

}  // namespace

template <typename T>
OpRegistry<T>& op_registry() {
  static OpRegistry<T> registry = make_default_registry<T>();
  return registry;
}

template <typename T>
std::vector<Tensor<T>> backward(std::string_view op, std::span<const Tensor<T>> inputs, const Tensor<T>& upstream) {
  return op_registry<T>().find(op).backward(inputs, upstream);
}

template <typename T>
DifferentiableOp<T> make_conv3d_op(Extent3 stride, Extent3 padding) {
  DifferentiableOp<T> op;
  op.name = "conv3d";
  op.forward = [=](std::span<const Tensor<T>> in) {
    require_inputs(in, 3, "conv3d");
    return conv3d(in[0], spec_from_weight(in[1], stride, padding, {0, 0, 0}, false), in[1], in[2]);
  };
  op.backward = [=](std::span<const Tensor<T>> in, const Tensor<T>& up) {
    require_inputs(in, 3, "conv3d");
    auto g = conv3d_backward(in[0], spec_from_weight(in[1], stride, padding, {0, 0, 0}, false), in[1], up);
    return std::vector<Tensor<T>>{std::move(g.input), std::move(g.weight), std::move(g.bias)};
  };
  return op;
}

template <typename T>
DifferentiableOp<T> make_transposed_conv3d_op(Extent3 stride, Extent3 padding, Extent3 output_padding) {
  DifferentiableOp<T> op;
  op.name = "transposed_conv3d";
  op.forward = [=](std::span<const Tensor<T>> in) {
    require_inputs(in, 3, "transposed_conv3d");
    return transposed_conv3d(in[0], spec_from_weight(in[1], stride, padding, output_padding, true), in[1], in[2]);
  };
  op.backward = [=](std::span<const Tensor<T>> in, const Tensor<T>& up) {
    require_inputs(in, 3, "transposed_conv3d");
    auto g = transposed_conv3d_backward(in[0], spec_from_weight(in[1], stride, padding, output_padding, true),
                                        in[1], up);
    return std::vector<Tensor<T>>{std::move(g.input), std::move(g.weight), std::move(g.bias)};
  };
  return op;
}

template <typename T>
DifferentiableOp<T> make_leaky_relu_op(T slope) {
  DifferentiableOp<T> op;
  op.name = "leaky_relu";
  op.forward = [=](std::span<const Tensor<T>> in) {
    require_inputs(in, 1, "leaky_relu");
    return leaky_relu(in[0], slope);
  };
  op.backward = [=](std::span<const Tensor<T>> in, const Tensor<T>& up) {
    require_inputs(in, 1, "leaky_relu");
    return std::vector<Tensor<T>>{leaky_relu_backward(in[0], slope, up)};
  };
  return op;
}

template <typename T>
DifferentiableOp<T> make_softmax_op(std::size_t axis) {
  DifferentiableOp<T> op;
  op.name = "softmax";
  op.forward = [=](std::span<const Tensor<T>> in) {
    require_inputs(in, 1, "softmax");
    return softmax(in[0], axis);
  };
  op.backward = [=](std::span<const Tensor<T>> in, const Tensor<T>& up) {
    require_inputs(in, 1, "softmax");
    return std::vector<Tensor<T>>{softmax_backward(softmax(in[0], axis), axis, up)};
  };
  return op;
}

template <typename T>
DifferentiableOp<T> make_linear_op(bool with_bias) {
  DifferentiableOp<T> op;
  op.name = "linear";
  const std::size_t n = with_bias ? 3 : 2;
  op.forward = [=](std::span<const Tensor<T>> in) {
    require_inputs(in, n, "linear");
    return linear(in[0], in[1], with_bias ? &in[2] : nullptr);
  };
  op.backward = [=](std::span<const Tensor<T>> in, const Tensor<T>& up) {
    require_inputs(in, n, "linear");
    auto g = linear_backward(in[0], in[1], up, with_bias);
    std::vector<Tensor<T>> out{std::move(g.input), std::move(g.weight)};
    if (with_bias) out.push_back(std::move(g.bias));
    return out;
  };
  return op;
}

template <typename T>
DifferentiableOp<T> make_layer_norm_op() {
  DifferentiableOp<T> op;
  op.name = "layer_norm";
  op.forward = [](std::span<const Tensor<T>> in) {
    require_inputs(in, 3, "layer_norm");
    return layer_norm(in[0], in[1], in[2]);
  };
  op.backward = [](std::span<const Tensor<T>> in, const Tensor<T>& up) {
    require_inputs(in, 3, "layer_norm");
    auto g = layer_norm_backward(in[0], in[1], up);
    return std::vector<Tensor<T>>{std::move(g.input), std::move(g.gamma), std::move(g.beta)};
  };
  return op;
}

template <typename T>
DifferentiableOp<T> make_identity_op() {
  DifferentiableOp<T> op;
  op.name = "identity";
  op.forward = [](std::span<const Tensor<T>> in) {
    require_inputs(in, 1, "identity");
    return in[0];
  };
  op.backward = [](std::span<const Tensor<T>>, const Tensor<T>& up) { return std::vector<Tensor<T>>{up}; };
  return op;
}

namespace {

Tensor<double> random_upstream(const Shape& shape, std::uint64_t seed) {
  Tensor<double> r(shape);
  CounterRng rng(seed, 0x5eed);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = rng.normal(i);
  return r;
}

std::vector<std::size_t> pick_coords(std::size_t n, std::size_t max, std::uint64_t seed, std::size_t input) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  if (max == 0 || max >= n) return idx;
  // Partial Fisher-Yates driven by the counter RNG.
  CounterRng rng(seed, 0xc0de + input);
  for (std::size_t i = 0; i < max; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(i, n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(max);
  std::sort(idx.begin(), idx.end());
  return idx;
}

template <typename AnalyticFn>
GradCheckReport run_check(const std::string& name, const DifferentiableOp<double>& numeric_op,
                          std::span<const Tensor<double>> point, const GradCheckOptions& opt,
                          AnalyticFn&& analytic_fn) {
  if (opt.epsilon < 1e-7 || opt.epsilon > 1e-3) {
    throw std::invalid_argument("grad_check: epsilon must lie in [1e-7, 1e-3]");
  }
  GradCheckReport rep;
  rep.op = name;
  rep.tolerance = opt.tolerance;
  for (std::size_t i = 0; i < point.size(); ++i) {
    if (!point[i].all_finite()) {
      rep.failure = "non-finite value in input " + std::to_string(i);
      rep.max_rel_error = INFINITY;
      return rep;
    }
  }

  try {
    const Tensor<double> y0 = numeric_op.forward(point);
    const Tensor<double> upstream = random_upstream(y0.shape(), opt.seed);
    const std::vector<Tensor<double>> analytic = analytic_fn(upstream);
    if (analytic.size() != point.size()) {
      throw std::logic_error("backward returned " + std::to_string(analytic.size()) + " gradients for " +
                             std::to_string(point.size()) + " inputs");
    }

    double peak = 0.0;
    for (const auto& g : analytic) {
      for (double v : g.values()) peak = std::max(peak, std::abs(v));
    }
    const double floor = std::max(1e-8, opt.relative_floor * peak);

    std::vector<Tensor<double>> work(point.begin(), point.end());
    for (std::size_t in = 0; in < work.size(); ++in) {
      if (in < opt.skip_input.size() && opt.skip_input[in]) continue;
      if (analytic[in].shape() != work[in].shape()) {
        throw ShapeError("gradient " + std::to_string(in) + " has shape " + shape_string(analytic[in].shape()) +
                         ", input has " + shape_string(work[in].shape()));
      }
      for (std::size_t k : pick_coords(work[in].size(), opt.max_coords_per_input, opt.seed, in)) {
        const double orig = work[in][k];
        work[in][k] = orig + opt.epsilon;
        const double lp = dot(numeric_op.forward(work), upstream);
        work[in][k] = orig - opt.epsilon;
        const double lm = dot(numeric_op.forward(work), upstream);
        work[in][k] = orig;
        const double num = (lp - lm) / (2.0 * opt.epsilon);
        const double a = analytic[in][k];
        if (!std::isfinite(num) || !std::isfinite(a)) {
          rep.failure = "non-finite gradient at input " + std::to_string(in) + " index " + std::to_string(k);
          rep.max_rel_error = INFINITY;
          rep.worst_input = in;
          rep.worst_index = k;
          return rep;
        }
        const double rel = std::abs(a - num) / std::max({std::abs(a), std::abs(num), floor});
        ++rep.coords_checked;
        if (rel > rep.max_rel_error) {
          rep.max_rel_error = rel;
          rep.worst_input = in;
          rep.worst_index = k;
        }
      }
    }
  } catch (const NumericError& e) {
    rep.failure = e.what();
    rep.max_rel_error = INFINITY;
    return rep;
  }
  rep.pass = rep.max_rel_error <= rep.tolerance;
  return rep;
}

}  // namespace

GradCheckReport grad_check(const DifferentiableOp<double>& op, std::span<const Tensor<double>> point,
                           const GradCheckOptions& options) {
  return run_check(op.name, op, point, options,
                   [&](const Tensor<double>& up) { return op.backward(point, up); });
}

GradCheckReport grad_check_f32(const DifferentiableOp<float>& op32, const DifferentiableOp<double>& op64,
                               std::span<const Tensor<double>> point, const GradCheckOptions& options) {
  return run_check(op32.name + "[f32]", op64, point, options, [&](const Tensor<double>& up) {
    std::vector<Tensor<float>> p32;
    p32.reserve(point.size());
    for (const auto& t : point) p32.push_back(t.cast<float>());
    const auto g32 = op32.backward(p32, up.cast<float>());
    std::vector<Tensor<double>> out;
    out.reserve(g32.size());
    for (const auto& g : g32) out.push_back(g.cast<double>());
    return out;
  });
}

#define USSCI_INSTANTIATE(T)                                                                              \
  template class OpRegistry<T>;                                                                           \
  template OpRegistry<T>& op_registry<T>();                                                               \
  template std::vector<Tensor<T>> backward<T>(std::string_view, std::span<const Tensor<T>>, const Tensor<T>&); \
  template DifferentiableOp<T> make_conv3d_op<T>(Extent3, Extent3);                                       \
  template DifferentiableOp<T> make_transposed_conv3d_op<T>(Extent3, Extent3, Extent3);                   \
  template DifferentiableOp<T> make_leaky_relu_op<T>(T);                                                  \
  template DifferentiableOp<T> make_softmax_op<T>(std::size_t);                                           \
  template DifferentiableOp<T> make_linear_op<T>(bool);                                                   \
  template DifferentiableOp<T> make_layer_norm_op<T>();                                                   \
  template DifferentiableOp<T> make_identity_op<T>();

USSCI_INSTANTIATE(float)
USSCI_INSTANTIATE(double)

#undef USSCI_INSTANTIATE

}  // namespace ussci
