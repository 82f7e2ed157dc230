#include "ussci/core/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ussci {
namespace {

using std::size_t;

struct Geometry {
  size_t ti, hi, wi, ci;  // convolution input side
  size_t to, ho, wo, co;  // convolution output side
};

std::string extent_string(const Extent3& e) {
  return std::to_string(e.t) + "x" + std::to_string(e.h) + "x" + std::to_string(e.w);
}

void require_rank4(const Shape& s, const char* what) {
  if (s.size() != 4) {
    throw ShapeError(std::string(what) + ": expected [T,H,W,C], got " + shape_string(s));
  }
}

size_t conv_out_extent(size_t in, size_t k, size_t s, size_t p, const char* axis) {
  if (in + 2 * p < k) {
    throw ShapeError(std::string("conv3d: padded ") + axis + " extent " + std::to_string(in + 2 * p) +
                     " smaller than kernel " + std::to_string(k));
  }
  return (in + 2 * p - k) / s + 1;
}

size_t tconv_out_extent(size_t in, size_t k, size_t s, size_t p, size_t op, const char* axis) {
  const size_t full = (in - 1) * s + k + op;
  if (full <= 2 * p) {
    throw ShapeError(std::string("transposed_conv3d: empty output along ") + axis);
  }
  return full - 2 * p;
}


template <typename T>
void require_weight_shape(const Tensor<T>& w, const Shape& expect, const char* op) {
  if (w.shape() != expect) {
    throw ShapeError(std::string(op) + ": weight shape " + shape_string(w.shape()) + ", expected " +
                     shape_string(expect));
  }
}

template <typename T>
void require_bias(const Tensor<T>& b, size_t n, const char* op) {
  if (b.shape() != Shape{n}) {
    throw ShapeError(std::string(op) + ": bias shape " + shape_string(b.shape()) + ", expected [" +
                     std::to_string(n) + "]");
  }
}

// y[o][co] = bias[co] + sum_{k,ci} x[o*s - p + k][ci] * w[k][ci][co]
template <typename T>
void forward_kernel(const T* x, const T* w, const T* bias, T* y, const Geometry& g, const ConvSpec& sp) {
  const auto& K = sp.kernel;
  const auto& S = sp.stride;
  const auto& P = sp.padding;
  const long long To = static_cast<long long>(g.to), Ho = static_cast<long long>(g.ho);
#pragma omp parallel for collapse(2) schedule(static)
  for (long long to = 0; to < To; ++to) {
    for (long long ho = 0; ho < Ho; ++ho) {
      for (size_t wo = 0; wo < g.wo; ++wo) {
        T* acc = y + ((static_cast<size_t>(to) * g.ho + static_cast<size_t>(ho)) * g.wo + wo) * g.co;
        for (size_t c = 0; c < g.co; ++c) acc[c] = bias ? bias[c] : T(0);
        for (size_t kt = 0; kt < K.t; ++kt) {
          const long long ti = to * static_cast<long long>(S.t) - static_cast<long long>(P.t) + static_cast<long long>(kt);
          if (ti < 0 || ti >= static_cast<long long>(g.ti)) continue;
          for (size_t kh = 0; kh < K.h; ++kh) {
            const long long hi = ho * static_cast<long long>(S.h) - static_cast<long long>(P.h) + static_cast<long long>(kh);
            if (hi < 0 || hi >= static_cast<long long>(g.hi)) continue;
            for (size_t kw = 0; kw < K.w; ++kw) {
              const long long wi = static_cast<long long>(wo * S.w) - static_cast<long long>(P.w) + static_cast<long long>(kw);
              if (wi < 0 || wi >= static_cast<long long>(g.wi)) continue;
              const T* xp = x + ((static_cast<size_t>(ti) * g.hi + static_cast<size_t>(hi)) * g.wi + static_cast<size_t>(wi)) * g.ci;
              const T* wp = w + ((kt * K.h + kh) * K.w + kw) * g.ci * g.co;
              for (size_t ci = 0; ci < g.ci; ++ci) {
                const T xv = xp[ci];
                const T* wr = wp + ci * g.co;
                for (size_t co = 0; co < g.co; ++co) acc[co] += xv * wr[co];
              }
            }
          }
        }
      }
    }
  }
}

// Adjoint of forward_kernel in x: dx[i][ci] = bias[ci] + sum_{o,k: i = o*s-p+k} sum_co w[k][ci][co] dy[o][co].
// Written as a gather over input positions so each thread owns its outputs.
template <typename T>
void gather_kernel(const T* dy, const T* w, const T* bias, T* dx, const Geometry& g, const ConvSpec& sp) {
  const auto& K = sp.kernel;
  const auto& S = sp.stride;
  const auto& P = sp.padding;
  const long long Ti = static_cast<long long>(g.ti), Hi = static_cast<long long>(g.hi);
#pragma omp parallel for collapse(2) schedule(static)
  for (long long ti = 0; ti < Ti; ++ti) {
    for (long long hi = 0; hi < Hi; ++hi) {
      for (size_t wi = 0; wi < g.wi; ++wi) {
        T* acc = dx + ((static_cast<size_t>(ti) * g.hi + static_cast<size_t>(hi)) * g.wi + wi) * g.ci;
        for (size_t c = 0; c < g.ci; ++c) acc[c] = bias ? bias[c] : T(0);
        for (size_t kt = 0; kt < K.t; ++kt) {
          const long long nt = ti + static_cast<long long>(P.t) - static_cast<long long>(kt);
          if (nt < 0 || nt % static_cast<long long>(S.t) != 0) continue;
          const size_t to = static_cast<size_t>(nt) / S.t;
          if (to >= g.to) continue;
          for (size_t kh = 0; kh < K.h; ++kh) {
            const long long nh = hi + static_cast<long long>(P.h) - static_cast<long long>(kh);
            if (nh < 0 || nh % static_cast<long long>(S.h) != 0) continue;
            const size_t ho = static_cast<size_t>(nh) / S.h;
            if (ho >= g.ho) continue;
            for (size_t kw = 0; kw < K.w; ++kw) {
              const long long nw = static_cast<long long>(wi + P.w) - static_cast<long long>(kw);
              if (nw < 0 || nw % static_cast<long long>(S.w) != 0) continue;
              const size_t wo = static_cast<size_t>(nw) / S.w;
              if (wo >= g.wo) continue;
              const T* dyp = dy + ((to * g.ho + ho) * g.wo + wo) * g.co;
              const T* wp = w + ((kt * K.h + kh) * K.w + kw) * g.ci * g.co;
              for (size_t ci = 0; ci < g.ci; ++ci) {
                const T* wr = wp + ci * g.co;
                T s = 0;
                for (size_t co = 0; co < g.co; ++co) s += wr[co] * dyp[co];
                acc[ci] += s;
              }
            }
          }
        }
      }
    }
  }
}

// dw[k][ci][co] = sum_o x[o*s-p+k][ci] * dy[o][co]; one kernel tap per task.
template <typename T>
void weight_grad_kernel(const T* x, const T* dy, T* dw, const Geometry& g, const ConvSpec& sp) {
  const auto& K = sp.kernel;
  const auto& S = sp.stride;
  const auto& P = sp.padding;
  const long long taps = static_cast<long long>(K.t * K.h * K.w);
#pragma omp parallel for schedule(dynamic)
  for (long long tap = 0; tap < taps; ++tap) {
    const size_t kw = static_cast<size_t>(tap) % K.w;
    const size_t kh = (static_cast<size_t>(tap) / K.w) % K.h;
    const size_t kt = static_cast<size_t>(tap) / (K.w * K.h);
    T* dwp = dw + static_cast<size_t>(tap) * g.ci * g.co;
    for (size_t to = 0; to < g.to; ++to) {
      const long long ti = static_cast<long long>(to * S.t + kt) - static_cast<long long>(P.t);
      if (ti < 0 || ti >= static_cast<long long>(g.ti)) continue;
      for (size_t ho = 0; ho < g.ho; ++ho) {
        const long long hi = static_cast<long long>(ho * S.h + kh) - static_cast<long long>(P.h);
        if (hi < 0 || hi >= static_cast<long long>(g.hi)) continue;
        for (size_t wo = 0; wo < g.wo; ++wo) {
          const long long wi = static_cast<long long>(wo * S.w + kw) - static_cast<long long>(P.w);
          if (wi < 0 || wi >= static_cast<long long>(g.wi)) continue;
          const T* xp = x + ((static_cast<size_t>(ti) * g.hi + static_cast<size_t>(hi)) * g.wi + static_cast<size_t>(wi)) * g.ci;
          const T* dyp = dy + ((to * g.ho + ho) * g.wo + wo) * g.co;
          for (size_t ci = 0; ci < g.ci; ++ci) {
            const T xv = xp[ci];
            T* row = dwp + ci * g.co;
            for (size_t co = 0; co < g.co; ++co) row[co] += xv * dyp[co];
          }
        }
      }
    }
  }
}

template <typename T>
Tensor<T> channel_sum(const Tensor<T>& t) {
  const size_t c = t.shape().back();
  Tensor<T> out(Shape{c});
  for (size_t i = 0; i < t.size(); i += c) {
    for (size_t k = 0; k < c; ++k) out[k] += t[i + k];
  }
  return out;
}

Geometry conv_geometry(const Shape& in, const Shape& out) {
  return {in[0], in[1], in[2], in[3], out[0], out[1], out[2], out[3]};
}

}  // namespace

void ConvSpec::validate() const {
  auto positive = [](const Extent3& e) { return e.t >= 1 && e.h >= 1 && e.w >= 1; };
  if (!positive(kernel) || !positive(stride) || in_channels == 0 || out_channels == 0) {
    throw ShapeError("ConvSpec: kernel, stride and channel counts must be >= 1 (kernel " +
                     extent_string(kernel) + ", stride " + extent_string(stride) + ")");
  }
  if (padding.t >= kernel.t || padding.h >= kernel.h || padding.w >= kernel.w) {
    throw ShapeError("ConvSpec: padding " + extent_string(padding) + " must be smaller than kernel " +
                     extent_string(kernel));
  }
  if (output_padding.t >= stride.t || output_padding.h >= stride.h || output_padding.w >= stride.w) {
    throw ShapeError("ConvSpec: output_padding " + extent_string(output_padding) +
                     " must be smaller than stride " + extent_string(stride));
  }
}

Shape conv3d_weight_shape(const ConvSpec& s) {
  return {s.kernel.t, s.kernel.h, s.kernel.w, s.in_channels, s.out_channels};
}

Shape transposed_conv3d_weight_shape(const ConvSpec& s) {
  return {s.kernel.t, s.kernel.h, s.kernel.w, s.out_channels, s.in_channels};
}

Shape conv3d_output_shape(const Shape& in, const ConvSpec& s) {
  s.validate();
  require_rank4(in, "conv3d");
  if (in[3] != s.in_channels) {
    throw ShapeError("conv3d: input has " + std::to_string(in[3]) + " channels, spec expects " +
                     std::to_string(s.in_channels));
  }
  return {conv_out_extent(in[0], s.kernel.t, s.stride.t, s.padding.t, "T"),
          conv_out_extent(in[1], s.kernel.h, s.stride.h, s.padding.h, "H"),
          conv_out_extent(in[2], s.kernel.w, s.stride.w, s.padding.w, "W"), s.out_channels};
}

Shape transposed_conv3d_output_shape(const Shape& in, const ConvSpec& s) {
  s.validate();
  require_rank4(in, "transposed_conv3d");
  if (in[3] != s.in_channels) {
    throw ShapeError("transposed_conv3d: input has " + std::to_string(in[3]) +
                     " channels, spec expects " + std::to_string(s.in_channels));
  }
  return {tconv_out_extent(in[0], s.kernel.t, s.stride.t, s.padding.t, s.output_padding.t, "T"),
          tconv_out_extent(in[1], s.kernel.h, s.stride.h, s.padding.h, s.output_padding.h, "H"),
          tconv_out_extent(in[2], s.kernel.w, s.stride.w, s.padding.w, s.output_padding.w, "W"),
          s.out_channels};
}

template <typename T>
Tensor<T> conv3d(const Tensor<T>& x, const ConvSpec& spec, const Tensor<T>& w, const Tensor<T>& b) {
  const Shape out_shape = conv3d_output_shape(x.shape(), spec);
  require_weight_shape(w, conv3d_weight_shape(spec), "conv3d");
  require_bias(b, spec.out_channels, "conv3d");
  Tensor<T> y(out_shape);
  forward_kernel(x.data(), w.data(), b.data(), y.data(), conv_geometry(x.shape(), out_shape), spec);
  ensure_finite(y, "conv3d");
  return y;
}

template <typename T>
Tensor<T> transposed_conv3d(const Tensor<T>& x, const ConvSpec& spec, const Tensor<T>& w,
                            const Tensor<T>& b) {
  const Shape out_shape = transposed_conv3d_output_shape(x.shape(), spec);
  require_weight_shape(w, transposed_conv3d_weight_shape(spec), "transposed_conv3d");
  require_bias(b, spec.out_channels, "transposed_conv3d");
  Tensor<T> y(out_shape);
  // The transposed output plays the role of the convolution input.
  gather_kernel(x.data(), w.data(), b.data(), y.data(), conv_geometry(out_shape, x.shape()), spec);
  ensure_finite(y, "transposed_conv3d");
  return y;
}

template <typename T>
ConvGrads<T> conv3d_backward(const Tensor<T>& x, const ConvSpec& spec, const Tensor<T>& w,
                             const Tensor<T>& dy, bool need_input_grad) {
  const Shape out_shape = conv3d_output_shape(x.shape(), spec);
  require_weight_shape(w, conv3d_weight_shape(spec), "conv3d_backward");
  if (dy.shape() != out_shape) {
    throw ShapeError("conv3d_backward: upstream " + shape_string(dy.shape()) + ", expected " +
                     shape_string(out_shape));
  }
  const Geometry g = conv_geometry(x.shape(), out_shape);
  ConvGrads<T> grads;
  if (need_input_grad) {
    grads.input = Tensor<T>(x.shape());
    gather_kernel<T>(dy.data(), w.data(), nullptr, grads.input.data(), g, spec);
  }
  grads.weight = Tensor<T>(w.shape());
  weight_grad_kernel(x.data(), dy.data(), grads.weight.data(), g, spec);
  grads.bias = channel_sum(dy);
  return grads;
}

template <typename T>
ConvGrads<T> transposed_conv3d_backward(const Tensor<T>& x, const ConvSpec& spec, const Tensor<T>& w,
                                        const Tensor<T>& dy, bool need_input_grad) {
  const Shape out_shape = transposed_conv3d_output_shape(x.shape(), spec);
  require_weight_shape(w, transposed_conv3d_weight_shape(spec), "transposed_conv3d_backward");
  if (dy.shape() != out_shape) {
    throw ShapeError("transposed_conv3d_backward: upstream " + shape_string(dy.shape()) +
                     ", expected " + shape_string(out_shape));
  }
  // Roles swap: the upstream gradient lives on the convolution-input side.
  const Geometry g = conv_geometry(out_shape, x.shape());
  ConvGrads<T> grads;
  if (need_input_grad) {
    grads.input = Tensor<T>(x.shape());
    forward_kernel<T>(dy.data(), w.data(), nullptr, grads.input.data(), g, spec);
  }
  grads.weight = Tensor<T>(w.shape());
  weight_grad_kernel(dy.data(), x.data(), grads.weight.data(), g, spec);
  grads.bias = channel_sum(dy);
  return grads;
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope) {
  Tensor<T> y(x.shape());
  for (size_t i = 0; i < x.size(); ++i) y[i] = x[i] >= T(0) ? x[i] : slope * x[i];
  ensure_finite(y, "leaky_relu");
  return y;
}

template <typename T>
Tensor<T> leaky_relu_backward(const Tensor<T>& x, T slope, const Tensor<T>& dy) {
  require_same_shape(x, dy, "leaky_relu_backward");
  Tensor<T> dx(x.shape());
  for (size_t i = 0; i < x.size(); ++i) dx[i] = x[i] >= T(0) ? dy[i] : slope * dy[i];
  return dx;
}

namespace {

struct AxisLayout {
  size_t outer, len, inner;
};

AxisLayout axis_layout(const Shape& s, size_t axis, const char* op) {
  if (axis >= s.size()) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) + " invalid for " + shape_string(s));
  }
  AxisLayout l{1, s[axis], 1};
  for (size_t i = 0; i < axis; ++i) l.outer *= s[i];
  for (size_t i = axis + 1; i < s.size(); ++i) l.inner *= s[i];
  return l;
}

}  // namespace

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, size_t axis) {
  const AxisLayout l = axis_layout(x.shape(), axis, "softmax");
  Tensor<T> y(x.shape());
  for (size_t o = 0; o < l.outer; ++o) {
    for (size_t in = 0; in < l.inner; ++in) {
      const size_t base = o * l.len * l.inner + in;
      T m = x[base];
      for (size_t k = 1; k < l.len; ++k) m = std::max(m, x[base + k * l.inner]);
      T sum = 0;
      for (size_t k = 0; k < l.len; ++k) {
        const T e = std::exp(x[base + k * l.inner] - m);
        y[base + k * l.inner] = e;
        sum += e;
      }
      for (size_t k = 0; k < l.len; ++k) y[base + k * l.inner] /= sum;
    }
  }
  ensure_finite(y, "softmax");
  return y;
}

template <typename T>
Tensor<T> softmax_backward(const Tensor<T>& y, size_t axis, const Tensor<T>& dy) {
  require_same_shape(y, dy, "softmax_backward");
  const AxisLayout l = axis_layout(y.shape(), axis, "softmax_backward");
  Tensor<T> dx(y.shape());
  for (size_t o = 0; o < l.outer; ++o) {
    for (size_t in = 0; in < l.inner; ++in) {
      const size_t base = o * l.len * l.inner + in;
      T s = 0;
      for (size_t k = 0; k < l.len; ++k) s += y[base + k * l.inner] * dy[base + k * l.inner];
      for (size_t k = 0; k < l.len; ++k) {
        const size_t i = base + k * l.inner;
        dx[i] = y[i] * (dy[i] - s);
      }
    }
  }
  return dx;
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* bias) {
  if (x.rank() != 2 || w.rank() != 2 || x.dim(1) != w.dim(0)) {
    throw ShapeError("linear: cannot multiply " + shape_string(x.shape()) + " by " + shape_string(w.shape()));
  }
  const size_t n = x.dim(0), d = x.dim(1), e = w.dim(1);
  if (bias) require_bias(*bias, e, "linear");
  Tensor<T> y(Shape{n, e});
  const long long rows = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
  for (long long r = 0; r < rows; ++r) {
    T* out = y.data() + static_cast<size_t>(r) * e;
    const T* in = x.data() + static_cast<size_t>(r) * d;
    if (bias) std::copy(bias->data(), bias->data() + e, out);
    for (size_t k = 0; k < d; ++k) {
      const T v = in[k];
      const T* wr = w.data() + k * e;
      for (size_t j = 0; j < e; ++j) out[j] += v * wr[j];
    }
  }
  ensure_finite(y, "linear");
  return y;
}

template <typename T>
LinearGrads<T> linear_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dy, bool has_bias) {
  if (x.rank() != 2 || w.rank() != 2 || x.dim(1) != w.dim(0) || dy.shape() != Shape{x.dim(0), w.dim(1)}) {
    throw ShapeError("linear_backward: incompatible shapes " + shape_string(x.shape()) + ", " +
                     shape_string(w.shape()) + ", " + shape_string(dy.shape()));
  }
  const size_t n = x.dim(0), d = x.dim(1), e = w.dim(1);
  LinearGrads<T> g{Tensor<T>(x.shape()), Tensor<T>(w.shape()), {}};
  const long long rows = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
  for (long long r = 0; r < rows; ++r) {
    const T* gy = dy.data() + static_cast<size_t>(r) * e;
    T* gx = g.input.data() + static_cast<size_t>(r) * d;
    for (size_t k = 0; k < d; ++k) {
      const T* wr = w.data() + k * e;
      T s = 0;
      for (size_t j = 0; j < e; ++j) s += wr[j] * gy[j];
      gx[k] = s;
    }
  }
  const long long dd = static_cast<long long>(d);
#pragma omp parallel for schedule(static)
  for (long long k = 0; k < dd; ++k) {
    T* gw = g.weight.data() + static_cast<size_t>(k) * e;
    for (size_t r = 0; r < n; ++r) {
      const T v = x[r * d + static_cast<size_t>(k)];
      const T* gy = dy.data() + r * e;
      for (size_t j = 0; j < e; ++j) gw[j] += v * gy[j];
    }
  }
  if (has_bias) g.bias = channel_sum(dy);
  return g;
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta) {
  const size_t d = x.shape().back();
  require_bias(gamma, d, "layer_norm");
  require_bias(beta, d, "layer_norm");
  Tensor<T> y(x.shape());
  const long long rows = static_cast<long long>(x.size() / d);
#pragma omp parallel for schedule(static)
  for (long long r = 0; r < rows; ++r) {
    const T* in = x.data() + static_cast<size_t>(r) * d;
    T* out = y.data() + static_cast<size_t>(r) * d;
    T mean = 0;
    for (size_t k = 0; k < d; ++k) mean += in[k];
    mean /= static_cast<T>(d);
    T var = 0;
    for (size_t k = 0; k < d; ++k) var += (in[k] - mean) * (in[k] - mean);
    var /= static_cast<T>(d);
    const T inv = T(1) / std::sqrt(var + static_cast<T>(kLayerNormEps));
    for (size_t k = 0; k < d; ++k) out[k] = (in[k] - mean) * inv * gamma[k] + beta[k];
  }
  ensure_finite(y, "layer_norm");
  return y;
}

template <typename T>
LayerNormGrads<T> layer_norm_backward(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& dy) {
  require_same_shape(x, dy, "layer_norm_backward");
  const size_t d = x.shape().back();
  require_bias(gamma, d, "layer_norm_backward");
  LayerNormGrads<T> g{Tensor<T>(x.shape()), Tensor<T>(Shape{d}), Tensor<T>(Shape{d})};
  const size_t rows = x.size() / d;
  std::vector<T> xhat(d);
  for (size_t r = 0; r < rows; ++r) {
    const T* in = x.data() + r * d;
    const T* gy = dy.data() + r * d;
    T* gx = g.input.data() + r * d;
    T mean = 0;
    for (size_t k = 0; k < d; ++k) mean += in[k];
    mean /= static_cast<T>(d);
    T var = 0;
    for (size_t k = 0; k < d; ++k) var += (in[k] - mean) * (in[k] - mean);
    var /= static_cast<T>(d);
    const T inv = T(1) / std::sqrt(var + static_cast<T>(kLayerNormEps));
    T sum_g = 0, sum_gx = 0;
    for (size_t k = 0; k < d; ++k) {
      xhat[k] = (in[k] - mean) * inv;
      const T gh = gy[k] * gamma[k];
      sum_g += gh;
      sum_gx += gh * xhat[k];
      g.gamma[k] += gy[k] * xhat[k];
      g.beta[k] += gy[k];
    }
    const T nd = static_cast<T>(d);
    for (size_t k = 0; k < d; ++k) {
      const T gh = gy[k] * gamma[k];
      gx[k] = inv * (gh - sum_g / nd - xhat[k] * sum_gx / nd);
    }
  }
  return g;
}

#define USSCI_INSTANTIATE(T)                                                                         \
  template Tensor<T> conv3d(const Tensor<T>&, const ConvSpec&, const Tensor<T>&, const Tensor<T>&);  \
  template Tensor<T> transposed_conv3d(const Tensor<T>&, const ConvSpec&, const Tensor<T>&,          \
                                       const Tensor<T>&);                                            \
  template ConvGrads<T> conv3d_backward(const Tensor<T>&, const ConvSpec&, const Tensor<T>&,         \
                                        const Tensor<T>&, bool);                                     \
  template ConvGrads<T> transposed_conv3d_backward(const Tensor<T>&, const ConvSpec&,                \
                                                   const Tensor<T>&, const Tensor<T>&, bool);        \
  template Tensor<T> leaky_relu(const Tensor<T>&, T);                                                \
  template Tensor<T> leaky_relu_backward(const Tensor<T>&, T, const Tensor<T>&);                     \
  template Tensor<T> softmax(const Tensor<T>&, size_t);                                              \
  template Tensor<T> softmax_backward(const Tensor<T>&, size_t, const Tensor<T>&);                   \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>*);                   \
  template LinearGrads<T> linear_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, bool); \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);               \
  template LayerNormGrads<T> layer_norm_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);

USSCI_INSTANTIATE(float)
USSCI_INSTANTIATE(double)

#undef USSCI_INSTANTIATE

}  // namespace ussci
