#include "ussci/reference.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ussci/core/errors.hpp"

namespace ussci::reference {

template <typename T>
Tensor<T> conv3d(const Tensor<T>& x, const ConvSpec& s, const Tensor<T>& w, const Tensor<T>& b) {
  const Shape os = conv3d_output_shape(x.shape(), s);
  if (w.shape() != conv3d_weight_shape(s)) throw ShapeError("reference::conv3d: weight shape");
  Tensor<T> y(os);
  const std::size_t Ci = s.in_channels, Co = s.out_channels;
  for (std::size_t ot = 0; ot < os[0]; ++ot)
    for (std::size_t oh = 0; oh < os[1]; ++oh)
      for (std::size_t ow = 0; ow < os[2]; ++ow)
        for (std::size_t co = 0; co < Co; ++co) {
          T acc = b[co];
          for (std::size_t a = 0; a < s.kernel.t; ++a)
            for (std::size_t bb = 0; bb < s.kernel.h; ++bb)
              for (std::size_t c = 0; c < s.kernel.w; ++c) {
                const long long it = static_cast<long long>(ot * s.stride.t + a) - static_cast<long long>(s.padding.t);
                const long long ih = static_cast<long long>(oh * s.stride.h + bb) - static_cast<long long>(s.padding.h);
                const long long iw = static_cast<long long>(ow * s.stride.w + c) - static_cast<long long>(s.padding.w);
                if (it < 0 || ih < 0 || iw < 0 || it >= static_cast<long long>(x.dim(0)) ||
                    ih >= static_cast<long long>(x.dim(1)) || iw >= static_cast<long long>(x.dim(2)))
                  continue;
                for (std::size_t ci = 0; ci < Ci; ++ci) {
                  acc += x.at(static_cast<std::size_t>(it), static_cast<std::size_t>(ih), static_cast<std::size_t>(iw), ci) *
                         w.at(a, bb, c, ci, co);
                }
              }
          y.at(ot, oh, ow, co) = acc;
        }
  return y;
}

template <typename T>
Tensor<T> transposed_conv3d(const Tensor<T>& x, const ConvSpec& s, const Tensor<T>& w, const Tensor<T>& b) {
  const Shape os = transposed_conv3d_output_shape(x.shape(), s);
  if (w.shape() != transposed_conv3d_weight_shape(s)) throw ShapeError("reference::transposed_conv3d: weight shape");
  Tensor<T> y(os);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = b[i % s.out_channels];
  for (std::size_t t = 0; t < x.dim(0); ++t)
    for (std::size_t h = 0; h < x.dim(1); ++h)
      for (std::size_t v = 0; v < x.dim(2); ++v)
        for (std::size_t a = 0; a < s.kernel.t; ++a)
          for (std::size_t bb = 0; bb < s.kernel.h; ++bb)
            for (std::size_t c = 0; c < s.kernel.w; ++c) {
              const long long ot = static_cast<long long>(t * s.stride.t + a) - static_cast<long long>(s.padding.t);
              const long long oh = static_cast<long long>(h * s.stride.h + bb) - static_cast<long long>(s.padding.h);
              const long long ow = static_cast<long long>(v * s.stride.w + c) - static_cast<long long>(s.padding.w);
              if (ot < 0 || oh < 0 || ow < 0 || ot >= static_cast<long long>(os[0]) ||
                  oh >= static_cast<long long>(os[1]) || ow >= static_cast<long long>(os[2]))
                continue;
              for (std::size_t o = 0; o < s.out_channels; ++o)
                for (std::size_t i = 0; i < s.in_channels; ++i) {
                  y.at(static_cast<std::size_t>(ot), static_cast<std::size_t>(oh), static_cast<std::size_t>(ow), o) +=
                      x.at(t, h, v, i) * w.at(a, bb, c, o, i);
                }
            }
  return y;
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("reference::matmul: " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  }
  Tensor<T> c(Shape{a.dim(0), b.dim(1)});
  for (std::size_t i = 0; i < a.dim(0); ++i)
    for (std::size_t j = 0; j < b.dim(1); ++j) {
      T s = 0;
      for (std::size_t k = 0; k < a.dim(1); ++k) s += a.at(i, k) * b.at(k, j);
      c.at(i, j) = s;
    }
  return c;
}

template <typename T>
Tensor<T> dense_attention(const Tensor<T>& x, const AttentionParams<T>& p) {
  const std::size_t N = x.dim(0), H = p.heads;
  const Tensor<T> q = matmul(x, p.wq), k = matmul(x, p.wk), v = matmul(x, p.wv);
  const std::size_t dq = q.dim(1) / H, dv = v.dim(1) / H;
  Tensor<T> z(Shape{N, v.dim(1)});
  for (std::size_t h = 0; h < H; ++h)
    for (std::size_t i = 0; i < N; ++i) {
      std::vector<T> e(N);
      T mx = -INFINITY;
      for (std::size_t j = 0; j < N; ++j) {
        T s = 0;
        for (std::size_t c = 0; c < dq; ++c) s += q.at(i, h * dq + c) * k.at(j, h * dq + c);
        e[j] = s / std::sqrt(static_cast<T>(dq));
        mx = std::max(mx, e[j]);
      }
      T sum = 0;
      for (auto& ej : e) sum += (ej = std::exp(ej - mx));
      for (std::size_t c = 0; c < dv; ++c) {
        T acc = 0;
        for (std::size_t j = 0; j < N; ++j) acc += e[j] / sum * v.at(j, h * dv + c);
        z.at(i, h * dv + c) = acc;
      }
    }
  Tensor<T> out = matmul(z, p.wo);
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t c = 0; c < out.dim(1); ++c) out.at(i, c) += p.bo[c];
  return out;
}

template <typename T>
Tensor<T> encode(const Tensor<T>& x, const MaskSet& m) {
  if (x.shape() != Shape{m.frames, m.height, m.width}) throw ShapeError("reference::encode: extents");
  Tensor<T> y(Shape{m.height, m.width});
  for (std::size_t h = 0; h < m.height; ++h)
    for (std::size_t w = 0; w < m.width; ++w) {
      T s = 0;
      for (std::size_t f = 0; f < m.frames; ++f) s += x.at(f, h, w) * static_cast<T>(m.at(f, h, w));
      y.at(h, w) = s;
    }
  return y;
}

#define USSCI_INSTANTIATE(T)                                                                              \
  template Tensor<T> conv3d<T>(const Tensor<T>&, const ConvSpec&, const Tensor<T>&, const Tensor<T>&);    \
  template Tensor<T> transposed_conv3d<T>(const Tensor<T>&, const ConvSpec&, const Tensor<T>&,            \
                                          const Tensor<T>&);                                              \
  template Tensor<T> matmul<T>(const Tensor<T>&, const Tensor<T>&);                                       \
  template Tensor<T> dense_attention<T>(const Tensor<T>&, const AttentionParams<T>&);                     \
  template Tensor<T> encode<T>(const Tensor<T>&, const MaskSet&);

USSCI_INSTANTIATE(float)
USSCI_INSTANTIATE(double)

#undef USSCI_INSTANTIATE

}  // namespace ussci::reference
