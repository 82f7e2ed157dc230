#include "ussci/net/attention.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ussci/core/ops.hpp"

namespace ussci {
namespace {

template <typename T>
void check_params(const AttentionParams<T>& p, std::size_t d) {
  auto bad = [](const std::string& m) { throw ShapeError("attention: " + m); };
  if (p.wq.rank() != 2 || p.wk.rank() != 2 || p.wv.rank() != 2 || p.wo.rank() != 2 || p.bo.rank() != 1) {
    bad("projection weights must be matrices and bo a vector");
  }
  if (p.wq.dim(0) != d || p.wk.dim(0) != d || p.wv.dim(0) != d) {
    bad("token width " + std::to_string(d) + " does not match projections " + shape_string(p.wq.shape()) + ", " +
        shape_string(p.wk.shape()) + ", " + shape_string(p.wv.shape()));
  }
  if (p.wq.dim(1) != p.wk.dim(1)) bad("query and key widths differ");
  if (p.wo.dim(0) != p.wv.dim(1) || p.bo.dim(0) != p.wo.dim(1)) bad("output projection does not match value width");
  if (p.heads == 0 || p.wq.dim(1) % p.heads || p.wv.dim(1) % p.heads) bad("widths not divisible by head count");
}

void require_feature(const Shape& s, const char* op) {
  if (s.size() != 4) throw ShapeError(std::string(op) + ": expected [T,H,W,C], got " + shape_string(s));
}

}  // namespace

namespace {
std::atomic<ScopedMacCount*> active_counter{nullptr};
}

ScopedMacCount::ScopedMacCount() : previous_(active_counter.exchange(this)) {}
ScopedMacCount::~ScopedMacCount() { active_counter.store(previous_); }

void ScopedMacCount::record(std::uint64_t projections, std::uint64_t products) {
  if (ScopedMacCount* c = active_counter.load()) {
    c->projections_ += projections;
    c->products_ += products;
  }
}

template <typename T>
Tensor<T> attention(const Tensor<T>& tokens, const AttentionParams<T>& p, AttentionCache<T>* cache) {
  if (tokens.rank() != 3) throw ShapeError("attention: tokens must be [L,J,d], got " + shape_string(tokens.shape()));
  const std::size_t L = tokens.dim(0), J = tokens.dim(1), d = tokens.dim(2);
  check_params(p, d);
  const std::size_t H = p.heads;
  const std::size_t dq = p.wq.dim(1) / H, dv = p.wv.dim(1) / H;
  const std::size_t qw = p.wq.dim(1), vw = p.wv.dim(1);
  const T scale = T(1) / std::sqrt(static_cast<T>(dq));

  Tensor<T> x = tokens.reshaped(Shape{L * J, d});
  Tensor<T> q = linear(x, p.wq);
  Tensor<T> k = linear(x, p.wk);
  Tensor<T> v = linear(x, p.wv);
  Tensor<T> o(Shape{L * J, vw});
  Tensor<T> probs(Shape{L, H, J, J});

  const long long groups = static_cast<long long>(L);
#pragma omp parallel for schedule(static)
  for (long long gl = 0; gl < groups; ++gl) {
    const std::size_t l = static_cast<std::size_t>(gl);
    for (std::size_t h = 0; h < H; ++h) {
      T* P = probs.data() + (l * H + h) * J * J;
      for (std::size_t i = 0; i < J; ++i) {
        const T* qi = q.data() + (l * J + i) * qw + h * dq;
        T* row = P + i * J;
        T m = -INFINITY;
        for (std::size_t j = 0; j < J; ++j) {
          const T* kj = k.data() + (l * J + j) * qw + h * dq;
          T s = 0;
          for (std::size_t c = 0; c < dq; ++c) s += qi[c] * kj[c];
          row[j] = s * scale;
          m = std::max(m, row[j]);
        }
        T sum = 0;
        for (std::size_t j = 0; j < J; ++j) {
          row[j] = std::exp(row[j] - m);
          sum += row[j];
        }
        for (std::size_t j = 0; j < J; ++j) row[j] /= sum;
        T* oi = o.data() + (l * J + i) * vw + h * dv;
        for (std::size_t j = 0; j < J; ++j) {
          const T pj = row[j];
          const T* vj = v.data() + (l * J + j) * vw + h * dv;
          for (std::size_t c = 0; c < dv; ++c) oi[c] += pj * vj[c];
        }
      }
    }
  }

  Tensor<T> out = linear(o, p.wo, &p.bo).reshaped(Shape{L, J, p.wo.dim(1)});
  ensure_finite(out, "attention");
  const std::uint64_t rows = L * J;
  ScopedMacCount::record(rows * d * (2 * qw + vw) + rows * vw * p.wo.dim(1), L * H * J * J * (dq + dv));
  if (cache) {
    cache->x = std::move(x);
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->probs = std::move(probs);
    cache->o = std::move(o);
    cache->groups = L;
    cache->tokens = J;
  }
  return out;
}

template <typename T>
AttentionGrads<T> attention_backward(const AttentionParams<T>& p, const AttentionCache<T>& c, const Tensor<T>& up) {
  const std::size_t L = c.groups, J = c.tokens, H = p.heads;
  const std::size_t qw = p.wq.dim(1), vw = p.wv.dim(1);
  const std::size_t dq = qw / H, dv = vw / H;
  const T scale = T(1) / std::sqrt(static_cast<T>(dq));
  if (up.size() != L * J * p.wo.dim(1)) {
    throw ShapeError("attention_backward: upstream " + shape_string(up.shape()) + " does not match cache");
  }
  const Tensor<T> dout = up.reshaped(Shape{L * J, p.wo.dim(1)});

  AttentionGrads<T> g;
  auto lo = linear_backward(c.o, p.wo, dout, true);
  g.wo = std::move(lo.weight);
  g.bo = std::move(lo.bias);
  const Tensor<T>& dO = lo.input;

  Tensor<T> dq_t(c.q.shape()), dk_t(c.k.shape()), dv_t(c.v.shape());
  const long long groups = static_cast<long long>(L);
#pragma omp parallel for schedule(static)
  for (long long gl = 0; gl < groups; ++gl) {
    const std::size_t l = static_cast<std::size_t>(gl);
    std::vector<T> dS(J * J);
    for (std::size_t h = 0; h < H; ++h) {
      const T* P = c.probs.data() + (l * H + h) * J * J;
      // dP = dO V^T, then softmax backward row by row.
      for (std::size_t i = 0; i < J; ++i) {
        const T* doi = dO.data() + (l * J + i) * vw + h * dv;
        T rowdot = 0;
        for (std::size_t j = 0; j < J; ++j) {
          const T* vj = c.v.data() + (l * J + j) * vw + h * dv;
          T s = 0;
          for (std::size_t cc = 0; cc < dv; ++cc) s += doi[cc] * vj[cc];
          dS[i * J + j] = s;
          rowdot += s * P[i * J + j];
        }
        for (std::size_t j = 0; j < J; ++j) dS[i * J + j] = P[i * J + j] * (dS[i * J + j] - rowdot) * scale;
      }
      // dV = P^T dO
      for (std::size_t j = 0; j < J; ++j) {
        T* dvj = dv_t.data() + (l * J + j) * vw + h * dv;
        for (std::size_t i = 0; i < J; ++i) {
          const T pij = P[i * J + j];
          const T* doi = dO.data() + (l * J + i) * vw + h * dv;
          for (std::size_t cc = 0; cc < dv; ++cc) dvj[cc] += pij * doi[cc];
        }
      }
      // dQ = dS K, dK = dS^T Q (scale already folded into dS)
      for (std::size_t i = 0; i < J; ++i) {
        T* dqi = dq_t.data() + (l * J + i) * qw + h * dq;
        for (std::size_t j = 0; j < J; ++j) {
          const T s = dS[i * J + j];
          const T* kj = c.k.data() + (l * J + j) * qw + h * dq;
          for (std::size_t cc = 0; cc < dq; ++cc) dqi[cc] += s * kj[cc];
        }
      }
      for (std::size_t j = 0; j < J; ++j) {
        T* dkj = dk_t.data() + (l * J + j) * qw + h * dq;
        for (std::size_t i = 0; i < J; ++i) {
          const T s = dS[i * J + j];
          const T* qi = c.q.data() + (l * J + i) * qw + h * dq;
          for (std::size_t cc = 0; cc < dq; ++cc) dkj[cc] += s * qi[cc];
        }
      }
    }
  }

  auto gq = linear_backward(c.x, p.wq, dq_t, false);
  auto gk = linear_backward(c.x, p.wk, dk_t, false);
  auto gv = linear_backward(c.x, p.wv, dv_t, false);
  g.wq = std::move(gq.weight);
  g.wk = std::move(gk.weight);
  g.wv = std::move(gv.weight);
  Tensor<T> dx = std::move(gq.input);
  add_inplace(dx, gk.input);
  add_inplace(dx, gv.input);
  g.tokens = std::move(dx).reshaped(Shape{L, J, c.x.dim(1)});
  return g;
}

TokenLayout window_layout(std::size_t frames, std::size_t height, std::size_t width, std::size_t s) {
  if (s == 0 || height % s || width % s) {
    throw ShapeError("window_partition: window " + std::to_string(s) + " does not divide " +
                     std::to_string(height) + "x" + std::to_string(width));
  }
  const std::size_t nh = height / s, nw = width / s;
  TokenLayout lay{frames * nh * nw, s * s, {}};
  lay.source.reserve(lay.groups * lay.tokens);
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t bh = 0; bh < nh; ++bh)
      for (std::size_t bw = 0; bw < nw; ++bw)
        for (std::size_t ih = 0; ih < s; ++ih)
          for (std::size_t iw = 0; iw < s; ++iw)
            lay.source.push_back((t * height + bh * s + ih) * width + bw * s + iw);
  return lay;
}

TokenLayout grid_layout(std::size_t frames, std::size_t height, std::size_t width, std::size_t g) {
  if (g == 0 || height % g || width % g) {
    throw ShapeError("grid_partition: grid " + std::to_string(g) + " does not divide " + std::to_string(height) +
                     "x" + std::to_string(width));
  }
  const std::size_t ch = height / g, cw = width / g;
  TokenLayout lay{g * g, frames * ch * cw, {}};
  lay.source.reserve(lay.groups * lay.tokens);
  for (std::size_t gh = 0; gh < g; ++gh)
    for (std::size_t gw = 0; gw < g; ++gw)
      for (std::size_t t = 0; t < frames; ++t)
        for (std::size_t ih = 0; ih < ch; ++ih)
          for (std::size_t iw = 0; iw < cw; ++iw)
            lay.source.push_back((t * height + ih * g + gh) * width + iw * g + gw);
  return lay;
}

TokenLayout temporal_layout(std::size_t frames, std::size_t height, std::size_t width) {
  TokenLayout lay{height * width, frames, {}};
  lay.source.reserve(lay.groups * lay.tokens);
  for (std::size_t site = 0; site < height * width; ++site)
    for (std::size_t t = 0; t < frames; ++t) lay.source.push_back(t * height * width + site);
  return lay;
}

template <typename T>
Tensor<T> gather_tokens(const Tensor<T>& f, const TokenLayout& lay) {
  require_feature(f.shape(), "gather_tokens");
  const std::size_t c = f.dim(3);
  if (lay.source.size() != f.dim(0) * f.dim(1) * f.dim(2)) {
    throw ShapeError("gather_tokens: layout covers " + std::to_string(lay.source.size()) + " sites, feature has " +
                     std::to_string(f.dim(0) * f.dim(1) * f.dim(2)));
  }
  Tensor<T> out(Shape{lay.groups, lay.tokens, c});
  for (std::size_t i = 0; i < lay.source.size(); ++i) {
    std::copy_n(f.data() + lay.source[i] * c, c, out.data() + i * c);
  }
  return out;
}

template <typename T>
Tensor<T> scatter_tokens(const Tensor<T>& tokens, const TokenLayout& lay, const Shape& fs) {
  require_feature(fs, "scatter_tokens");
  const std::size_t c = fs[3];
  if (tokens.shape() != Shape{lay.groups, lay.tokens, c}) {
    throw ShapeError("scatter_tokens: tokens " + shape_string(tokens.shape()) + " do not fit layout for " +
                     shape_string(fs));
  }
  Tensor<T> out(fs);
  for (std::size_t i = 0; i < lay.source.size(); ++i) {
    std::copy_n(tokens.data() + i * c, c, out.data() + lay.source[i] * c);
  }
  return out;
}

#define USSCI_INSTANTIATE(T)                                                                           \
  template Tensor<T> attention(const Tensor<T>&, const AttentionParams<T>&, AttentionCache<T>*);       \
  template AttentionGrads<T> attention_backward(const AttentionParams<T>&, const AttentionCache<T>&,   \
                                                const Tensor<T>&);                                     \
  template Tensor<T> gather_tokens(const Tensor<T>&, const TokenLayout&);                              \
  template Tensor<T> scatter_tokens(const Tensor<T>&, const TokenLayout&, const Shape&);

USSCI_INSTANTIATE(float)
USSCI_INSTANTIATE(double)

#undef USSCI_INSTANTIATE

}  // namespace ussci
