#pragma once

// Dense reference versions of the attention branches, shared by the unit tests
// and the acceptance runner.

#include <string>
#include <vector>

#include "support.hpp"
#include "ussci/net/attention.hpp"
#include "ussci/net/config.hpp"
#include "ussci/net/layers.hpp"
#include "ussci/reference.hpp"

namespace ussci::testing {

inline void jitter(ParamMap<double>& p, std::uint64_t seed, double scale = 0.3) {
  Gen g(seed, 41);
  for (auto& [k, t] : p)
    for (auto& v : t.values()) v += scale * g.normal();
}

// Per-token normalisation over channels, written out directly.
inline Tensor<double> norm_rows(const Tensor<double>& x, const Tensor<double>& gamma, const Tensor<double>& beta) {
  const std::size_t n = x.dim(0), d = x.dim(1);
  Tensor<double> y(x.shape());
  for (std::size_t i = 0; i < n; ++i) {
    double m = 0, v = 0;
    for (std::size_t c = 0; c < d; ++c) m += x.at(i, c);
    m /= d;
    for (std::size_t c = 0; c < d; ++c) v += (x.at(i, c) - m) * (x.at(i, c) - m);
    v /= d;
    for (std::size_t c = 0; c < d; ++c) y.at(i, c) = (x.at(i, c) - m) / std::sqrt(v + kLayerNormEps) * gamma[c] + beta[c];
  }
  return y;
}

inline AttentionParams<double> attn(const ParamMap<double>& p, const std::string& n, std::size_t heads) {
  return {p.at(n + ".attn.wq"), p.at(n + ".attn.wk"), p.at(n + ".attn.wv"), p.at(n + ".attn.wo"),
          p.at(n + ".attn.bo"), heads};
}

/// x + dense attention over each group of sites; `groups` lists flat site
/// indices t*H*W + h*W + w of a [T,H,W,C] map.
inline Tensor<double> dense_branch_pre(const Tensor<double>& x, const ParamMap<double>& p, const std::string& n,
                                std::size_t heads, const std::vector<std::vector<std::size_t>>& groups) {
  const std::size_t C = x.dim(3);
  Tensor<double> out = x;
  for (const auto& grp : groups) {
    Tensor<double> tok(Shape{grp.size(), C});
    for (std::size_t j = 0; j < grp.size(); ++j)
      for (std::size_t c = 0; c < C; ++c) tok.at(j, c) = x[grp[j] * C + c];
    auto z = reference::dense_attention(norm_rows(tok, p.at(n + ".norm.gamma"), p.at(n + ".norm.beta")),
                                        attn(p, n, heads));
    for (std::size_t j = 0; j < grp.size(); ++j)
      for (std::size_t c = 0; c < C; ++c) out[grp[j] * C + c] += z.at(j, c);
  }
  return out;
}

/// x + W1(leaky(W2(x))) from the reference convolutions.
inline Tensor<double> dense_ffn(const Tensor<double>& x, const ParamMap<double>& p, const std::string& n, double slope) {
  const std::size_t C = x.dim(3);
  ConvSpec s3;
  s3.kernel = {3, 3, 3};
  s3.padding = {1, 1, 1};
  s3.in_channels = s3.out_channels = C;
  ConvSpec s1;
  s1.in_channels = s1.out_channels = C;
  auto h = reference::conv3d(x, s3, p.at(n + ".ffn.w2.weight"), p.at(n + ".ffn.w2.bias"));
  for (auto& v : h.values()) v = v >= 0 ? v : slope * v;
  return add(x, reference::conv3d(h, s1, p.at(n + ".ffn.w1.weight"), p.at(n + ".ffn.w1.bias")));
}

inline NetworkConfig config(std::size_t T, std::size_t H, std::size_t W, std::size_t C, std::size_t S, std::size_t G,
                     std::size_t heads) {
  NetworkConfig c;
  c.frames = T;
  c.height = H;
  c.width = W;
  c.channels = C;
  c.window = S;
  c.grid = G;
  c.heads = heads;
  c.blocks = 1;
  return c;
}

}  // namespace ussci::testing
