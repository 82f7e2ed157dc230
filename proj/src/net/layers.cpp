#include "ussci/net/layers.hpp"

#include <cmath>

namespace ussci {
namespace {

ConvSpec make_spec(Extent3 k, Extent3 s, Extent3 pad, std::size_t cin, std::size_t cout, Extent3 op = {0, 0, 0}) {
  ConvSpec spec;
  spec.kernel = k;
  spec.stride = s;
  spec.padding = pad;
  spec.output_padding = op;
  spec.in_channels = cin;
  spec.out_channels = cout;
  spec.validate();
  return spec;
}

constexpr double kProjectionStd = 0.02;

}  // namespace

const char* branch_tag(BranchKind k) {
  switch (k) {
    case BranchKind::Local:
      return "lba";
    case BranchKind::GlobalSparse:
      return "gsa";
    case BranchKind::GlobalTemporal:
      return "gta";
  }
  return "?";
}

template <typename T>
Tensor<T> slice_channels(const Tensor<T>& x, std::size_t start, std::size_t count) {
  const std::size_t c = x.shape().back();
  if (start + count > c) throw ShapeError("slice_channels: range exceeds " + std::to_string(c) + " channels");
  Shape s = x.shape();
  s.back() = count;
  Tensor<T> out(s);
  const std::size_t sites = x.size() / c;
  for (std::size_t i = 0; i < sites; ++i) std::copy_n(x.data() + i * c + start, count, out.data() + i * count);
  return out;
}

template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts) {
  Shape s = parts.at(0).shape();
  std::size_t total = 0;
  for (const auto& p : parts) {
    Shape ps = p.shape();
    ps.back() = s.back();
    if (ps != s) throw ShapeError("concat_channels: mismatched extents " + shape_string(p.shape()));
    total += p.shape().back();
  }
  const std::size_t sites = parts[0].size() / parts[0].shape().back();
  s.back() = total;
  Tensor<T> out(s);
  std::size_t off = 0;
  for (const auto& p : parts) {
    const std::size_t c = p.shape().back();
    for (std::size_t i = 0; i < sites; ++i) std::copy_n(p.data() + i * c, c, out.data() + i * total + off);
    off += c;
  }
  return out;
}

// --- ConvLayer -------------------------------------------------------------

template <typename T>
ConvLayer<T>::ConvLayer(std::string name, ConvSpec spec, bool transposed)
    : name_(std::move(name)), spec_(spec), transposed_(transposed) {
  spec_.validate();
}

template <typename T>
void ConvLayer<T>::init(ParamMap<T>& p, std::uint64_t seed, bool zero) const {
  const Shape ws = transposed_ ? transposed_conv3d_weight_shape(spec_) : conv3d_weight_shape(spec_);
  const std::size_t fan_in = spec_.kernel_volume() * spec_.in_channels;
  p.insert_or_assign(name_ + ".weight", zero ? Tensor<T>(ws)
                                             : init_uniform<T>(ws, 1.0 / std::sqrt(static_cast<double>(fan_in)),
                                                               seed, name_ + ".weight"));
  p.insert_or_assign(name_ + ".bias", Tensor<T>(Shape{spec_.out_channels}));
}

template <typename T>
Tensor<T> ConvLayer<T>::forward(const ParamMap<T>& p, const Tensor<T>& x) {
  input_ = x;
  const auto& w = param(p, name_ + ".weight");
  const auto& b = param(p, name_ + ".bias");
  return transposed_ ? transposed_conv3d(x, spec_, w, b) : conv3d(x, spec_, w, b);
}

template <typename T>
Tensor<T> ConvLayer<T>::backward(const ParamMap<T>& p, const Tensor<T>& dy, ParamMap<T>& grads, bool need_input) {
  const auto& w = param(p, name_ + ".weight");
  auto g = transposed_ ? transposed_conv3d_backward(input_, spec_, w, dy, need_input)
                       : conv3d_backward(input_, spec_, w, dy, need_input);
  accumulate(grads, name_ + ".weight", g.weight);
  accumulate(grads, name_ + ".bias", g.bias);
  return std::move(g.input);
}

// --- FeedForward -------------------------------------------------------------

template <typename T>
FeedForward<T>::FeedForward(std::string name, std::size_t channels, double slope)
    : w2_(name + ".w2", make_spec({3, 3, 3}, {1, 1, 1}, {1, 1, 1}, channels, channels)),
      w1_(name + ".w1", make_spec({1, 1, 1}, {1, 1, 1}, {0, 0, 0}, channels, channels)),
      slope_(static_cast<T>(slope)) {}

template <typename T>
void FeedForward<T>::init(ParamMap<T>& p, std::uint64_t seed) const {
  w2_.init(p, seed);
  w1_.init(p, seed);
}

template <typename T>
Tensor<T> FeedForward<T>::forward(const ParamMap<T>& p, const Tensor<T>& x) {
  hidden_ = w2_.forward(p, x);
  return add(w1_.forward(p, leaky_relu(hidden_, slope_)), x);
}

template <typename T>
Tensor<T> FeedForward<T>::backward(const ParamMap<T>& p, const Tensor<T>& dy, ParamMap<T>& grads) {
  Tensor<T> da = w1_.backward(p, dy, grads);
  Tensor<T> dx = w2_.backward(p, leaky_relu_backward(hidden_, slope_, da), grads);
  add_inplace(dx, dy);
  return dx;
}

// --- AttentionBranch -----------------------------------------------------------

template <typename T>
AttentionBranch<T>::AttentionBranch(std::string name, BranchKind kind, std::size_t channels, std::size_t heads,
                                    std::size_t partition, double slope)
    : name_(std::move(name)),
      kind_(kind),
      channels_(channels),
      heads_(heads),
      partition_(partition),
      ffn_(name_ + ".ffn", channels, slope) {}

template <typename T>
void AttentionBranch<T>::init(ParamMap<T>& p, std::uint64_t seed) const {
  const Shape sq{channels_, channels_};
  p.insert_or_assign(name_ + ".norm.gamma", Tensor<T>(Shape{channels_}, T(1)));
  p.insert_or_assign(name_ + ".norm.beta", Tensor<T>(Shape{channels_}));
  for (const char* w : {".attn.wq", ".attn.wk", ".attn.wv", ".attn.wo"}) {
    p.insert_or_assign(name_ + w, init_truncated_normal<T>(sq, kProjectionStd, seed, name_ + w));
  }
  p.insert_or_assign(name_ + ".attn.bo", Tensor<T>(Shape{channels_}));
  ffn_.init(p, seed);
}

template <typename T>
TokenLayout AttentionBranch<T>::layout_for(const Shape& s) const {
  switch (kind_) {
    case BranchKind::Local:
      return window_layout(s[0], s[1], s[2], partition_);
    case BranchKind::GlobalSparse:
      return grid_layout(s[0], s[1], s[2], partition_);
    case BranchKind::GlobalTemporal:
      return temporal_layout(s[0], s[1], s[2]);
  }
  throw std::logic_error("unknown branch kind");
}

template <typename T>
AttentionParams<T> AttentionBranch<T>::attention_params(const ParamMap<T>& p) const {
  return {param(p, name_ + ".attn.wq"), param(p, name_ + ".attn.wk"), param(p, name_ + ".attn.wv"),
          param(p, name_ + ".attn.wo"), param(p, name_ + ".attn.bo"), heads_};
}

template <typename T>
typename AttentionBranch<T>::Output AttentionBranch<T>::forward(const ParamMap<T>& p, const Tensor<T>& x) {
  if (x.rank() != 4 || x.dim(3) != channels_) {
    throw ShapeError(name_ + ": expected [T,H,W," + std::to_string(channels_) + "], got " + shape_string(x.shape()));
  }
  shape_ = x.shape();
  layout_ = layout_for(shape_);
  tokens_ = gather_tokens(x, layout_);
  const Tensor<T> normed = layer_norm(tokens_, param(p, name_ + ".norm.gamma"), param(p, name_ + ".norm.beta"));
  const Tensor<T> mixed = attention(normed, attention_params(p), &cache_);
  Output o;
  o.pre = add(scatter_tokens(mixed, layout_, shape_), x);
  o.out = ffn_.forward(p, o.pre);
  return o;
}

template <typename T>
Tensor<T> AttentionBranch<T>::backward(const ParamMap<T>& p, const Tensor<T>& dout, const Tensor<T>& dpre,
                                       ParamMap<T>& grads) {
  Tensor<T> dpre_total = ffn_.backward(p, dout, grads);
  if (!dpre.empty()) add_inplace(dpre_total, dpre);

  auto ag = attention_backward(attention_params(p), cache_, gather_tokens(dpre_total, layout_));
  accumulate(grads, name_ + ".attn.wq", ag.wq);
  accumulate(grads, name_ + ".attn.wk", ag.wk);
  accumulate(grads, name_ + ".attn.wv", ag.wv);
  accumulate(grads, name_ + ".attn.wo", ag.wo);
  accumulate(grads, name_ + ".attn.bo", ag.bo);
  auto ng = layer_norm_backward(tokens_, param(p, name_ + ".norm.gamma"), ag.tokens);
  accumulate(grads, name_ + ".norm.gamma", ng.gamma);
  accumulate(grads, name_ + ".norm.beta", ng.beta);

  add_inplace(dpre_total, scatter_tokens(ng.input, layout_, shape_));
  return dpre_total;
}

// --- BstBlock ----------------------------------------------------------------

template <typename T>
BstBlock<T>::BstBlock(std::string name, const NetworkConfig& cfg) : name_(std::move(name)), width_(cfg.branch_channels()) {
  cfg.validate();
  const std::pair<bool, BranchKind> order[] = {{cfg.branches.lba, BranchKind::Local},
                                               {cfg.branches.gsa, BranchKind::GlobalSparse},
                                               {cfg.branches.gta, BranchKind::GlobalTemporal}};
  for (const auto& [on, kind] : order) {
    if (!on) continue;
    const std::size_t part = kind == BranchKind::Local ? cfg.window : kind == BranchKind::GlobalSparse ? cfg.grid : 1;
    branches_.emplace_back(name_ + "." + branch_tag(kind), kind, width_, cfg.heads, part, cfg.leaky_slope);
  }
  fuse_ = ConvLayer<T>(name_ + ".fuse", make_spec({1, 1, 1}, {1, 1, 1}, {0, 0, 0}, cfg.channels, cfg.channels));
}

template <typename T>
void BstBlock<T>::init(ParamMap<T>& p, std::uint64_t seed) const {
  for (const auto& b : branches_) b.init(p, seed);
  fuse_.init(p, seed, /*zero=*/true);
}

template <typename T>
Tensor<T> BstBlock<T>::forward(const ParamMap<T>& p, const Tensor<T>& x) {
  std::vector<Tensor<T>> outs;
  Tensor<T> carry;
  for (std::size_t k = 0; k < branches_.size(); ++k) {
    Tensor<T> in = slice_channels(x, k * width_, width_);
    if (!carry.empty()) add_inplace(in, carry);
    auto o = branches_[k].forward(p, in);
    carry = std::move(o.pre);
    outs.push_back(std::move(o.out));
  }
  return add(fuse_.forward(p, concat_channels(outs)), x);
}

template <typename T>
Tensor<T> BstBlock<T>::backward(const ParamMap<T>& p, const Tensor<T>& dy, ParamMap<T>& grads) {
  const Tensor<T> dcat = fuse_.backward(p, dy, grads);
  std::vector<Tensor<T>> dslices(branches_.size());
  Tensor<T> carry;
  for (std::size_t k = branches_.size(); k-- > 0;) {
    Tensor<T> din = branches_[k].backward(p, slice_channels(dcat, k * width_, width_), carry, grads);
    carry = din;
    dslices[k] = std::move(din);
  }
  return add(concat_channels(dslices), dy);
}

// --- FeatureExtractor --------------------------------------------------------

template <typename T>
FeatureExtractor<T>::FeatureExtractor(std::string name, const NetworkConfig& cfg)
    : slope_(static_cast<T>(cfg.leaky_slope)) {
  const std::size_t s = cfg.stem();
  convs_.emplace_back(name + ".conv1", make_spec({3, 7, 7}, {1, 1, 1}, {1, 3, 3}, 1, s));
  convs_.emplace_back(name + ".conv2", make_spec({3, 3, 3}, {1, 1, 1}, {1, 1, 1}, s, s));
  convs_.emplace_back(name + ".conv3", make_spec({3, 3, 3}, {1, 2, 2}, {1, 1, 1}, s, cfg.channels));
}

template <typename T>
void FeatureExtractor<T>::init(ParamMap<T>& p, std::uint64_t seed) const {
  for (const auto& c : convs_) c.init(p, seed);
}

template <typename T>
Tensor<T> FeatureExtractor<T>::forward(const ParamMap<T>& p, const Tensor<T>& x) {
  if (x.rank() != 4 || x.dim(1) % 2 || x.dim(2) % 2) {
    throw ShapeError("feature_extract: expected [T,H,W,1] with even H, W, got " + shape_string(x.shape()));
  }
  pre_act_.clear();
  Tensor<T> h = x;
  for (auto& c : convs_) {
    pre_act_.push_back(c.forward(p, h));
    h = leaky_relu(pre_act_.back(), slope_);
  }
  return h;
}

template <typename T>
Tensor<T> FeatureExtractor<T>::backward(const ParamMap<T>& p, const Tensor<T>& dy, ParamMap<T>& grads) {
  Tensor<T> g = dy;
  for (std::size_t i = convs_.size(); i-- > 0;) {
    g = convs_[i].backward(p, leaky_relu_backward(pre_act_[i], slope_, g), grads);
  }
  return g;
}

// --- ReconstructionHead ------------------------------------------------------

template <typename T>
ReconstructionHead<T>::ReconstructionHead(std::string name, const NetworkConfig& cfg)
    : up_(name + ".up", make_spec({1, 3, 3}, {1, 2, 2}, {0, 1, 1}, cfg.channels, cfg.stem(), {0, 1, 1}), true),
      mix_(name + ".mix", make_spec({1, 1, 1}, {1, 1, 1}, {0, 0, 0}, cfg.stem(), cfg.stem())),
      out_(name + ".out", make_spec({3, 3, 3}, {1, 1, 1}, {1, 1, 1}, cfg.stem(), 1)),
      slope_(static_cast<T>(cfg.leaky_slope)) {}

template <typename T>
void ReconstructionHead<T>::init(ParamMap<T>& p, std::uint64_t seed) const {
  up_.init(p, seed);
  mix_.init(p, seed);
  out_.init(p, seed);
}

template <typename T>
Tensor<T> ReconstructionHead<T>::forward(const ParamMap<T>& p, const Tensor<T>& x) {
  up_pre_ = up_.forward(p, x);
  mix_pre_ = mix_.forward(p, leaky_relu(up_pre_, slope_));
  return out_.forward(p, leaky_relu(mix_pre_, slope_));
}

template <typename T>
Tensor<T> ReconstructionHead<T>::backward(const ParamMap<T>& p, const Tensor<T>& dy, ParamMap<T>& grads) {
  Tensor<T> g = out_.backward(p, dy, grads);
  g = mix_.backward(p, leaky_relu_backward(mix_pre_, slope_, g), grads);
  return up_.backward(p, leaky_relu_backward(up_pre_, slope_, g), grads);
}

template class ConvLayer<float>;
template class ConvLayer<double>;
template class FeedForward<float>;
template class FeedForward<double>;
template class AttentionBranch<float>;
template class AttentionBranch<double>;
template class BstBlock<float>;
template class BstBlock<double>;
template class FeatureExtractor<float>;
template class FeatureExtractor<double>;
template class ReconstructionHead<float>;
template class ReconstructionHead<double>;
template Tensor<float> slice_channels(const Tensor<float>&, std::size_t, std::size_t);
template Tensor<double> slice_channels(const Tensor<double>&, std::size_t, std::size_t);
template Tensor<float> concat_channels(const std::vector<Tensor<float>>&);
template Tensor<double> concat_channels(const std::vector<Tensor<double>>&);

}  // namespace ussci
