#include "ussci/net/network.hpp"

#include <functional>

#include "ussci/core/random.hpp"

namespace ussci {

template <typename T>
BstNetwork<T>::BstNetwork(NetworkConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  stem_ = FeatureExtractor<T>("stem", cfg_);
  for (std::size_t b = 0; b < cfg_.blocks; ++b) blocks_.emplace_back("block" + std::to_string(b), cfg_);
  head_ = ReconstructionHead<T>("head", cfg_);
}

template <typename T>
ParamMap<T> BstNetwork<T>::init_params(std::uint64_t seed) const {
  ParamMap<T> p;
  stem_.init(p, seed);
  for (const auto& b : blocks_) b.init(p, seed);
  head_.init(p, seed);
  return p;
}

template <typename T>
void BstNetwork<T>::check_extents(const MaskSet& masks) const {
  if (masks.frames != cfg_.frames || masks.height != cfg_.height || masks.width != cfg_.width) {
    throw ShapeError("network expects T=" + std::to_string(cfg_.frames) + " " + std::to_string(cfg_.height) + "x" +
                     std::to_string(cfg_.width) + ", masks are T=" + std::to_string(masks.frames) + " " +
                     std::to_string(masks.height) + "x" + std::to_string(masks.width));
  }
}

template <typename T>
VideoCube<T> BstNetwork<T>::forward(const ParamMap<T>& p, const Tensor<T>& y, const MaskSet& masks) {
  check_extents(masks);
  return forward_from_estimate(p, coarse_estimate(y, masks));
}

template <typename T>
VideoCube<T> BstNetwork<T>::forward_from_estimate(const ParamMap<T>& p, const VideoCube<T>& xe) {
  if (xe.shape() != Shape{cfg_.frames, cfg_.height, cfg_.width}) {
    throw ShapeError("network: estimate " + shape_string(xe.shape()) + " does not match config");
  }
  Tensor<T> f = stem_.forward(p, xe.reshaped(Shape{cfg_.frames, cfg_.height, cfg_.width, 1}));
  for (auto& b : blocks_) f = b.forward(p, f);
  return head_.forward(p, f).reshaped(Shape{cfg_.frames, cfg_.height, cfg_.width});
}

template <typename T>
VideoCube<T> BstNetwork<T>::backward(const ParamMap<T>& p, const VideoCube<T>& up, ParamMap<T>& grads) {
  Tensor<T> g = head_.backward(p, up.reshaped(Shape{cfg_.frames, cfg_.height, cfg_.width, 1}), grads);
  for (std::size_t b = blocks_.size(); b-- > 0;) g = blocks_[b].backward(p, g, grads);
  g = stem_.backward(p, g, grads);
  return std::move(g).reshaped(Shape{cfg_.frames, cfg_.height, cfg_.width});
}

template <typename T>
Tensor<T> BstNetwork<T>::backward_to_measurement(const ParamMap<T>& p, const VideoCube<T>& up, ParamMap<T>& grads,
                                                 const MaskSet& masks) {
  return coarse_estimate_backward(masks, backward(p, up, grads));
}

template class BstNetwork<float>;
template class BstNetwork<double>;

namespace {

template <typename T>
using Forward = std::function<Tensor<T>(const ParamMap<T>&, const Tensor<T>&)>;
template <typename T>
using Backward = std::function<Tensor<T>(const ParamMap<T>&, const Tensor<T>&, ParamMap<T>&)>;

// A stateful module instance per call keeps the op pure.
template <typename T, typename Module>
DifferentiableOp<T> module_op(std::string name, std::function<Module()> make, std::vector<std::string> names) {
  auto unpack = [names](std::span<const Tensor<T>> in) {
    if (in.size() != names.size() + 1) {
      throw std::invalid_argument("module op expects " + std::to_string(names.size() + 1) + " inputs");
    }
    ParamMap<T> p;
    for (std::size_t i = 0; i < names.size(); ++i) p.emplace(names[i], in[i + 1]);
    return p;
  };
  DifferentiableOp<T> op;
  op.name = std::move(name);
  op.forward = [make, unpack](std::span<const Tensor<T>> in) {
    Module m = make();
    return m.forward(unpack(in), in[0]);
  };
  op.backward = [make, unpack, names](std::span<const Tensor<T>> in, const Tensor<T>& up) {
    Module m = make();
    const ParamMap<T> p = unpack(in);
    m.forward(p, in[0]);
    ParamMap<T> g;
    std::vector<Tensor<T>> out{m.backward(p, up, g)};
    for (const auto& n : names) {
      auto it = g.find(n);
      out.push_back(it != g.end() ? it->second : Tensor<T>(p.at(n).shape()));
    }
    return out;
  };
  return op;
}

template <typename T>
struct BranchModule {
  AttentionBranch<T> branch;
  Tensor<T> forward(const ParamMap<T>& p, const Tensor<T>& x) { return branch.forward(p, x).out; }
  Tensor<T> backward(const ParamMap<T>& p, const Tensor<T>& dy, ParamMap<T>& g) {
    return branch.backward(p, dy, Tensor<T>{}, g);
  }
};

template <typename T>
struct AttentionModule {
  std::size_t heads;
  AttentionCache<T> cache;
  static AttentionParams<T> params(const ParamMap<T>& p, std::size_t heads) {
    return {p.at("wq"), p.at("wk"), p.at("wv"), p.at("wo"), p.at("bo"), heads};
  }
  Tensor<T> forward(const ParamMap<T>& p, const Tensor<T>& x) { return attention(x, params(p, heads), &cache); }
  Tensor<T> backward(const ParamMap<T>& p, const Tensor<T>& dy, ParamMap<T>& g) {
    auto ag = attention_backward(params(p, heads), cache, dy);
    g["wq"] = ag.wq;
    g["wk"] = ag.wk;
    g["wv"] = ag.wv;
    g["wo"] = ag.wo;
    g["bo"] = ag.bo;
    return ag.tokens;
  }
};

template <typename T>
struct NetworkModule {
  BstNetwork<T> net;
  const MaskSet* masks;
  Tensor<T> forward(const ParamMap<T>& p, const Tensor<T>& y) { return net.forward(p, y, *masks); }
  Tensor<T> backward(const ParamMap<T>& p, const Tensor<T>& dy, ParamMap<T>& g) {
    return net.backward_to_measurement(p, dy, g, *masks);
  }
};

template <typename T>
std::vector<std::string> keys(const ParamMap<T>& p) {
  std::vector<std::string> k;
  for (const auto& [name, v] : p) k.push_back(name);
  return k;
}

template <typename T>
ParamMap<T> attention_param_shapes(std::size_t d) {
  ParamMap<T> p;
  for (const char* n : {"wq", "wk", "wv", "wo"}) p.emplace(n, init_truncated_normal<T>(Shape{d, d}, 0.5, 1, n));
  p.emplace("bo", Tensor<T>(Shape{d}));
  return p;
}

struct OpShapes {
  Shape input;
  std::size_t width;
  std::size_t partition;
};

}  // namespace

template <typename T>
void register_network_ops(OpRegistry<T>& reg, const NetworkConfig& cfg, const MaskSet& masks) {
  cfg.validate();
  const std::size_t w = cfg.branch_channels();
  const double slope = cfg.leaky_slope;
  const std::size_t heads = cfg.heads;

  reg.add(module_op<T, AttentionModule<T>>(
      "attention", [heads] { return AttentionModule<T>{heads, {}}; }, keys(attention_param_shapes<T>(w))));

  const std::pair<const char*, BranchKind> kinds[] = {
      {"lba", BranchKind::Local}, {"gsa", BranchKind::GlobalSparse}, {"gta", BranchKind::GlobalTemporal}};
  for (const auto& [tag, kind] : kinds) {
    const std::size_t part = kind == BranchKind::Local ? cfg.window : kind == BranchKind::GlobalSparse ? cfg.grid : 1;
    auto make = [=, name = std::string(tag)] {
      return BranchModule<T>{AttentionBranch<T>(name, kind, w, heads, part, slope)};
    };
    ParamMap<T> p;
    make().branch.init(p, 0);
    reg.add(module_op<T, BranchModule<T>>(tag, make, keys(p)));
  }

  {
    auto make = [=] { return FeedForward<T>("ffn", w, slope); };
    ParamMap<T> p;
    make().init(p, 0);
    reg.add(module_op<T, FeedForward<T>>("ffn", make, keys(p)));
  }
  {
    auto make = [=] { return BstBlock<T>("block", cfg); };
    ParamMap<T> p;
    make().init(p, 0);
    reg.add(module_op<T, BstBlock<T>>("block", make, keys(p)));
  }
  {
    auto make = [=] { return FeatureExtractor<T>("stem", cfg); };
    ParamMap<T> p;
    make().init(p, 0);
    reg.add(module_op<T, FeatureExtractor<T>>("feature_extract", make, keys(p)));
  }
  {
    auto make = [=] { return ReconstructionHead<T>("head", cfg); };
    ParamMap<T> p;
    make().init(p, 0);
    reg.add(module_op<T, ReconstructionHead<T>>("reconstruct_head", make, keys(p)));
  }
  {
    const MaskSet* mp = &masks;
    auto make = [=] { return NetworkModule<T>{BstNetwork<T>(cfg), mp}; };
    reg.add(module_op<T, NetworkModule<T>>("network", make, keys(BstNetwork<T>(cfg).init_params(0))));
  }
}

template void register_network_ops<float>(OpRegistry<float>&, const NetworkConfig&, const MaskSet&);
template void register_network_ops<double>(OpRegistry<double>&, const NetworkConfig&, const MaskSet&);

std::vector<Tensor<double>> network_op_point(const std::string& op, const NetworkConfig& cfg, const MaskSet& masks,
                                             std::uint64_t seed, double jitter) {
  cfg.validate();
  const std::size_t w = cfg.branch_channels();
  const std::size_t T = cfg.frames, fh = cfg.feature_height(), fw = cfg.feature_width();
  ParamMap<double> p;
  Shape input;
  if (op == "attention") {
    p = attention_param_shapes<double>(w);
    input = {3, 4, w};
  } else if (op == "lba" || op == "gsa" || op == "gta") {
    const BranchKind kind = op == "lba" ? BranchKind::Local : op == "gsa" ? BranchKind::GlobalSparse : BranchKind::GlobalTemporal;
    const std::size_t part = kind == BranchKind::Local ? cfg.window : kind == BranchKind::GlobalSparse ? cfg.grid : 1;
    AttentionBranch<double>(op, kind, w, cfg.heads, part, cfg.leaky_slope).init(p, seed);
    input = {T, fh, fw, w};
  } else if (op == "ffn") {
    FeedForward<double>("ffn", w, cfg.leaky_slope).init(p, seed);
    input = {T, fh, fw, w};
  } else if (op == "block") {
    BstBlock<double>("block", cfg).init(p, seed);
    input = {T, fh, fw, cfg.channels};
  } else if (op == "feature_extract") {
    FeatureExtractor<double>("stem", cfg).init(p, seed);
    input = {T, cfg.height, cfg.width, 1};
  } else if (op == "reconstruct_head") {
    ReconstructionHead<double>("head", cfg).init(p, seed);
    input = {T, fh, fw, cfg.channels};
  } else if (op == "network") {
    p = BstNetwork<double>(cfg).init_params(seed);
    input = {masks.height, masks.width};
  } else {
    throw std::invalid_argument("network_op_point: unknown op '" + op + "'");
  }

  const CounterRng rng(seed, name_hash(op));
  std::uint64_t draw = 0;
  std::vector<Tensor<double>> point;
  Tensor<double> x(input);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = op == "network" ? rng.uniform(draw++) : rng.normal(draw++);
  point.push_back(std::move(x));
  for (auto& [name, t] : p) {
    for (std::size_t i = 0; i < t.size(); ++i) t[i] += jitter * rng.normal(draw++);
    point.push_back(t);
  }
  return point;
}

}  // namespace ussci
