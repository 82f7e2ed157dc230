#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "ussci/core/tensor.hpp"

namespace ussci {

/// Named parameters in a deterministic (sorted) order.
template <typename T>
using ParamMap = std::map<std::string, Tensor<T>>;

template <typename T>
const Tensor<T>& param(const ParamMap<T>& p, const std::string& name) {
  auto it = p.find(name);
  if (it == p.end()) throw std::invalid_argument("missing parameter '" + name + "'");
  return it->second;
}

/// grads[name] += g, creating the entry on first use.
template <typename T>
void accumulate(ParamMap<T>& grads, const std::string& name, const Tensor<T>& g) {
  auto it = grads.find(name);
  if (it == grads.end()) {
    grads.emplace(name, g);
  } else {
    add_inplace(it->second, g);
  }
}

template <typename T>
std::size_t parameter_count(const ParamMap<T>& p) {
  std::size_t n = 0;
  for (const auto& [k, v] : p) n += v.size();
  return n;
}

template <typename U, typename T>
ParamMap<U> cast_params(const ParamMap<T>& p) {
  ParamMap<U> out;
  for (const auto& [k, v] : p) out.emplace(k, v.template cast<U>());
  return out;
}

std::uint64_t name_hash(const std::string& name);

// Initializers draw from a counter RNG keyed by (seed, parameter name).
template <typename T>
Tensor<T> init_truncated_normal(const Shape& shape, double stddev, std::uint64_t seed, const std::string& name);
template <typename T>
Tensor<T> init_uniform(const Shape& shape, double bound, std::uint64_t seed, const std::string& name);

}  // namespace ussci
