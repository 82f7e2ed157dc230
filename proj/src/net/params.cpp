#include "ussci/net/params.hpp"

#include "ussci/core/random.hpp"

namespace ussci {

std::uint64_t name_hash(const std::string& name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <typename T>
Tensor<T> init_truncated_normal(const Shape& shape, double stddev, std::uint64_t seed, const std::string& name) {
  Tensor<T> t(shape);
  const CounterRng rng(seed, name_hash(name));
  std::uint64_t draw = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    double z = rng.normal(draw++);
    while (std::abs(z) > 2.0) z = rng.normal(draw++);
    t[i] = static_cast<T>(z * stddev);
  }
  return t;
}

template <typename T>
Tensor<T> init_uniform(const Shape& shape, double bound, std::uint64_t seed, const std::string& name) {
  Tensor<T> t(shape);
  const CounterRng rng(seed, name_hash(name));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>((2.0 * rng.uniform(i) - 1.0) * bound);
  return t;
}

template Tensor<float> init_truncated_normal<float>(const Shape&, double, std::uint64_t, const std::string&);
template Tensor<double> init_truncated_normal<double>(const Shape&, double, std::uint64_t, const std::string&);
template Tensor<float> init_uniform<float>(const Shape&, double, std::uint64_t, const std::string&);
template Tensor<double> init_uniform<double>(const Shape&, double, std::uint64_t, const std::string&);

}  // namespace ussci
