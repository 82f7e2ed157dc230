#include "doctest.h"
#include "support.hpp"
#include "ussci/reference.hpp"
#include "ussci/sensing.hpp"

using namespace ussci;
using ussci::testing::Gen;

namespace {

MaskSet masks_from(MaskScheme scheme, std::size_t T, std::size_t H, std::size_t W, std::vector<float> v) {
  MaskSet m;
  m.scheme = scheme;
  m.frames = T;
  m.height = H;
  m.width = W;
  m.planes = Tensor<float>(Shape{T, H, W}, std::move(v));
  return m;
}

Tensor<double> video(std::size_t T, std::size_t H, std::size_t W, std::vector<double> v) {
  return Tensor<double>(Shape{T, H, W}, std::move(v));
}

}  // namespace

TEST_SUITE("sensing") {

TEST_CASE("encode selects and sums") {
  auto x = video(2, 1, 1, {0.3, 0.5});
  auto uss = masks_from(MaskScheme::USS, 2, 1, 1, {1, 0});
  CHECK(encode(x, uss).values[0] == 0.3);
  auto rs = masks_from(MaskScheme::RS, 2, 1, 1, {1, 1});
  CHECK(encode(x, rs).values[0] == doctest::Approx(0.8));
}

TEST_CASE("encode matches the per-pixel loop oracle") {
  Gen g(1);
  auto m = gen_rs(4, 4, 4, 0.5, 2);
  auto x = g.uniform_tensor<double>({4, 4, 4});
  CHECK(encode(x, m).values == reference::encode(x, m));
  CHECK_THROWS_AS(encode(g.uniform_tensor<double>({3, 4, 4}), m), ShapeError);
}

TEST_CASE("noise is reproducible from its seed") {
  Gen g(2);
  auto m = gen_uss(3, 6, 6, 1);
  auto x = g.uniform_tensor<double>({3, 6, 6});
  auto a = encode(x, m, NoiseModel::gaussian(0.05, 9));
  auto b = encode(x, m, NoiseModel::gaussian(0.05, 9));
  auto c = encode(x, m, NoiseModel::gaussian(0.05, 10));
  CHECK(a.values == b.values);
  CHECK_FALSE(a.values == c.values);
  CHECK_FALSE(a.values == encode(x, m).values);
}

TEST_CASE("quantize examples") {
  // ten frames at code 100 of 255
  const std::size_t T = 10, H = 32, W = 32;
  VideoCube<double> x(Shape{T, H, W}, 100.0 / 255.0);
  QuantSpec q;
  auto rs = quantize(encode(x, gen_rs(T, H, W, 0.5, 4)), q);
  CHECK(rs.saturation_fraction > 0.9);
  auto uss = quantize(encode(x, gen_uss(T, H, W, 4)), q);
  CHECK(uss.saturation_fraction == 0.0);
  for (double v : uss.values.values()) CHECK(v == 100.0);
  q.gain = 0.0;
  auto dark = quantize(encode(x, gen_rs(T, H, W, 0.5, 4)), q);
  for (double v : dark.values.values()) CHECK(v == 0.0);
  CHECK(dark.saturation_fraction == 0.0);
}

TEST_CASE("quantized codes never exceed full scale") {
  Gen g(3);
  auto m = gen_rs(6, 8, 8, 0.5, 3);
  auto y = encode(g.uniform_tensor<double>({6, 8, 8}), m);
  for (int bits : {8, 10, 12, 16}) {
    QuantSpec q;
    q.bits = bits;
    q.gain = 2.0;
    auto c = quantize(y, q);
    for (double v : c.values.values()) {
      CHECK(v >= 0.0);
      CHECK(v <= q.max_code());
      CHECK(v == std::round(v));
    }
  }
  QuantSpec bad;
  bad.bits = 9;
  CHECK_THROWS(quantize(y, bad));
}

TEST_CASE("dequantize inverts quantize up to half a code") {
  Gen g(4);
  auto m = gen_uss(4, 8, 8, 3);
  auto y = encode(g.uniform_tensor<double>({4, 8, 8}), m);
  QuantSpec q;
  q.gain = 0.5;
  auto back = dequantize(quantize(y, q));
  CHECK_FALSE(back.quantized);
  const double half = 0.5 / q.max_code() * q.full_scale / q.gain;
  for (std::size_t i = 0; i < y.values.size(); ++i) CHECK(std::abs(back.values[i] - y.values[i]) <= half + 1e-12);
}

TEST_CASE("sensing matrix examples") {
  SUBCASE("single all-ones mask acts as the identity") {
    auto m = gen_uss(1, 4, 4, 1);
    auto phi = build_sensing_matrix(m);
    std::vector<double> x(16);
    for (std::size_t i = 0; i < 16; ++i) x[i] = 0.1 * i;
    CHECK(phi.apply(x) == x);
    CHECK(vectorized_encode(x, phi) == x);
  }
  SUBCASE("USS gram matrix is the identity") {
    auto phi = build_sensing_matrix(gen_uss(3, 4, 4, 2));
    auto dense = phi.to_dense();
    const std::size_t n = 16, cols = 48;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0;
        for (std::size_t k = 0; k < cols; ++k) s += dense[i * cols + k] * dense[j * cols + k];
        CHECK(s == (i == j ? 1.0 : 0.0));
      }
  }
  SUBCASE("RS gram matrix is diagonal with the active-frame counts") {
    auto m = gen_rs(3, 4, 4, 0.5, 5);
    auto phi = build_sensing_matrix(m);
    auto dense = phi.to_dense();
    auto cov = m.coverage();
    const std::size_t n = 16, cols = 48;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0;
        for (std::size_t k = 0; k < cols; ++k) s += dense[i * cols + k] * dense[j * cols + k];
        CHECK(s == (i == j ? static_cast<double>(cov[i]) : 0.0));
      }
    auto gd = phi.gram_diagonal();
    for (std::size_t i = 0; i < n; ++i) CHECK(gd[i] == cov[i]);
  }
  SUBCASE("dense form is refused for large planes") {
    CHECK_THROWS(build_sensing_matrix(gen_uss(2, 65, 64, 1)).to_dense());
  }
}

TEST_CASE("vectorized encode agrees with encode") {
  Gen g(5);
  auto m = gen_rs(4, 8, 8, 0.5, 6);
  auto x = g.uniform_tensor<double>({4, 8, 8});
  auto phi = build_sensing_matrix(m);
  auto y = vectorized_encode(vectorize(x), phi);
  CHECK(y == vectorize(encode(x, m).values));
  auto noise = NoiseModel::gaussian(0.01, 3);
  CHECK(vectorized_encode(vectorize(x), phi, noise) == vectorize(encode(x, m, noise).values));
  std::vector<double> zero(4 * 64, 0.0);
  for (double v : vectorized_encode(zero, phi)) CHECK(v == 0.0);
  CHECK_THROWS_AS(vectorized_encode(std::vector<double>(10), phi), ShapeError);
}

TEST_CASE("transpose of the sensing matrix") {
  Gen g(6);
  auto phi = build_sensing_matrix(gen_rs(3, 5, 5, 0.5, 7));
  std::vector<double> x(75), y(25);
  for (auto& v : x) v = g.normal();
  for (auto& v : y) v = g.normal();
  auto px = phi.apply(x);
  auto pty = phi.apply_transpose(y);
  double a = 0, b = 0;
  for (std::size_t i = 0; i < 25; ++i) a += px[i] * y[i];
  for (std::size_t i = 0; i < 75; ++i) b += x[i] * pty[i];
  CHECK(std::abs(a - b) <= 1e-12);
}

TEST_CASE("USS decomposition") {
  Gen g(7);
  auto m = gen_uss(5, 6, 7, 8);
  auto x = g.uniform_tensor<double>({5, 6, 7});
  auto y = encode(x, m);
  auto parts = decompose_uss(y, m);
  REQUIRE(parts.size() == 5);
  Tensor<double> sum(Shape{6, 7});
  for (std::size_t t = 0; t < 5; ++t) {
    add_inplace(sum, parts[t]);
    for (std::size_t h = 0; h < 6; ++h)
      for (std::size_t w = 0; w < 7; ++w) CHECK(parts[t].at(h, w) == x.at(t, h, w) * m.at(t, h, w));
  }
  CHECK(sum == y.values);

  auto one = gen_uss(1, 3, 3, 1);
  auto y1 = encode(g.uniform_tensor<double>({1, 3, 3}), one);
  auto p1 = decompose_uss(y1, one);
  REQUIRE(p1.size() == 1);
  CHECK(p1[0] == y1.values);

  auto rs = gen_rs(5, 6, 7, 0.5, 8);
  CHECK_THROWS_AS(decompose_uss(encode(x, rs), rs), std::invalid_argument);
  auto deg = degrade(m, 0.5, 0, 0);
  CHECK_THROWS_AS(decompose_uss(y, deg), std::invalid_argument);
}

TEST_CASE("coarse estimate examples") {
  auto uss = masks_from(MaskScheme::USS, 2, 1, 1, {1, 0});
  auto xe = coarse_estimate(Tensor<double>(Shape{1, 1}, std::vector<double>{0.3}), uss);
  CHECK(xe[0] == doctest::Approx(0.6));
  CHECK(xe[1] == 0.3);

  auto rs = masks_from(MaskScheme::RS, 2, 1, 1, {1, 1});
  auto xr = coarse_estimate(Tensor<double>(Shape{1, 1}, std::vector<double>{0.8}), rs);
  CHECK(xr[0] == doctest::Approx(0.8));
  CHECK(xr[1] == doctest::Approx(0.8));

  // zero coverage: the clamp keeps the estimate finite
  auto none = masks_from(MaskScheme::RS, 2, 1, 1, {0, 0});
  auto xn = coarse_estimate(Tensor<double>(Shape{1, 1}, std::vector<double>{0.0}), none);
  CHECK(xn.all_finite());
}

TEST_CASE("ideal USS coarse estimate is Y*M + Y exactly") {
  Gen g(8);
  auto m = gen_uss(4, 8, 8, 9);
  auto y = encode(g.uniform_tensor<double>({4, 8, 8}), m).values;
  auto xe = coarse_estimate(y, m);
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t h = 0; h < 8; ++h)
      for (std::size_t w = 0; w < 8; ++w) CHECK(xe.at(t, h, w) == y.at(h, w) * m.at(t, h, w) + y.at(h, w));
}

TEST_CASE("coarse estimate backward is the adjoint") {
  Gen g(9);
  auto m = gen_rs(3, 5, 5, 0.5, 1);
  auto y = g.normal_tensor<double>({5, 5});
  auto u = g.normal_tensor<double>({3, 5, 5});
  const double a = dot(coarse_estimate(y, m), u), b = dot(y, coarse_estimate_backward(m, u));
  CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)));
}

TEST_CASE("noiseless encode is linear") {
  Gen g(10);
  auto m = gen_rs(4, 6, 6, 0.5, 2);
  auto x1 = g.uniform_tensor<double>({4, 6, 6}), x2 = g.uniform_tensor<double>({4, 6, 6});
  const double a = 0.7, b = -1.3;
  Tensor<double> mix(x1.shape());
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = a * x1[i] + b * x2[i];
  auto lhs = encode(mix, m).values;
  auto y1 = encode(x1, m).values, y2 = encode(x2, m).values;
  for (std::size_t i = 0; i < lhs.size(); ++i) CHECK(std::abs(lhs[i] - (a * y1[i] + b * y2[i])) <= 1e-6);
}

TEST_CASE("USS never multiplexes while RS can") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Gen g(seed, 12);
    const std::size_t T = g.range(2, 9);
    auto x = g.uniform_tensor<double>({T, 6, 6});
    double xmax = 0;
    for (double v : x.values()) xmax = std::max(xmax, v);
    auto y = encode(x, gen_uss(T, 6, 6, seed)).values;
    for (double v : y.values()) CHECK(v <= xmax);
  }
  auto rs = masks_from(MaskScheme::RS, 2, 1, 1, {1, 1});
  auto y = encode(video(2, 1, 1, {0.9, 0.9}), rs).values;
  CHECK(y[0] > 0.9);
}

}  // TEST_SUITE
