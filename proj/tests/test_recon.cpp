#include <numeric>
#include "doctest.h"
#include "support.hpp"
#include "ussci/pipeline/evaluate.hpp"
#include "ussci/net/network.hpp"
#include "ussci/pipeline/synth.hpp"
#include "ussci/recon/gaptv.hpp"
#include "ussci/recon/metrics.hpp"

using namespace ussci;
using ussci::testing::Gen;

namespace {

Tensor<double> rot90(const Tensor<double>& a) {
  const std::size_t T = a.dim(0), H = a.dim(1), W = a.dim(2);
  Tensor<double> b(Shape{T, W, H});
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t w = 0; w < W; ++w) b.at(t, W - 1 - w, h) = a.at(t, h, w);
  return b;
}

}  // namespace

TEST_SUITE("recon-metrics") {

TEST_CASE("psnr examples") {
  Gen g(1);
  auto a = g.uniform_tensor<double>({3, 8, 8});
  CHECK(psnr(a, a) == kPsnrCap);
  Tensor<double> b = a;
  for (auto& v : b.values()) v += 0.1;
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-12));
  auto c = g.uniform_tensor<double>({3, 8, 8});
  double want = 0;
  for (std::size_t t = 0; t < 3; ++t) {
    double mse = 0;
    for (std::size_t i = 0; i < 64; ++i) {
      const double d = a[t * 64 + i] - c[t * 64 + i];
      mse += d * d;
    }
    want += 10.0 * std::log10(1.0 / (mse / 64)) / 3;
  }
  CHECK(std::abs(psnr(a, c) - want) <= 1e-9);
  CHECK(psnr(a, c) >= 0.0);
  CHECK_THROWS_AS(psnr(a, g.uniform_tensor<double>({3, 8, 7})), ShapeError);
  CHECK(psnr(Tensor<double>(Shape{4, 4}, 0.5), Tensor<double>(Shape{4, 4}, 0.4)) == doctest::Approx(20.0));
}

TEST_CASE("psnr falls as noise grows") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Gen g(seed, 2);
    auto a = g.uniform_tensor<double>({2, 16, 16});
    auto n = g.normal_tensor<double>({2, 16, 16});
    double last = kPsnrCap + 1;
    for (double sigma : {0.001, 0.003, 0.01, 0.03, 0.1, 0.3}) {
      Tensor<double> b = a;
      for (std::size_t i = 0; i < b.size(); ++i) b[i] += sigma * n[i];
      const double p = psnr(a, b);
      CHECK(p < last);
      last = p;
    }
  }
}

TEST_CASE("ssim examples") {
  Gen g(3);
  auto a = g.uniform_tensor<double>({2, 16, 16});
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  Tensor<double> bin(Shape{1, 16, 16}), inv(Shape{1, 16, 16});
  for (std::size_t i = 0; i < bin.size(); ++i) {
    bin[i] = g.coin() ? 1.0 : 0.0;
    inv[i] = 1.0 - bin[i];
  }
  CHECK(ssim(bin, inv) < 0.2);
  auto b = g.uniform_tensor<double>({2, 16, 16});
  CHECK(std::abs(ssim(a, b) - ssim(b, a)) <= 1e-12);
  CHECK(ssim(a, b) >= -1.0);
  CHECK(ssim(a, b) <= 1.0);
  CHECK_THROWS_AS(ssim(g.uniform_tensor<double>({1, 10, 16}), g.uniform_tensor<double>({1, 10, 16})), ShapeError);
}

TEST_CASE("metrics are invariant under a shared rigid transform") {
  Gen g(4);
  auto a = g.uniform_tensor<double>({2, 16, 20});
  auto b = g.uniform_tensor<double>({2, 16, 20});
  CHECK(std::abs(psnr(rot90(a), rot90(b)) - psnr(a, b)) <= 1e-12);
  CHECK(std::abs(ssim(rot90(a), rot90(b)) - ssim(a, b)) <= 1e-12);

  // PSNR only depends on the per-frame error multiset
  std::vector<std::size_t> perm(320);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[g.range(0, i)]);
  Tensor<double> pa(a.shape()), pb(b.shape());
  for (std::size_t t = 0; t < 2; ++t)
    for (std::size_t i = 0; i < 320; ++i) {
      pa[t * 320 + perm[i]] = a[t * 320 + i];
      pb[t * 320 + perm[i]] = b[t * 320 + i];
    }
  CHECK(std::abs(psnr(pa, pb) - psnr(a, b)) <= 1e-12);
}

TEST_CASE("gap-tv with one all-ones frame returns the measurement") {
  Gen g(5);
  auto m = gen_uss(1, 8, 8, 1);
  auto x = g.uniform_tensor<double>({1, 8, 8});
  auto y = encode(x, m);
  auto out = gap_tv_decode(y, m);
  CHECK(testing::max_abs(out, x) <= 1e-12);
}

TEST_CASE("every gap-tv projection restores measurement consistency") {
  Gen g(6);
  for (const MaskSet& m : {gen_uss(6, 16, 16, 2), gen_rs(6, 16, 16, 0.5, 2)}) {
    auto x = g.uniform_tensor<double>({6, 16, 16});
    auto y = encode(x, m).values;
    std::size_t calls = 0;
    GapTvConfig cfg;
    cfg.iterations = 20;
    auto res = gap_tv(y, m, cfg, [&](std::size_t, const VideoCube<double>& it) {
      ++calls;
      CHECK(testing::max_abs(encode(it, m).values, y) <= 1e-6);
    });
    CHECK(calls == 20);
    REQUIRE(res.projection_residual.size() == 20);
    REQUIRE(res.denoise_residual.size() == 20);
    for (double r : res.projection_residual) CHECK(r <= 1e-6);
    for (double r : res.denoise_residual) CHECK(std::isfinite(r));
    for (double v : res.video.values()) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("gap-tv with acceleration stays consistent") {
  Gen g(7);
  auto m = gen_uss(4, 16, 16, 3);
  auto y = encode(g.uniform_tensor<double>({4, 16, 16}), m).values;
  GapTvConfig cfg;
  cfg.iterations = 10;
  cfg.acceleration = true;
  cfg.temporal_tv = true;
  auto res = gap_tv(y, m, cfg);
  CHECK(res.video.all_finite());
  CHECK_THROWS(gap_tv(Tensor<double>(Shape{8, 8}), m));
  cfg.iterations = 0;
  CHECK_THROWS(gap_tv(y, m, cfg));
}

TEST_CASE("gap-tv beats the coarse estimate on the moving square") {
  auto m = gen_uss(8, 32, 32, 7);
  for (std::uint64_t seed : {1, 2, 3}) {
    auto x = synth_scene(SceneKind::MovingSquare, 8, 32, 32, seed);
    auto y = encode(x, m);
    const double coarse = psnr(coarse_estimate(y.values, m), x);
    const double gap = psnr(gap_tv_decode(y, m), x);
    MESSAGE("seed " << seed << ": coarse " << coarse << " dB, gap-tv " << gap << " dB");
    CHECK(gap >= coarse + 2.0);
  }
}

TEST_CASE("tv denoising with zero weight is the identity") {
  Gen g(8);
  auto x = g.uniform_tensor<double>({2, 6, 6});
  CHECK(testing::max_abs(tv_denoise(x, 0.0, 5, true), x) <= 1e-15);
  auto flat = tv_denoise(Tensor<double>(Shape{2, 6, 6}, 0.4), 0.3, 5, false);
  CHECK(testing::max_abs(flat, Tensor<double>(Shape{2, 6, 6}, 0.4)) <= 1e-15);
}

TEST_CASE("network decode") {
  auto cfg = NetworkConfig::toy();
  Checkpoint ck{cfg, BstNetwork<float>(cfg).init_params(4), 0, {}};
  auto m = gen_uss(cfg.frames, cfg.height, cfg.width, 5);
  auto x = synth_scene(SceneKind::BouncingDot, cfg.frames, cfg.height, cfg.width, 1);
  auto y = encode(x, m);
  auto a = decode(y, m, ck);
  CHECK(a == decode(y, m, ck));
  CHECK(a.shape() == x.shape());
  for (double v : a.values()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  auto q = quantize(y, QuantSpec{});
  CHECK(decode(q, m, ck).shape() == x.shape());
  auto small = gen_uss(cfg.frames, 16, 16, 5);
  CHECK_THROWS_AS(decode(encode(synth_scene(SceneKind::BouncingDot, cfg.frames, 16, 16, 1), small), small, ck),
                  ShapeError);
}

TEST_CASE("evaluation table") {
  auto m = gen_uss(4, 16, 16, 1);
  std::vector<EvalClip> clips{{"a", synth_scene(SceneKind::MovingSquare, 4, 16, 16, 1)},
                              {"b", synth_scene(SceneKind::DriftingGradient, 4, 16, 16, 2)}};
  auto table = evaluate(clips, m, [&](const Measurement<double>& y, const MaskSet& masks) {
    for (const auto& c : clips) {
      if (encode(c.video, masks).values == y.values) return c.video;
    }
    return VideoCube<double>(Shape{4, 16, 16});
  }, "truth");
  REQUIRE(table.rows.size() == clips.size() + 1);
  CHECK(table.rows.back().name == "average");
  for (const auto& r : table.rows) {
    CHECK(r.psnr == kPsnrCap);
    CHECK(r.ssim == doctest::Approx(1.0));
  }
  CHECK(table.method == "truth");
  CHECK_FALSE(format_table(table).empty());
  auto gap = evaluate(clips, m, gap_tv_decoder(), "gap-tv");
  CHECK(gap.rows.size() == 3);
  CHECK(gap.rows[2].psnr == doctest::Approx((gap.rows[0].psnr + gap.rows[1].psnr) / 2));
}

}  // TEST_SUITE
