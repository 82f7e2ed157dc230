#include <fstream>

#include "doctest.h"
#include "support.hpp"
#include "ussci/core/parallel.hpp"
#include "ussci/core/stns.hpp"
#include "ussci/pipeline/augment.hpp"
#include "ussci/pipeline/dataset.hpp"
#include "ussci/pipeline/evaluate.hpp"
#include "ussci/pipeline/io.hpp"
#include "ussci/pipeline/synth.hpp"
#include "ussci/pipeline/train.hpp"

using namespace ussci;
using ussci::testing::Gen;

namespace {

double wrap(double v, double p) {
  double r = std::fmod(v, p);
  return r < 0 ? r + p : r;
}

TrainConfig quick(std::size_t steps) {
  TrainConfig c;
  c.steps = steps;
  c.batch = 2;
  c.seed = 5;
  return c;
}

}  // namespace

TEST_SUITE("pipeline-cli") {

TEST_CASE("mse loss examples") {
  Gen g(1);
  auto a = g.uniform_tensor<double>({3, 4, 5});
  CHECK(mse_loss(a, a) == 0.0);
  Tensor<double> b = a;
  for (auto& v : b.values()) v -= 0.1;
  CHECK(mse_loss(a, b) == doctest::Approx(0.01).epsilon(1e-12));
  auto c = g.uniform_tensor<double>({3, 4, 5});
  double want = 0;
  for (std::size_t i = 0; i < a.size(); ++i) want += (a[i] - c[i]) * (a[i] - c[i]);
  CHECK(std::abs(mse_loss(a, c) - want / 60) <= 1e-12);
  CHECK_THROWS_AS(mse_loss(a, g.uniform_tensor<double>({3, 4, 4})), ShapeError);
  auto grad = mse_loss_grad(a, c);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(grad[i] == doctest::Approx(2 * (a[i] - c[i]) / 60));
}

TEST_CASE("synthetic scenes") {
  SUBCASE("zero velocity gives identical frames") {
    for (auto kind : {SceneKind::MovingSquare, SceneKind::DriftingGradient, SceneKind::BouncingDot}) {
      auto v = synth_scene(kind, 4, 16, 16, 3, {0.0, 1.0});
      for (std::size_t t = 1; t < 4; ++t)
        for (std::size_t i = 0; i < 256; ++i) CHECK(v[t * 256 + i] == v[i]);
    }
  }
  SUBCASE("moving square follows its motion formula") {
    const std::size_t T = 8, H = 20, W = 24;
    auto m = square_motion(H, W, 9, 1.0);
    auto v = synth_scene(SceneKind::MovingSquare, T, H, W, 9);
    for (std::size_t t = 0; t < T; ++t) {
      const double top = std::floor(wrap(m.y0 + m.vy * t, H)), left = std::floor(wrap(m.x0 + m.vx * t, W));
      for (std::size_t h = 0; h < H; ++h)
        for (std::size_t w = 0; w < W; ++w) {
          const bool in = wrap(h - top, H) < m.side && wrap(w - left, W) < m.side;
          CHECK(v.at(t, h, w) == (in ? m.intensity : 0.15 + 0.1 * h / static_cast<double>(H)));
        }
    }
  }
  SUBCASE("seeds change the trajectory but not the range") {
    for (auto kind : {SceneKind::MovingSquare, SceneKind::DriftingGradient, SceneKind::BouncingDot}) {
      auto a = synth_scene(kind, 6, 16, 16, 1), b = synth_scene(kind, 6, 16, 16, 2);
      CHECK_FALSE(a == b);
      for (const auto* v : {&a, &b})
        for (double x : v->values()) {
          CHECK(x >= 0.0);
          CHECK(x <= 1.0);
        }
      CHECK(synth_scene(kind, 6, 16, 16, 1) == a);
    }
  }
  SUBCASE("level scales and names parse") {
    auto v = synth_scene(SceneKind::BouncingDot, 2, 8, 8, 1, {1.0, 0.5});
    for (double x : v.values()) CHECK(x <= 0.5);
    CHECK(parse_scene_kind(to_string(SceneKind::DriftingGradient)) == SceneKind::DriftingGradient);
    CHECK_THROWS(parse_scene_kind("spiral"));
  }
}

TEST_CASE("augmentation") {
  Gen g(2);
  auto clip = g.uniform_tensor<double>({3, 40, 44});
  AugmentConfig off{32, 32, false, false, false};
  auto c = augment(clip, off, 7);
  CHECK(c == crop(clip, 4, 6, 32, 32));
  CHECK(hflip(hflip(clip)) == clip);
  AugmentConfig on{32, 32, true, true, true};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto a = augment(clip, on, seed);
    CHECK(a.shape() == Shape{3, 32, 32});
    CHECK(a == augment(clip, on, seed));
  }
  CHECK_THROWS_AS(augment(g.uniform_tensor<double>({3, 20, 40}), on, 1), ShapeError);
  auto same = resize_bilinear(clip, 40, 44);
  CHECK(testing::max_abs(same, clip) <= 1e-12);
  CHECK(frame_window(clip, 1, 2).shape() == Shape{2, 40, 44});
  CHECK_THROWS_AS(frame_window(clip, 2, 2), ShapeError);
}

TEST_CASE("adam update") {
  ParamMap<double> p{{"w", Tensor<double>(Shape{2}, std::vector<double>{1.0, -1.0})}};
  ParamMap<double> g{{"w", Tensor<double>(Shape{2}, std::vector<double>{0.5, -2.0})}};
  Adam<double> opt;
  opt.step(p, g, 0.1);
  // first step: mhat = g, vhat = g^2, so the update is lr * sign(g) up to epsilon
  CHECK(p["w"][0] == doctest::Approx(0.9).epsilon(1e-7));
  CHECK(p["w"][1] == doctest::Approx(-0.9).epsilon(1e-7));
  CHECK(opt.steps() == 1);
}

TEST_CASE("train config validation and round trip") {
  TrainConfig c = quick(10);
  c.validate();
  CHECK(TrainConfig::from_kv(c.to_kv()).to_kv() == c.to_kv());
  c.learning_rate = -1;
  CHECK_THROWS(c.validate());
  c = quick(10);
  c.batch = 0;
  CHECK_THROWS(c.validate());
  c = quick(10);
  c.decay_every = 4;
  CHECK(c.rate_at(3) == c.learning_rate);
  CHECK(c.rate_at(4) == doctest::Approx(c.learning_rate * 0.5));
}

TEST_CASE("training with a zero learning rate leaves parameters unchanged") {
  auto net = NetworkConfig::tiny();
  auto masks = gen_uss(net.frames, net.height, net.width, 1);
  std::vector<VideoCube<double>> clips{synth_scene(SceneKind::MovingSquare, 4, 8, 8, 1)};
  TrainConfig c = quick(3);
  c.learning_rate = 0.0;
  Checkpoint init{net, BstNetwork<float>(net).init_params(2), 0, {}};
  auto r = train(clips, masks, net, c, init);
  CHECK_FALSE(r.diverged);
  CHECK(r.checkpoint.params == init.params);
  CHECK(r.checkpoint.loss_history.size() == 4);
}

TEST_CASE("training is deterministic single-threaded and reduces the loss") {
  set_num_threads(1);
  auto net = NetworkConfig::tiny();
  auto masks = gen_uss(net.frames, net.height, net.width, 1);
  std::vector<VideoCube<double>> clips{synth_scene(SceneKind::MovingSquare, 4, 8, 8, 1),
                                       synth_scene(SceneKind::BouncingDot, 4, 8, 8, 2)};
  TrainConfig c = quick(30);
  c.learning_rate = 3e-3;
  std::vector<double> seen;
  auto a = train(clips, masks, net, c, std::nullopt, [&](std::size_t, double l) { seen.push_back(l); });
  auto b = train(clips, masks, net, c);
  CHECK(a.checkpoint.loss_history == b.checkpoint.loss_history);
  CHECK(a.checkpoint.params == b.checkpoint.params);
  CHECK(encode_checkpoint(a.checkpoint) == encode_checkpoint(b.checkpoint));
  CHECK(seen.size() == 30);
  CHECK(a.checkpoint.step == 30);
  CHECK(a.checkpoint.loss_history.back() < a.checkpoint.loss_history.front());
}

TEST_CASE("training rejects unusable inputs") {
  auto net = NetworkConfig::tiny();
  auto masks = gen_uss(net.frames, net.height, net.width, 1);
  CHECK_THROWS(train({}, masks, net, quick(1)));
  CHECK_THROWS_AS(train({synth_scene(SceneKind::MovingSquare, 1, 8, 8, 1)}, masks, net, quick(1)), ShapeError);
  auto other = NetworkConfig::toy();
  Checkpoint wrong{other, BstNetwork<float>(other).init_params(0), 0, {}};
  CHECK_THROWS(train({synth_scene(SceneKind::MovingSquare, 4, 8, 8, 1)}, masks, net, quick(1), wrong));
}

TEST_CASE("training writes its checkpoint") {
  testing::TempDir dir("train");
  auto net = NetworkConfig::tiny();
  auto masks = gen_uss(net.frames, net.height, net.width, 1);
  TrainConfig c = quick(2);
  c.checkpoint_path = dir / "c.sckp";
  auto r = train({synth_scene(SceneKind::MovingSquare, 4, 8, 8, 1)}, masks, net, c);
  auto back = load_checkpoint(c.checkpoint_path);
  CHECK(back.params == r.checkpoint.params);
  CHECK(back.loss_history == r.checkpoint.loss_history);
}

TEST_CASE("PNG frames round trip through 8-bit codes") {
  testing::TempDir dir("png");
  Gen g(3);
  VideoCube<double> v(Shape{3, 5, 7});
  for (auto& x : v.values()) x = static_cast<double>(g.range(0, 255)) / 255.0;
  write_png_frames(dir / "clip", v);
  ClipEntry clip{"c", dir / "clip", Split::Train};
  scan_clip(clip);
  CHECK(clip.frames == 3);
  CHECK(clip.height == 5);
  CHECK(clip.width == 7);
  auto back = load_clip(clip);
  CHECK(testing::max_abs(back, v) <= 1e-12);
  CHECK_THROWS(load_clip(clip, 4));
  CHECK(load_video(dir / "clip") == back);
}

TEST_CASE("PNG reader converts colour with Rec. 601 luma") {
  // hand-written 1x1 RGB PNG (255, 0, 0)
  const unsigned char red[] = {0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d, 0x49, 0x48,
                               0x44, 0x52, 0x00, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x01, 0x08, 0x02, 0x00, 0x00,
                               0x00, 0x90, 0x77, 0x53, 0xde, 0x00, 0x00, 0x00, 0x0c, 0x49, 0x44, 0x41, 0x54, 0x78,
                               0x9c, 0x63, 0xf8, 0xcf, 0xc0, 0x00, 0x00, 0x03, 0x01, 0x01, 0x00, 0xc9, 0xfe, 0x92,
                               0xef, 0x00, 0x00, 0x00, 0x00, 0x49, 0x45, 0x4e, 0x44, 0xae, 0x42, 0x60, 0x82};
  testing::TempDir dir("rgb");
  {
    std::ofstream f(dir / "red.png", std::ios::binary);
    f.write(reinterpret_cast<const char*>(red), sizeof red);
  }
  auto img = read_png_gray(dir / "red.png");
  REQUIRE(img.shape() == Shape{1, 1});
  CHECK(img[0] == doctest::Approx(0.299).epsilon(1e-9));
  {
    std::ofstream f(dir / "junk.png", std::ios::binary);
    f << "not a png";
  }
  CHECK_THROWS(read_png_gray(dir / "junk.png"));
}

TEST_CASE("dataset manifest") {
  testing::TempDir dir("manifest");
  write_png_frames(dir / "a", synth_scene(SceneKind::MovingSquare, 4, 8, 8, 1));
  write_png_frames(dir / "b", synth_scene(SceneKind::BouncingDot, 4, 8, 8, 1));
  write_text_atomic(dir / "m.txt", "# clips\na a train\nb b test\n");
  auto m = load_manifest(dir / "m.txt");
  REQUIRE(m.clips.size() == 2);
  CHECK(m.split(Split::Train).size() == 1);
  CHECK(m.split(Split::Test)[0].name == "b");
  CHECK(m.clips[0].directory == dir / "a");
  write_text_atomic(dir / "bad.txt", "a a validation\n");
  CHECK_THROWS(load_manifest(dir / "bad.txt"));
  write_text_atomic(dir / "short.txt", "a\n");
  CHECK_THROWS(load_manifest(dir / "short.txt"));
}

TEST_CASE("clips with mixed frame sizes are rejected") {
  testing::TempDir dir("mixed");
  std::filesystem::create_directories(dir / "c");
  write_png_gray(dir / "c" / "frame_000.png", Tensor<double>(Shape{4, 4}, 0.5));
  write_png_gray(dir / "c" / "frame_001.png", Tensor<double>(Shape{4, 5}, 0.5));
  ClipEntry clip{"c", dir / "c", Split::Train};
  CHECK_THROWS(scan_clip(clip));
}

TEST_CASE("measurement files keep their quantisation record") {
  testing::TempDir dir("meas");
  auto m = gen_rs(4, 8, 8, 0.5, 1);
  auto y = quantize(encode(synth_scene(SceneKind::DriftingGradient, 4, 8, 8, 1), m), QuantSpec{10, 2.0, 1.5});
  save_measurement(y, dir / "y.stns");
  auto back = load_measurement(dir / "y.stns");
  CHECK(back.values == y.values);
  CHECK(back.quantized);
  CHECK(back.quant.bits == 10);
  CHECK(back.quant.full_scale == 2.0);
  CHECK(back.quant.gain == 1.5);
  CHECK(back.saturation_fraction == y.saturation_fraction);
  auto v = synth_scene(SceneKind::MovingSquare, 2, 6, 6, 1);
  save_video(v, dir / "v.stns");
  CHECK(load_video(dir / "v.stns") == v);
}

TEST_CASE("dynrange report invariants") {
  // per-frame values stay below full scale / gain for the smaller gains
  auto scene = synth_scene(SceneKind::DriftingGradient, 10, 16, 16, 1, {1.0, 0.8});
  DynrangeConfig cfg;
  cfg.gains = {0.25, 0.5, 1.0, 1.2, 2.0, 4.0};
  cfg.seed = 3;
  GapTvConfig gap;
  gap.iterations = 10;
  auto rows = dynrange_experiment(scene, cfg, gap_tv_decoder(gap), gap_tv_decoder(gap));
  REQUIRE(rows.size() == cfg.gains.size());
  double xmax = 0;
  for (double v : scene.values()) xmax = std::max(xmax, v);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (xmax <= cfg.quant.full_scale / rows[i].gain) CHECK(rows[i].uss_saturation == 0.0);
    if (i) CHECK(rows[i].rs_saturation >= rows[i - 1].rs_saturation);
  }
  CHECK(rows.back().rs_saturation > 0.3);
  CHECK_FALSE(format_dynrange(rows).empty());
  cfg.gains = {1.0, 0.5};
  CHECK_THROWS(dynrange_experiment(scene, cfg, gap_tv_decoder(gap), gap_tv_decoder(gap)));
}

}  // TEST_SUITE
