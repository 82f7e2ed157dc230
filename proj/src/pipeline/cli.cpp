#include "ussci/pipeline/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <iostream>
#include <sstream>

#include "ussci/core/kv.hpp"
#include "ussci/core/parallel.hpp"
#include "ussci/core/stns.hpp"
#include "ussci/masking.hpp"
#include "ussci/net/checkpoint.hpp"
#include "ussci/net/flops.hpp"
#include "ussci/pipeline/augment.hpp"
#include "ussci/pipeline/dataset.hpp"
#include "ussci/pipeline/evaluate.hpp"
#include "ussci/pipeline/io.hpp"
#include "ussci/pipeline/synth.hpp"
#include "ussci/pipeline/train.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace ussci {
namespace {

struct Common {
  int threads = 0;
  std::string record;
};

// Every subcommand fills one of these; the dispatcher adds timing and writes it.
struct Run {
  std::string command;
  json inputs = json::object();
  json seeds = json::object();
  json results = json::object();
  fs::path default_record;
};

std::vector<std::pair<SceneKind, std::uint64_t>> parse_scene_list(const std::string& text) {
  std::vector<std::pair<SceneKind, std::uint64_t>> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto colon = item.find(':');
    const SceneKind kind = parse_scene_kind(item.substr(0, colon));
    std::uint64_t seed = 0;
    if (colon != std::string::npos) {
      KeyValues kv{{"seed", item.substr(colon + 1)}};
      kv_read(kv, "seed", seed);
    }
    out.emplace_back(kind, seed);
  }
  if (out.empty()) throw std::invalid_argument("empty scene list");
  return out;
}

std::vector<double> parse_numbers(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v = 0;
    KeyValues kv{{"value", item}};
    kv_read(kv, "value", v);
    out.push_back(v);
  }
  return out;
}

KeyValues read_kv_file(const std::string& path) {
  if (path.empty()) return {};
  try {
    return parse_kv(read_text_file(path));
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

// Clips cut to the mask extents: first T frames, centre crop.
std::vector<EvalClip> eval_clips(const std::string& manifest, const std::string& scenes, const MaskSet& m) {
  std::vector<EvalClip> clips;
  auto fit = [&](const std::string& name, VideoCube<double> v) {
    if (v.dim(0) < m.frames || v.dim(1) < m.height || v.dim(2) < m.width) {
      throw ShapeError("clip '" + name + "' " + shape_string(v.shape()) + " is smaller than the masks " +
                       std::to_string(m.frames) + "x" + std::to_string(m.height) + "x" + std::to_string(m.width));
    }
    v = frame_window(v, 0, m.frames);
    v = crop(v, (v.dim(1) - m.height) / 2, (v.dim(2) - m.width) / 2, m.height, m.width);
    clips.push_back({name, std::move(v)});
  };
  if (!manifest.empty()) {
    const auto ds = load_manifest(manifest);
    auto test = ds.split(Split::Test);
    if (test.empty()) test = ds.clips;
    for (const auto& c : test) fit(c.name, load_clip(c, m.frames));
  } else {
    for (const auto& [kind, seed] : parse_scene_list(scenes)) {
      fit(to_string(kind) + ":" + std::to_string(seed), synth_scene(kind, m.frames, m.height, m.width, seed));
    }
  }
  return clips;
}

json table_json(const EvalTable& t) {
  json rows = json::array();
  for (const auto& r : t.rows) rows.push_back({{"name", r.name}, {"psnr", r.psnr}, {"ssim", r.ssim}, {"runtime_seconds", r.seconds}});
  return {{"method", t.method}, {"rows", rows}};
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"ussci: video snapshot compressive imaging toolkit", "ussci"};
  app.set_help_flag("--help", "Print this help message and exit");  // -h is free for --h (height)
  app.fallthrough();
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Common common;
  app.add_option("--threads", common.threads, "OpenMP threads (1 = deterministic serial mode, 0 = runtime default)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--record", common.record, "path of the JSON run record (default: next to the output)");

  Run run;
  std::function<void()> action;

  // gen-masks
  struct {
    std::string scheme, out;
    std::size_t t = 0, h = 0, w = 0;
    std::uint64_t seed = 0;
    double density = 0.5, blur = 0.0, shift_y = 0.0, shift_x = 0.0;
  } gm;
  auto* c_gm = app.add_subcommand("gen-masks", "generate an RS or USS mask set");
  c_gm->add_option("--scheme", gm.scheme, "rs | uss")->required()->check(CLI::IsMember({"rs", "uss", "RS", "USS"}));
  c_gm->add_option("--t", gm.t, "frames")->required()->check(CLI::PositiveNumber);
  c_gm->add_option("--h", gm.h, "height")->required()->check(CLI::PositiveNumber);
  c_gm->add_option("--w", gm.w, "width")->required()->check(CLI::PositiveNumber);
  c_gm->add_option("--seed", gm.seed, "mask seed");
  c_gm->add_option("--density", gm.density, "RS fill probability")->check(CLI::Range(0.0, 1.0));
  c_gm->add_option("--blur", gm.blur, "Gaussian blur sigma in pixels (makes the set non-ideal)")->check(CLI::NonNegativeNumber);
  c_gm->add_option("--shift-y", gm.shift_y, "sub-pixel misalignment along H");
  c_gm->add_option("--shift-x", gm.shift_x, "sub-pixel misalignment along W");
  c_gm->add_option("--out", gm.out, "output STNS path (sidecar written to <out>.meta)")->required();
  c_gm->callback([&] {
    action = [&] {
      const MaskScheme scheme = parse_scheme(gm.scheme);
      MaskSet m = scheme == MaskScheme::USS ? gen_uss(gm.t, gm.h, gm.w, gm.seed) : gen_rs(gm.t, gm.h, gm.w, gm.density, gm.seed);
      if (gm.blur > 0 || gm.shift_y != 0 || gm.shift_x != 0) m = degrade(m, gm.blur, gm.shift_y, gm.shift_x);
      const MaskReport rep = validate(m);
      save_masks(m, gm.out);
      run.inputs = {{"scheme", to_string(scheme)}, {"frames", gm.t}, {"height", gm.h}, {"width", gm.w},
                    {"density", gm.density}, {"blur", gm.blur}, {"shift_y", gm.shift_y}, {"shift_x", gm.shift_x}};
      run.seeds["masks"] = gm.seed;
      run.results = {{"out", gm.out}, {"ideal", m.ideal}, {"valid", rep.pass}, {"fill_fraction", rep.fill_fraction}};
      run.default_record = gm.out;
      out << "wrote " << gm.out << " (" << to_string(scheme) << ", " << gm.t << "x" << gm.h << "x" << gm.w
          << (rep.pass ? ", valid" : ", not a valid binary set") << ")\n";
    };
  });

  // synth
  struct {
    std::string kind, out, png_dir;
    std::size_t t = 8, h = 32, w = 32;
    std::uint64_t seed = 0;
    double speed = 1.0, level = 1.0;
  } sy;
  auto* c_sy = app.add_subcommand("synth", "render a synthetic scene");
  c_sy->add_option("--kind", sy.kind, "moving-square | drifting-gradient | bouncing-dot")
      ->required()->check(CLI::IsMember({"moving-square", "drifting-gradient", "bouncing-dot"}));
  c_sy->add_option("--t", sy.t, "frames")->check(CLI::PositiveNumber);
  c_sy->add_option("--h", sy.h, "height")->check(CLI::PositiveNumber);
  c_sy->add_option("--w", sy.w, "width")->check(CLI::PositiveNumber);
  c_sy->add_option("--seed", sy.seed, "scene seed");
  c_sy->add_option("--speed", sy.speed, "velocity multiplier");
  c_sy->add_option("--level", sy.level, "brightness multiplier")->check(CLI::Range(0.0, 1.0));
  c_sy->add_option("--out", sy.out, "output STNS video")->required();
  c_sy->add_option("--png-dir", sy.png_dir, "also write PNG frames here");
  c_sy->callback([&] {
    action = [&] {
      const auto v = synth_scene(parse_scene_kind(sy.kind), sy.t, sy.h, sy.w, sy.seed, {sy.speed, sy.level});
      save_video(v, sy.out);
      if (!sy.png_dir.empty()) write_png_frames(sy.png_dir, v);
      run.inputs = {{"kind", sy.kind}, {"frames", sy.t}, {"height", sy.h}, {"width", sy.w}, {"speed", sy.speed}, {"level", sy.level}};
      run.seeds["scene"] = sy.seed;
      run.results = {{"out", sy.out}};
      run.default_record = sy.out;
      out << "wrote " << sy.out << "\n";
    };
  });

  // encode
  struct {
    std::string masks, video, scene, out;
    std::uint64_t scene_seed = 0, noise_seed = 0;
    double noise = 0.0, gain = 1.0, full_scale = 1.0;
    int bits = 8;
    bool quantize = false;
  } en;
  auto* c_en = app.add_subcommand("encode", "simulate a coded snapshot");
  c_en->add_option("--masks", en.masks, "mask STNS")->required()->check(CLI::ExistingFile);
  auto* en_video = c_en->add_option("--video", en.video, "video STNS or PNG frame directory")->check(CLI::ExistingPath);
  auto* en_scene = c_en->add_option("--scene", en.scene, "synthetic scene kind instead of --video")
                       ->check(CLI::IsMember({"moving-square", "drifting-gradient", "bouncing-dot"}));
  en_video->excludes(en_scene);
  c_en->add_option("--scene-seed", en.scene_seed, "seed for --scene");
  c_en->add_option("--noise-sigma", en.noise, "additive Gaussian noise")->check(CLI::NonNegativeNumber);
  c_en->add_option("--noise-seed", en.noise_seed, "noise seed");
  c_en->add_flag("--quantize", en.quantize, "apply the ADC model");
  c_en->add_option("--bits", en.bits, "ADC bits")->check(CLI::Range(1, 16));
  c_en->add_option("--gain", en.gain, "exposure gain")->check(CLI::PositiveNumber);
  c_en->add_option("--full-scale", en.full_scale, "analog value of the top code")->check(CLI::PositiveNumber);
  c_en->add_option("--out", en.out, "output measurement STNS")->required();
  c_en->callback([&] {
    if (en.video.empty() && en.scene.empty()) throw CLI::RequiredError("--video or --scene");
    action = [&] {
      const MaskSet m = load_masks(en.masks);
      const VideoCube<double> x = en.video.empty()
                                      ? synth_scene(parse_scene_kind(en.scene), m.frames, m.height, m.width, en.scene_seed)
                                      : load_video(en.video);
      QuantSpec q{en.bits, en.full_scale, en.gain};
      if (en.quantize) q.validate();
      Measurement<double> y = encode(x, m, en.noise > 0 ? NoiseModel::gaussian(en.noise, en.noise_seed) : NoiseModel::none());
      if (en.quantize) y = quantize(y, q);
      save_measurement(y, en.out);
      run.inputs = {{"masks", en.masks}, {"video", en.video}, {"scene", en.scene}, {"noise_sigma", en.noise},
                    {"quantize", en.quantize}, {"bits", en.bits}, {"gain", en.gain}, {"full_scale", en.full_scale}};
      run.seeds = {{"scene", en.scene_seed}, {"noise", en.noise_seed}, {"masks", m.seed}};
      run.results = {{"out", en.out}, {"saturation_fraction", y.saturation_fraction}};
      run.default_record = en.out;
      out << "wrote " << en.out << (en.quantize ? " (quantized, saturation " + std::to_string(y.saturation_fraction) + ")" : "")
          << "\n";
    };
  });

  // decode
  struct {
    std::string masks, measurement, checkpoint, out, png_dir, truth;
    GapTvConfig gap;
  } de;
  auto* c_de = app.add_subcommand("decode", "reconstruct frames from a measurement");
  c_de->add_option("--masks", de.masks, "mask STNS")->required()->check(CLI::ExistingFile);
  c_de->add_option("--measurement", de.measurement, "measurement STNS")->required()->check(CLI::ExistingFile);
  c_de->add_option("--checkpoint", de.checkpoint, "trained network (GAP-TV when omitted)")->check(CLI::ExistingFile);
  c_de->add_option("--iterations", de.gap.iterations, "GAP-TV iterations")->check(CLI::PositiveNumber);
  c_de->add_option("--tv-weight", de.gap.tv_weight, "GAP-TV TV weight")->check(CLI::NonNegativeNumber);
  c_de->add_option("--tv-steps", de.gap.tv_inner_steps, "GAP-TV inner TV steps");
  c_de->add_flag("--accelerate", de.gap.acceleration, "accelerated GAP");
  c_de->add_option("--truth", de.truth, "ground-truth video for PSNR/SSIM")->check(CLI::ExistingPath);
  c_de->add_option("--out", de.out, "output video STNS")->required();
  c_de->add_option("--png-dir", de.png_dir, "also write PNG frames here");
  c_de->callback([&] {
    action = [&] {
      const MaskSet m = load_masks(de.masks);
      const Measurement<double> y = load_measurement(de.measurement);
      std::optional<Checkpoint> ck;
      if (!de.checkpoint.empty()) ck = load_checkpoint(de.checkpoint);
      std::optional<VideoCube<double>> truth;
      if (!de.truth.empty()) truth = load_video(de.truth);
      const auto t0 = std::chrono::steady_clock::now();
      const VideoCube<double> x = ck ? decode(y, m, *ck) : gap_tv_decode(y, m, de.gap);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      save_video(x, de.out);
      if (!de.png_dir.empty()) write_png_frames(de.png_dir, x);
      run.inputs = {{"masks", de.masks}, {"measurement", de.measurement}, {"checkpoint", de.checkpoint},
                    {"method", ck ? "network" : "gap-tv"}};
      if (!ck) run.inputs["gap_tv"] = {{"iterations", de.gap.iterations}, {"tv_weight", de.gap.tv_weight},
                                       {"tv_steps", de.gap.tv_inner_steps}, {"acceleration", de.gap.acceleration}};
      run.results = {{"out", de.out}, {"decode_seconds", secs}};
      if (truth) {
        const MetricsResult r = compare(x, *truth);
        run.results["psnr"] = r.psnr;
        run.results["ssim"] = r.ssim;
        out << "PSNR " << r.psnr << " dB, SSIM " << r.ssim << "\n";
      }
      run.default_record = de.out;
      out << "wrote " << de.out << "\n";
    };
  });

  // train
  struct {
    std::string masks, manifest, scenes = "moving-square:1,bouncing-dot:2", net_config, train_config, out, resume;
    std::optional<std::size_t> steps, batch;
    std::optional<double> lr;
    std::optional<std::uint64_t> seed;
    bool augment = false;
    std::size_t log_every = 50;
  } tr;
  auto* c_tr = app.add_subcommand("train", "train the reconstruction network");
  c_tr->add_option("--masks", tr.masks, "fixed mask STNS")->required()->check(CLI::ExistingFile);
  auto* tr_manifest = c_tr->add_option("--manifest", tr.manifest, "dataset manifest (train split)")->check(CLI::ExistingFile);
  auto* tr_scenes = c_tr->add_option("--scenes", tr.scenes, "synthetic clips kind:seed,...")->capture_default_str();
  tr_manifest->excludes(tr_scenes);
  c_tr->add_option("--net-config", tr.net_config, "key=value network config")->check(CLI::ExistingFile);
  c_tr->add_option("--train-config", tr.train_config, "key=value training config")->check(CLI::ExistingFile);
  c_tr->add_option("--steps", tr.steps, "optimiser steps");
  c_tr->add_option("--batch", tr.batch, "samples per step")->check(CLI::PositiveNumber);
  c_tr->add_option("--lr", tr.lr, "initial learning rate")->check(CLI::NonNegativeNumber);
  c_tr->add_option("--seed", tr.seed, "training seed");
  c_tr->add_flag("--augment", tr.augment, "crop/flip/rescale augmentation");
  c_tr->add_option("--resume", tr.resume, "continue from a checkpoint")->check(CLI::ExistingFile);
  c_tr->add_option("--log-every", tr.log_every, "print the loss every N steps (0: never)");
  c_tr->add_option("--out", tr.out, "output checkpoint")->required();
  c_tr->callback([&] {
    action = [&] {
      const MaskSet m = load_masks(tr.masks);
      NetworkConfig net = NetworkConfig::toy();
      net.frames = m.frames;
      net.height = m.height;
      net.width = m.width;
      if (!tr.net_config.empty()) {
        KeyValues kv = net.to_kv();
        for (const auto& [k, v] : read_kv_file(tr.net_config)) kv[k] = v;
        net = NetworkConfig::from_kv(kv);
      }
      net.validate();
      TrainConfig tc = TrainConfig::from_kv(read_kv_file(tr.train_config));
      if (tr.steps) tc.steps = *tr.steps;
      if (tr.batch) tc.batch = *tr.batch;
      if (tr.lr) tc.learning_rate = *tr.lr;
      if (tr.seed) tc.seed = *tr.seed;
      if (tr.augment) tc.augment = true;
      tc.checkpoint_path = tr.out;
      tc.validate();
      std::optional<Checkpoint> init;
      if (!tr.resume.empty()) init = load_checkpoint(tr.resume);

      std::vector<VideoCube<double>> clips;
      json sources = json::array();
      if (!tr.manifest.empty()) {
        const auto ds = load_manifest(tr.manifest);
        auto train_clips = ds.split(Split::Train);
        if (train_clips.empty()) throw std::invalid_argument(tr.manifest + ": no train clips");
        for (const auto& c : train_clips) {
          clips.push_back(load_clip(c, net.frames));
          sources.push_back(c.name);
        }
      } else {
        for (const auto& [kind, seed] : parse_scene_list(tr.scenes)) {
          clips.push_back(synth_scene(kind, net.frames, net.height, net.width, seed));
          sources.push_back(to_string(kind) + ":" + std::to_string(seed));
        }
      }
      const auto res = train(clips, m, net, tc, init, [&](std::size_t step, double loss) {
        if (tr.log_every && step % tr.log_every == 0) out << "step " << step << " loss " << loss << "\n" << std::flush;
      });
      const auto& h = res.checkpoint.loss_history;
      run.inputs = {{"masks", tr.masks}, {"clips", sources}, {"network", net.to_kv()}, {"train", tc.to_kv()},
                    {"resume", tr.resume}};
      run.seeds = {{"train", tc.seed}, {"masks", m.seed}};
      run.results = {{"out", tr.out}, {"steps", res.checkpoint.step}, {"diverged", res.diverged},
                     {"train_seconds", res.seconds}, {"loss_first", h.empty() ? 0.0 : h.front()},
                     {"loss_last", h.empty() ? 0.0 : h.back()}};
      run.default_record = tr.out;
      if (res.diverged) throw NumericError(res.message + " (checkpoint written to " + tr.out + ")");
      out << "wrote " << tr.out << " after " << res.checkpoint.step << " steps, loss " << h.front() << " -> " << h.back()
          << "\n";
    };
  });

  // eval
  struct {
    std::string masks, manifest, scenes = "moving-square:1,bouncing-dot:2", checkpoint, json_out;
    bool gap = false;
    GapTvConfig gap_cfg;
  } ev;
  auto* c_ev = app.add_subcommand("eval", "score decoders on a dataset");
  c_ev->add_option("--masks", ev.masks, "mask STNS")->required()->check(CLI::ExistingFile);
  auto* ev_manifest = c_ev->add_option("--manifest", ev.manifest, "dataset manifest (test split)")->check(CLI::ExistingFile);
  auto* ev_scenes = c_ev->add_option("--scenes", ev.scenes, "synthetic clips kind:seed,...")->capture_default_str();
  ev_manifest->excludes(ev_scenes);
  c_ev->add_option("--checkpoint", ev.checkpoint, "network to evaluate")->check(CLI::ExistingFile);
  c_ev->add_flag("--gap-tv", ev.gap, "evaluate the GAP-TV baseline (default when no checkpoint)");
  c_ev->add_option("--iterations", ev.gap_cfg.iterations, "GAP-TV iterations")->check(CLI::PositiveNumber);
  c_ev->add_option("--json", ev.json_out, "also write the tables as JSON here");
  c_ev->callback([&] {
    action = [&] {
      const MaskSet m = load_masks(ev.masks);
      std::optional<Checkpoint> ck;
      if (!ev.checkpoint.empty()) {
        ck = load_checkpoint(ev.checkpoint);
        BstNetwork<float>(ck->config).check_extents(m);
      }
      const auto clips = eval_clips(ev.manifest, ev.scenes, m);
      json tables = json::array();
      if (ck) {
        const auto t = evaluate(clips, m, network_decoder(*ck), "bstformer");
        out << format_table(t);
        tables.push_back(table_json(t));
      }
      if (ev.gap || !ck) {
        const auto t = evaluate(clips, m, gap_tv_decoder(ev.gap_cfg), "gap-tv");
        out << format_table(t);
        tables.push_back(table_json(t));
      }
      run.inputs = {{"masks", ev.masks}, {"manifest", ev.manifest}, {"scenes", ev.manifest.empty() ? ev.scenes : ""},
                    {"checkpoint", ev.checkpoint}};
      run.results = {{"tables", tables}};
      if (!ev.json_out.empty()) {
        write_text_atomic(ev.json_out, tables.dump(2) + "\n");
        run.default_record = ev.json_out;
      }
    };
  });

  // flops
  struct {
    std::uint64_t h = 0, w = 0, t = 0, c = 0, g = 0, s = 0;
    std::string net_config;
  } fl;
  auto* c_fl = app.add_subcommand("flops", "evaluate the attention complexity formulas");
  auto* fl_h = c_fl->add_option("--h", fl.h, "height")->check(CLI::PositiveNumber);
  c_fl->add_option("--w", fl.w, "width")->check(CLI::PositiveNumber);
  c_fl->add_option("--t", fl.t, "frames")->check(CLI::PositiveNumber);
  c_fl->add_option("--c", fl.c, "channels (multiple of 3)")->check(CLI::PositiveNumber);
  c_fl->add_option("--g", fl.g, "grid count G")->check(CLI::PositiveNumber);
  c_fl->add_option("--s", fl.s, "window side S")->check(CLI::PositiveNumber);
  auto* fl_cfg = c_fl->add_option("--net-config", fl.net_config, "take H, W, T, C, G, S from a network config")
                     ->check(CLI::ExistingFile);
  fl_cfg->excludes(fl_h);
  c_fl->callback([&] {
    action = [&] {
      FlopInputs in{fl.h, fl.w, fl.t, fl.c, fl.g, fl.s};
      if (!fl.net_config.empty()) {
        KeyValues kv = NetworkConfig::toy().to_kv();
        for (const auto& [k, v] : read_kv_file(fl.net_config)) kv[k] = v;
        const auto cfg = NetworkConfig::from_kv(kv);
        in = {cfg.height, cfg.width, cfg.frames, cfg.channels, cfg.grid, cfg.window};
      } else if (!fl.h || !fl.w || !fl.t || !fl.c || !fl.g || !fl.s) {
        throw CLI::ValidationError("flops", "--h --w --t --c --g --s are all required without --net-config");
      }
      const FlopReport r = count_flops(in);
      out << "H=" << in.height << " W=" << in.width << " T=" << in.frames << " C=" << in.channels << " G=" << in.grid
          << " S=" << in.window << "\n"
          << "Omega_LBA   " << r.lba << "\n"
          << "Omega_GSA   " << r.gsa << "\n"
          << "Omega_GTA   " << r.gta << "\n"
          << "Omega_BSTF  " << r.bstf << "\n"
          << "Omega_GMSA  " << r.global << "\n";
      run.inputs = {{"height", in.height}, {"width", in.width}, {"frames", in.frames}, {"channels", in.channels},
                    {"grid", in.grid}, {"window", in.window}};
      run.results = {{"lba", r.lba}, {"gsa", r.gsa}, {"gta", r.gta}, {"bstf", r.bstf}, {"gmsa", r.global}};
    };
  });

  // dynrange
  struct {
    std::string scene = "drifting-gradient", gains = "0.125,0.25,0.5,1,2", rs_checkpoint, uss_checkpoint;
    std::uint64_t seed = 0, scene_seed = 0;
    std::size_t t = 10, h = 32, w = 32;
    double level = 1.0, density = 0.5, full_scale = 1.0;
    int bits = 8;
    GapTvConfig gap;
  } dr;
  auto* c_dr = app.add_subcommand("dynrange", "RS vs USS saturation and decode quality across exposure gains");
  c_dr->add_option("--scene", dr.scene, "synthetic scene kind")->capture_default_str()
      ->check(CLI::IsMember({"moving-square", "drifting-gradient", "bouncing-dot"}));
  c_dr->add_option("--scene-seed", dr.scene_seed, "scene seed");
  c_dr->add_option("--seed", dr.seed, "mask seed");
  c_dr->add_option("--t", dr.t, "frames")->capture_default_str()->check(CLI::PositiveNumber);
  c_dr->add_option("--h", dr.h, "height")->capture_default_str()->check(CLI::PositiveNumber);
  c_dr->add_option("--w", dr.w, "width")->capture_default_str()->check(CLI::PositiveNumber);
  c_dr->add_option("--level", dr.level, "scene brightness")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  c_dr->add_option("--gains", dr.gains, "ascending comma-separated gains")->capture_default_str();
  c_dr->add_option("--bits", dr.bits, "ADC bits")->capture_default_str()->check(CLI::Range(1, 16));
  c_dr->add_option("--full-scale", dr.full_scale, "analog value of the top code")->capture_default_str()->check(CLI::PositiveNumber);
  c_dr->add_option("--density", dr.density, "RS fill probability")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  c_dr->add_option("--iterations", dr.gap.iterations, "GAP-TV iterations")->check(CLI::PositiveNumber);
  c_dr->add_option("--rs-checkpoint", dr.rs_checkpoint, "network for RS measurements (GAP-TV when omitted)")
      ->check(CLI::ExistingFile);
  c_dr->add_option("--uss-checkpoint", dr.uss_checkpoint, "network for USS measurements (GAP-TV when omitted)")
      ->check(CLI::ExistingFile);
  c_dr->callback([&] {
    action = [&] {
      DynrangeConfig cfg;
      cfg.gains = parse_numbers(dr.gains);
      cfg.frames = dr.t;
      cfg.quant = {dr.bits, dr.full_scale, 1.0};
      cfg.quant.validate();
      cfg.rs_density = dr.density;
      cfg.seed = dr.seed;
      const Decoder rs = dr.rs_checkpoint.empty() ? gap_tv_decoder(dr.gap) : network_decoder(load_checkpoint(dr.rs_checkpoint));
      const Decoder uss =
          dr.uss_checkpoint.empty() ? gap_tv_decoder(dr.gap) : network_decoder(load_checkpoint(dr.uss_checkpoint));
      const auto scene = synth_scene(parse_scene_kind(dr.scene), dr.t, dr.h, dr.w, dr.scene_seed, {1.0, dr.level});
      const auto rows = dynrange_experiment(scene, cfg, rs, uss);
      out << format_dynrange(rows);
      json jr = json::array();
      for (const auto& r : rows) {
        jr.push_back({{"gain", r.gain}, {"rs_saturation", r.rs_saturation}, {"uss_saturation", r.uss_saturation},
                      {"rs_psnr", r.rs_psnr}, {"uss_psnr", r.uss_psnr}});
      }
      run.inputs = {{"scene", dr.scene}, {"frames", dr.t}, {"height", dr.h}, {"width", dr.w}, {"level", dr.level},
                    {"bits", dr.bits}, {"full_scale", dr.full_scale}, {"density", dr.density}, {"gains", cfg.gains}};
      run.seeds = {{"masks", dr.seed}, {"scene", dr.scene_seed}};
      run.results = {{"rows", jr}};
    };
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::Success&) {
    return 0;
  } catch (const CLI::ParseError& e) {
    // --version is reported through this path as well.
    if (e.get_exit_code() == 0) {
      out << e.what() << "\n";
      return 0;
    }
    const auto subs = app.get_subcommands();
    err << "error: " << e.what() << "\n" << (subs.empty() ? app.help() : subs.front()->help());
    return 2;
  }

  const auto subs = app.get_subcommands();
  run.command = subs.front()->get_name();
  if (common.threads > 0) set_num_threads(common.threads);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    action();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json rec = {{"tool", "ussci"},       {"version", kVersion},  {"command", run.command},
                {"argv", args},          {"threads", num_threads()}, {"inputs", run.inputs},
                {"seeds", run.seeds},    {"results", run.results}, {"elapsed_seconds", secs},
                {"status", "ok"}};
    fs::path record = common.record;
    if (record.empty()) {
      record = run.default_record.empty() ? fs::path("ussci-" + run.command + ".run.json")
                                          : fs::path(run.default_record.string() + ".run.json");
    }
    write_text_atomic(record, rec.dump(2) + "\n");
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << subs.front()->help();
    return 2;
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: " << run.command << ": " << msg << "\n";
    return 1;
  }
}

int cli_dispatch(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli_dispatch(args, std::cout, std::cerr);
}

}  // namespace ussci
