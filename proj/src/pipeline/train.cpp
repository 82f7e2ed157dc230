#include "ussci/pipeline/train.hpp"

#include <chrono>
#include <cmath>

#include "ussci/core/errors.hpp"
#include "ussci/core/kv.hpp"
#include "ussci/core/random.hpp"

namespace ussci {

template <typename T>
double mse_loss(const Tensor<T>& pred, const Tensor<T>& truth) {
  require_same_shape(pred, truth, "mse_loss");
  if (pred.size() == 0) throw ShapeError("mse_loss: empty tensors");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(pred[i]) - static_cast<double>(truth[i]);
    s += d * d;
  }
  return s / static_cast<double>(pred.size());
}

template <typename T>
Tensor<T> mse_loss_grad(const Tensor<T>& pred, const Tensor<T>& truth) {
  require_same_shape(pred, truth, "mse_loss_grad");
  Tensor<T> g(pred.shape());
  const T scale = T(2) / static_cast<T>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) g[i] = scale * (pred[i] - truth[i]);
  return g;
}

template double mse_loss<float>(const Tensor<float>&, const Tensor<float>&);
template double mse_loss<double>(const Tensor<double>&, const Tensor<double>&);
template Tensor<float> mse_loss_grad<float>(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> mse_loss_grad<double>(const Tensor<double>&, const Tensor<double>&);

template <typename T>
void Adam<T>::step(ParamMap<T>& params, const ParamMap<T>& grads, double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (auto& [name, p] : params) {
    auto git = grads.find(name);
    if (git == grads.end()) continue;
    const Tensor<T>& g = git->second;
    require_same_shape(p, g, "Adam::step");
    auto [mit, m_new] = m_.try_emplace(name, p.shape());
    auto [vit, v_new] = v_.try_emplace(name, p.shape());
    Tensor<T>& m = mit->second;
    Tensor<T>& v = vit->second;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g[i];
      const double mi = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
      const double vi = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      p[i] = static_cast<T>(p[i] - lr * (mi / bc1) / (std::sqrt(vi / bc2) + cfg_.epsilon));
    }
  }
}

template class Adam<float>;
template class Adam<double>;

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("TrainConfig: " + m); };
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) fail("learning rate must be >= 0");
  if (!(decay_factor > 0.0 && decay_factor <= 1.0)) fail("decay_factor must lie in (0,1]");
  if (batch == 0) fail("batch must be >= 1");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    fail("Adam betas must lie in [0,1)");
  }
  if (!(adam.epsilon > 0.0)) fail("Adam epsilon must be positive");
  if (!(noise_sigma >= 0.0)) fail("noise_sigma must be >= 0");
}

double TrainConfig::rate_at(std::size_t step) const {
  if (decay_every == 0) return learning_rate;
  return learning_rate * std::pow(decay_factor, static_cast<double>(step / decay_every));
}

std::map<std::string, std::string> TrainConfig::to_kv() const {
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  return {{"learning_rate", num(learning_rate)},
          {"decay_every", std::to_string(decay_every)},
          {"decay_factor", num(decay_factor)},
          {"steps", std::to_string(steps)},
          {"batch", std::to_string(batch)},
          {"seed", std::to_string(seed)},
          {"augment", augment ? "1" : "0"},
          {"augment.random_crop", augmentation.random_crop ? "1" : "0"},
          {"augment.flip", augmentation.flip ? "1" : "0"},
          {"augment.rescale", augmentation.rescale ? "1" : "0"},
          {"noise_sigma", num(noise_sigma)},
          {"adam.beta1", num(adam.beta1)},
          {"adam.beta2", num(adam.beta2)},
          {"adam.epsilon", num(adam.epsilon)},
          {"checkpoint_every", std::to_string(checkpoint_every)}};
}

TrainConfig TrainConfig::from_kv(const std::map<std::string, std::string>& kv) {
  TrainConfig c;
  kv_read(kv, "learning_rate", c.learning_rate);
  kv_read(kv, "decay_every", c.decay_every);
  kv_read(kv, "decay_factor", c.decay_factor);
  kv_read(kv, "steps", c.steps);
  kv_read(kv, "batch", c.batch);
  kv_read(kv, "seed", c.seed);
  kv_read(kv, "augment", c.augment);
  kv_read(kv, "augment.random_crop", c.augmentation.random_crop);
  kv_read(kv, "augment.flip", c.augmentation.flip);
  kv_read(kv, "augment.rescale", c.augmentation.rescale);
  kv_read(kv, "noise_sigma", c.noise_sigma);
  kv_read(kv, "adam.beta1", c.adam.beta1);
  kv_read(kv, "adam.beta2", c.adam.beta2);
  kv_read(kv, "adam.epsilon", c.adam.epsilon);
  kv_read(kv, "checkpoint_every", c.checkpoint_every);
  c.validate();
  return c;
}

namespace {

struct Sample {
  VideoCube<float> truth;
  Tensor<float> measurement;
};

bool all_finite(const ParamMap<float>& g) {
  for (const auto& [k, t] : g)
    if (!t.all_finite()) return false;
  return true;
}

}  // namespace

TrainResult train(const std::vector<VideoCube<double>>& clips, const MaskSet& masks, const NetworkConfig& net,
                  const TrainConfig& cfg, const std::optional<Checkpoint>& init, const TrainObserver& observer) {
  cfg.validate();
  net.validate();
  if (clips.empty()) throw std::invalid_argument("train: no training clips");
  BstNetwork<float> model(net);
  model.check_extents(masks);
  AugmentConfig aug = cfg.augmentation;
  aug.crop_height = net.height;
  aug.crop_width = net.width;
  for (std::size_t c = 0; c < clips.size(); ++c) {
    const auto& clip = clips[c];
    if (clip.rank() != 3 || clip.dim(0) < net.frames || clip.dim(1) < net.height || clip.dim(2) < net.width) {
      throw ShapeError("train: clip " + std::to_string(c) + " " + shape_string(clip.shape()) + " is smaller than " +
                       std::to_string(net.frames) + "x" + std::to_string(net.height) + "x" + std::to_string(net.width));
    }
  }
  if (init && !(init->config == net)) throw std::invalid_argument("train: initial checkpoint has a different config");

  const auto start = std::chrono::steady_clock::now();
  TrainResult res;
  Checkpoint& ck = res.checkpoint;
  ck.config = net;
  ck.params = init ? init->params : model.init_params(cfg.seed);
  ck.step = init ? init->step : 0;
  if (init) ck.loss_history = init->loss_history;

  const CounterRng rng(cfg.seed, 31);
  const std::uint64_t first_clip = rng.below(0, clips.size());
  auto sample = [&](std::size_t step, std::size_t b) {
    const std::uint64_t draw = (static_cast<std::uint64_t>(step) * cfg.batch + b) * 4;
    const auto& clip = clips[(first_clip + step * cfg.batch + b) % clips.size()];
    const std::size_t start_frame = rng.below(draw + 1, clip.dim(0) - net.frames + 1);
    VideoCube<double> x = frame_window(clip, start_frame, net.frames);
    if (cfg.augment) {
      x = augment(x, aug, rng.bits(draw + 2));
    } else if (x.dim(1) != net.height || x.dim(2) != net.width) {
      x = crop(x, (x.dim(1) - net.height) / 2, (x.dim(2) - net.width) / 2, net.height, net.width);
    }
    const NoiseModel noise = cfg.noise_sigma > 0 ? NoiseModel::gaussian(cfg.noise_sigma, rng.bits(draw + 3))
                                                 : NoiseModel::none();
    Sample s;
    s.measurement = encode(x, masks, noise).values.cast<float>();
    s.truth = x.cast<float>();
    return s;
  };

  auto batch_pass = [&](const std::vector<Sample>& batch, ParamMap<float>* grads) {
    double loss = 0.0;
    for (const auto& s : batch) {
      const VideoCube<float> pred = model.forward(ck.params, s.measurement, masks);
      loss += mse_loss(pred, s.truth);
      if (grads) {
        Tensor<float> g = mse_loss_grad(pred, s.truth);
        for (auto& v : g.values()) v /= static_cast<float>(batch.size());
        model.backward(ck.params, g, *grads);
      }
    }
    return loss / static_cast<double>(batch.size());
  };

  Adam<float> opt(cfg.adam);
  std::vector<Sample> first_batch;
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    std::vector<Sample> batch;
    for (std::size_t b = 0; b < cfg.batch; ++b) batch.push_back(sample(step, b));
    if (step == 0) first_batch = batch;
    ParamMap<float> grads;
    double loss = 0.0;
    try {
      loss = batch_pass(batch, &grads);
    } catch (const NumericError& e) {
      loss = NAN;
    }
    if (!std::isfinite(loss) || !all_finite(grads)) {
      res.diverged = true;
      res.message = "loss diverged at step " + std::to_string(ck.step) + "; kept the last finite parameters";
      break;
    }
    ck.loss_history.push_back(loss);
    if (observer) observer(step, loss);
    ParamMap<float> next = ck.params;
    opt.step(next, grads, cfg.rate_at(step));
    bool finite = true;
    for (const auto& [k, t] : next) finite = finite && t.all_finite();
    if (!finite) {
      res.diverged = true;
      res.message = "parameters became non-finite at step " + std::to_string(ck.step);
      break;
    }
    ck.params = std::move(next);
    ++ck.step;
    if (cfg.checkpoint_every && !cfg.checkpoint_path.empty() && ck.step % cfg.checkpoint_every == 0) {
      save_checkpoint(ck, cfg.checkpoint_path);
    }
  }
  if (!res.diverged && !first_batch.empty()) {
    double final_loss = NAN;
    try {
      final_loss = batch_pass(first_batch, nullptr);
    } catch (const NumericError&) {
    }
    ck.loss_history.push_back(final_loss);
  }
  if (!cfg.checkpoint_path.empty()) save_checkpoint(ck, cfg.checkpoint_path);
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

}  // namespace ussci
