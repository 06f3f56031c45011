#include "geodet/training.hpp"

#include <cmath>
#include <string>

#include "geodet/errors.hpp"
#include "geodet/rng.hpp"

namespace geodet {

namespace {

template <typename T>
void check_finite(const std::string& name, const T& t) {
  if (!t.allFinite()) throw NumericalError("non-finite values in " + name);
}

void check_forward(const ForwardPass& f) {
  check_finite("backbone features", f.backbone.features);
  check_finite("gated features", f.gated);
  check_finite("recalibrated features", f.recalibrated);
  check_finite("hybrid representation", f.hybrid.features);
  for (std::size_t l = 0; l < f.encoder.blocks.size(); ++l) {
    check_finite("encoder block " + std::to_string(l) + " output", f.encoder.blocks[l].output);
  }
  check_finite("box head output", f.heads.box_raw);
  check_finite("class logits", f.heads.logits);
}

}  // namespace

void validate_train_config(const TrainConfig& c) {
  validate_model_config(c.model);
  if (!(c.alpha > 0.0) || !std::isfinite(c.alpha)) throw ConfigError("alpha must be > 0");
  if (!(c.beta >= 0.0) || !std::isfinite(c.beta)) throw ConfigError("beta must be >= 0");
  if (!(c.voxel_size > 0.0) || !std::isfinite(c.voxel_size)) throw ConfigError("voxel size must be > 0");
  if (!(c.lr >= 0.0) || !std::isfinite(c.lr)) throw ConfigError("learning rate must be >= 0");
  if (!(c.weight_decay >= 0.0)) throw ConfigError("weight decay must be >= 0");
  if (!(c.poly_power >= 0.0)) throw ConfigError("polynomial power must be >= 0");
  if (c.epochs < 1) throw ConfigError("epochs must be >= 1");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  SplitMix64 rng(seed ^ (0xD1B54A32D192ED03ULL * (stream + 1)));
  return rng.next();
}

double poly_lr(double base, int epoch, int total, double power) {
  if (total <= 0) return base;
  const double frac = 1.0 - static_cast<double>(epoch) / static_cast<double>(total);
  return base * std::pow(std::max(frac, 0.0), power);
}

AdamW::AdamW(const ModelParams& like, double beta1, double beta2, double eps, double weight_decay)
    : m_(like.zeros_like()), v_(like.zeros_like()), beta1_(beta1), beta2_(beta2), eps_(eps),
      weight_decay_(weight_decay) {}

void AdamW::step(ModelParams& params, const ModelParams& grad, double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  // Collect raw pointers in the shared visiting order.
  std::vector<std::pair<double*, Eigen::Index>> p, m, v;
  std::vector<const double*> g;
  params.for_each_tensor([&](const std::string&, ParamGroup, auto& t) { p.emplace_back(t.data(), t.size()); });
  m_.for_each_tensor([&](const std::string&, ParamGroup, auto& t) { m.emplace_back(t.data(), t.size()); });
  v_.for_each_tensor([&](const std::string&, ParamGroup, auto& t) { v.emplace_back(t.data(), t.size()); });
  grad.for_each_tensor([&](const std::string&, ParamGroup, const auto& t) { g.push_back(t.data()); });
  for (std::size_t k = 0; k < p.size(); ++k) {
    double* pk = p[k].first;
    double* mk = m[k].first;
    double* vk = v[k].first;
    const double* gk = g[k];
    for (Eigen::Index i = 0; i < p[k].second; ++i) {
      mk[i] = beta1_ * mk[i] + (1.0 - beta1_) * gk[i];
      vk[i] = beta2_ * vk[i] + (1.0 - beta2_) * gk[i] * gk[i];
      const double mhat = mk[i] / bc1;
      const double vhat = vk[i] / bc2;
      pk[i] -= lr * (mhat / (std::sqrt(vhat) + eps_) + weight_decay_ * pk[i]);
    }
  }
}

TrainResult train_toy(const std::vector<LabeledScene>& scenes, const TrainConfig& config,
                      const std::function<void(int, double)>& on_epoch) {
  if (scenes.empty()) throw ValidationError("train_toy needs at least one scene");
  TrainConfig cfg = config;
  cfg.model.classes = static_cast<int>(scenes.front().annotation.class_names.size());
  validate_train_config(cfg);
  std::vector<SceneInput> inputs;
  for (const auto& s : scenes) {
    if (s.annotation.class_names != scenes.front().annotation.class_names) {
      throw ValidationError("scene '" + s.name + "' uses a different class list");
    }
    validate_annotation(s.annotation);
    inputs.push_back(prepare_scene(s.cloud, cfg.alpha, cfg.voxel_size));
  }

  TrainResult result;
  result.params = init_params(cfg.model, derive_seed(cfg.seed, 0));
  AdamW opt(result.params, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, cfg.weight_decay);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = poly_lr(cfg.lr, epoch, cfg.epochs, cfg.poly_power);
    double sum = 0.0;
    for (std::size_t k = 0; k < scenes.size(); ++k) {
      SceneLoss sl = scene_loss(result.params, inputs[k], scenes[k].annotation.boxes, cfg.beta);
      if (!std::isfinite(sl.loss.total)) {
        check_forward(sl.forward);
        throw NumericalError("non-finite loss in scene '" + scenes[k].name + "' at epoch " +
                             std::to_string(epoch));
      }
      sl.grad.for_each_tensor([](const std::string& name, ParamGroup, const auto& t) {
        check_finite("gradient of " + name, t);
      });
      sum += sl.loss.total;
      opt.step(result.params, sl.grad, lr);
    }
    const double mean = sum / static_cast<double>(scenes.size());
    result.loss_trace.push_back(mean);
    if (on_epoch) on_epoch(epoch, mean);
  }
  return result;
}

std::vector<DetectionResult> detect_scenes(const ModelParams& params, const std::vector<LabeledScene>& scenes,
                                           double alpha, double voxel_size) {
  std::vector<DetectionResult> out;
  out.reserve(scenes.size());
  for (const auto& s : scenes) {
    const SceneInput input = prepare_scene(s.cloud, alpha, voxel_size);
    const ForwardPass f = forward(params, input);
    out.push_back(detections_from_prediction(f.prediction, s.name));
  }
  return out;
}

}  // namespace geodet
