#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "geodet/loss.hpp"
#include "geodet/model.hpp"
#include "geodet/pointcloud_io.hpp"

namespace geodet {

struct TrainConfig {
  ModelConfig model;  // model.classes is taken from the scenes
  double alpha = kDefaultAlpha;
  double beta = kDefaultBeta;
  double voxel_size = kDefaultVoxelSize;
  double lr = 2e-4;
  double weight_decay = 0.05;
  double poly_power = 0.9;
  int epochs = 500;
  std::uint64_t seed = 7;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
};

void validate_train_config(const TrainConfig& config);

struct LabeledScene {
  std::string name;
  PointCloud cloud;
  SceneAnnotation annotation;
};

// Independent seed for a named consumer of the top-level seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// base * (1 - epoch / total)^power
double poly_lr(double base, int epoch, int total, double power);

// Adam with decoupled weight decay.
class AdamW {
 public:
  AdamW(const ModelParams& like, double beta1, double beta2, double eps, double weight_decay);

  void step(ModelParams& params, const ModelParams& grad, double lr);

 private:
  ModelParams m_, v_;
  double beta1_, beta2_, eps_, weight_decay_;
  long long t_ = 0;
};

struct TrainResult {
  ModelParams params;
  std::vector<double> loss_trace;  // mean scene loss per epoch, before that epoch's updates
};

// Throws NumericalError naming the first non-finite tensor if the loss or
// any gradient stops being finite.
TrainResult train_toy(const std::vector<LabeledScene>& scenes, const TrainConfig& config,
                      const std::function<void(int, double)>& on_epoch = {});

// Runs the model over each scene and returns one detection list per scene.
std::vector<DetectionResult> detect_scenes(const ModelParams& params, const std::vector<LabeledScene>& scenes,
                                           double alpha, double voxel_size);

}  // namespace geodet
