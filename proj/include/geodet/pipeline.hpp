#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "geodet/checkpoint.hpp"
#include "geodet/evaluation.hpp"
#include "geodet/training.hpp"

namespace geodet {

// User-facing run settings shared by the CLI subcommands.
struct RunConfig {
  double alpha = kDefaultAlpha;
  double beta = kDefaultBeta;
  int channels = 32;
  int layers = 2;
  int hidden = 64;
  double voxel_size = kDefaultVoxelSize;
  double lr = 2e-4;
  double weight_decay = 0.05;
  double poly_power = 0.9;
  int epochs = 500;
  std::uint64_t seed = 7;
};

// Throws ConfigError unless alpha > 0, beta >= 0, channels/layers/epochs >= 1
// and lr > 0.
void validate_run_config(const RunConfig& config);
TrainConfig to_train_config(const RunConfig& config);

struct TrainEvalResult {
  TrainResult train;
  std::vector<DetectionResult> detections;
  EvalReport report;
};

TrainEvalResult train_and_evaluate(const RunConfig& config, const std::vector<LabeledScene>& scenes);

Checkpoint make_checkpoint(const TrainResult& train, const RunConfig& config,
                           const std::vector<std::string>& class_names);

enum class SweepParam { Alpha, Beta };

SweepParam parse_sweep_param(const std::string& name);
std::string sweep_param_name(SweepParam param);

struct SweepRow {
  double value = 0.0;
  std::optional<double> map25;
  std::optional<double> map50;
  std::optional<double> final_loss;
  std::string error;  // set when this value was rejected or training failed
};

struct SweepReport {
  SweepParam param = SweepParam::Alpha;
  std::vector<SweepRow> rows;
};

// One train + evaluate run per value, all other settings fixed. A bad value
// is recorded on its row and the sweep moves on.
SweepReport cmd_sweep(const RunConfig& config, SweepParam param, const std::vector<double>& values,
                      const std::vector<LabeledScene>& scenes);

std::string sweep_to_json(const SweepReport& report);
std::string sweep_to_table(const SweepReport& report);

// Fixed stage order of the trace dump.
const std::vector<std::string>& trace_stage_names();

// JSON with the shape and min/max/mean of every intermediate tensor for one
// scene. Labels default to voxel clustering with the checkpoint's voxel size.
std::string cmd_pipeline_trace(const PointCloud& cloud, const Checkpoint& checkpoint,
                               const std::optional<SuperpointLabels>& labels = std::nullopt);

// JSON with centroid, distances, normalized distances and weights.
std::string weights_to_json(const GeometryWeights& weights);

}  // namespace geodet
