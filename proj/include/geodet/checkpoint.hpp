#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "geodet/model.hpp"

namespace geodet {

inline constexpr int kCheckpointVersion = 1;

// Model parameters plus the non-trainable settings needed to rebuild the
// scene inputs the model was trained on.
struct Checkpoint {
  ModelParams params;
  double alpha = kDefaultAlpha;
  double voxel_size = kDefaultVoxelSize;
  std::vector<std::string> class_names;
};

// Schema (version 1):
// {
//   "format": "geodet-checkpoint", "version": 1,
//   "config": {"hidden", "channels", "layers", "classes", "ffn_mult"},
//   "pipeline": {"alpha", "voxel_size"}, "class_names": [..],
//   "tensors": [{"name", "shape": [rows, cols], "data": [row-major values]}]
// }
// Values are written in shortest round-trip form, so load(save(p)) == p.
std::string save_checkpoint(const Checkpoint& checkpoint);

// Throws ParseError on malformed input and ShapeError when tensor shapes (or
// `expected`, if given) disagree with the stored config.
Checkpoint load_checkpoint(std::string_view bytes, const std::optional<ModelConfig>& expected = std::nullopt);

bool params_equal(const ModelParams& a, const ModelParams& b);

}  // namespace geodet
