#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "geodet/pointcloud_io.hpp"
#include "geodet/training.hpp"

namespace geodet {

// Parameters of a synthetic room. Objects are axis-aligned boxes resting on
// the floor; their surfaces are sampled uniformly by area.
struct SceneSpec {
  Vec3 room{4.0, 4.0, 2.5};  // meters; room spans [0, room] on each axis
  int min_objects = 2;
  int max_objects = 4;
  double min_size = 0.4;  // per-axis object extent range, meters
  double max_size = 1.2;
  int points_per_object = 150;
  double clutter_density = 1.0;  // clutter points per square meter of floor and walls
  int classes = 3;
  std::uint64_t seed = 7;
};

void validate_scene_spec(const SceneSpec& spec);

struct SyntheticScene {
  PointCloud cloud;
  SceneAnnotation annotation;
};

// Pure function of `spec`. Coordinates are rounded to float32 and colors to
// 8 bits before boxes are computed, so the scene survives a PLY round trip
// unchanged and every box is the exact min/max of its object's points.
SyntheticScene generate_scene(const SceneSpec& spec);

std::vector<std::string> synthetic_class_names(int classes);

struct SuiteEntry {
  std::string name;
  std::uint64_t seed = 0;
  std::string cloud_file;
  std::string annotation_file;
};

// Writes scene_XXX.ply (binary) + scene_XXX.json per scene, a combined
// gt.json, and manifest.json. Scene i uses seed + i.
std::vector<SuiteEntry> generate_suite(int n_scenes, const SceneSpec& spec, std::uint64_t seed,
                                       const std::filesystem::path& out_dir);

// Reads a directory written by generate_suite.
std::vector<LabeledScene> load_suite(const std::filesystem::path& dir);

GroundTruthSet ground_truth_of(const std::vector<LabeledScene>& scenes);

}  // namespace geodet
