#include "geodet/synthetic_scenes.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "geodet/errors.hpp"
#include "geodet/rng.hpp"

namespace geodet {

namespace {

using nlohmann::json;

constexpr int kMaxPlacementAttempts = 500;
constexpr double kObjectGap = 0.1;

// Out of line: GCC 11 -O3 SLP vectorization drops the narrowing otherwise.
[[gnu::noinline]] double to_float(double v) { return static_cast<double>(static_cast<float>(v)); }

double quantize8(double c) { return std::round(std::clamp(c, 0.0, 1.0) * 255.0) / 255.0; }

Vec3 class_color(int class_id, int classes) {
  // Evenly spaced hues at full saturation.
  const double h = 6.0 * static_cast<double>(class_id) / static_cast<double>(classes);
  const double x = 1.0 - std::abs(std::fmod(h, 2.0) - 1.0);
  const int sector = static_cast<int>(h) % 6;
  static constexpr std::array<std::array<int, 3>, 6> kOrder{{{0, 1, 2}, {1, 0, 2}, {2, 0, 1},
                                                             {2, 1, 0}, {1, 2, 0}, {0, 2, 1}}};
  Vec3 rgb = Vec3::Zero();
  rgb[kOrder[sector][0]] = 1.0;
  rgb[kOrder[sector][1]] = x;
  return 0.15 + 0.7 * rgb.array();
}

struct Placed {
  Vec3 lo, hi;
  int class_id;
};

// Uniform point on the surface of [lo, hi], faces picked by area.
Vec3 sample_surface(const Vec3& lo, const Vec3& hi, SplitMix64& rng) {
  const Vec3 e = hi - lo;
  const std::array<double, 3> area{e[1] * e[2], e[0] * e[2], e[0] * e[1]};
  const double total = 2.0 * (area[0] + area[1] + area[2]);
  double r = rng.uniform() * total;
  int axis = 0;
  for (; axis < 2; ++axis) {
    if (r < 2.0 * area[axis]) break;
    r -= 2.0 * area[axis];
  }
  const bool upper = r >= area[axis];
  Vec3 p;
  for (int k = 0; k < 3; ++k) p[k] = lo[k] + rng.uniform() * e[k];
  p[axis] = upper ? hi[axis] : lo[axis];
  return p;
}

std::string scene_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scene_%03d", i);
  return buf;
}

}  // namespace

void validate_scene_spec(const SceneSpec& s) {
  if (!s.room.allFinite() || (s.room.array() <= 0.0).any()) throw ConfigError("room extents must be positive");
  if (s.min_objects < 0 || s.max_objects < s.min_objects) throw ConfigError("invalid object count range");
  if (!(s.min_size > 0.0) || s.max_size < s.min_size) throw ConfigError("invalid object size range");
  if (s.points_per_object < 1) throw ConfigError("points_per_object must be >= 1");
  if (!(s.clutter_density >= 0.0)) throw ConfigError("clutter density must be >= 0");
  if (s.classes < 1) throw ConfigError("class count must be >= 1");
  if (s.max_size > s.room.minCoeff()) {
    throw ValidationError("objects up to " + std::to_string(s.max_size) + " m do not fit in the room");
  }
}

std::vector<std::string> synthetic_class_names(int classes) {
  std::vector<std::string> names;
  for (int k = 0; k < classes; ++k) names.push_back("class_" + std::to_string(k));
  return names;
}

SyntheticScene generate_scene(const SceneSpec& spec) {
  validate_scene_spec(spec);
  SplitMix64 rng(spec.seed);
  const int count = rng.uniform_int(spec.min_objects, spec.max_objects);

  std::vector<Placed> placed;
  for (int o = 0; o < count; ++o) {
    bool ok = false;
    for (int attempt = 0; attempt < kMaxPlacementAttempts && !ok; ++attempt) {
      Vec3 size;
      for (int k = 0; k < 3; ++k) size[k] = rng.uniform(spec.min_size, spec.max_size);
      Vec3 lo(rng.uniform(0.0, spec.room[0] - size[0]), rng.uniform(0.0, spec.room[1] - size[1]), 0.0);
      Vec3 hi = lo + size;
      ok = std::none_of(placed.begin(), placed.end(), [&](const Placed& p) {
        return lo[0] < p.hi[0] + kObjectGap && p.lo[0] < hi[0] + kObjectGap && lo[1] < p.hi[1] + kObjectGap &&
               p.lo[1] < hi[1] + kObjectGap;
      });
      if (ok) placed.push_back({lo, hi, rng.uniform_int(0, spec.classes - 1)});
    }
    if (!ok) {
      throw ValidationError("could not place " + std::to_string(count) + " non-overlapping objects in the room");
    }
  }

  std::vector<Vec3> positions, colors;
  SyntheticScene scene;
  scene.annotation.class_names = synthetic_class_names(spec.classes);
  for (const auto& p : placed) {
    const Vec3 base = class_color(p.class_id, spec.classes);
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (int i = 0; i < spec.points_per_object; ++i) {
      Vec3 pt = sample_surface(p.lo, p.hi, rng);
      for (int k = 0; k < 3; ++k) pt[k] = to_float(pt[k]);
      Vec3 c;
      for (int k = 0; k < 3; ++k) c[k] = quantize8(base[k] + rng.uniform(-0.05, 0.05));
      lo = lo.cwiseMin(pt);
      hi = hi.cwiseMax(pt);
      positions.push_back(pt);
      colors.push_back(c);
    }
    Box3D box;
    box.center = 0.5 * (lo + hi);
    box.size = hi - lo;
    box.class_id = p.class_id;
    if ((box.size.array() <= 0.0).any()) {
      throw ValidationError("object sampled too few points to span a box; raise points_per_object");
    }
    scene.annotation.boxes.push_back(box);
  }

  // Clutter on the floor and the four walls.
  const Vec3& r = spec.room;
  const std::array<double, 3> areas{r[0] * r[1], 2.0 * r[0] * r[2], 2.0 * r[1] * r[2]};
  const double wall_floor_area = areas[0] + areas[1] + areas[2];
  const auto clutter = static_cast<int>(std::lround(spec.clutter_density * wall_floor_area));
  for (int i = 0; i < clutter; ++i) {
    double a = rng.uniform() * wall_floor_area;
    Vec3 pt(rng.uniform(0.0, r[0]), rng.uniform(0.0, r[1]), rng.uniform(0.0, r[2]));
    if (a < areas[0]) {
      pt[2] = 0.0;
    } else if (a < areas[0] + areas[1]) {
      pt[1] = rng.uniform() < 0.5 ? 0.0 : r[1];
    } else {
      pt[0] = rng.uniform() < 0.5 ? 0.0 : r[0];
    }
    for (int k = 0; k < 3; ++k) pt[k] = to_float(pt[k]);
    const double gray = rng.uniform(0.3, 0.7);
    positions.push_back(pt);
    colors.push_back(Vec3::Constant(quantize8(gray)));
  }
  if (positions.empty()) {
    throw ValidationError("scene has no points; raise the object count or clutter density");
  }

  const auto n = static_cast<Eigen::Index>(positions.size());
  scene.cloud.positions.resize(n, 3);
  scene.cloud.colors.resize(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    scene.cloud.positions.row(i) = positions[static_cast<std::size_t>(i)].transpose();
    scene.cloud.colors.row(i) = colors[static_cast<std::size_t>(i)].transpose();
  }
  return scene;
}

std::vector<SuiteEntry> generate_suite(int n_scenes, const SceneSpec& spec, std::uint64_t seed,
                                       const std::filesystem::path& out_dir) {
  if (n_scenes < 1) throw ConfigError("need at least one scene");
  validate_scene_spec(spec);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());

  std::vector<SuiteEntry> entries;
  GroundTruthSet gt;
  gt.class_names = synthetic_class_names(spec.classes);
  json manifest_scenes = json::array();
  for (int i = 0; i < n_scenes; ++i) {
    SceneSpec s = spec;
    s.seed = seed + static_cast<std::uint64_t>(i);
    const SyntheticScene scene = generate_scene(s);
    SuiteEntry e{scene_name(i), s.seed, scene_name(i) + ".ply", scene_name(i) + ".json"};
    write_file(out_dir / e.cloud_file, write_ply(scene.cloud, PlyFormat::BinaryLittleEndian));
    write_file(out_dir / e.annotation_file, write_annotations(scene.annotation));
    gt.scenes.push_back({e.name, scene.annotation.boxes});
    manifest_scenes.push_back(
        json{{"name", e.name}, {"seed", e.seed}, {"cloud", e.cloud_file}, {"annotation", e.annotation_file}});
    entries.push_back(std::move(e));
  }
  json manifest{{"seed", seed},
                {"class_names", gt.class_names},
                {"spec",
                 {{"room", {spec.room[0], spec.room[1], spec.room[2]}},
                  {"objects", {spec.min_objects, spec.max_objects}},
                  {"size_range", {spec.min_size, spec.max_size}},
                  {"points_per_object", spec.points_per_object},
                  {"clutter_density", spec.clutter_density},
                  {"classes", spec.classes}}},
                {"scenes", std::move(manifest_scenes)}};
  write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
  write_file(out_dir / "gt.json", write_ground_truth(gt));
  return entries;
}

std::vector<LabeledScene> load_suite(const std::filesystem::path& dir) {
  const std::string text = read_file(dir / "manifest.json");
  json manifest;
  try {
    manifest = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError("manifest.json: " + std::string(e.what()));
  }
  std::vector<LabeledScene> scenes;
  try {
    for (const auto& s : manifest.at("scenes")) {
      LabeledScene scene;
      scene.name = s.at("name").get<std::string>();
      scene.cloud = parse_ply(read_file(dir / s.at("cloud").get<std::string>()));
      scene.annotation = parse_annotations(read_file(dir / s.at("annotation").get<std::string>()));
      scenes.push_back(std::move(scene));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("manifest.json: " + std::string(e.what()));
  }
  if (scenes.empty()) throw ValidationError("suite '" + dir.string() + "' lists no scenes");
  return scenes;
}

GroundTruthSet ground_truth_of(const std::vector<LabeledScene>& scenes) {
  GroundTruthSet gt;
  if (!scenes.empty()) gt.class_names = scenes.front().annotation.class_names;
  for (const auto& s : scenes) gt.scenes.push_back({s.name, s.annotation.boxes});
  return gt;
}

}  // namespace geodet
