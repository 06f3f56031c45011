#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "geodet/box3d.hpp"
#include "geodet/types.hpp"

namespace geodet {

// N points with xyz in meters and rgb in [0, 1].
struct PointCloud {
  Points3 positions;
  Points3 colors;

  std::size_t size() const { return static_cast<std::size_t>(positions.rows()); }
};

// Throws ValidationError unless sizes match, N >= 1, coordinates are finite
// and colors lie in [0, 1].
void validate_point_cloud(const PointCloud& cloud);

struct SceneAnnotation {
  std::vector<Box3D> boxes;
  std::vector<std::string> class_names;
};

void validate_annotation(const SceneAnnotation& annotation);

// Dense cluster ids: every id in [0, count) owns at least one point.
struct SuperpointLabels {
  std::vector<int> ids;
  int count = 0;

  std::size_t size() const { return ids.size(); }
};

void validate_labels(const SuperpointLabels& labels, std::size_t expected_n);

// Remaps arbitrary non-negative ids to [0, M) by order of first occurrence.
SuperpointLabels densify_labels(const std::vector<long long>& raw);

enum class PlyFormat { Ascii, BinaryLittleEndian };

// Reads the vertex element of an ASCII or binary little-endian PLY file.
// x/y/z may be any scalar type; red/green/blue are optional uchar (scaled by
// 1/255) or float in [0, 1]. Missing colors default to 0.5.
PointCloud parse_ply(std::string_view bytes);

// float32 xyz + uchar rgb. Binary output reproduces float32-representable
// positions bit for bit; colors are quantized to 8 bits.
std::string write_ply(const PointCloud& cloud, PlyFormat format);

// {"class_names": [..], "boxes": [{"center": [3], "size": [3], "class_id": k}]}
SceneAnnotation parse_annotations(std::string_view text);
std::string write_annotations(const SceneAnnotation& annotation);

// Newline-delimited decimal integers, one per point.
SuperpointLabels parse_superpoints(std::string_view text, std::size_t expected_n);
std::string write_superpoints(const SuperpointLabels& labels);

// {"scenes": [{"scene": id, "detections": [{"center", "size", "class_id",
// "score"}]}]}
std::vector<DetectionResult> parse_detections(std::string_view text);
std::string write_detections(const std::vector<DetectionResult>& detections);

struct SceneGroundTruth {
  std::string scene;
  std::vector<Box3D> boxes;
};

// Multi-scene ground truth for evaluation:
// {"class_names": [..], "scenes": [{"scene": id, "boxes": [..]}]}
struct GroundTruthSet {
  std::vector<std::string> class_names;
  std::vector<SceneGroundTruth> scenes;
};

GroundTruthSet parse_ground_truth(std::string_view text);
std::string write_ground_truth(const GroundTruthSet& gt);

// Whole-file helpers; failures raise IoError.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace geodet
