#pragma once

#include <optional>
#include <string>
#include <vector>

#include "geodet/box3d.hpp"
#include "geodet/pointcloud_io.hpp"

namespace geodet {

inline constexpr double kIouThreshold25 = 0.25;
inline constexpr double kIouThreshold50 = 0.5;

// Average precision of one class at one IoU threshold, or nullopt when the
// class has no ground-truth instance.
//
// Detections are ranked by descending score; ties go to the scene that sorts
// first by name, then to the earlier detection within that scene. Each
// detection claims the highest-IoU unclaimed ground-truth box of its class in
// its scene and is a true positive iff that IoU reaches the threshold. AP is
// the area under the precision envelope (all-point interpolation).
std::optional<double> compute_ap(const std::vector<DetectionResult>& detections,
                                 const std::vector<SceneGroundTruth>& ground_truth, int class_id,
                                 double iou_threshold);

// Area under the all-point interpolated curve for a ranked TP/FP sequence.
double average_precision(const std::vector<bool>& is_true_positive, std::size_t gt_count);

struct ClassReport {
  int class_id = 0;
  std::string name;
  std::size_t gt_count = 0;
  std::size_t detection_count = 0;
  std::optional<double> ap25;
  std::optional<double> ap50;
};

struct EvalReport {
  std::vector<ClassReport> classes;
  // Unweighted means over classes with ground truth; nullopt if there are none.
  std::optional<double> map25;
  std::optional<double> map50;
};

EvalReport compute_map(const std::vector<DetectionResult>& detections, const GroundTruthSet& ground_truth);

std::string report_to_json(const EvalReport& report);

// Plain-text table: one row per class plus the mean.
std::string report_to_table(const EvalReport& report);

}  // namespace geodet
