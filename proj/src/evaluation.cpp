#include "geodet/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <tuple>

#include <nlohmann/json.hpp>

#include "geodet/errors.hpp"

namespace geodet {

namespace {

struct RankedDetection {
  double score;
  const std::string* scene;
  std::size_t index;
  const Box3D* box;
};

}  // namespace

double average_precision(const std::vector<bool>& is_tp, std::size_t gt_count) {
  if (gt_count == 0) return 0.0;
  const std::size_t n = is_tp.size();
  std::vector<double> precision(n), recall(n);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    tp += is_tp[i] ? 1 : 0;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    recall[i] = static_cast<double>(tp) / static_cast<double>(gt_count);
  }
  for (std::size_t i = n; i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (recall[i] > prev_recall) {
      ap += (recall[i] - prev_recall) * precision[i];
      prev_recall = recall[i];
    }
  }
  return ap;
}

std::optional<double> compute_ap(const std::vector<DetectionResult>& detections,
                                 const std::vector<SceneGroundTruth>& ground_truth, int class_id,
                                 double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
    throw ConfigError("IoU threshold must lie in (0, 1)");
  }
  std::map<std::string, std::vector<const Box3D*>> gt_by_scene;
  std::size_t gt_count = 0;
  for (const auto& scene : ground_truth) {
    auto& list = gt_by_scene[scene.scene];
    for (const auto& b : scene.boxes) {
      if (b.class_id == class_id) {
        list.push_back(&b);
        ++gt_count;
      }
    }
  }
  if (gt_count == 0) return std::nullopt;

  std::vector<RankedDetection> ranked;
  for (const auto& det : detections) {
    for (std::size_t i = 0; i < det.boxes.size(); ++i) {
      if (det.boxes[i].class_id == class_id) ranked.push_back({det.scores[i], &det.scene, i, &det.boxes[i]});
    }
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const RankedDetection& a, const RankedDetection& b) {
    if (a.score != b.score) return a.score > b.score;
    return std::tie(*a.scene, a.index) < std::tie(*b.scene, b.index);
  });

  std::map<std::string, std::vector<char>> claimed;
  for (const auto& [scene, list] : gt_by_scene) claimed[scene].assign(list.size(), 0);
  std::vector<bool> is_tp;
  is_tp.reserve(ranked.size());
  for (const auto& d : ranked) {
    auto it = gt_by_scene.find(*d.scene);
    if (it == gt_by_scene.end()) {
      is_tp.push_back(false);
      continue;
    }
    auto& used = claimed[*d.scene];
    double best_iou = -1.0;
    std::size_t best = 0;
    for (std::size_t g = 0; g < it->second.size(); ++g) {
      if (used[g]) continue;
      const double iou = iou_3d(*d.box, *it->second[g]);
      if (iou > best_iou) {
        best_iou = iou;
        best = g;
      }
    }
    if (best_iou >= iou_threshold) {
      used[best] = 1;
      is_tp.push_back(true);
    } else {
      is_tp.push_back(false);
    }
  }
  return average_precision(is_tp, gt_count);
}

EvalReport compute_map(const std::vector<DetectionResult>& detections, const GroundTruthSet& ground_truth) {
  EvalReport report;
  double sum25 = 0.0, sum50 = 0.0;
  int present = 0;
  for (std::size_t c = 0; c < ground_truth.class_names.size(); ++c) {
    ClassReport cr;
    cr.class_id = static_cast<int>(c);
    cr.name = ground_truth.class_names[c];
    for (const auto& s : ground_truth.scenes) {
      for (const auto& b : s.boxes) cr.gt_count += b.class_id == cr.class_id;
    }
    for (const auto& d : detections) {
      for (const auto& b : d.boxes) cr.detection_count += b.class_id == cr.class_id;
    }
    cr.ap25 = compute_ap(detections, ground_truth.scenes, cr.class_id, kIouThreshold25);
    cr.ap50 = compute_ap(detections, ground_truth.scenes, cr.class_id, kIouThreshold50);
    if (cr.ap25) {
      sum25 += *cr.ap25;
      sum50 += *cr.ap50;
      ++present;
    }
    report.classes.push_back(std::move(cr));
  }
  if (present > 0) {
    report.map25 = sum25 / present;
    report.map50 = sum50 / present;
  }
  return report;
}

std::string report_to_json(const EvalReport& report) {
  using nlohmann::json;
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json classes = json::array();
  for (const auto& c : report.classes) {
    classes.push_back(json{{"class_id", c.class_id},
                           {"name", c.name},
                           {"gt_count", c.gt_count},
                           {"detection_count", c.detection_count},
                           {"ap25", opt(c.ap25)},
                           {"ap50", opt(c.ap50)}});
  }
  json doc{{"classes", std::move(classes)}, {"mAP25", opt(report.map25)}, {"mAP50", opt(report.map50)}};
  return doc.dump(2) + "\n";
}

std::string report_to_table(const EvalReport& report) {
  auto cell = [](const std::optional<double>& v) {
    char buf[16];
    if (!v) return std::string("     -");
    std::snprintf(buf, sizeof(buf), "%6.1f", 100.0 * *v);
    return std::string(buf);
  };
  std::string out = "class                  gt  mAP25  mAP50\n";
  for (const auto& c : report.classes) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%-20s %4zu ", c.name.substr(0, 20).c_str(), c.gt_count);
    out += buf + cell(c.ap25) + " " + cell(c.ap50) + "\n";
  }
  out += "mean                      " + cell(report.map25) + " " + cell(report.map50) + "\n";
  return out;
}

}  // namespace geodet
