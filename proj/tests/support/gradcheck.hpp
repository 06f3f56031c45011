#pragma once

// Random small scenes and a central-difference check of the full loss
// against the analytic parameter gradient.

#include <map>
#include <string>
#include <vector>

#include "support/oracles.hpp"
#include "geodet/loss.hpp"
#include "geodet/rng.hpp"

namespace gradcheck {

struct SmallScene {
  geodet::PointCloud cloud;
  std::vector<geodet::Box3D> gt;
};

inline SmallScene random_scene(geodet::SplitMix64& rng, int n, int objects, int classes) {
  SmallScene s;
  s.cloud.positions.resize(n, 3);
  s.cloud.colors.resize(n, 3);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < 3; ++k) {
      s.cloud.positions(i, k) = rng.uniform(0.0, 2.0);
      s.cloud.colors(i, k) = rng.uniform();
    }
  }
  for (int j = 0; j < objects; ++j) {
    geodet::Box3D b;
    b.center = geodet::Vec3(rng.uniform(0.3, 1.7), rng.uniform(0.3, 1.7), rng.uniform(0.3, 1.7));
    b.size = geodet::Vec3(rng.uniform(0.3, 1.0), rng.uniform(0.3, 1.0), rng.uniform(0.3, 1.0));
    b.class_id = static_cast<int>(rng.uniform_int(0, classes - 1));
    s.gt.push_back(b);
  }
  return s;
}

// Moves every weight by a random amount so the box and class heads are not
// near their tiny initial output scale.
inline void jitter(geodet::ModelParams& p, geodet::SplitMix64& rng, double scale) {
  p.for_each_tensor([&](const std::string&, geodet::ParamGroup, auto& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] += scale * rng.normal();
  });
}

struct Stats {
  int checked = 0;
  int skipped = 0;
  int failed = 0;
  double worst_abs = 0.0;
  std::map<std::string, int> checked_per_group;
  std::vector<std::string> failures;
};

// Every parameter entry is perturbed by +-step. Entries whose perturbation
// flips a discrete choice (scatter-max winner, assignment, DIoU branch) sit on
// a kink and are skipped.
inline void check_scene(const geodet::ModelParams& params, const geodet::SceneInput& scene,
                        const std::vector<geodet::Box3D>& gt, double beta, double step, double rel, double abs_tol,
                        Stats& stats) {
  using namespace geodet;
  const SceneLoss base = scene_loss(params, scene, gt, beta, true);
  ModelParams work = params;
  std::vector<std::pair<std::string, std::pair<double*, Eigen::Index>>> slots;
  std::vector<ParamGroup> groups;
  work.for_each_tensor([&](const std::string& name, ParamGroup g, auto& t) {
    slots.push_back({name, {t.data(), t.size()}});
    groups.push_back(g);
  });
  std::vector<const double*> grads;
  base.grad.for_each_tensor([&](const std::string&, ParamGroup, const auto& t) { grads.push_back(t.data()); });

  for (std::size_t s = 0; s < slots.size(); ++s) {
    double* data = slots[s].second.first;
    for (Eigen::Index i = 0; i < slots[s].second.second; ++i) {
      const double orig = data[i];
      data[i] = orig + step;
      const SceneLoss up = scene_loss(work, scene, gt, beta, false);
      data[i] = orig - step;
      const SceneLoss down = scene_loss(work, scene, gt, beta, false);
      data[i] = orig;
      if (up.signature != base.signature || down.signature != base.signature) {
        ++stats.skipped;
        continue;
      }
      const double numeric = (up.loss.total - down.loss.total) / (2.0 * step);
      const double analytic = grads[s][i];
      ++stats.checked;
      ++stats.checked_per_group[std::string(param_group_name(groups[s]))];
      stats.worst_abs = std::max(stats.worst_abs, std::abs(numeric - analytic));
      if (!oracle::grad_close(analytic, numeric, rel, abs_tol)) {
        ++stats.failed;
        if (stats.failures.size() < 10) {
          stats.failures.push_back(slots[s].first + "[" + std::to_string(i) + "] analytic " +
                                   std::to_string(analytic) + " numeric " + std::to_string(numeric));
        }
      }
    }
  }
}

}  // namespace gradcheck
