#include "gtkit/markers.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>
#include <set>

namespace gt::markers {

std::vector<PairwiseTransform> extract_pairwise(
    const std::vector<MarkerObservation>& observations) {
  std::map<std::int64_t, std::vector<const MarkerObservation*>> by_image;
  for (const auto& obs : observations) {
    by_image[obs.image_id].push_back(&obs);
  }

  std::map<std::pair<int, int>, std::vector<Pose>> accum;
  for (auto& [image_id, obs_list] : by_image) {
    for (const auto* a : obs_list) {
      for (const auto* b : obs_list) {
        if (b->marker_id < a->marker_id) {
          // T_ij with i > j: pose of marker j relative to marker i.
          accum[{a->marker_id, b->marker_id}].push_back(a->pose.inverse().compose(b->pose));
        }
      }
    }
  }

  std::vector<PairwiseTransform> out;
  out.reserve(accum.size());
  for (auto& [key, samples] : accum) {
    PairwiseTransform pt;
    pt.i = key.first;
    pt.j = key.second;
    pt.samples = std::move(samples);
    out.push_back(std::move(pt));
  }
  return out;
}

Mat3 chordal_mean(const std::vector<Mat3>& rotations) {
  Mat3 sum = Mat3::Zero();
  for (const auto& r : rotations) {
    sum += r;
  }
  return project_to_so3(sum);
}

Pose filter_and_mean(PairwiseTransform& pt) {
  if (pt.samples.empty()) {
    throw Error(ErrorCode::DegenerateGeometry, "pairwise transform has no samples");
  }
  const std::size_t n = pt.samples.size();

  auto mean_of = [](const std::vector<const Pose*>& poses) {
    Vec3 t = Vec3::Zero();
    std::vector<Mat3> rots;
    rots.reserve(poses.size());
    for (const auto* p : poses) {
      t += p->translation;
      rots.push_back(p->rotation);
    }
    return Pose{chordal_mean(rots), t / static_cast<double>(poses.size())};
  };

  std::vector<const Pose*> all;
  all.reserve(n);
  for (const auto& s : pt.samples) all.push_back(&s);
  const Pose raw_mean = mean_of(all);

  pt.filter_fallback = false;
  if (n < 2) {
    pt.mean = raw_mean;
    return pt.mean;
  }

  // Sample standard deviations of translation components and of geodesic
  // rotation distances to the chordal mean.
  Vec3 t_std = Vec3::Zero();
  for (const auto& s : pt.samples) {
    const Vec3 d = s.translation - raw_mean.translation;
    t_std += d.cwiseProduct(d);
  }
  t_std = (t_std / static_cast<double>(n - 1)).cwiseSqrt();

  std::vector<double> rot_dist(n);
  double rd_mean = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    rot_dist[k] = geodesic_distance(pt.samples[k].rotation, raw_mean.rotation);
    rd_mean += rot_dist[k];
  }
  rd_mean /= static_cast<double>(n);
  double rd_std = 0.0;
  for (double d : rot_dist) rd_std += (d - rd_mean) * (d - rd_mean);
  rd_std = std::sqrt(rd_std / static_cast<double>(n - 1));

  std::vector<const Pose*> survivors;
  for (std::size_t k = 0; k < n; ++k) {
    const Vec3 dev = (pt.samples[k].translation - raw_mean.translation).cwiseAbs();
    const bool t_ok = (dev.array() <= t_std.array()).all();
    const bool r_ok = rot_dist[k] - rd_mean <= rd_std;
    if (t_ok && r_ok) {
      survivors.push_back(&pt.samples[k]);
    }
  }

  if (survivors.empty()) {
    pt.filter_fallback = true;
    pt.mean = raw_mean;
  } else {
    pt.mean = mean_of(survivors);
  }
  return pt.mean;
}

Vec3 geometric_median(const std::vector<Vec3>& points, double tol, int max_iterations,
                      const Vec3* init) {
  if (points.empty()) {
    throw Error(ErrorCode::DegenerateGeometry, "geometric median of empty set");
  }
  Vec3 estimate;
  if (init) {
    estimate = *init;
  } else {
    estimate = Vec3::Zero();
    for (const auto& p : points) estimate += p;
    estimate /= static_cast<double>(points.size());
  }

  for (int iter = 0; iter < max_iterations; ++iter) {
    Vec3 numer = Vec3::Zero();
    double denom = 0.0;
    bool at_point = false;
    for (const auto& p : points) {
      const double d = (p - estimate).norm();
      if (d < 1e-15) {
        at_point = true;
        continue;  // Weiszfeld weight would blow up; the point's pull is bounded
      }
      numer += p / d;
      denom += 1.0 / d;
    }
    if (denom == 0.0) {
      return estimate;  // all points coincide with the estimate
    }
    Vec3 next = numer / denom;
    if (at_point) {
      // Vardi-Zhang adjustment keeps the iteration stable on data points.
      next = 0.5 * (next + estimate);
    }
    if ((next - estimate).norm() < tol) {
      return next;
    }
    estimate = next;
  }
  return estimate;
}

namespace {

struct Edge {
  int neighbor;
  const Pose* transform;  // pose of `neighbor` in the current node's frame
  bool forward;  // true if stored as (i=current, j=neighbor)
};

using Graph = std::map<int, std::vector<Edge>>;

Pose traverse(const Pose& current, const Edge& e) {
  return e.forward ? current.compose(*e.transform) : current.compose(e.transform->inverse());
}

}  // namespace

MarkerFieldCalibration calibrate_field(std::vector<PairwiseTransform> pairwise, int main_marker,
                                       const CalibrateOptions& opts) {
  // Edge means first.
  for (auto& pt : pairwise) {
    filter_and_mean(pt);
  }

  Graph graph;
  std::set<int> markers;
  markers.insert(main_marker);
  for (const auto& pt : pairwise) {
    markers.insert(pt.i);
    markers.insert(pt.j);
    graph[pt.i].push_back({pt.j, &pt.mean, true});
    graph[pt.j].push_back({pt.i, &pt.mean, false});
  }
  for (auto& [id, edges] : graph) {
    std::sort(edges.begin(), edges.end(),
              [](const Edge& a, const Edge& b) { return a.neighbor < b.neighbor; });
  }

  // BFS from the main marker: shortest hop-count pose and depth per marker.
  std::map<int, Pose> bfs_pose;
  std::map<int, int> bfs_hops;
  bfs_pose[main_marker] = Pose{};
  bfs_hops[main_marker] = 0;
  std::deque<int> queue{main_marker};
  while (!queue.empty()) {
    const int node = queue.front();
    queue.pop_front();
    for (const auto& e : graph[node]) {
      if (!bfs_pose.contains(e.neighbor)) {
        bfs_pose[e.neighbor] = traverse(bfs_pose[node], e);
        bfs_hops[e.neighbor] = bfs_hops[node] + 1;
        queue.push_back(e.neighbor);
      }
    }
  }

  MarkerFieldCalibration out;
  out.main_marker = main_marker;
  out.poses[main_marker] = Pose{};

  std::mt19937_64 rng(opts.seed);

  for (int target : markers) {
    if (target == main_marker) {
      continue;
    }
    if (!bfs_pose.contains(target)) {
      out.disconnected.push_back(target);
      continue;
    }

    // Randomized cycle-free walks from main to target.
    std::vector<Vec3> translations;
    std::vector<Mat3> rotations;
    for (int path = 0; path < opts.n_paths; ++path) {
      for (int attempt = 0; attempt < opts.max_walk_attempts; ++attempt) {
        std::set<int> visited{main_marker};
        int node = main_marker;
        Pose pose;
        bool reached = node == target;
        while (!reached) {
          std::vector<const Edge*> options;
          for (const auto& e : graph[node]) {
            if (!visited.contains(e.neighbor)) {
              options.push_back(&e);
            }
          }
          if (options.empty()) {
            break;  // dead end, retry
          }
          std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
          const Edge* e = options[pick(rng)];
          pose = traverse(pose, *e);
          node = e->neighbor;
          visited.insert(node);
          reached = node == target;
        }
        if (reached) {
          translations.push_back(pose.translation);
          rotations.push_back(pose.rotation);
          break;
        }
      }
    }

    if (translations.empty()) {
      // Random walks kept dead-ending; the BFS estimate still stands.
      out.poses[target] = bfs_pose.at(target);
      continue;
    }

    Pose fused;
    const Vec3 bfs_init = bfs_pose.at(target).translation;
    fused.translation = geometric_median(translations, 1e-10, 1000, &bfs_init);
    fused.rotation = chordal_mean(rotations);
    out.poses[target] = fused;
  }

  return out;
}

Pose vehicle_pose_from_markers(const std::vector<MarkerObservation>& obs,
                               const MarkerFieldCalibration& field) {
  std::vector<Vec3> translations;
  std::vector<Mat3> rotations;
  for (const auto& o : obs) {
    auto it = field.poses.find(o.marker_id);
    if (it == field.poses.end()) {
      continue;
    }
    // T_field_cam = T_field_marker * T_cam_marker^-1
    const Pose cam = it->second.compose(o.pose.inverse());
    translations.push_back(cam.translation);
    rotations.push_back(cam.rotation);
  }
  if (translations.empty()) {
    throw Error(ErrorCode::NoKnownMarkers, "no observed marker is in the calibrated field");
  }
  Pose fused;
  fused.translation = geometric_median(translations);
  fused.rotation = chordal_mean(rotations);
  return fused;
}

}  // namespace gt::markers
