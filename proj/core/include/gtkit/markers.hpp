#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "gtkit/geometry.hpp"

namespace gt::markers {

// One detection: pose of the marker in the navigation camera frame.
struct MarkerObservation {
  std::int64_t image_id = 0;
  int marker_id = 0;
  Pose pose;  // T_cam_marker
};

// Relative pose samples of marker j in marker i's frame, j < i.
struct PairwiseTransform {
  int i = 0;
  int j = 0;
  std::vector<Pose> samples;
  Pose mean;
  bool filter_fallback = false;  // 1-sigma filter rejected everything
};

struct MarkerFieldCalibration {
  int main_marker = 0;
  std::map<int, Pose> poses;  // marker frame in main-marker frame
  std::vector<int> disconnected;
};

// Per image, every co-visible pair (i, j) with j < i contributes
// pose_i^-1 * pose_j to the (i, j) accumulator.
std::vector<PairwiseTransform> extract_pairwise(const std::vector<MarkerObservation>& observations);

// 1-sigma outlier filter (translation per component, rotation by geodesic
// distance to the chordal mean), then mean of the survivors. Falls back to the
// unfiltered mean when everything is rejected.
Pose filter_and_mean(PairwiseTransform& pt);

// Chordal mean: projection of the summed rotation matrices onto SO(3).
Mat3 chordal_mean(const std::vector<Mat3>& rotations);

// Point minimizing the summed Euclidean distance (Weiszfeld iteration).
// Starts from `init` when given, otherwise from the centroid.
Vec3 geometric_median(const std::vector<Vec3>& points, double tol = 1e-10,
                      int max_iterations = 1000, const Vec3* init = nullptr);

struct CalibrateOptions {
  int n_paths = 32;
  std::uint64_t seed = 1;
  int max_walk_attempts = 64;  // restarts per requested path
  // Random paths may exceed the hop-count distance by at most this many
  // edges; longer walks restart. Keeps the per-path noise accumulation near
  // the shortest-path level while still routing around bad edges.
  int max_detour = 4;
};

// Shortest hop-count path initializes each marker; n_paths randomized
// cycle-free paths from the main marker provide estimates whose translations
// are combined by geometric median and rotations by chordal mean. Markers
// unreachable from the main marker are listed as disconnected.
MarkerFieldCalibration calibrate_field(std::vector<PairwiseTransform> pairwise, int main_marker,
                                       const CalibrateOptions& opts = {});

// Camera pose in the field frame from one image's detections; multiple
// detections fuse by geometric-median translation and chordal-mean rotation.
Pose vehicle_pose_from_markers(const std::vector<MarkerObservation>& obs,
                               const MarkerFieldCalibration& field);

}  // namespace gt::markers
