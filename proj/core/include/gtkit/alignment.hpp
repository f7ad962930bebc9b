#pragma once

#include <vector>

#include "gtkit/geometry.hpp"

namespace gt::align {

struct Correspondence {
  Vec3 a = Vec3::Zero();  // source frame, m
  Vec3 b = Vec3::Zero();  // target frame, m
  double weight = 1.0;
};

struct Correspondences {
  std::vector<Correspondence> pairs;
};

// Rigid map a -> b minimizing sum w_i |R a_i + t - b_i|^2.
struct RigidAlignment {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  double rms_residual = 0.0;

  Pose as_pose() const { return {rotation, translation}; }
};

// Weighted Kabsch: centroid subtraction, weighted cross-covariance, SVD with
// determinant correction. Throws DegenerateGeometry on fewer than 3 pairs,
// vanishing total weight, or (near-)collinear source points.
RigidAlignment solve_rigid_alignment(const Correspondences& c);

struct MatchOptions {
  // Maximum time gap for nearest-neighbor position matching.
  double max_time_gap = 0.05;  // s
};

// Builds position correspondences between time-calibrated pose series by
// nearest-neighbor timestamp matching and solves for the transform taking the
// transition frame into the outdoor (world) frame. Optional per-outdoor-sample
// weights (e.g. GNSS fix quality); empty means uniform.
RigidAlignment align_segments(const TimeSeries<Pose>& outdoor, const TimeSeries<Pose>& transition,
                              const MatchOptions& opts = {},
                              const std::vector<double>& outdoor_weights = {});

// Maps every non-reference segment into the reference frame and merges by
// timestamp. segments[0] is the reference; alignments[k] applies to
// segments[k+1]. Priorities default to list order (first wins at duplicate
// timestamps); equal priorities with near-duplicate timestamps are an error.
TimeSeries<Pose> stitch_trajectory(const std::vector<TimeSeries<Pose>>& segments,
                                   const std::vector<RigidAlignment>& alignments,
                                   const std::vector<int>& priorities = {},
                                   double duplicate_tol = 1e-6);

}  // namespace gt::align
