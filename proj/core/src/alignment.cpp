#include "gtkit/alignment.hpp"

#include <algorithm>
#include <cmath>

namespace gt::align {

RigidAlignment solve_rigid_alignment(const Correspondences& c) {
  const auto& pairs = c.pairs;
  if (pairs.size() < 3) {
    throw Error(ErrorCode::DegenerateGeometry, "need at least 3 correspondences");
  }
  double w_sum = 0.0;
  for (const auto& p : pairs) {
    if (p.weight < 0.0) {
      throw Error(ErrorCode::DegenerateGeometry, "negative correspondence weight");
    }
    w_sum += p.weight;
  }
  if (!(w_sum > 0.0)) {
    throw Error(ErrorCode::DegenerateGeometry, "all correspondence weights are zero");
  }

  Vec3 centroid_a = Vec3::Zero();
  Vec3 centroid_b = Vec3::Zero();
  for (const auto& p : pairs) {
    centroid_a += p.weight * p.a;
    centroid_b += p.weight * p.b;
  }
  centroid_a /= w_sum;
  centroid_b /= w_sum;

  Mat3 cross = Mat3::Zero();   // sum w (b - b_c)(a - a_c)^T
  Mat3 spread = Mat3::Zero();  // source scatter, used for the collinearity gate
  for (const auto& p : pairs) {
    const Vec3 da = p.a - centroid_a;
    const Vec3 db = p.b - centroid_b;
    cross += p.weight * db * da.transpose();
    spread += p.weight * da * da.transpose();
  }

  Eigen::SelfAdjointEigenSolver<Mat3> eig(spread / w_sum);
  const Vec3 ev = eig.eigenvalues();  // ascending
  if (ev(1) <= 1e-12 * std::max(1.0, ev(2))) {
    throw Error(ErrorCode::DegenerateGeometry, "source points collinear or coincident");
  }

  Eigen::JacobiSVD<Mat3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  const double d = u.determinant() * v.determinant();
  const Mat3 r = u * Eigen::DiagonalMatrix<double, 3>(1.0, 1.0, d) * v.transpose();
  const Vec3 t = centroid_b - r * centroid_a;

  double sse = 0.0;
  for (const auto& p : pairs) {
    sse += p.weight * (r * p.a + t - p.b).squaredNorm();
  }

  return {r, t, std::sqrt(sse / w_sum)};
}

namespace {

// Index of the sample nearest in time, series assumed sorted.
std::size_t nearest_index(const TimeSeries<Pose>& series, double t) {
  auto it = std::lower_bound(series.begin(), series.end(), t,
                             [](const Timestamped<Pose>& s, double value) { return s.t < value; });
  if (it == series.begin()) return 0;
  if (it == series.end()) return series.size() - 1;
  const std::size_t hi = static_cast<std::size_t>(it - series.begin());
  return (t - series[hi - 1].t) <= (series[hi].t - t) ? hi - 1 : hi;
}

}  // namespace

RigidAlignment align_segments(const TimeSeries<Pose>& outdoor, const TimeSeries<Pose>& transition,
                              const MatchOptions& opts, const std::vector<double>& outdoor_weights) {
  if (outdoor.empty() || transition.empty()) {
    throw Error(ErrorCode::InsufficientOverlap, "empty pose series");
  }
  if (!outdoor_weights.empty() && outdoor_weights.size() != outdoor.size()) {
    throw Error(ErrorCode::ConfigError, "weight vector length must match outdoor series");
  }

  Correspondences c;
  for (const auto& tp : transition) {
    const std::size_t j = nearest_index(outdoor, tp.t);
    if (std::abs(outdoor[j].t - tp.t) > opts.max_time_gap) {
      continue;
    }
    const double w = outdoor_weights.empty() ? 1.0 : outdoor_weights[j];
    c.pairs.push_back({tp.value.translation, outdoor[j].value.translation, w});
  }

  if (c.pairs.size() < 3) {
    throw Error(ErrorCode::InsufficientOverlap,
                "fewer than 3 temporally matched pairs within the overlap window");
  }
  return solve_rigid_alignment(c);
}

TimeSeries<Pose> stitch_trajectory(const std::vector<TimeSeries<Pose>>& segments,
                                   const std::vector<RigidAlignment>& alignments,
                                   const std::vector<int>& priorities, double duplicate_tol) {
  if (segments.empty()) {
    return {};
  }
  if (alignments.size() + 1 != segments.size()) {
    throw Error(ErrorCode::ConfigError, "need one alignment per non-reference segment");
  }
  if (!priorities.empty() && priorities.size() != segments.size()) {
    throw Error(ErrorCode::ConfigError, "need one priority per segment");
  }

  struct Entry {
    Timestamped<Pose> sample;
    int priority;
  };
  std::vector<Entry> entries;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    // Lower value = higher priority; default order of appearance.
    const int prio = priorities.empty() ? static_cast<int>(s) : priorities[s];
    for (const auto& sample : segments[s]) {
      Timestamped<Pose> mapped = sample;
      if (s > 0) {
        const RigidAlignment& a = alignments[s - 1];
        mapped.value.rotation = a.rotation * sample.value.rotation;
        mapped.value.translation = a.rotation * sample.value.translation + a.translation;
      }
      entries.push_back({mapped, prio});
    }
  }

  std::stable_sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) {
    if (x.sample.t != y.sample.t) return x.sample.t < y.sample.t;
    return x.priority < y.priority;
  });

  TimeSeries<Pose> out;
  out.reserve(entries.size());
  std::size_t i = 0;
  while (i < entries.size()) {
    // Collapse clusters of near-duplicate timestamps to the best priority
    // (lower value wins).
    std::size_t best = i;
    bool tie = false;
    std::size_t j = i + 1;
    while (j < entries.size() && entries[j].sample.t - entries[i].sample.t < duplicate_tol) {
      if (entries[j].priority < entries[best].priority) {
        best = j;
        tie = false;
      } else if (entries[j].priority == entries[best].priority) {
        tie = true;
      }
      ++j;
    }
    if (j > i + 1 && tie) {
      throw Error(ErrorCode::NonMonotonicResult,
                  "duplicate timestamps across equal-priority segments");
    }
    out.push_back(entries[best].sample);
    i = j;
  }
  return out;
}

}  // namespace gt::align
