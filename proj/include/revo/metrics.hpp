// Shape-matching metrics between sampled profiles: symmetric average
// nearest-neighbour error and the symmetric (averaged directed) Hausdorff
// distance. Profiles are compared as point sets sampled every 0.2 mm.

#pragma once

#include <revo/core.hpp>
#include <revo/spline.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace revo {

using ProfileSampling = std::vector<Knot2>;

inline constexpr double kProfileSampleStep = 0.2;  // mm

/// Equidistant 0.2 mm sampling of a profile for metric evaluation.
inline ProfileSampling sample_profile(const ProfileCurve& curve) {
  return sample_equidistant(curve, kProfileSampleStep);
}

namespace detail {

// Nearest-neighbour distances from every a in A to B. Brute force for small
// inputs; above the cutoff a uniform grid bucket index is used. Bucketed
// lookups expand rings outward until the closest occupied ring cannot be
// beaten, so results match brute force exactly.
inline constexpr std::size_t kBruteForceCutoff = 10000;

inline double nearest_distance_brute(const Knot2& a, const ProfileSampling& b) {
  double best = std::numeric_limits<double>::infinity();
  for (const Knot2& q : b) {
    best = std::min(best, (a - q).squaredNorm());
  }
  return std::sqrt(best);
}

class GridIndex {
 public:
  explicit GridIndex(const ProfileSampling& pts) : pts_(pts) {
    lo_ = pts.front();
    Knot2 hi = pts.front();
    for (const Knot2& p : pts) {
      lo_ = lo_.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    const double extent = std::max((hi - lo_).maxCoeff(), 1e-9);
    cells_ = std::max<int>(1, static_cast<int>(std::sqrt(static_cast<double>(pts.size()))));
    cell_ = extent / cells_;
    buckets_.assign(static_cast<std::size_t>(cells_) * cells_, {});
    for (std::size_t i = 0; i < pts.size(); ++i) {
      buckets_[bucket_of(pts[i])].push_back(i);
    }
  }

  double nearest_distance(const Knot2& a) const {
    const int cx = clamp_cell((a.x() - lo_.x()) / cell_);
    const int cy = clamp_cell((a.y() - lo_.y()) / cell_);
    double best = std::numeric_limits<double>::infinity();
    for (int ring = 0; ring < cells_; ++ring) {
      if (best < std::numeric_limits<double>::infinity()) {
        // Any cell in ring R is at least (R-1)*cell away from a point in the
        // start cell; stop once that bound exceeds the best distance found.
        const double ring_min = (ring - 1) * cell_;
        if (ring_min > 0.0 && ring_min * ring_min > best) break;
      }
      for (int dx = -ring; dx <= ring; ++dx) {
        for (int dy = -ring; dy <= ring; ++dy) {
          if (std::max(std::abs(dx), std::abs(dy)) != ring) continue;
          const int x = cx + dx, y = cy + dy;
          if (x < 0 || y < 0 || x >= cells_ || y >= cells_) continue;
          for (std::size_t idx : buckets_[static_cast<std::size_t>(y) * cells_ + x]) {
            best = std::min(best, (a - pts_[idx]).squaredNorm());
          }
        }
      }
    }
    return std::sqrt(best);
  }

 private:
  int clamp_cell(double v) const { return std::clamp(static_cast<int>(v), 0, cells_ - 1); }
  std::size_t bucket_of(const Knot2& p) const {
    const int x = clamp_cell((p.x() - lo_.x()) / cell_);
    const int y = clamp_cell((p.y() - lo_.y()) / cell_);
    return static_cast<std::size_t>(y) * cells_ + x;
  }

  const ProfileSampling& pts_;
  Knot2 lo_;
  double cell_ = 1.0;
  int cells_ = 1;
  std::vector<std::vector<std::size_t>> buckets_;
};

template <typename Reduce>
void directed_metric(const ProfileSampling& a, const ProfileSampling& b, Reduce reduce) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("profile metrics require non-empty samplings");
  if (b.size() <= kBruteForceCutoff) {
    for (const Knot2& p : a) reduce(nearest_distance_brute(p, b));
  } else {
    const GridIndex index(b);
    for (const Knot2& p : a) reduce(index.nearest_distance(p));
  }
}

}  // namespace detail

/// Mean over A of the nearest-neighbour distance to B.
inline double directed_avg_error(const ProfileSampling& a, const ProfileSampling& b) {
  double sum = 0.0;
  detail::directed_metric(a, b, [&](double d) { sum += d; });
  return sum / static_cast<double>(a.size());
}

/// Max over A of the nearest-neighbour distance to B.
inline double directed_hausdorff(const ProfileSampling& a, const ProfileSampling& b) {
  double worst = 0.0;
  detail::directed_metric(a, b, [&](double d) { worst = std::max(worst, d); });
  return worst;
}

inline double symmetric_avg_error(const ProfileSampling& p, const ProfileSampling& q) {
  return 0.5 * (directed_avg_error(p, q) + directed_avg_error(q, p));
}

/// Average of the two directed maxima (not the textbook max-form).
inline double symmetric_hausdorff(const ProfileSampling& p, const ProfileSampling& q) {
  return 0.5 * (directed_hausdorff(p, q) + directed_hausdorff(q, p));
}

}  // namespace revo
