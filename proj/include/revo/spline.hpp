// Catmull-Rom profile curves in (rho, h) space.
//
// A profile is a 5-knot Catmull-Rom where the first and last knots are
// virtual: derived by point reflection from the interior knots, they only
// shape the end tangents and are never free parameters. Only the span between
// the interior knots (k2..k4) is evaluated, sampled and measured.

#pragma once

#include <revo/core.hpp>

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace revo {

/// Profile curve with interior knots k2, k3, k4 and tension tau (chordal
/// variant, tau = 1). Virtual end knots are computed on demand.
struct ProfileCurve {
  Knot2 k2 = Knot2::Zero();
  Knot2 k3 = Knot2::Zero();
  Knot2 k4 = Knot2::Zero();
  double tension = 1.0;
};

/// Virtual end knots by point reflection: k1 mirrors k3 across k2 and
/// k5 mirrors k3 across k4, which aligns the end tangents with (k3-k2)
/// and (k4-k3).
inline std::pair<Knot2, Knot2> virtual_knots(const Knot2& k2, const Knot2& k3, const Knot2& k4) {
  return {2.0 * k2 - k3, 2.0 * k4 - k3};
}

/// One cubic segment between kj and kj1, with kjm1/kj2 the neighbouring
/// knots, at progression p in [0, 1].
inline Knot2 eval_segment(const Knot2& kjm1, const Knot2& kj, const Knot2& kj1, const Knot2& kj2,
                          double p, double tau) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("eval_segment: progression outside [0,1]");
  const double p2 = p * p;
  const double p3 = p2 * p;
  const double c0 = 0.5 * (-tau * p + 2.0 * tau * p2 - tau * p3);
  const double c1 = 0.5 * (2.0 + (tau - 6.0) * p2 + (4.0 - tau) * p3);
  const double c2 = 0.5 * (tau * p - 2.0 * (tau - 3.0) * p2 + (tau - 4.0) * p3);
  const double c3 = 0.5 * (-tau * p2 + tau * p3);
  return c0 * kjm1 + c1 * kj + c2 * kj1 + c3 * kj2;
}

/// Curve point at t in [0, 2]: t in [0,1] covers k2->k3, t in [1,2] covers
/// k3->k4. Virtual spans are never evaluated.
inline Knot2 eval_profile(const ProfileCurve& c, double t) {
  if (t < 0.0 || t > 2.0) throw std::invalid_argument("eval_profile: parameter outside [0,2]");
  const auto [k1, k5] = virtual_knots(c.k2, c.k3, c.k4);
  if (t <= 1.0) return eval_segment(k1, c.k2, c.k3, c.k4, t, c.tension);
  return eval_segment(c.k2, c.k3, c.k4, k5, t - 1.0, c.tension);
}

namespace detail {

inline constexpr int kSubSamplesPerSegment = 256;

struct DensePolyline {
  std::vector<Knot2> points;      // 2 * kSubSamplesPerSegment + 1 points
  std::vector<double> cum_length; // same size, cum_length[0] = 0
};

inline DensePolyline dense_polyline(const ProfileCurve& c) {
  DensePolyline out;
  const int n = 2 * kSubSamplesPerSegment;
  out.points.reserve(n + 1);
  out.cum_length.reserve(n + 1);
  for (int i = 0; i <= n; ++i) {
    const double t = 2.0 * static_cast<double>(i) / static_cast<double>(n);
    out.points.push_back(eval_profile(c, t));
    if (i == 0) {
      out.cum_length.push_back(0.0);
    } else {
      out.cum_length.push_back(out.cum_length.back() + (out.points[i] - out.points[i - 1]).norm());
    }
  }
  return out;
}

// Point at arc length s along the polyline, linear re-interpolation.
inline Knot2 point_at_length(const DensePolyline& poly, double s) {
  const auto& cum = poly.cum_length;
  if (s <= 0.0) return poly.points.front();
  if (s >= cum.back()) return poly.points.back();
  // cum is nondecreasing; binary search for the bracketing segment.
  std::size_t lo = 0, hi = cum.size() - 1;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    if (cum[mid] <= s)
      lo = mid;
    else
      hi = mid;
  }
  const double seg = cum[hi] - cum[lo];
  const double w = seg > 0.0 ? (s - cum[lo]) / seg : 0.0;
  return (1.0 - w) * poly.points[lo] + w * poly.points[hi];
}

}  // namespace detail

/// Arc length of the scored span (k2 to k4), from dense sub-sampling.
inline double curve_length(const ProfileCurve& c) {
  return detail::dense_polyline(c).cum_length.back();
}

/// Points spaced `step` apart in arc length along the scored span, endpoints
/// included. A curve of (numerically) zero length yields a single point.
inline std::vector<Knot2> sample_equidistant(const ProfileCurve& c, double step) {
  if (step <= 0.0) throw std::invalid_argument("sample_equidistant: step must be positive");
  const detail::DensePolyline poly = detail::dense_polyline(c);
  const double length = poly.cum_length.back();
  if (length <= 1e-12) return {poly.points.front()};

  std::vector<Knot2> out;
  const double eps = 1e-9 * std::max(1.0, length);
  const auto count = static_cast<std::size_t>(std::floor(length / step + 1e-9));
  out.reserve(count + 2);
  for (std::size_t k = 0; k <= count; ++k) {
    out.push_back(detail::point_at_length(poly, static_cast<double>(k) * step));
  }
  if (length - static_cast<double>(count) * step > eps) {
    out.push_back(poly.points.back());
  }
  return out;
}

}  // namespace revo
