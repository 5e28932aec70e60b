// Radial accumulator: the canonical-frame cloud is clustered into 3D annuli
// over a (rho, h) grid and each cell stores the point density of its annulus,
// optionally down-weighted by the radial spread of the annulus so that
// non-radial clutter (hands) contributes less than true revolved surface.

#pragma once

#include <revo/core.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace revo {

/// Volume of the annulus between radii [rho_lo, rho_lo + delta_rho) of
/// height delta_h: the outer cylinder minus the inner one.
inline double annulus_volume(double rho_lo, double delta_rho, double delta_h) {
  const double outer = rho_lo + delta_rho;
  return std::numbers::pi_v<double> * (outer * outer - rho_lo * rho_lo) * delta_h;
}

/// Resultant-vector length of the annulus angles after stretching the
/// observed span to the full circle. 1 means fully concentrated (all angles
/// equal), 0 means perfectly balanced. The span normalization keeps setups
/// that cover only a small arc from being penalized.
inline double radial_spread(const std::vector<double>& thetas) {
  if (thetas.empty()) throw std::invalid_argument("radial_spread: empty angle set");
  const auto [lo_it, hi_it] = std::minmax_element(thetas.begin(), thetas.end());
  const double lo = *lo_it, hi = *hi_it;
  if (hi - lo <= 0.0) return 1.0;  // degenerate span, fully concentrated
  const double scale = kTwoPi / (hi - lo);
  double cx = 0.0, sx = 0.0;
  for (double t : thetas) {
    const double stretched = (t - lo) * scale;
    cx += std::cos(stretched);
    sx += std::sin(stretched);
  }
  const double n = static_cast<double>(thetas.size());
  return std::sqrt(cx * cx + sx * sx) / n;
}

/// 2D density grid over (rho, h). Cell (i, j) covers the annulus
/// rho in [i*delta_rho, (i+1)*delta_rho), h in [j*delta_h, (j+1)*delta_h).
class RadialAccumulator {
 public:
  struct WeightedCell {
    double rho_center;
    double h_center;
    double value;
  };

  RadialAccumulator(double delta_rho, double delta_h, int n_rho, int n_h, bool enhanced)
      : delta_rho_(delta_rho), delta_h_(delta_h), n_rho_(n_rho), n_h_(n_h), enhanced_(enhanced),
        cells_(static_cast<std::size_t>(n_rho) * n_h, 0.0) {
    if (delta_rho <= 0.0 || delta_h <= 0.0 || n_rho <= 0 || n_h <= 0)
      throw std::invalid_argument("RadialAccumulator: invalid grid geometry");
  }

  double delta_rho() const { return delta_rho_; }
  double delta_h() const { return delta_h_; }
  int n_rho() const { return n_rho_; }
  int n_h() const { return n_h_; }
  bool enhanced() const { return enhanced_; }
  std::size_t cell_count() const { return cells_.size(); }

  double at(int rho_bin, int h_bin) const { return cells_[index(rho_bin, h_bin)]; }
  double& at(int rho_bin, int h_bin) { return cells_[index(rho_bin, h_bin)]; }
  const std::vector<double>& values() const { return cells_; }

  Knot2 cell_center(int rho_bin, int h_bin) const {
    return {(rho_bin + 0.5) * delta_rho_, (h_bin + 0.5) * delta_h_};
  }

  /// Cells with nonzero density, cached for GMM scoring. Rebuilt lazily after
  /// any mutation through finalize().
  const std::vector<WeightedCell>& nonzero_cells() const { return nonzero_; }

  void finalize() {
    nonzero_.clear();
    for (int j = 0; j < n_h_; ++j) {
      for (int i = 0; i < n_rho_; ++i) {
        const double v = at(i, j);
        if (v > 0.0) {
          const Knot2 c = cell_center(i, j);
          nonzero_.push_back({c.x(), c.y(), v});
        }
      }
    }
  }

  /// Text grid export: one line per h_bin (row-major), rho bins separated by
  /// single spaces, full double precision.
  void write_grid(std::ostream& os) const {
    char buf[32];
    for (int j = 0; j < n_h_; ++j) {
      for (int i = 0; i < n_rho_; ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", at(i, j));
        os << (i ? " " : "") << buf;
      }
      os << '\n';
    }
  }

 private:
  std::size_t index(int rho_bin, int h_bin) const {
    return static_cast<std::size_t>(h_bin) * n_rho_ + rho_bin;
  }

  double delta_rho_, delta_h_;
  int n_rho_, n_h_;
  bool enhanced_;
  std::vector<double> cells_;
  std::vector<WeightedCell> nonzero_;
};

/// Bin a canonical-frame cloud into annuli and fill the density grid.
/// Points below the plate (h < 0) or outside rho in [0, r), h in [0, h_max)
/// are discarded. With `enhanced` each cell is additionally weighted by
/// (1 - radial_spread) of its annulus.
inline RadialAccumulator build_accumulator(const PointCloud& cloud, double cell, double r,
                                           double h_max, bool enhanced) {
  if (cell <= 0.0) throw std::invalid_argument("build_accumulator: cell size must be positive");
  const int n_rho = static_cast<int>(std::ceil(r / cell));
  const int n_h = static_cast<int>(std::ceil(h_max / cell));
  RadialAccumulator acc(cell, cell, n_rho, n_h, enhanced);

  std::vector<int> counts(acc.cell_count(), 0);
  std::vector<std::vector<double>> thetas;
  if (enhanced) thetas.resize(acc.cell_count());

  for (const Point3& p : cloud) {
    const PolarPoint q = to_canonical_polar(p);
    if (q.h < 0.0 || q.rho >= r || q.h >= h_max) continue;
    const int i = std::min(static_cast<int>(q.rho / cell), n_rho - 1);
    const int j = std::min(static_cast<int>(q.h / cell), n_h - 1);
    const std::size_t idx = static_cast<std::size_t>(j) * n_rho + i;
    ++counts[idx];
    if (enhanced) thetas[idx].push_back(q.theta);
  }

  for (int j = 0; j < n_h; ++j) {
    for (int i = 0; i < n_rho; ++i) {
      const std::size_t idx = static_cast<std::size_t>(j) * n_rho + i;
      if (counts[idx] == 0) continue;
      double v = counts[idx] / annulus_volume(i * cell, cell, cell);
      if (enhanced) v *= 1.0 - radial_spread(thetas[idx]);
      acc.at(i, j) = v;
    }
  }
  acc.finalize();
  return acc;
}

}  // namespace revo
