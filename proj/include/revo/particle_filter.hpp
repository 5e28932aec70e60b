// Bootstrap particle filter over profile curves. Particles are Catmull-Rom
// profiles; the motion model jitters knots with Gaussian noise, observation
// likelihood scores curve samples against the accumulator viewed as a
// weighted Gaussian mixture, and systematic resampling with a fresh-particle
// quota carries the population across frames.

#pragma once

#include <revo/accumulator.hpp>
#include <revo/core.hpp>
#include <revo/spline.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

namespace revo {

struct FilterConfig {
  int particle_count = 1000;
  double sigma_m = 2.0;         // knot motion noise, mm (50 mm/s at 25 fps)
  double resample_ratio = 0.8;  // survivor fraction; the rest are fresh draws
  int gmm_top_k = 10;
  double gaussian_sigma = 0.0;  // mm; 0 = accumulator cell size
  double sample_step = 0.0;     // mm; 0 = half the accumulator cell size

  double effective_sigma(const RadialAccumulator& acc) const {
    return gaussian_sigma > 0.0 ? gaussian_sigma : acc.delta_rho();
  }
  double effective_step(const RadialAccumulator& acc) const {
    return sample_step > 0.0 ? sample_step : 0.5 * acc.delta_rho();
  }
};

/// N curves with scores and the search-space bounds they were drawn from.
/// The first interior knot of every particle stays on the h axis (rho = 0).
struct ParticleSet {
  std::vector<ProfileCurve> particles;
  std::vector<double> scores;
  bool scored = false;
  bool reinitialized = false;  // last resample fell back to a full fresh draw
  double bound_r = 0.0;
  double bound_h = 0.0;
  std::mt19937_64 motion_rng;

  std::size_t size() const { return particles.size(); }
};

namespace detail {

inline ProfileCurve draw_particle(std::mt19937_64& rng, double r, double h_max) {
  std::uniform_real_distribution<double> u_rho(0.0, r);
  std::uniform_real_distribution<double> u_h(0.0, h_max);
  ProfileCurve c;
  for (Knot2* k : {&c.k2, &c.k3, &c.k4}) {
    const double rho = u_rho(rng);
    const double h = u_h(rng);
    *k = {rho, h};
  }
  c.k2.x() = 0.0;  // axis constraint
  return c;
}

}  // namespace detail

/// N particles with interior knots drawn uniformly in [0,r] x [0,h_max], the
/// first knot then projected onto the h axis. Deterministic per seed.
inline ParticleSet init_particles(const FilterConfig& cfg, double r, double h_max,
                                  std::uint64_t seed) {
  if (cfg.particle_count < 1)
    throw std::invalid_argument("init_particles: particle count must be >= 1");
  ParticleSet set;
  set.bound_r = r;
  set.bound_h = h_max;
  set.particles.reserve(cfg.particle_count);
  std::mt19937_64 init_rng(mix_seed(seed, 0x11));
  for (int i = 0; i < cfg.particle_count; ++i) {
    set.particles.push_back(detail::draw_particle(init_rng, r, h_max));
  }
  set.scores.assign(set.particles.size(), 0.0);
  set.motion_rng.seed(mix_seed(seed, 0x22));
  return set;
}

/// Adds i.i.d. zero-mean Gaussian noise (sigma_m per axis) to every interior
/// knot, re-applies the axis constraint on the first knot and clamps knots to
/// the search bounds. Consumes the set's motion stream.
inline ParticleSet motion_update(ParticleSet set, const FilterConfig& cfg) {
  if (cfg.sigma_m > 0.0) {
    std::normal_distribution<double> noise(0.0, cfg.sigma_m);
    for (ProfileCurve& c : set.particles) {
      for (Knot2* k : {&c.k2, &c.k3, &c.k4}) {
        k->x() += noise(set.motion_rng);
        k->y() += noise(set.motion_rng);
        k->x() = std::clamp(k->x(), 0.0, set.bound_r);
        k->y() = std::clamp(k->y(), 0.0, set.bound_h);
      }
      c.k2.x() = 0.0;
    }
  }
  set.scored = false;
  return set;
}

/// Mean of the top-k weighted Gaussian densities at x. Every nonzero
/// accumulator cell is an isotropic Gaussian centered at the cell center,
/// weighted by the cell value; zero-valued cells contribute exactly zero and
/// are skipped. Missing terms pad with zero while the divisor stays k.
inline double gmm_point_score(const Knot2& x, const RadialAccumulator& acc,
                              const FilterConfig& cfg) {
  const int k = cfg.gmm_top_k;
  if (k <= 0) throw std::invalid_argument("gmm_point_score: top-k must be positive");
  const double sigma = cfg.effective_sigma(acc);
  const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
  const double norm = 1.0 / (kTwoPi * sigma * sigma);

  // Online top-k: `top` holds the k largest weighted densities seen so far.
  double stack_buf[32];
  std::vector<double> heap_buf;
  double* top = stack_buf;
  if (k > 32) {
    heap_buf.assign(k, 0.0);
    top = heap_buf.data();
  } else {
    std::fill(stack_buf, stack_buf + k, 0.0);
  }

  for (const auto& cell : acc.nonzero_cells()) {
    const double dx = x.x() - cell.rho_center;
    const double dy = x.y() - cell.h_center;
    const double v = cell.value * norm * std::exp(-(dx * dx + dy * dy) * inv_two_sigma2);
    if (v > top[k - 1]) {
      int i = k - 1;
      while (i > 0 && top[i - 1] < v) {
        top[i] = top[i - 1];
        --i;
      }
      top[i] = v;
    }
  }
  double sum = 0.0;
  for (int i = 0; i < k; ++i) sum += top[i];
  return sum / static_cast<double>(k);
}

/// Mean GMM score over the equidistant samples of the curve's scored span.
/// The mean (rather than sum over length) keeps the value independent of the
/// sampling step; ranking is unchanged.
inline double particle_score(const ProfileCurve& curve, const RadialAccumulator& acc,
                             const FilterConfig& cfg) {
  const std::vector<Knot2> samples = sample_equidistant(curve, cfg.effective_step(acc));
  double sum = 0.0;
  for (const Knot2& x : samples) sum += gmm_point_score(x, acc, cfg);
  return sum / static_cast<double>(samples.size());
}

/// Score every particle. Per-particle scores are independent, so this loop is
/// parallelized; results are identical to sequential evaluation.
inline ParticleSet score_particles(ParticleSet set, const RadialAccumulator& acc,
                                   const FilterConfig& cfg) {
  set.scores.resize(set.particles.size());
  const auto n = static_cast<std::ptrdiff_t>(set.particles.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    set.scores[i] = particle_score(set.particles[i], acc, cfg);
  }
  set.scored = true;
  return set;
}

/// Particle with the highest score; ties break to the lowest index.
inline const ProfileCurve& best_particle(const ParticleSet& set) {
  if (!set.scored || set.particles.empty())
    throw InvalidStateError("best_particle: set has no scores");
  std::size_t best = 0;
  for (std::size_t i = 1; i < set.scores.size(); ++i) {
    if (set.scores[i] > set.scores[best]) best = i;
  }
  return set.particles[best];
}

/// Systematic resampling: round(ratio*N) survivors drawn with a single
/// uniform offset over the normalized cumulative scores, the remaining
/// particles drawn fresh to allow recovery from total failure. If every score
/// is zero the whole set is reinitialized and flagged.
inline ParticleSet systematic_resample(ParticleSet set, const FilterConfig& cfg,
                                       std::uint64_t seed) {
  if (!set.scored) throw InvalidStateError("systematic_resample: set has no scores");
  if (cfg.resample_ratio < 0.0 || cfg.resample_ratio > 1.0)
    throw std::invalid_argument("systematic_resample: ratio outside [0,1]");

  const std::size_t n = set.particles.size();
  const auto survivors = static_cast<std::size_t>(
      std::llround(cfg.resample_ratio * static_cast<double>(n)));
  std::mt19937_64 rng(mix_seed(seed, 0x33));

  ParticleSet out;
  out.bound_r = set.bound_r;
  out.bound_h = set.bound_h;
  out.motion_rng = set.motion_rng;
  out.particles.reserve(n);

  double total = 0.0;
  for (double s : set.scores) total += s;

  if (total <= 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      out.particles.push_back(detail::draw_particle(rng, set.bound_r, set.bound_h));
    }
    out.reinitialized = true;
  } else {
    if (survivors > 0) {
      std::uniform_real_distribution<double> u01(0.0, 1.0);
      const double m = static_cast<double>(survivors);
      const double offset = u01(rng) / m;
      std::size_t src = 0;
      double cum = set.scores[0] / total;
      for (std::size_t j = 0; j < survivors; ++j) {
        const double pos = offset + static_cast<double>(j) / m;
        while (cum < pos && src + 1 < n) {
          ++src;
          cum += set.scores[src] / total;
        }
        out.particles.push_back(set.particles[src]);
      }
    }
    for (std::size_t i = survivors; i < n; ++i) {
      out.particles.push_back(detail::draw_particle(rng, set.bound_r, set.bound_h));
    }
  }
  out.scores.assign(n, 0.0);
  return out;
}

/// One filter step on the current frame's accumulator: motion, scoring, best
/// extraction, then resampling. Returns the resampled set and the best
/// pre-resample particle.
inline std::pair<ParticleSet, ProfileCurve> step(ParticleSet set, const RadialAccumulator& acc,
                                                 const FilterConfig& cfg, std::uint64_t seed) {
  set = motion_update(std::move(set), cfg);
  set = score_particles(std::move(set), acc, cfg);
  const ProfileCurve best = best_particle(set);
  ParticleSet next = systematic_resample(std::move(set), cfg, seed);
  return {std::move(next), best};
}

}  // namespace revo
