#include <revo/particle_filter.hpp>

#include <revo/metrics.hpp>

#include <gtest/gtest.h>

#include <chrono>
#include <random>

#include "test_util.hpp"

using namespace revo;

namespace {

// Accumulator with a single straight vertical ridge at the given rho.
RadialAccumulator ridge_accumulator(double rho, double cell = 10.0, double r = 160.0,
                                    double h_max = 160.0) {
  RadialAccumulator acc(cell, cell, static_cast<int>(r / cell), static_cast<int>(h_max / cell),
                        false);
  const int i = static_cast<int>(rho / cell);
  for (int j = 0; j < acc.n_h(); ++j) acc.at(i, j) = 1.0;
  acc.finalize();
  return acc;
}

RadialAccumulator random_accumulator(std::mt19937_64& rng, int n, double cell) {
  RadialAccumulator acc(cell, cell, n, n, false);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) acc.at(i, j) = u01(rng);
  acc.finalize();
  return acc;
}

// Exhaustive oracle: evaluate every cell, sort, average the top k.
double oracle_gmm(const Knot2& x, const RadialAccumulator& acc, double sigma, int k) {
  std::vector<double> values;
  for (int j = 0; j < acc.n_h(); ++j) {
    for (int i = 0; i < acc.n_rho(); ++i) {
      const Knot2 c = acc.cell_center(i, j);
      const double d2 = (x - c).squaredNorm();
      values.push_back(acc.at(i, j) * std::exp(-d2 / (2.0 * sigma * sigma)) /
                       (kTwoPi * sigma * sigma));
    }
  }
  std::sort(values.rbegin(), values.rend());
  double sum = 0.0;
  for (int i = 0; i < k && i < static_cast<int>(values.size()); ++i) sum += values[i];
  return sum / k;
}

}  // namespace

TEST(InitParticles, DeterministicPerSeed) {
  FilterConfig cfg;
  cfg.particle_count = 50;
  const ParticleSet a = init_particles(cfg, 160.0, 160.0, 7);
  const ParticleSet b = init_particles(cfg, 160.0, 160.0, 7);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.particles[i].k2, b.particles[i].k2);
    EXPECT_EQ(a.particles[i].k3, b.particles[i].k3);
    EXPECT_EQ(a.particles[i].k4, b.particles[i].k4);
  }
  const ParticleSet c = init_particles(cfg, 160.0, 160.0, 8);
  EXPECT_NE(a.particles[0].k3, c.particles[0].k3);
}

TEST(InitParticles, KnotsWithinBoundsAndConstrained) {
  // 170k particles x 3 knots x 2 coordinates: a million uniform draws.
  FilterConfig cfg;
  cfg.particle_count = 170000;
  const ParticleSet set = init_particles(cfg, 160.0, 120.0, 3);
  for (const ProfileCurve& p : set.particles) {
    EXPECT_EQ(p.k2.x(), 0.0);
    for (const Knot2* k : {&p.k2, &p.k3, &p.k4}) {
      EXPECT_GE(k->x(), 0.0);
      EXPECT_LE(k->x(), 160.0);
      EXPECT_GE(k->y(), 0.0);
      EXPECT_LE(k->y(), 120.0);
    }
  }
}

TEST(InitParticles, UniformLawMeansMatch) {
  FilterConfig cfg;
  cfg.particle_count = 100000;
  const double r = 160.0;
  const ParticleSet set = init_particles(cfg, r, r, 11);
  double mean_rho = 0.0, mean_h = 0.0;
  for (const ProfileCurve& p : set.particles) {
    mean_rho += p.k3.x() + p.k4.x();
    mean_h += p.k3.y() + p.k4.y();
  }
  mean_rho /= 2.0 * cfg.particle_count;
  mean_h /= 2.0 * cfg.particle_count;
  // Standard error of the mean of U[0,r] over 2e5 draws, three sigma.
  const double se3 = 3.0 * (r / std::sqrt(12.0)) / std::sqrt(2.0 * cfg.particle_count);
  EXPECT_NEAR(mean_rho, r / 2.0, se3);
  EXPECT_NEAR(mean_h, r / 2.0, se3);
}

TEST(MotionUpdate, ZeroSigmaLeavesParticlesUntouched) {
  FilterConfig cfg;
  cfg.particle_count = 64;
  cfg.sigma_m = 0.0;
  const ParticleSet before = init_particles(cfg, 160.0, 160.0, 5);
  const ParticleSet after = motion_update(before, cfg);
  for (std::size_t i = 0; i < before.size(); ++i) {
    EXPECT_EQ(before.particles[i].k3, after.particles[i].k3);
  }
}

TEST(MotionUpdate, DisplacementStatisticsMatchSigma) {
  FilterConfig cfg;
  cfg.particle_count = 100000;
  cfg.sigma_m = 2.0;
  ParticleSet set = init_particles(cfg, 160.0, 160.0, 13);
  // Center all knots so the clamp never engages.
  for (ProfileCurve& p : set.particles) {
    p.k2 = {0.0, 80.0};
    p.k3 = {80.0, 80.0};
    p.k4 = {80.0, 80.0};
  }
  const ParticleSet before = set;
  const ParticleSet after = motion_update(std::move(set), cfg);
  double sum = 0.0, sum2 = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < after.size(); ++i) {
    for (double d : {after.particles[i].k3.x() - before.particles[i].k3.x(),
                     after.particles[i].k3.y() - before.particles[i].k3.y(),
                     after.particles[i].k4.x() - before.particles[i].k4.x(),
                     after.particles[i].k4.y() - before.particles[i].k4.y()}) {
      sum += d;
      sum2 += d * d;
      ++n;
    }
  }
  const double mean = sum / n;
  const double std_dev = std::sqrt(sum2 / n - mean * mean);
  EXPECT_NEAR(std_dev, cfg.sigma_m, 0.02 * cfg.sigma_m);
}

TEST(MotionUpdate, AxisConstraintHolds) {
  FilterConfig cfg;
  cfg.particle_count = 500;
  cfg.sigma_m = 5.0;
  ParticleSet set = init_particles(cfg, 160.0, 160.0, 17);
  for (int step = 0; step < 5; ++step) {
    set = motion_update(std::move(set), cfg);
    for (const ProfileCurve& p : set.particles) {
      EXPECT_EQ(p.k2.x(), 0.0);
      EXPECT_LE(p.k3.x(), 160.0);
      EXPECT_GE(p.k3.y(), 0.0);
    }
  }
}

TEST(GmmPointScore, AllZeroAccumulatorScoresZero) {
  const RadialAccumulator acc = build_accumulator(PointCloud("canonical"), 10.0, 160.0, 160.0, false);
  FilterConfig cfg;
  EXPECT_EQ(gmm_point_score({50.0, 50.0}, acc, cfg), 0.0);
}

TEST(GmmPointScore, SingleCellAtCenter) {
  RadialAccumulator acc(10.0, 10.0, 16, 16, false);
  acc.at(4, 7) = 3.5;
  acc.finalize();
  FilterConfig cfg;  // sigma = cell = 10
  const Knot2 center = acc.cell_center(4, 7);
  const double expected = 3.5 / (kTwoPi * 100.0) / 10.0;
  EXPECT_NEAR(gmm_point_score(center, acc, cfg), expected, 1e-15);
}

TEST(GmmPointScore, MatchesExhaustiveOracle) {
  std::mt19937_64 rng(23);
  const RadialAccumulator acc = random_accumulator(rng, 4, 10.0);
  FilterConfig cfg;
  std::uniform_real_distribution<double> u(-10.0, 60.0);
  for (int q = 0; q < 100; ++q) {
    const Knot2 x{u(rng), u(rng)};
    const double got = gmm_point_score(x, acc, cfg);
    const double want = oracle_gmm(x, acc, 10.0, cfg.gmm_top_k);
    EXPECT_NEAR(got, want, 1e-12 * std::max(1.0, want));
  }
}

TEST(GmmPointScore, FewerCellsThanKPadsWithZeros) {
  RadialAccumulator acc(10.0, 10.0, 2, 2, false);
  acc.at(0, 0) = 1.0;
  acc.at(1, 1) = 0.5;
  acc.finalize();
  FilterConfig cfg;
  const double got = gmm_point_score(acc.cell_center(0, 0), acc, cfg);
  const double want = oracle_gmm(acc.cell_center(0, 0), acc, 10.0, cfg.gmm_top_k);
  EXPECT_NEAR(got, want, 1e-15);
}

TEST(ParticleScore, RidgeBeatsShiftedCurve) {
  const RadialAccumulator acc = ridge_accumulator(55.0);
  FilterConfig cfg;
  const ProfileCurve on_ridge{{0.0, 10.0}, {55.0, 80.0}, {55.0, 150.0}};
  ProfileCurve shifted = on_ridge;
  shifted.k3.x() += 30.0;  // three sigma away
  shifted.k4.x() += 30.0;
  EXPECT_GT(particle_score(on_ridge, acc, cfg), particle_score(shifted, acc, cfg));
}

TEST(ParticleScore, InvariantToKnotReversal) {
  // Chordal curve whose scored span has length divisible by the sampling
  // step: the equidistant sample set is then reversal-symmetric.
  const RadialAccumulator acc = ridge_accumulator(55.0);
  FilterConfig cfg;
  cfg.sample_step = 5.0;
  const ProfileCurve forward{{10.0, 20.0}, {40.0, 60.0}, {70.0, 100.0}};  // straight line
  const ProfileCurve reversed{forward.k4, forward.k3, forward.k2};
  EXPECT_NEAR(particle_score(forward, acc, cfg), particle_score(reversed, acc, cfg), 1e-12);
}

TEST(ParticleScore, LengthNormalizationPenalizesEmptyTail) {
  const RadialAccumulator acc = ridge_accumulator(55.0);
  FilterConfig cfg;
  const ProfileCurve compact{{0.0, 10.0}, {55.0, 80.0}, {55.0, 150.0}};
  // Same start, but the far knot drags the curve through empty cells.
  const ProfileCurve with_tail{{0.0, 10.0}, {55.0, 80.0}, {150.0, 20.0}};
  EXPECT_GT(particle_score(compact, acc, cfg), particle_score(with_tail, acc, cfg));
}

TEST(SystematicResample, DegenerateMassDuplicatesWinner) {
  FilterConfig cfg;
  cfg.particle_count = 32;
  cfg.resample_ratio = 1.0;
  ParticleSet set = init_particles(cfg, 160.0, 160.0, 3);
  set.scores.assign(set.size(), 0.0);
  set.scores[17] = 1.0;
  set.scored = true;
  const Knot2 winner = set.particles[17].k3;
  const ParticleSet out = systematic_resample(std::move(set), cfg, 5);
  EXPECT_FALSE(out.reinitialized);
  for (const ProfileCurve& p : out.particles) EXPECT_EQ(p.k3, winner);
}

TEST(SystematicResample, UniformScoresKeepCountsBalanced) {
  FilterConfig cfg;
  cfg.particle_count = 100;
  cfg.resample_ratio = 1.0;
  ParticleSet set = init_particles(cfg, 160.0, 160.0, 21);
  set.scores.assign(set.size(), 0.25);
  set.scored = true;
  // Tag particles by their index through k4 so copies are countable.
  for (std::size_t i = 0; i < set.size(); ++i) set.particles[i].k4 = {double(i), 0.0};
  const ParticleSet out = systematic_resample(std::move(set), cfg, 9);
  std::vector<int> counts(100, 0);
  for (const ProfileCurve& p : out.particles) counts[static_cast<int>(p.k4.x())]++;
  for (int c : counts) EXPECT_TRUE(c == 0 || c == 1 || c == 2);
  int total = 0;
  for (int c : counts) total += c;
  EXPECT_EQ(total, 100);
  for (int c : counts) EXPECT_LE(std::abs(c - 1), 1);
}

TEST(SystematicResample, CountsMatchExpectationWithinOne) {
  FilterConfig cfg;
  cfg.particle_count = 64;
  cfg.resample_ratio = 1.0;
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    ParticleSet set = init_particles(cfg, 160.0, 160.0, 100 + trial);
    double total = 0.0;
    for (std::size_t i = 0; i < set.size(); ++i) {
      set.scores[i] = u01(rng);
      total += set.scores[i];
      set.particles[i].k4 = {double(i), 0.0};
    }
    set.scored = true;
    const std::vector<double> scores = set.scores;
    const ParticleSet out = systematic_resample(std::move(set), cfg, 500 + trial);
    std::vector<int> counts(64, 0);
    for (const ProfileCurve& p : out.particles) counts[static_cast<int>(p.k4.x())]++;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      const double expected = 64.0 * scores[i] / total;
      EXPECT_LE(std::abs(counts[i] - expected), 1.0 + 1e-9);
    }
  }
}

TEST(SystematicResample, FreshBlockAndAllZeroFallback) {
  FilterConfig cfg;
  cfg.particle_count = 40;
  cfg.resample_ratio = 0.8;
  ParticleSet set = init_particles(cfg, 160.0, 160.0, 3);
  set.scores.assign(set.size(), 0.0);
  set.scores[0] = 2.0;
  set.scored = true;
  const Knot2 survivor = set.particles[0].k3;
  const ParticleSet out = systematic_resample(std::move(set), cfg, 5);
  EXPECT_FALSE(out.reinitialized);
  for (int i = 0; i < 32; ++i) EXPECT_EQ(out.particles[i].k3, survivor);  // resampled block
  // fresh block still satisfies the axis constraint
  for (int i = 32; i < 40; ++i) EXPECT_EQ(out.particles[i].k2.x(), 0.0);

  ParticleSet dead = init_particles(cfg, 160.0, 160.0, 4);
  dead.scores.assign(dead.size(), 0.0);
  dead.scored = true;
  const ParticleSet reborn = systematic_resample(std::move(dead), cfg, 6);
  EXPECT_TRUE(reborn.reinitialized);
  EXPECT_EQ(reborn.size(), 40u);
}

TEST(BestParticle, ArgmaxAndTieBreak) {
  FilterConfig cfg;
  cfg.particle_count = 3;
  ParticleSet set = init_particles(cfg, 160.0, 160.0, 3);
  set.scores = {0.1, 0.9, 0.3};
  set.scored = true;
  EXPECT_EQ(&best_particle(set), &set.particles[1]);
  set.scores = {0.4, 0.4, 0.4};
  EXPECT_EQ(&best_particle(set), &set.particles[0]);
}

TEST(BestParticle, MatchesLinearScanOracle) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  FilterConfig cfg;
  cfg.particle_count = 200;
  ParticleSet set = init_particles(cfg, 160.0, 160.0, 5);
  for (double& s : set.scores) s = u01(rng);
  set.scored = true;
  std::size_t oracle = 0;
  for (std::size_t i = 1; i < set.size(); ++i)
    if (set.scores[i] > set.scores[oracle]) oracle = i;
  EXPECT_EQ(&best_particle(set), &set.particles[oracle]);
}

TEST(BestParticle, UnscoredSetRejected) {
  FilterConfig cfg;
  cfg.particle_count = 4;
  const ParticleSet set = init_particles(cfg, 160.0, 160.0, 3);
  EXPECT_THROW(best_particle(set), InvalidStateError);
}

TEST(Step, FrozenDynamicsKeepBestParticle) {
  const RadialAccumulator acc = ridge_accumulator(55.0);
  FilterConfig cfg;
  cfg.particle_count = 200;
  cfg.sigma_m = 0.0;
  cfg.resample_ratio = 1.0;
  ParticleSet set = init_particles(cfg, 160.0, 160.0, 7);
  auto [s1, best1] = step(std::move(set), acc, cfg, 100);
  auto [s2, best2] = step(std::move(s1), acc, cfg, 101);
  auto [s3, best3] = step(std::move(s2), acc, cfg, 102);
  EXPECT_EQ(best1.k3, best2.k3);
  EXPECT_EQ(best2.k3, best3.k3);
  EXPECT_EQ(best2.k4, best3.k4);
}

TEST(Step, RepeatedFrameScoreRarelyDecreases) {
  // Two consecutive steps on the same bowl-shaped accumulator: after
  // resampling has concentrated the population, the best score should not
  // drop.
  const ProfileCurve bowl{{0.0, 15.0}, {70.0, 30.0}, {95.0, 110.0}};
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  PointCloud cloud("canonical");
  for (int i = 0; i < 6000; ++i) {
    const Knot2 p = eval_profile(bowl, 2.0 * u01(rng));
    cloud.push_back(from_canonical_polar({std::max(p.x(), 0.0), p.y(), kTwoPi * u01(rng)}));
  }
  const RadialAccumulator acc = build_accumulator(cloud, 10.0, 160.0, 160.0, false);

  FilterConfig cfg;
  cfg.particle_count = 300;
  int non_decreasing = 0;
  for (int run = 0; run < 100; ++run) {
    ParticleSet set = init_particles(cfg, 160.0, 160.0, 1000 + run);
    auto [after_first, best1] = step(std::move(set), acc, cfg, 2000 + run);
    auto [after_second, best2] = step(std::move(after_first), acc, cfg, 3000 + run);
    const double score1 = particle_score(best1, acc, cfg);
    const double score2 = particle_score(best2, acc, cfg);
    if (score2 >= score1 * (1.0 - 1e-9)) ++non_decreasing;
  }
  EXPECT_GE(non_decreasing, 90);
}

TEST(Step, FullyDeterministicPerSeed) {
  const RadialAccumulator acc = ridge_accumulator(65.0);
  FilterConfig cfg;
  cfg.particle_count = 300;
  const auto run = [&]() {
    ParticleSet set = init_particles(cfg, 160.0, 160.0, 55);
    ProfileCurve best;
    for (int f = 0; f < 5; ++f) {
      auto [next, b] = step(std::move(set), acc, cfg, 700 + f);
      set = std::move(next);
      best = b;
    }
    return std::make_pair(set, best);
  };
  const auto [set_a, best_a] = run();
  const auto [set_b, best_b] = run();
  EXPECT_EQ(best_a.k3, best_b.k3);
  ASSERT_EQ(set_a.size(), set_b.size());
  for (std::size_t i = 0; i < set_a.size(); ++i) {
    EXPECT_EQ(set_a.particles[i].k2, set_b.particles[i].k2);
    EXPECT_EQ(set_a.particles[i].k3, set_b.particles[i].k3);
    EXPECT_EQ(set_a.particles[i].k4, set_b.particles[i].k4);
  }
}

TEST(Scoring, NonNegativeAndFinite) {
  std::mt19937_64 rng(61);
  const RadialAccumulator acc = random_accumulator(rng, 16, 10.0);
  FilterConfig cfg;
  cfg.particle_count = 500;
  ParticleSet set = init_particles(cfg, 160.0, 160.0, 9);
  set = score_particles(std::move(set), acc, cfg);
  for (double s : set.scores) {
    EXPECT_GE(s, 0.0);
    EXPECT_TRUE(std::isfinite(s));
  }
}

TEST(Scoring, GlobalWeightScaleKeepsArgmax) {
  std::mt19937_64 rng(67);
  RadialAccumulator acc = random_accumulator(rng, 16, 10.0);
  FilterConfig cfg;
  cfg.particle_count = 200;
  ParticleSet set = init_particles(cfg, 160.0, 160.0, 12);
  const ParticleSet scored = score_particles(set, acc, cfg);

  RadialAccumulator scaled = acc;
  for (int j = 0; j < scaled.n_h(); ++j)
    for (int i = 0; i < scaled.n_rho(); ++i) scaled.at(i, j) *= 37.0;
  scaled.finalize();
  const ParticleSet scored2 = score_particles(set, scaled, cfg);

  std::size_t best1 = 0, best2 = 0;
  for (std::size_t i = 1; i < scored.size(); ++i) {
    if (scored.scores[i] > scored.scores[best1]) best1 = i;
    if (scored2.scores[i] > scored2.scores[best2]) best2 = i;
  }
  EXPECT_EQ(best1, best2);
  for (std::size_t i = 0; i < scored.size(); ++i) {
    EXPECT_NEAR(scored2.scores[i], 37.0 * scored.scores[i], 1e-9 * std::max(1.0, scored2.scores[i]));
  }
}

TEST(Filter, ResolutionInvarianceWithTiedSigma) {
  // With the Gaussian sigma and sampling step tied to the cell size, the
  // converged best-particle error stays within 2x across 16/32/64 grids.
  const ProfileCurve bowl{{0.0, 25.0}, {62.0, 85.0}, {92.0, 108.0}};
  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  PointCloud cloud("canonical");
  for (int i = 0; i < 12000; ++i) {
    const Knot2 p = eval_profile(bowl, 2.0 * u01(rng));
    cloud.push_back(from_canonical_polar({std::max(p.x(), 0.0), p.y(), kTwoPi * u01(rng)}));
  }
  const auto truth = sample_equidistant(bowl, 0.2);

  std::vector<double> errors;
  for (int bins : {16, 32, 64}) {
    const double cell = 160.0 / bins;
    const RadialAccumulator acc = build_accumulator(cloud, cell, 160.0, 160.0, false);
    FilterConfig cfg;  // sigma and step derive from the cell size
    ParticleSet set = init_particles(cfg, 160.0, 160.0, 99);
    ProfileCurve best;
    for (int f = 0; f < 30; ++f) {
      auto [next, b] = step(std::move(set), acc, cfg, 500 + f);
      set = std::move(next);
      best = b;
    }
    double ae = 0.5 * (directed_avg_error(truth, sample_equidistant(best, 0.2)) +
                       directed_avg_error(sample_equidistant(best, 0.2), truth));
    errors.push_back(ae);
  }
  const double lo = *std::min_element(errors.begin(), errors.end());
  const double hi = *std::max_element(errors.begin(), errors.end());
  EXPECT_LE(hi, 2.0 * lo) << "errors: " << errors[0] << " " << errors[1] << " " << errors[2];
}

TEST(Scoring, CostScalesWithCellCountModel) {
  // Dense random accumulators: scoring one point visits every cell, so the
  // m log m model predicts a 5x ratio from 256 to 1024 cells; accept within
  // 2x of that.
  std::mt19937_64 rng(71);
  const RadialAccumulator small = random_accumulator(rng, 16, 10.0);
  const RadialAccumulator large = random_accumulator(rng, 32, 5.0);
  FilterConfig cfg;
  const ProfileCurve probe{{0.0, 20.0}, {80.0, 60.0}, {120.0, 140.0}};

  const auto time_score = [&](const RadialAccumulator& acc) {
    double best = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < 5; ++rep) {
      const auto start = std::chrono::steady_clock::now();
      double sink = 0.0;
      for (int i = 0; i < 200; ++i) sink += particle_score(probe, acc, cfg);
      const auto stop = std::chrono::steady_clock::now();
      EXPECT_GT(sink, 0.0);
      best = std::min(best, std::chrono::duration<double>(stop - start).count());
    }
    return best;
  };
  // Same sampling step for both so only the cell count varies.
  cfg.sample_step = 5.0;
  const double t_small = time_score(small);
  const double t_large = time_score(large);
  const double predicted = (1024.0 * std::log(1024.0)) / (256.0 * std::log(256.0));
  const double measured = t_large / t_small;
  EXPECT_GT(measured, predicted / 2.0);
  EXPECT_LT(measured, predicted * 2.0);
}
