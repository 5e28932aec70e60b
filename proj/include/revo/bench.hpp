// Evaluation harness over synthetic scenes: run the full pipeline against
// generated frames, measure profile errors per frame, average over repeated
// runs (the filter is stochastic), and drive the ablation protocols.

#pragma once

#include <revo/core.hpp>
#include <revo/metrics.hpp>
#include <revo/pipeline.hpp>
#include <revo/synthetic.hpp>

#include <chrono>
#include <string>
#include <vector>

namespace revo {

struct FrameMetrics {
  int frame = 0;
  double ae_mm = 0.0;
  double hd_mm = 0.0;
  double runtime_ms = 0.0;
};

struct EvalResult {
  std::vector<FrameMetrics> per_frame;
  double mean_ae = 0.0;
  double mean_hd = 0.0;
};

/// Attach per-sensor registration angles and intrinsics derived from a scene
/// to pipeline params. Generated clouds are sampled uniformly by area, so the
/// per-pixel footprint correction must stay off: unit weights are already the
/// right weighting for that density model.
inline void configure_sensors(PipelineParams& params, const SceneSpec& scene) {
  params.sensors.clear();
  for (std::size_t i = 0; i < scene.sensors.size(); ++i) {
    SensorSetup setup;
    setup.phi = sensor_phi(scene, i);
    setup.intrinsics = scene.sensors[i].intrinsics;
    setup.projection_weights = false;
    params.sensors.push_back(setup);
  }
}

/// One full run: generate every frame, detect, reconstruct, compare with the
/// ground truth profile. `scene_seed` fixes the data; `params.seed` drives the
/// filter randomness.
inline EvalResult evaluate_scene(const SceneSpec& scene, const PipelineParams& params,
                                 std::uint64_t scene_seed) {
  Pipeline pipeline(params);

  std::vector<GeneratedFrame> frames;
  frames.reserve(scene.frame_count);
  for (int f = 0; f < scene.frame_count; ++f) {
    frames.push_back(generate_frame(scene, f, scene_seed));
  }

  bool locked = false;
  for (const GeneratedFrame& frame : frames) {
    if (pipeline.feed_detection(frame.sensor_clouds)) {
      locked = true;
      break;
    }
  }
  if (!locked) throw DetectionFailedError("evaluate_scene: detection never stabilized");

  EvalResult result;
  for (int f = 0; f < scene.frame_count; ++f) {
    const auto start = std::chrono::steady_clock::now();
    const FrameOutput out = pipeline.process(frames[f].sensor_clouds);
    const auto stop = std::chrono::steady_clock::now();

    const ProfileSampling truth = sample_profile(frames[f].ground_truth);
    const ProfileSampling predicted = sample_profile(out.best);
    FrameMetrics m;
    m.frame = f;
    m.ae_mm = symmetric_avg_error(truth, predicted);
    m.hd_mm = symmetric_hausdorff(truth, predicted);
    m.runtime_ms = std::chrono::duration<double, std::milli>(stop - start).count();
    result.per_frame.push_back(m);
    result.mean_ae += m.ae_mm;
    result.mean_hd += m.hd_mm;
  }
  result.mean_ae /= static_cast<double>(result.per_frame.size());
  result.mean_hd /= static_cast<double>(result.per_frame.size());
  return result;
}

/// Repeated-run average (the reporting protocol everywhere): pipeline seeds
/// run_seed, run_seed+1, ... with the scene data held fixed.
inline EvalResult evaluate_scene_averaged(const SceneSpec& scene, PipelineParams params,
                                          std::uint64_t scene_seed, std::uint64_t run_seed,
                                          int runs = 10) {
  EvalResult avg;
  for (int r = 0; r < runs; ++r) {
    params.seed = run_seed + static_cast<std::uint64_t>(r);
    const EvalResult one = evaluate_scene(scene, params, scene_seed);
    if (avg.per_frame.empty()) {
      avg.per_frame = one.per_frame;
    } else {
      for (std::size_t f = 0; f < avg.per_frame.size(); ++f) {
        avg.per_frame[f].ae_mm += one.per_frame[f].ae_mm;
        avg.per_frame[f].hd_mm += one.per_frame[f].hd_mm;
        avg.per_frame[f].runtime_ms += one.per_frame[f].runtime_ms;
      }
    }
    avg.mean_ae += one.mean_ae;
    avg.mean_hd += one.mean_hd;
  }
  const double n = static_cast<double>(runs);
  for (FrameMetrics& m : avg.per_frame) {
    m.ae_mm /= n;
    m.hd_mm /= n;
    m.runtime_ms /= n;
  }
  avg.mean_ae /= n;
  avg.mean_hd /= n;
  return avg;
}

// ---------------------------------------------------------------------------
// Ablation protocols
// ---------------------------------------------------------------------------

enum class AblationProtocol { sensors, particles, accumulator, enhancement };

struct AblationRow {
  std::string setting;
  double ae_mm = 0.0;
  double hd_mm = 0.0;
};

/// Restrict a scene to a subset of its sensors.
inline SceneSpec sensor_subset(const SceneSpec& scene, const std::vector<std::size_t>& keep) {
  SceneSpec sub = scene;
  sub.sensors.clear();
  for (std::size_t i : keep) sub.sensors.push_back(scene.sensors.at(i));
  return sub;
}

/// Run one protocol over a scene: each setting is evaluated with the same
/// repeated-run averaging and reported as one table row.
inline std::vector<AblationRow> run_ablation(AblationProtocol protocol, const SceneSpec& scene,
                                             const PipelineParams& base, std::uint64_t scene_seed,
                                             std::uint64_t run_seed, int runs = 10) {
  std::vector<AblationRow> table;
  const auto evaluate = [&](const std::string& name, const SceneSpec& sc,
                            PipelineParams params) {
    configure_sensors(params, sc);
    const EvalResult r = evaluate_scene_averaged(sc, params, scene_seed, run_seed, runs);
    table.push_back({name, r.mean_ae, r.mean_hd});
  };

  switch (protocol) {
    case AblationProtocol::sensors: {
      for (std::size_t i = 0; i < scene.sensors.size(); ++i) {
        evaluate("sensor_" + std::to_string(i + 1), sensor_subset(scene, {i}), base);
      }
      std::vector<std::size_t> all(scene.sensors.size());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
      evaluate("all_sensors", sensor_subset(scene, all), base);
      break;
    }
    case AblationProtocol::particles: {
      for (int n : {100, 1000, 5000}) {
        PipelineParams params = base;
        params.filter.particle_count = n;
        evaluate("particles_" + std::to_string(n), scene, params);
      }
      break;
    }
    case AblationProtocol::accumulator: {
      for (int bins : {16, 32, 64}) {
        PipelineParams params = base;
        params.cell = params.radius / static_cast<double>(bins);
        evaluate("grid_" + std::to_string(bins), scene, params);
      }
      break;
    }
    case AblationProtocol::enhancement: {
      for (bool enhanced : {false, true}) {
        PipelineParams params = base;
        params.enhanced = enhanced;
        evaluate(enhanced ? "enhanced" : "plain", scene, params);
      }
      break;
    }
  }
  return table;
}

}  // namespace revo
