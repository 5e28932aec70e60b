// Batch pipeline runner: reconstruct profiles from PLY sequences, evaluate
// against ground truth, generate synthetic benchmark scenes, or run the
// ablation protocols. One JSON config drives everything; flags override
// individual fields. Exit codes: 0 ok, 2 config error, 3 detection failed,
// 4 I/O error.

#include <revo/bench.hpp>
#include <revo/config.hpp>
#include <revo/export.hpp>
#include <revo/metrics.hpp>
#include <revo/pipeline.hpp>
#include <revo/ply_io.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using revo::json;

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> particles;
  std::optional<double> cell;
  std::optional<int> runs;
  std::optional<std::string> protocol;
  std::optional<std::uint64_t> scene_seed;
  std::optional<bool> temporal;
  std::optional<bool> enhanced;
};

void apply(const Overrides& ov, revo::RunConfig& cfg) {
  if (ov.seed) cfg.seed = *ov.seed;
  if (ov.out) cfg.output_dir = *ov.out;
  if (ov.particles) cfg.filter.particle_count = *ov.particles;
  if (ov.cell) cfg.cell = *ov.cell;
  if (ov.runs) cfg.evaluate_runs = *ov.runs;
  if (ov.protocol) cfg.ablate_protocol = *ov.protocol;
  if (ov.scene_seed) cfg.scene_seed = *ov.scene_seed;
  if (ov.temporal) cfg.temporal = *ov.temporal;
  if (ov.enhanced) cfg.enhanced = *ov.enhanced;
}

std::string frame_name(const char* prefix, int frame, const char* suffix) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s%06d%s", prefix, frame, suffix);
  return buf;
}

// Lexicographically ordered *.ply list of one sensor directory.
std::vector<fs::path> list_frames(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw revo::IoError("input directory missing: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".ply")
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw revo::IoError("no .ply frames in " + dir.string());
  return files;
}

revo::PipelineParams pipeline_params(const revo::RunConfig& cfg) {
  revo::PipelineParams params;
  params.radius = cfg.radius;
  params.cell = cfg.cell;
  params.h_max = cfg.h_max;
  params.enhanced = cfg.enhanced;
  params.temporal = cfg.temporal;
  params.plane = cfg.plane;
  params.stability = cfg.stability;
  params.filter = cfg.filter;
  params.seed = cfg.seed;
  for (const revo::SensorConfig& s : cfg.sensors) {
    revo::SensorSetup setup;
    setup.phi = s.phi_deg * std::numbers::pi_v<double> / 180.0;
    setup.intrinsics = s.intrinsics;
    setup.projection_weights = s.projection_weights;
    params.sensors.push_back(setup);
  }
  return params;
}

// All frames of all sensors, loaded up front so missing inputs fail before
// any output is written. frames[f][s] is sensor s at frame f.
struct LoadedSequence {
  std::vector<std::vector<revo::PointCloud>> frames;
  std::vector<revo::ProfileCurve> ground_truth;  // empty when not configured
};

LoadedSequence load_sequence(const revo::RunConfig& cfg) {
  if (cfg.sensors.empty()) throw revo::ConfigError("no sensors configured");
  std::vector<std::vector<fs::path>> per_sensor;
  std::size_t frame_count = std::numeric_limits<std::size_t>::max();
  for (const revo::SensorConfig& s : cfg.sensors) {
    per_sensor.push_back(list_frames(s.path));
    frame_count = std::min(frame_count, per_sensor.back().size());
  }

  LoadedSequence seq;
  for (std::size_t f = 0; f < frame_count; ++f) {
    std::vector<revo::PointCloud> clouds;
    for (std::size_t s = 0; s < per_sensor.size(); ++s) {
      clouds.push_back(revo::read_ply(per_sensor[s][f], "sensor_" + std::to_string(s)));
    }
    seq.frames.push_back(std::move(clouds));
  }

  if (!cfg.ground_truth_dir.empty()) {
    for (std::size_t f = 0; f < frame_count; ++f) {
      const fs::path p = fs::path(cfg.ground_truth_dir) / frame_name("frame_", static_cast<int>(f), ".csv");
      if (!fs::exists(p)) throw revo::IoError("ground truth frame missing: " + p.string());
      seq.ground_truth.push_back(revo::read_profile_knots_csv(p));
    }
  }
  return seq;
}

void run_detection(revo::Pipeline& pipeline, const LoadedSequence& seq) {
  for (const auto& clouds : seq.frames) {
    if (pipeline.feed_detection(clouds)) return;
  }
  throw revo::DetectionFailedError("turntable never stabilized over the sequence");
}

int cmd_reconstruct(const revo::RunConfig& cfg) {
  const LoadedSequence seq = load_sequence(cfg);
  revo::Pipeline pipeline(pipeline_params(cfg));
  run_detection(pipeline, seq);

  const fs::path out(cfg.output_dir);
  fs::create_directories(out);

  json frame_records = json::array();
  json metrics = json::array();
  revo::ProfileCurve last_best;
  for (std::size_t f = 0; f < seq.frames.size(); ++f) {
    const auto start = std::chrono::steady_clock::now();
    const revo::FrameOutput result = pipeline.process(seq.frames[f]);
    const auto stop = std::chrono::steady_clock::now();
    last_best = result.best;

    {
      std::ofstream os(out / frame_name("frame_", static_cast<int>(f), "_knots.csv"));
      revo::write_profile_knots_csv(result.best, os);
    }
    {
      std::ofstream os(out / frame_name("frame_", static_cast<int>(f), "_profile.csv"));
      revo::write_polyline_csv(revo::sample_equidistant(result.best, 1.0), os);
    }
    {
      std::ofstream os(out / frame_name("frame_", static_cast<int>(f), "_acc.txt"));
      result.accumulator.write_grid(os);
    }
    frame_records.push_back(
        {{"frame", f},
         {"best_knots", revo::knots_to_json(result.best.k2, result.best.k3, result.best.k4)},
         {"best_score", result.best_score},
         {"mean_score", result.mean_score},
         {"reinitialized", result.reinitialized}});

    if (!seq.ground_truth.empty()) {
      const revo::ProfileSampling truth = revo::sample_profile(seq.ground_truth[f]);
      const revo::ProfileSampling pred = revo::sample_profile(result.best);
      metrics.push_back(
          {{"frame", f},
           {"ae_mm", revo::symmetric_avg_error(truth, pred)},
           {"hd_mm", revo::symmetric_hausdorff(truth, pred)},
           {"runtime_ms", std::chrono::duration<double, std::milli>(stop - start).count()}});
    }
  }

  std::ofstream(out / "frames.json") << frame_records.dump(2) << "\n";
  if (!metrics.empty()) std::ofstream(out / "metrics.json") << metrics.dump(2) << "\n";
  revo::export_mesh(last_best, cfg.mesh_segments, out / "final_mesh.obj");
  std::cout << "reconstructed " << seq.frames.size() << " frames -> " << out.string() << "\n";
  return 0;
}

int cmd_evaluate(const revo::RunConfig& cfg) {
  if (cfg.ground_truth_dir.empty())
    throw revo::ConfigError("evaluate mode requires ground_truth_dir");
  const LoadedSequence seq = load_sequence(cfg);

  const std::size_t n_frames = seq.frames.size();
  std::vector<double> ae(n_frames, 0.0), hd(n_frames, 0.0), ms(n_frames, 0.0);
  for (int run = 0; run < cfg.evaluate_runs; ++run) {
    revo::PipelineParams params = pipeline_params(cfg);
    params.seed = cfg.seed + static_cast<std::uint64_t>(run);
    revo::Pipeline pipeline(params);
    run_detection(pipeline, seq);
    for (std::size_t f = 0; f < n_frames; ++f) {
      const auto start = std::chrono::steady_clock::now();
      const revo::FrameOutput result = pipeline.process(seq.frames[f]);
      const auto stop = std::chrono::steady_clock::now();
      const revo::ProfileSampling truth = revo::sample_profile(seq.ground_truth[f]);
      const revo::ProfileSampling pred = revo::sample_profile(result.best);
      ae[f] += revo::symmetric_avg_error(truth, pred);
      hd[f] += revo::symmetric_hausdorff(truth, pred);
      ms[f] += std::chrono::duration<double, std::milli>(stop - start).count();
    }
  }

  const fs::path out(cfg.output_dir);
  fs::create_directories(out);
  json metrics = json::array();
  double mean_ae = 0.0, mean_hd = 0.0;
  const double runs = cfg.evaluate_runs;
  for (std::size_t f = 0; f < n_frames; ++f) {
    metrics.push_back({{"frame", f},
                       {"ae_mm", ae[f] / runs},
                       {"hd_mm", hd[f] / runs},
                       {"runtime_ms", ms[f] / runs}});
    mean_ae += ae[f] / runs;
    mean_hd += hd[f] / runs;
  }
  std::ofstream(out / "metrics.json") << metrics.dump(2) << "\n";
  std::printf("evaluated %zu frames x %d runs: ae=%.3f mm, hd=%.3f mm\n", n_frames,
              cfg.evaluate_runs, mean_ae / n_frames, mean_hd / n_frames);
  return 0;
}

int cmd_synth(const revo::RunConfig& cfg) {
  if (cfg.scene.sensors.empty()) throw revo::ConfigError("synth mode requires scene.sensors");
  const fs::path out(cfg.output_dir);
  fs::create_directories(out / "gt");
  for (std::size_t s = 0; s < cfg.scene.sensors.size(); ++s) {
    fs::create_directories(out / ("sensor_" + std::to_string(s)));
  }

  for (int f = 0; f < cfg.scene.frame_count; ++f) {
    const revo::GeneratedFrame frame = revo::generate_frame(cfg.scene, f, cfg.scene_seed);
    for (std::size_t s = 0; s < frame.sensor_clouds.size(); ++s) {
      revo::write_ply(frame.sensor_clouds[s],
                      out / ("sensor_" + std::to_string(s)) / frame_name("frame_", f, ".ply"));
    }
    std::ofstream os(out / "gt" / frame_name("frame_", f, ".csv"));
    revo::write_profile_knots_csv(frame.ground_truth, os);
  }

  // Ready-to-run reconstruction config with the derived registration angles.
  revo::RunConfig recon = cfg;
  recon.mode = "reconstruct";
  recon.radius = cfg.scene.table_radius;
  recon.h_max = cfg.scene.h_max;
  recon.ground_truth_dir = (out / "gt").string();
  recon.output_dir = (out / "reconstruction").string();
  recon.sensors.clear();
  for (std::size_t s = 0; s < cfg.scene.sensors.size(); ++s) {
    revo::SensorConfig sensor;
    sensor.path = (out / ("sensor_" + std::to_string(s))).string();
    sensor.phi_deg = revo::sensor_phi(cfg.scene, s) * 180.0 / std::numbers::pi_v<double>;
    sensor.intrinsics = cfg.scene.sensors[s].intrinsics;
    recon.sensors.push_back(sensor);
  }
  std::ofstream(out / "config_reconstruct.json") << revo::serialize_run_config(recon);
  std::cout << "generated " << cfg.scene.frame_count << " frames for "
            << cfg.scene.sensors.size() << " sensors -> " << out.string() << "\n";
  return 0;
}

int cmd_ablate(const revo::RunConfig& cfg) {
  if (cfg.scene.sensors.empty()) throw revo::ConfigError("ablate mode requires scene.sensors");
  revo::AblationProtocol protocol;
  if (cfg.ablate_protocol == "sensors")
    protocol = revo::AblationProtocol::sensors;
  else if (cfg.ablate_protocol == "particles")
    protocol = revo::AblationProtocol::particles;
  else if (cfg.ablate_protocol == "accumulator")
    protocol = revo::AblationProtocol::accumulator;
  else if (cfg.ablate_protocol == "enhancement")
    protocol = revo::AblationProtocol::enhancement;
  else
    throw revo::ConfigError("unknown ablate protocol: " + cfg.ablate_protocol);

  revo::PipelineParams base = pipeline_params(cfg);
  const auto table = revo::run_ablation(protocol, cfg.scene, base, cfg.scene_seed, cfg.seed,
                                        cfg.evaluate_runs);

  const fs::path out(cfg.output_dir);
  fs::create_directories(out);
  std::ofstream os(out / ("ablation_" + cfg.ablate_protocol + ".csv"));
  os << "setting,ae_mm,hd_mm\n";
  char buf[128];
  for (const revo::AblationRow& row : table) {
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f\n", row.setting.c_str(), row.ae_mm, row.hd_mm);
    os << buf;
    std::printf("%-16s ae=%8.3f mm  hd=%8.3f mm\n", row.setting.c_str(), row.ae_mm, row.hd_mm);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"revo: profile reconstruction of revolving objects"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides ov;
  bool temporal_on = false, temporal_off = false;
  bool enhanced_on = false, enhanced_off = false;

  const auto add_common = [&](CLI::App* sub, bool seed_required) {
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    auto* seed = sub->add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t v) { ov.seed = v; }, "master seed");
    if (seed_required) seed->required();
    sub->add_option_function<std::string>(
        "--out", [&](const std::string& v) { ov.out = v; }, "output directory");
    sub->add_option_function<int>(
        "--particles", [&](int v) { ov.particles = v; }, "particle count");
    sub->add_option_function<double>(
        "--cell", [&](double v) { ov.cell = v; }, "accumulator cell size (mm)");
    sub->add_flag("--temporal", temporal_on, "enable temporal filtering");
    sub->add_flag("--no-temporal", temporal_off, "per-frame reinitialization");
    sub->add_flag("--enhanced", enhanced_on, "radial-spread enhanced accumulator");
    sub->add_flag("--plain", enhanced_off, "plain density accumulator");
  };

  CLI::App* reconstruct = app.add_subcommand("reconstruct", "run the pipeline over PLY frames");
  add_common(reconstruct, false);

  CLI::App* evaluate = app.add_subcommand("evaluate", "repeated-run metrics vs ground truth");
  add_common(evaluate, true);
  evaluate->add_option_function<int>(
      "--runs", [&](int v) { ov.runs = v; }, "number of runs to average");

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic scene");
  add_common(synth, false);
  synth->add_option_function<std::uint64_t>(
      "--scene-seed", [&](std::uint64_t v) { ov.scene_seed = v; }, "scene data seed");

  CLI::App* ablate = app.add_subcommand("ablate", "run an ablation protocol on a scene");
  add_common(ablate, false);
  ablate->add_option_function<std::string>(
      "--protocol", [&](const std::string& v) { ov.protocol = v; },
      "sensors|particles|accumulator|enhancement");
  ablate->add_option_function<int>(
      "--runs", [&](int v) { ov.runs = v; }, "number of runs to average");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_name() == "CallForHelp" ? 0 : 2;
  }

  if (temporal_on) ov.temporal = true;
  if (temporal_off) ov.temporal = false;
  if (enhanced_on) ov.enhanced = true;
  if (enhanced_off) ov.enhanced = false;

  try {
    revo::RunConfig cfg = revo::load_run_config(config_path);
    apply(ov, cfg);
    if (reconstruct->parsed()) cfg.mode = "reconstruct";
    if (evaluate->parsed()) cfg.mode = "evaluate";
    if (synth->parsed()) cfg.mode = "synth";
    if (ablate->parsed()) cfg.mode = "ablate";
    revo::validate_run_config(cfg);

    if (cfg.mode == "reconstruct") return cmd_reconstruct(cfg);
    if (cfg.mode == "evaluate") return cmd_evaluate(cfg);
    if (cfg.mode == "synth") return cmd_synth(cfg);
    return cmd_ablate(cfg);
  } catch (const revo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const revo::DetectionFailedError& e) {
    std::cerr << "detection failed: " << e.what() << "\n";
    return 3;
  } catch (const revo::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
