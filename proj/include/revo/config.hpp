// Run configuration: one JSON file with nested sections drives every CLI
// mode. Parsing is strict about types, lenient about omitted fields (library
// defaults apply), and serialize -> parse is the identity.

#pragma once

#include <revo/bench.hpp>
#include <revo/core.hpp>
#include <revo/particle_filter.hpp>
#include <revo/pipeline.hpp>
#include <revo/synthetic.hpp>
#include <revo/turntable.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace revo {

using json = nlohmann::json;

struct SensorConfig {
  std::string path;               // directory of per-frame PLY files
  double phi_deg = 0.0;           // axial registration angle
  SensorIntrinsics intrinsics;
  bool projection_weights = true;
};

struct RunConfig {
  std::string mode = "reconstruct";  // reconstruct | evaluate | synth | ablate
  std::uint64_t seed = 1;
  std::string output_dir = "out";

  double radius = 160.0;
  double cell = 10.0;
  double h_max = 160.0;
  bool enhanced = true;
  bool temporal = true;

  FilterConfig filter;
  PlaneFitConfig plane;
  StabilityConfig stability;

  std::vector<SensorConfig> sensors;
  std::string ground_truth_dir;  // per-frame knot CSVs; empty = no metrics

  int mesh_segments = 64;
  int evaluate_runs = 10;

  SceneSpec scene;                         // synth / ablate modes
  std::uint64_t scene_seed = 7;
  std::string ablate_protocol = "sensors"; // sensors | particles | accumulator | enhancement
};

// --- json mappings ----------------------------------------------------------

inline void to_json(json& j, const SensorIntrinsics& v) {
  j = json{{"focal_length_px", v.focal_length},
           {"pixel_pitch", v.pixel_pitch},
           {"principal_point_px", {v.principal_point.x(), v.principal_point.y()}},
           {"image_width", v.image_width},
           {"image_height", v.image_height}};
}

inline void from_json(const json& j, SensorIntrinsics& v) {
  SensorIntrinsics d;
  v.focal_length = j.value("focal_length_px", d.focal_length);
  v.pixel_pitch = j.value("pixel_pitch", d.pixel_pitch);
  if (j.contains("principal_point_px")) {
    const auto pp = j.at("principal_point_px");
    v.principal_point = {pp.at(0).get<double>(), pp.at(1).get<double>()};
  }
  v.image_width = j.value("image_width", d.image_width);
  v.image_height = j.value("image_height", d.image_height);
}

inline void to_json(json& j, const FilterConfig& v) {
  j = json{{"particles", v.particle_count},
           {"sigma_m_mm", v.sigma_m},
           {"resample_ratio", v.resample_ratio},
           {"top_k", v.gmm_top_k},
           {"gaussian_sigma_mm", v.gaussian_sigma},
           {"sample_step_mm", v.sample_step}};
}

inline void from_json(const json& j, FilterConfig& v) {
  FilterConfig d;
  v.particle_count = j.value("particles", d.particle_count);
  v.sigma_m = j.value("sigma_m_mm", d.sigma_m);
  v.resample_ratio = j.value("resample_ratio", d.resample_ratio);
  v.gmm_top_k = j.value("top_k", d.gmm_top_k);
  v.gaussian_sigma = j.value("gaussian_sigma_mm", d.gaussian_sigma);
  v.sample_step = j.value("sample_step_mm", d.sample_step);
}

inline void to_json(json& j, const PlaneFitConfig& v) {
  j = json{{"inlier_threshold_mm", v.inlier_threshold},
           {"max_iterations", v.max_iterations},
           {"confidence", v.confidence},
           {"expected_inlier_ratio", v.expected_inlier_ratio},
           {"refine_local", v.refine_local},
           {"refine_wlst", v.refine_wlst}};
}

inline void from_json(const json& j, PlaneFitConfig& v) {
  PlaneFitConfig d;
  v.inlier_threshold = j.value("inlier_threshold_mm", d.inlier_threshold);
  v.max_iterations = j.value("max_iterations", d.max_iterations);
  v.confidence = j.value("confidence", d.confidence);
  v.expected_inlier_ratio = j.value("expected_inlier_ratio", d.expected_inlier_ratio);
  v.refine_local = j.value("refine_local", d.refine_local);
  v.refine_wlst = j.value("refine_wlst", d.refine_wlst);
}

inline void to_json(json& j, const StabilityConfig& v) {
  j = json{{"max_normal_angle_deg", v.max_normal_angle_deg},
           {"max_center_shift_mm", v.max_center_shift},
           {"meanshift_eps_mm", v.meanshift_eps}};
}

inline void from_json(const json& j, StabilityConfig& v) {
  StabilityConfig d;
  v.max_normal_angle_deg = j.value("max_normal_angle_deg", d.max_normal_angle_deg);
  v.max_center_shift = j.value("max_center_shift_mm", d.max_center_shift);
  v.meanshift_eps = j.value("meanshift_eps_mm", d.meanshift_eps);
}

inline void to_json(json& j, const SensorConfig& v) {
  j = json{{"path", v.path},
           {"phi_deg", v.phi_deg},
           {"intrinsics", v.intrinsics},
           {"projection_weights", v.projection_weights}};
}

inline void from_json(const json& j, SensorConfig& v) {
  SensorConfig d;
  v.path = j.value("path", d.path);
  v.phi_deg = j.value("phi_deg", d.phi_deg);
  if (j.contains("intrinsics")) j.at("intrinsics").get_to(v.intrinsics);
  v.projection_weights = j.value("projection_weights", d.projection_weights);
}

inline void to_json(json& j, const SensorSpec& v) {
  j = json{{"azimuth_deg", v.azimuth_deg},
           {"elevation_deg", v.elevation_deg},
           {"distance_mm", v.distance},
           {"sector_deg", v.sector_deg},
           {"noise_sigma_mm", v.noise_sigma},
           {"object_points", v.object_points},
           {"table_points", v.table_points},
           {"intrinsics", v.intrinsics}};
}

inline void from_json(const json& j, SensorSpec& v) {
  SensorSpec d;
  v.azimuth_deg = j.value("azimuth_deg", d.azimuth_deg);
  v.elevation_deg = j.value("elevation_deg", d.elevation_deg);
  v.distance = j.value("distance_mm", d.distance);
  v.sector_deg = j.value("sector_deg", d.sector_deg);
  v.noise_sigma = j.value("noise_sigma_mm", d.noise_sigma);
  v.object_points = j.value("object_points", d.object_points);
  v.table_points = j.value("table_points", d.table_points);
  if (j.contains("intrinsics")) j.at("intrinsics").get_to(v.intrinsics);
}

inline void to_json(json& j, const OccluderSpec& v) {
  j = json{{"theta_deg", v.theta_deg},
           {"arc_deg", v.arc_deg},
           {"anchor_frac", v.anchor_frac},
           {"radius_mm", v.radius},
           {"points", v.points}};
}

inline void from_json(const json& j, OccluderSpec& v) {
  OccluderSpec d;
  v.theta_deg = j.value("theta_deg", d.theta_deg);
  v.arc_deg = j.value("arc_deg", d.arc_deg);
  v.anchor_frac = j.value("anchor_frac", d.anchor_frac);
  v.radius = j.value("radius_mm", d.radius);
  v.points = j.value("points", d.points);
}

inline json knots_to_json(const Knot2& k2, const Knot2& k3, const Knot2& k4) {
  return json::array({{k2.x(), k2.y()}, {k3.x(), k3.y()}, {k4.x(), k4.y()}});
}

inline void knots_from_json(const json& j, Knot2& k2, Knot2& k3, Knot2& k4) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("knots: expected 3 [rho,h] pairs");
  k2 = {j.at(0).at(0).get<double>(), j.at(0).at(1).get<double>()};
  k3 = {j.at(1).at(0).get<double>(), j.at(1).at(1).get<double>()};
  k4 = {j.at(2).at(0).get<double>(), j.at(2).at(1).get<double>()};
}

inline void to_json(json& j, const Keyframe& v) {
  j = json{{"frame", v.frame}, {"knots", knots_to_json(v.k2, v.k3, v.k4)}};
}

inline void from_json(const json& j, Keyframe& v) {
  v.frame = j.value("frame", 0);
  knots_from_json(j.at("knots"), v.k2, v.k3, v.k4);
}

inline void to_json(json& j, const SceneSpec& v) {
  j = json{{"profile_knots", knots_to_json(v.profile.k2, v.profile.k3, v.profile.k4)},
           {"table_radius_mm", v.table_radius},
           {"h_max_mm", v.h_max},
           {"sensors", v.sensors},
           {"occluders", v.occluders},
           {"outlier_fraction", v.outlier_fraction},
           {"frame_count", v.frame_count},
           {"animation", v.animation}};
}

inline void from_json(const json& j, SceneSpec& v) {
  SceneSpec d;
  if (j.contains("profile_knots"))
    knots_from_json(j.at("profile_knots"), v.profile.k2, v.profile.k3, v.profile.k4);
  v.table_radius = j.value("table_radius_mm", d.table_radius);
  v.h_max = j.value("h_max_mm", d.h_max);
  if (j.contains("sensors")) j.at("sensors").get_to(v.sensors);
  if (j.contains("occluders")) j.at("occluders").get_to(v.occluders);
  v.outlier_fraction = j.value("outlier_fraction", d.outlier_fraction);
  v.frame_count = j.value("frame_count", d.frame_count);
  if (j.contains("animation")) j.at("animation").get_to(v.animation);
}

inline void to_json(json& j, const RunConfig& v) {
  j = json{{"mode", v.mode},
           {"seed", v.seed},
           {"output_dir", v.output_dir},
           {"turntable", {{"radius_mm", v.radius}}},
           {"accumulator",
            {{"cell_mm", v.cell}, {"h_max_mm", v.h_max}, {"enhanced", v.enhanced}}},
           {"filter", v.filter},
           {"temporal", v.temporal},
           {"plane_fit", v.plane},
           {"stability", v.stability},
           {"sensors", v.sensors},
           {"ground_truth_dir", v.ground_truth_dir},
           {"mesh_segments", v.mesh_segments},
           {"evaluate_runs", v.evaluate_runs},
           {"scene", v.scene},
           {"scene_seed", v.scene_seed},
           {"ablate_protocol", v.ablate_protocol}};
}

inline void from_json(const json& j, RunConfig& v) {
  RunConfig d;
  v.mode = j.value("mode", d.mode);
  v.seed = j.value("seed", d.seed);
  v.output_dir = j.value("output_dir", d.output_dir);
  if (j.contains("turntable")) v.radius = j.at("turntable").value("radius_mm", d.radius);
  if (j.contains("accumulator")) {
    const auto& a = j.at("accumulator");
    v.cell = a.value("cell_mm", d.cell);
    v.h_max = a.value("h_max_mm", d.h_max);
    v.enhanced = a.value("enhanced", d.enhanced);
  }
  if (j.contains("filter")) j.at("filter").get_to(v.filter);
  v.temporal = j.value("temporal", d.temporal);
  if (j.contains("plane_fit")) j.at("plane_fit").get_to(v.plane);
  if (j.contains("stability")) j.at("stability").get_to(v.stability);
  if (j.contains("sensors")) j.at("sensors").get_to(v.sensors);
  v.ground_truth_dir = j.value("ground_truth_dir", d.ground_truth_dir);
  v.mesh_segments = j.value("mesh_segments", d.mesh_segments);
  v.evaluate_runs = j.value("evaluate_runs", d.evaluate_runs);
  if (j.contains("scene")) j.at("scene").get_to(v.scene);
  v.scene_seed = j.value("scene_seed", d.scene_seed);
  v.ablate_protocol = j.value("ablate_protocol", d.ablate_protocol);
}

// --- load / save / validate -------------------------------------------------

inline RunConfig parse_run_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  try {
    return j.get<RunConfig>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config schema error: ") + e.what());
  }
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("config: cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return parse_run_config(text);
}

inline std::string serialize_run_config(const RunConfig& cfg) {
  return json(cfg).dump(2) + "\n";
}

/// Structural validation shared by all modes; path existence is checked where
/// the mode actually reads from disk.
inline void validate_run_config(const RunConfig& cfg) {
  const auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(cfg.radius, "turntable.radius_mm");
  positive(cfg.cell, "accumulator.cell_mm");
  positive(cfg.h_max, "accumulator.h_max_mm");
  if (cfg.filter.sigma_m < 0.0) throw ConfigError("filter.sigma_m_mm must be >= 0");
  if (cfg.filter.particle_count < 1) throw ConfigError("filter.particles must be >= 1");
  if (cfg.filter.resample_ratio < 0.0 || cfg.filter.resample_ratio > 1.0)
    throw ConfigError("filter.resample_ratio must lie in [0,1]");
  if (cfg.filter.gmm_top_k < 1) throw ConfigError("filter.top_k must be >= 1");
  positive(cfg.plane.inlier_threshold, "plane_fit.inlier_threshold_mm");
  if (cfg.plane.confidence <= 0.0 || cfg.plane.confidence >= 1.0)
    throw ConfigError("plane_fit.confidence must lie in (0,1)");
  if (cfg.mode != "reconstruct" && cfg.mode != "evaluate" && cfg.mode != "synth" &&
      cfg.mode != "ablate")
    throw ConfigError("mode must be reconstruct|evaluate|synth|ablate");
  if (cfg.mesh_segments < 3) throw ConfigError("mesh_segments must be >= 3");
  if (cfg.evaluate_runs < 1) throw ConfigError("evaluate_runs must be >= 1");

  if (cfg.mode == "synth" || cfg.mode == "ablate") {
    if (cfg.scene.frame_count < 1) throw ConfigError("scene.frame_count must be >= 1");
    if (!(cfg.scene.table_radius > 0.0)) throw ConfigError("scene.table_radius_mm must be positive");
    for (const SensorSpec& s : cfg.scene.sensors) {
      if (s.sector_deg <= 0.0 || s.sector_deg > 360.0)
        throw ConfigError("scene sensor sector_deg must lie in (0, 360]");
      if (s.noise_sigma < 0.0) throw ConfigError("scene sensor noise_sigma_mm must be >= 0");
      if (s.object_points < 0 || s.table_points < 0)
        throw ConfigError("scene sensor point budgets must be >= 0");
    }
    if (cfg.scene.outlier_fraction < 0.0)
      throw ConfigError("scene.outlier_fraction must be >= 0");
  }
}

}  // namespace revo
