// Profile and mesh serialization: knot/polyline CSV (rho_mm, h_mm columns)
// and the revolved triangle mesh in OBJ-style text (vertex lines then
// 1-indexed face lines).

#pragma once

#include <revo/core.hpp>
#include <revo/spline.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace revo {

inline void write_profile_knots_csv(const ProfileCurve& curve, std::ostream& os) {
  char buf[96];
  os << "rho_mm,h_mm\n";
  for (const Knot2& k : {curve.k2, curve.k3, curve.k4}) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", k.x(), k.y());
    os << buf;
  }
  if (!os) throw IoError("write_profile_knots_csv: stream failure");
}

inline ProfileCurve read_profile_knots_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw IoError("read_profile_knots_csv: empty file");
  std::vector<Knot2> knots;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    double rho = 0.0, h = 0.0;
    if (std::sscanf(line.c_str(), "%lf,%lf", &rho, &h) != 2)
      throw IoError("read_profile_knots_csv: malformed line '" + line + "'");
    knots.push_back({rho, h});
  }
  if (knots.size() != 3)
    throw IoError("read_profile_knots_csv: expected exactly 3 knots");
  return {knots[0], knots[1], knots[2]};
}

inline ProfileCurve read_profile_knots_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("read_profile_knots_csv: cannot open " + path.string());
  return read_profile_knots_csv(is);
}

inline void write_polyline_csv(const std::vector<Knot2>& points, std::ostream& os) {
  char buf[96];
  os << "rho_mm,h_mm\n";
  for (const Knot2& p : points) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", p.x(), p.y());
    os << buf;
  }
  if (!os) throw IoError("write_polyline_csv: stream failure");
}

/// Revolve the sampled profile polyline about the canonical axis into a
/// closed ring of quads split into triangles. Vertices keep their sample's
/// radial distance exactly.
inline void export_mesh(const ProfileCurve& profile, int segments, std::ostream& os,
                        double sample_step = 2.0) {
  if (segments < 3) throw std::invalid_argument("export_mesh: need at least 3 segments");
  const std::vector<Knot2> rows = sample_equidistant(profile, sample_step);
  if (rows.size() < 2) throw DegenerateInputError("export_mesh: profile degenerates to a point");

  char buf[128];
  for (const Knot2& row : rows) {
    for (int j = 0; j < segments; ++j) {
      const double theta = kTwoPi * static_cast<double>(j) / static_cast<double>(segments);
      const Point3 v = from_canonical_polar({std::max(row.x(), 0.0), row.y(), theta});
      std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g\n", v.x(), v.y(), v.z());
      os << buf;
    }
  }
  const auto vid = [segments](std::size_t row, int j) {
    return row * static_cast<std::size_t>(segments) + static_cast<std::size_t>(j % segments) + 1;
  };
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    for (int j = 0; j < segments; ++j) {
      os << "f " << vid(i, j) << ' ' << vid(i, j + 1) << ' ' << vid(i + 1, j) << '\n';
      os << "f " << vid(i, j + 1) << ' ' << vid(i + 1, j + 1) << ' ' << vid(i + 1, j) << '\n';
    }
  }
  if (!os) throw IoError("export_mesh: stream failure");
}

inline void export_mesh(const ProfileCurve& profile, int segments,
                        const std::filesystem::path& path, double sample_step = 2.0) {
  std::ofstream os(path);
  if (!os) throw IoError("export_mesh: cannot open " + path.string());
  export_mesh(profile, segments, os, sample_step);
}

}  // namespace revo
