// Minimal PLY point-cloud reader/writer. Writes binary little-endian double
// vertices; reads ascii and binary_little_endian files with float or double
// coordinates, skipping unknown scalar vertex properties.

#pragma once

#include <revo/core.hpp>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace revo {

enum class PlyFormat { binary, ascii };

inline void write_ply(const PointCloud& cloud, std::ostream& os,
                      PlyFormat format = PlyFormat::binary) {
  os << "ply\n"
     << (format == PlyFormat::binary ? "format binary_little_endian 1.0\n"
                                     : "format ascii 1.0\n")
     << "element vertex " << cloud.size() << "\n"
     << "property double x\nproperty double y\nproperty double z\n"
     << "end_header\n";
  if (format == PlyFormat::binary) {
    for (const Point3& p : cloud) {
      double xyz[3] = {p.x(), p.y(), p.z()};
      os.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
    }
  } else {
    char buf[96];
    for (const Point3& p : cloud) {
      std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", p.x(), p.y(), p.z());
      os << buf;
    }
  }
  if (!os) throw IoError("write_ply: stream failure");
}

inline void write_ply(const PointCloud& cloud, const std::filesystem::path& path,
                      PlyFormat format = PlyFormat::binary) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("write_ply: cannot open " + path.string());
  write_ply(cloud, os, format);
}

namespace detail {

inline std::size_t ply_scalar_size(const std::string& type) {
  if (type == "char" || type == "uchar" || type == "int8" || type == "uint8") return 1;
  if (type == "short" || type == "ushort" || type == "int16" || type == "uint16") return 2;
  if (type == "int" || type == "uint" || type == "int32" || type == "uint32" || type == "float" ||
      type == "float32")
    return 4;
  if (type == "double" || type == "float64") return 8;
  throw IoError("read_ply: unsupported property type " + type);
}

}  // namespace detail

inline PointCloud read_ply(std::istream& is, std::string frame_id = {}) {
  std::string line;
  if (!std::getline(is, line) || line.substr(0, 3) != "ply")
    throw IoError("read_ply: missing ply magic");

  bool binary = false;
  std::size_t vertex_count = 0;
  bool in_vertex_element = false;
  struct Prop {
    std::string type;
    std::string name;
  };
  std::vector<Prop> props;

  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "end_header") break;
    if (word == "comment" || word.empty()) continue;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "binary_little_endian")
        binary = true;
      else if (fmt == "ascii")
        binary = false;
      else
        throw IoError("read_ply: unsupported format " + fmt);
    } else if (word == "element") {
      std::string name;
      std::size_t count = 0;
      ls >> name >> count;
      if (name == "vertex") {
        vertex_count = count;
        in_vertex_element = true;
      } else {
        if (props.empty() || vertex_count == 0)
          throw IoError("read_ply: vertex element must come first");
        in_vertex_element = false;  // trailing elements are ignored
      }
    } else if (word == "property" && in_vertex_element) {
      Prop p;
      ls >> p.type >> p.name;
      if (p.type == "list") throw IoError("read_ply: list property on vertex element");
      props.push_back(p);
    }
  }
  if (!is) throw IoError("read_ply: truncated header");

  int ix = -1, iy = -1, iz = -1;
  for (std::size_t i = 0; i < props.size(); ++i) {
    if (props[i].name == "x") ix = static_cast<int>(i);
    if (props[i].name == "y") iy = static_cast<int>(i);
    if (props[i].name == "z") iz = static_cast<int>(i);
  }
  if (ix < 0 || iy < 0 || iz < 0) throw IoError("read_ply: vertex needs x/y/z properties");

  PointCloud cloud(std::move(frame_id));
  cloud.reserve(vertex_count);
  std::vector<double> record(props.size());
  if (binary) {
    for (std::size_t v = 0; v < vertex_count; ++v) {
      for (std::size_t p = 0; p < props.size(); ++p) {
        const std::size_t bytes = detail::ply_scalar_size(props[p].type);
        char raw[8];
        is.read(raw, static_cast<std::streamsize>(bytes));
        if (props[p].type == "float" || props[p].type == "float32") {
          float f;
          std::memcpy(&f, raw, 4);
          record[p] = f;
        } else if (props[p].type == "double" || props[p].type == "float64") {
          double d;
          std::memcpy(&d, raw, 8);
          record[p] = d;
        } else {
          record[p] = 0.0;  // skipped integer property
        }
      }
      if (!is) throw IoError("read_ply: truncated vertex data");
      cloud.push_back({record[ix], record[iy], record[iz]});
    }
  } else {
    for (std::size_t v = 0; v < vertex_count; ++v) {
      for (std::size_t p = 0; p < props.size(); ++p) {
        if (!(is >> record[p])) throw IoError("read_ply: truncated vertex data");
      }
      cloud.push_back({record[ix], record[iy], record[iz]});
    }
  }
  return cloud;
}

inline PointCloud read_ply(const std::filesystem::path& path, std::string frame_id = {}) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("read_ply: cannot open " + path.string());
  return read_ply(is, frame_id.empty() ? path.stem().string() : std::move(frame_id));
}

}  // namespace revo
