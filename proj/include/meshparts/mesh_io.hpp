#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "meshparts/errors.hpp"
#include "meshparts/mesh.hpp"

namespace meshparts {

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

inline double parse_double(std::string_view token, std::size_t line_no) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || ptr != token.data() + token.size())
    throw ParseError(line_no, "malformed number '" + std::string(token) + "'");
  return v;
}

// Face tokens may carry /vt/vn suffixes which we ignore.
inline long parse_face_index(std::string_view token, std::size_t line_no) {
  const std::size_t slash = token.find('/');
  if (slash != std::string_view::npos) token = token.substr(0, slash);
  long v = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || ptr != token.data() + token.size())
    throw ParseError(line_no, "malformed face index '" + std::string(token) + "'");
  return v;
}

inline void format_double(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

}  // namespace detail

/// Parses ASCII OBJ text: `v x y z` and `f i j k ...` records (1-based).
/// Unknown record types are skipped; polygons are fan-triangulated from the
/// first index. Throws ParseError with a line number on malformed input.
inline Mesh load_obj(std::string_view text) {
  Mesh mesh;
  std::vector<double> positions;
  struct PendingFace {
    std::vector<long> indices;
    std::size_t line;
  };
  std::vector<PendingFace> pending;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    const std::string_view line =
        text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;

    const auto tokens = detail::split_ws(line);
    if (tokens.empty() || tokens[0][0] == '#') continue;
    if (tokens[0] == "v") {
      if (tokens.size() < 4) throw ParseError(line_no, "vertex needs 3 coordinates");
      for (std::size_t j = 1; j <= 3; ++j)
        positions.push_back(detail::parse_double(tokens[j], line_no));
    } else if (tokens[0] == "f") {
      if (tokens.size() < 4) throw ParseError(line_no, "face needs at least 3 indices");
      PendingFace f;
      f.line = line_no;
      for (std::size_t j = 1; j < tokens.size(); ++j)
        f.indices.push_back(detail::parse_face_index(tokens[j], line_no));
      pending.push_back(std::move(f));
    }
    // vn/vt/o/g/s/usemtl/mtllib and friends are ignored
  }

  const std::size_t n = positions.size() / 3;
  if (n < 3) throw ParseError(line_no, "mesh needs at least 3 vertices");
  mesh.vertices = DenseMatrix(n, 3);
  mesh.vertices.values = std::move(positions);

  for (const auto& f : pending) {
    std::vector<std::uint32_t> idx;
    for (long raw : f.indices) {
      if (raw < 1 || static_cast<std::size_t>(raw) > n)
        throw ParseError(f.line, "face index " + std::to_string(raw) + " out of range");
      idx.push_back(static_cast<std::uint32_t>(raw - 1));
    }
    for (std::size_t j = 1; j + 1 < idx.size(); ++j)
      mesh.faces.push_back({idx[0], idx[j], idx[j + 1]});
  }
  mesh.validate();
  return mesh;
}

inline std::string write_obj(const Mesh& mesh) {
  std::string out;
  out.reserve(mesh.vertex_count() * 48 + mesh.face_count() * 24);
  for (std::size_t i = 0; i < mesh.vertices.rows; ++i) {
    out += "v";
    for (std::size_t j = 0; j < 3; ++j) {
      out += ' ';
      detail::format_double(out, mesh.vertices(i, j));
    }
    out += '\n';
  }
  for (const auto& f : mesh.faces) {
    out += "f " + std::to_string(f[0] + 1) + ' ' + std::to_string(f[1] + 1) + ' ' +
           std::to_string(f[2] + 1) + '\n';
  }
  return out;
}

/// ASCII PLY with a per-vertex linear blue-to-red map of `field`:
/// minimum -> (0,0,255), maximum -> (255,0,0), constant field -> all blue.
inline std::string write_ply_colored(const Mesh& mesh, const std::vector<double>& field) {
  require(field.size() == mesh.vertex_count(), "color field length must equal vertex count");
  double lo = field[0], hi = field[0];
  for (double v : field) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double span = hi - lo;

  std::string out;
  out += "ply\nformat ascii 1.0\n";
  out += "element vertex " + std::to_string(mesh.vertex_count()) + "\n";
  out +=
      "property float x\nproperty float y\nproperty float z\n"
      "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out += "element face " + std::to_string(mesh.face_count()) + "\n";
  out += "property list uchar int vertex_indices\nend_header\n";
  for (std::size_t i = 0; i < mesh.vertex_count(); ++i) {
    char buf[96];
    const double t = span > 0.0 ? (field[i] - lo) / span : 0.0;
    const int red = static_cast<int>(std::lround(255.0 * t));
    const int blue = 255 - red;
    std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g %d 0 %d\n", mesh.vertices(i, 0),
                  mesh.vertices(i, 1), mesh.vertices(i, 2), red, blue);
    out += buf;
  }
  for (const auto& f : mesh.faces) {
    out += "3 " + std::to_string(f[0]) + ' ' + std::to_string(f[1]) + ' ' +
           std::to_string(f[2]) + '\n';
  }
  return out;
}

inline Mesh load_obj_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return load_obj(buf.str());
  } catch (const ParseError& e) {
    throw DataError(path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << content;
  if (!out) throw DataError("failed writing '" + path + "'");
}

}  // namespace meshparts
