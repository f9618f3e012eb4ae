#include "shells/mesh_io.hpp"

#include "shells/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace shells {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// Reads the next line that is neither empty nor a comment.
bool next_content_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    return true;
  }
  return false;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return in;
}

RawMesh finish(std::vector<double>& coords, std::vector<int>& faces) {
  RawMesh raw;
  raw.vertices = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>>(
      coords.data(), static_cast<Index>(coords.size() / 3), 3);
  raw.triangles = Eigen::Map<Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor>>(
      faces.data(), static_cast<Index>(faces.size() / 3), 3);
  return raw;
}

RawMesh read_off(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!next_content_line(in, line)) throw ParseError(path.string() + ": empty file");
  std::istringstream header(line);
  std::string magic;
  header >> magic;
  if (magic != "OFF") throw ParseError(path.string() + ": missing OFF header");

  long nv = -1, nf = -1, ne = 0;
  if (!(header >> nv)) {
    if (!next_content_line(in, line)) throw ParseError(path.string() + ": missing counts");
    header = std::istringstream(line);
    header >> nv;
  }
  if (!(header >> nf >> ne) || nv < 0 || nf < 0) throw ParseError(path.string() + ": malformed counts line");

  std::vector<double> coords;
  coords.reserve(static_cast<size_t>(nv) * 3);
  for (long v = 0; v < nv; ++v) {
    if (!next_content_line(in, line)) throw ParseError(path.string() + ": truncated vertex list");
    std::istringstream ls(line);
    double x, y, z;
    if (!(ls >> x >> y >> z)) throw ParseError(path.string() + ": bad vertex line " + std::to_string(v));
    coords.insert(coords.end(), {x, y, z});
  }
  std::vector<int> faces;
  faces.reserve(static_cast<size_t>(nf) * 3);
  for (long f = 0; f < nf; ++f) {
    if (!next_content_line(in, line)) throw ParseError(path.string() + ": truncated face list");
    std::istringstream ls(line);
    int count;
    if (!(ls >> count)) throw ParseError(path.string() + ": bad face line " + std::to_string(f));
    if (count != 3) throw NonTriangleFace(path.string() + ": face " + std::to_string(f) + " has " +
                                          std::to_string(count) + " vertices");
    int a, b, c;
    if (!(ls >> a >> b >> c)) throw ParseError(path.string() + ": bad face line " + std::to_string(f));
    faces.insert(faces.end(), {a, b, c});
  }
  return finish(coords, faces);
}

struct PlyElement {
  std::string name;
  long count = 0;
  std::vector<std::string> properties;  // "list" properties are stored as "list:<name>"
};

RawMesh read_ply(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line) || lower(line.substr(0, 3)) != "ply") throw ParseError(path.string() + ": missing ply magic");

  std::vector<PlyElement> elements;
  bool ascii = false;
  while (true) {
    if (!std::getline(in, line)) throw ParseError(path.string() + ": unterminated header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "format") {
      std::string fmt;
      ls >> fmt;
      ascii = fmt == "ascii";
    } else if (key == "element") {
      PlyElement e;
      ls >> e.name >> e.count;
      elements.push_back(e);
    } else if (key == "property") {
      if (elements.empty()) throw ParseError(path.string() + ": property before element");
      std::string type;
      ls >> type;
      if (type == "list") {
        std::string count_type, item_type, name;
        ls >> count_type >> item_type >> name;
        elements.back().properties.push_back("list:" + name);
      } else {
        std::string name;
        ls >> name;
        elements.back().properties.push_back(name);
      }
    } else if (key == "end_header") {
      break;
    }
  }
  if (!ascii) throw ParseError(path.string() + ": only ascii PLY is supported");

  std::vector<double> coords;
  std::vector<int> faces;
  for (const PlyElement& e : elements) {
    int ix = -1, iy = -1, iz = -1, ilist = -1;
    for (size_t p = 0; p < e.properties.size(); ++p) {
      const std::string& name = e.properties[p];
      if (name == "x") ix = static_cast<int>(p);
      if (name == "y") iy = static_cast<int>(p);
      if (name == "z") iz = static_cast<int>(p);
      if (name == "list:vertex_indices" || name == "list:vertex_index") ilist = static_cast<int>(p);
    }
    for (long r = 0; r < e.count; ++r) {
      if (!std::getline(in, line)) throw ParseError(path.string() + ": truncated " + e.name + " data");
      std::istringstream ls(line);
      if (e.name == "vertex") {
        if (ix < 0 || iy < 0 || iz < 0) throw ParseError(path.string() + ": vertex element lacks x/y/z");
        double xyz[3] = {0, 0, 0};
        for (size_t p = 0; p < e.properties.size(); ++p) {
          double value;
          if (!(ls >> value)) throw ParseError(path.string() + ": bad vertex row " + std::to_string(r));
          if (static_cast<int>(p) == ix) xyz[0] = value;
          if (static_cast<int>(p) == iy) xyz[1] = value;
          if (static_cast<int>(p) == iz) xyz[2] = value;
        }
        coords.insert(coords.end(), {xyz[0], xyz[1], xyz[2]});
      } else if (e.name == "face") {
        for (size_t p = 0; p < e.properties.size(); ++p) {
          if (static_cast<int>(p) == ilist) {
            int count;
            if (!(ls >> count)) throw ParseError(path.string() + ": bad face row " + std::to_string(r));
            if (count != 3)
              throw NonTriangleFace(path.string() + ": face " + std::to_string(r) + " has " +
                                    std::to_string(count) + " vertices");
            int a, b, c;
            if (!(ls >> a >> b >> c)) throw ParseError(path.string() + ": bad face row " + std::to_string(r));
            faces.insert(faces.end(), {a, b, c});
          } else if (e.properties[p].rfind("list:", 0) == 0) {
            int count;
            ls >> count;
            for (int i = 0; i < count; ++i) {
              double skip;
              ls >> skip;
            }
          } else {
            double skip;
            ls >> skip;
          }
        }
        if (ilist < 0) throw ParseError(path.string() + ": face element lacks vertex_indices");
      }
    }
  }
  return finish(coords, faces);
}

std::string format_coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

MeshFormat format_from_path(const std::filesystem::path& path) {
  const std::string ext = lower(path.extension().string());
  if (ext == ".off") return MeshFormat::Off;
  if (ext == ".ply") return MeshFormat::PlyAscii;
  throw ParseError("unknown mesh extension '" + ext + "' for " + path.string());
}

RawMesh read_mesh(const std::filesystem::path& path, std::optional<MeshFormat> format) {
  if (!std::filesystem::exists(path)) throw ParseError("no such file: " + path.string());
  const MeshFormat f = format.value_or(format_from_path(path));
  return f == MeshFormat::Off ? read_off(path) : read_ply(path);
}

TriMesh load_mesh(const std::filesystem::path& path, std::optional<MeshFormat> format, const MeshOptions& options) {
  RawMesh raw = read_mesh(path, format);
  return make_mesh(std::move(raw.vertices), std::move(raw.triangles), options);
}

void write_mesh(const std::filesystem::path& path, const Coords& vertices, const Faces& triangles,
                std::optional<MeshFormat> format, const Coords* colors) {
  const MeshFormat f = format.value_or(format_from_path(path));
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());

  if (f == MeshFormat::Off) {
    out << "OFF\n" << vertices.rows() << ' ' << triangles.rows() << " 0\n";
    for (Index v = 0; v < vertices.rows(); ++v)
      out << format_coord(vertices(v, 0)) << ' ' << format_coord(vertices(v, 1)) << ' '
          << format_coord(vertices(v, 2)) << '\n';
    for (Index t = 0; t < triangles.rows(); ++t)
      out << "3 " << triangles(t, 0) << ' ' << triangles(t, 1) << ' ' << triangles(t, 2) << '\n';
    return;
  }

  const bool with_colors = colors != nullptr && colors->rows() == vertices.rows();
  out << "ply\nformat ascii 1.0\nelement vertex " << vertices.rows() << "\n"
      << "property double x\nproperty double y\nproperty double z\n";
  if (with_colors) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "element face " << triangles.rows() << "\nproperty list uchar int vertex_indices\nend_header\n";
  for (Index v = 0; v < vertices.rows(); ++v) {
    out << format_coord(vertices(v, 0)) << ' ' << format_coord(vertices(v, 1)) << ' '
        << format_coord(vertices(v, 2));
    if (with_colors)
      for (int c = 0; c < 3; ++c)
        out << ' ' << static_cast<int>(std::clamp((*colors)(v, c), 0.0, 1.0) * 255.0 + 0.5);
    out << '\n';
  }
  for (Index t = 0; t < triangles.rows(); ++t)
    out << "3 " << triangles(t, 0) << ' ' << triangles(t, 1) << ' ' << triangles(t, 2) << '\n';
}

void write_correspondence(const std::filesystem::path& path, const PointMap& map, bool one_based) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  const Index offset = one_based ? 1 : 0;
  for (Index a : map.assignments) out << a + offset << '\n';
}

PointMap read_correspondence(const std::filesystem::path& path, bool one_based, std::optional<Index> codomain_size) {
  if (!std::filesystem::exists(path)) throw ParseError("no such file: " + path.string());
  std::ifstream in(path);
  PointMap map;
  std::string line;
  Index line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    std::istringstream ls(line);
    long long value;
    if (!(ls >> value)) throw ParseError(path.string() + ": bad integer on line " + std::to_string(line_no));
    map.assignments.push_back(static_cast<Index>(value) - (one_based ? 1 : 0));
  }
  Index max_value = -1;
  for (Index a : map.assignments) max_value = std::max(max_value, a);
  map.codomain_size = codomain_size.value_or(max_value + 1);
  validate(map);
  return map;
}

}  // namespace shells
