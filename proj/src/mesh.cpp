#include "hadamard_eig/mesh.hpp"

#include "hadamard_eig/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace hadamard_eig {

namespace {

using EdgeKey = std::pair<int, int>;

EdgeKey edge_key(int a, int b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

Mesh::Mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles,
           std::vector<BoundaryEdge> boundary_edges)
    : vertices_(std::move(vertices)),
      triangles_(std::move(triangles)),
      boundary_edges_(std::move(boundary_edges)) {}

double Mesh::signed_area(int tri) const {
  const auto& t = triangles_.at(tri);
  const Vec2 e1 = vertices_[t[1]] - vertices_[t[0]];
  const Vec2 e2 = vertices_[t[2]] - vertices_[t[0]];
  return 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
}

bool Mesh::has_dirichlet() const {
  return std::any_of(boundary_edges_.begin(), boundary_edges_.end(),
                     [](const BoundaryEdge& e) { return e.tag == BoundaryTag::Dirichlet; });
}

std::vector<bool> Mesh::dirichlet_vertices() const {
  std::vector<bool> mark(vertices_.size(), false);
  for (const auto& e : boundary_edges_) {
    if (e.tag == BoundaryTag::Dirichlet) {
      mark.at(e.v[0]) = true;
      mark.at(e.v[1]) = true;
    }
  }
  return mark;
}

EdgeTagger tag_all(BoundaryTag tag) {
  return [tag](const Vec2&, const Vec2&) { return tag; };
}

Mesh generate_rect_mesh(int nx, int ny, double width, double height, const EdgeTagger& tagger) {
  if (nx < 1 || ny < 1) throw std::invalid_argument("generate_rect_mesh: nx and ny must be >= 1");
  if (!(width > 0.0) || !(height > 0.0))
    throw std::invalid_argument("generate_rect_mesh: width and height must be positive");
  if (!tagger) throw std::invalid_argument("generate_rect_mesh: empty edge tagger");

  std::vector<Vec2> vertices;
  vertices.reserve((nx + 1) * (ny + 1) + nx * ny);
  const double hx = width / nx;
  const double hy = height / ny;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      vertices.emplace_back(i == nx ? width : i * hx, j == ny ? height : j * hy);
  const int corner_count = static_cast<int>(vertices.size());
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) vertices.emplace_back((i + 0.5) * hx, (j + 0.5) * hy);

  auto corner = [nx](int i, int j) { return j * (nx + 1) + i; };
  std::vector<std::array<int, 3>> triangles;
  triangles.reserve(4 * nx * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int c = corner_count + j * nx + i;
      const int v00 = corner(i, j), v10 = corner(i + 1, j);
      const int v11 = corner(i + 1, j + 1), v01 = corner(i, j + 1);
      triangles.push_back({v00, v10, c});
      triangles.push_back({v10, v11, c});
      triangles.push_back({v11, v01, c});
      triangles.push_back({v01, v00, c});
    }
  }

  std::vector<BoundaryEdge> edges;
  edges.reserve(2 * (nx + ny));
  auto add = [&](int a, int b) {
    edges.push_back({{a, b}, tagger(vertices[a], vertices[b])});
  };
  for (int i = 0; i < nx; ++i) add(corner(i, 0), corner(i + 1, 0));
  for (int j = 0; j < ny; ++j) add(corner(nx, j), corner(nx, j + 1));
  for (int i = nx; i > 0; --i) add(corner(i, ny), corner(i - 1, ny));
  for (int j = ny; j > 0; --j) add(corner(0, j), corner(0, j - 1));

  return Mesh(std::move(vertices), std::move(triangles), std::move(edges));
}

std::vector<std::string> validate_mesh(const Mesh& mesh) {
  std::vector<std::string> report;
  const int nv = mesh.num_vertices();
  const auto& tris = mesh.triangles();

  std::map<EdgeKey, int> edge_count;
  for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
    const auto& tri = tris[t];
    bool in_range = true;
    for (int v : tri) {
      if (v < 0 || v >= nv) in_range = false;
    }
    if (!in_range) {
      report.push_back("triangle " + std::to_string(t) + ": vertex index out of range");
      continue;
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
      report.push_back("triangle " + std::to_string(t) + ": repeated vertex");
      continue;
    }
    if (!(mesh.signed_area(t) > 0.0))
      report.push_back("triangle " + std::to_string(t) + ": non-positive area");
    for (int a = 0; a < 3; ++a) ++edge_count[edge_key(tri[a], tri[(a + 1) % 3])];
  }

  for (const auto& [key, count] : edge_count) {
    if (count > 2)
      report.push_back("edge (" + std::to_string(key.first) + "," + std::to_string(key.second) +
                       "): shared by " + std::to_string(count) + " triangles");
  }

  std::map<EdgeKey, int> tagged;
  const auto& bedges = mesh.boundary_edges();
  for (int e = 0; e < static_cast<int>(bedges.size()); ++e) {
    const auto& be = bedges[e];
    const std::string name = "boundary edge " + std::to_string(e) + " (" +
                             std::to_string(be.v[0]) + "," + std::to_string(be.v[1]) + ")";
    if (be.v[0] < 0 || be.v[0] >= nv || be.v[1] < 0 || be.v[1] >= nv) {
      report.push_back(name + ": vertex index out of range");
      continue;
    }
    const auto key = edge_key(be.v[0], be.v[1]);
    auto it = edge_count.find(key);
    if (it == edge_count.end())
      report.push_back(name + ": not an edge of any triangle");
    else if (it->second != 1)
      report.push_back(name + ": interior edge carries a boundary tag");
    if (++tagged[key] > 1) report.push_back(name + ": tagged more than once");
  }

  for (const auto& [key, count] : edge_count) {
    if (count == 1 && tagged.find(key) == tagged.end())
      report.push_back("edge (" + std::to_string(key.first) + "," + std::to_string(key.second) +
                       "): untagged boundary edge");
  }
  return report;
}

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

double parse_double(std::string_view s, int line) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError(line, "invalid number '" + std::string(s) + "'");
  return value;
}

int parse_index(std::string_view s, int line) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || value < 0)
    throw ParseError(line, "invalid index '" + std::string(s) + "'");
  return value;
}

}  // namespace

Mesh load_mesh(std::string_view text) {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<BoundaryEdge> edges;
  // Index range is only known after all `v` records, so remember where each record came from.
  std::vector<int> tri_lines, edge_lines;

  int line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;

    const auto tok = split_ws(line);
    if (tok.empty() || tok[0].front() == '#') {
      if (end == text.size()) break;
      continue;
    }
    if (tok[0] == "v") {
      if (tok.size() != 3) throw ParseError(line_no, "vertex record needs 2 coordinates");
      vertices.emplace_back(parse_double(tok[1], line_no), parse_double(tok[2], line_no));
    } else if (tok[0] == "t") {
      if (tok.size() != 4) throw ParseError(line_no, "triangle record needs 3 indices");
      triangles.push_back({parse_index(tok[1], line_no), parse_index(tok[2], line_no),
                           parse_index(tok[3], line_no)});
      tri_lines.push_back(line_no);
    } else if (tok[0] == "e") {
      if (tok.size() != 4) throw ParseError(line_no, "edge record needs 2 indices and a tag");
      BoundaryTag tag;
      if (tok[3] == "D")
        tag = BoundaryTag::Dirichlet;
      else if (tok[3] == "N")
        tag = BoundaryTag::Neumann;
      else
        throw ParseError(line_no, "unknown boundary tag '" + std::string(tok[3]) + "'");
      edges.push_back({{parse_index(tok[1], line_no), parse_index(tok[2], line_no)}, tag});
      edge_lines.push_back(line_no);
    } else {
      throw ParseError(line_no, "unknown record type '" + std::string(tok[0]) + "'");
    }
    if (end == text.size()) break;
  }

  const int nv = static_cast<int>(vertices.size());
  for (size_t i = 0; i < triangles.size(); ++i)
    for (int v : triangles[i])
      if (v >= nv) throw ParseError(tri_lines[i], "triangle vertex index out of range");
  for (size_t i = 0; i < edges.size(); ++i)
    for (int v : edges[i].v)
      if (v >= nv) throw ParseError(edge_lines[i], "edge vertex index out of range");

  Mesh mesh(std::move(vertices), std::move(triangles), std::move(edges));
  const auto report = validate_mesh(mesh);
  if (!report.empty()) {
    std::string msg = "invalid mesh:";
    for (const auto& r : report) msg += "\n  " + r;
    throw ValidationError(msg);
  }
  return mesh;
}

std::string save_mesh(const Mesh& mesh) {
  std::ostringstream out;
  out << "# vertices " << mesh.num_vertices() << " triangles " << mesh.num_triangles()
      << " boundary_edges " << mesh.boundary_edges().size() << '\n';
  for (const auto& v : mesh.vertices())
    out << "v " << format_double(v.x()) << ' ' << format_double(v.y()) << '\n';
  for (const auto& t : mesh.triangles()) out << "t " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  for (const auto& e : mesh.boundary_edges())
    out << "e " << e.v[0] << ' ' << e.v[1] << ' '
        << (e.tag == BoundaryTag::Dirichlet ? 'D' : 'N') << '\n';
  return out.str();
}

Mesh load_mesh_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open mesh file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_mesh(buf.str());
}

}  // namespace hadamard_eig
