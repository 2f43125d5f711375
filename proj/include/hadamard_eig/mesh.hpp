#pragma once

#include <Eigen/Core>

#include <array>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace hadamard_eig {

using Vec2 = Eigen::Vector2d;

enum class BoundaryTag { Dirichlet, Neumann };

struct BoundaryEdge {
  std::array<int, 2> v;
  BoundaryTag tag;
};

/// Triangulated polygonal reference domain with a Dirichlet/Neumann edge partition.
/// Immutable after construction; use validate_mesh() to check invariants.
class Mesh {
 public:
  Mesh() = default;
  Mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles,
       std::vector<BoundaryEdge> boundary_edges);

  const std::vector<Vec2>& vertices() const { return vertices_; }
  const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
  const std::vector<BoundaryEdge>& boundary_edges() const { return boundary_edges_; }

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_triangles() const { return static_cast<int>(triangles_.size()); }

  /// Signed area; positive for counterclockwise triangles.
  double signed_area(int tri) const;
  bool has_dirichlet() const;
  /// true for every vertex touched by a Dirichlet edge.
  std::vector<bool> dirichlet_vertices() const;

 private:
  std::vector<Vec2> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<BoundaryEdge> boundary_edges_;
};

/// Chooses a tag for a boundary edge from its endpoint coordinates.
using EdgeTagger = std::function<BoundaryTag(const Vec2&, const Vec2&)>;

EdgeTagger tag_all(BoundaryTag tag);

/// Structured crisscross triangulation of [0,width]x[0,height]: each cell is split
/// into four triangles around an added center vertex.
Mesh generate_rect_mesh(int nx, int ny, double width, double height, const EdgeTagger& tagger);

/// One message per violated invariant; empty iff the mesh is valid.
std::vector<std::string> validate_mesh(const Mesh& mesh);

/// Parses the line format `v x y` / `t i j k` / `e i j D|N` (`#` comments).
/// Throws ParseError on malformed input, ValidationError on invariant violations.
Mesh load_mesh(std::string_view text);
std::string save_mesh(const Mesh& mesh);

Mesh load_mesh_file(const std::string& path);

}  // namespace hadamard_eig
