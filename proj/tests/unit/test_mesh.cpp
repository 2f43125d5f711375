#include <doctest.h>

#include "support.hpp"

#include "hadamard_eig/errors.hpp"

#include <numeric>
#include <string>

using namespace hadamard_eig;

namespace {

bool mentions(const std::vector<std::string>& report, const std::string& a, const std::string& b) {
  return std::any_of(report.begin(), report.end(), [&](const std::string& s) {
    return s.find(a) != std::string::npos && s.find(b) != std::string::npos;
  });
}

}  // namespace

TEST_CASE("smallest crisscross cell") {
  const Mesh m = test::unit_square(1);
  CHECK(m.num_vertices() == 5);
  CHECK(m.num_triangles() == 4);
  REQUIRE(m.boundary_edges().size() == 4);
  for (const auto& e : m.boundary_edges()) CHECK(e.tag == BoundaryTag::Dirichlet);
  CHECK(validate_mesh(m).empty());
}

TEST_CASE("crisscross counts") {
  const Mesh m = generate_rect_mesh(2, 2, 1.0, 1.0, tag_all(BoundaryTag::Neumann));
  CHECK(m.num_vertices() == 13);
  CHECK(m.num_triangles() == 16);
  CHECK_FALSE(m.has_dirichlet());
}

TEST_CASE("generator invariants") {
  for (auto [nx, ny, w, h] : {std::tuple{1, 1, 1.0, 1.0}, std::tuple{3, 5, 2.0, 0.7},
                              std::tuple{16, 16, 1.0, 1.0}, std::tuple{7, 2, 0.3, 4.0}}) {
    const Mesh m = generate_rect_mesh(nx, ny, w, h, tag_all(BoundaryTag::Dirichlet));
    CHECK(validate_mesh(m).empty());
    CHECK(m.num_vertices() == (nx + 1) * (ny + 1) + nx * ny);
    CHECK(m.boundary_edges().size() == static_cast<std::size_t>(2 * (nx + ny)));
    double area = 0.0;
    for (int t = 0; t < m.num_triangles(); ++t) {
      CHECK(m.signed_area(t) > 0.0);
      area += m.signed_area(t);
    }
    CHECK(std::abs(area - w * h) <= 1e-12 * w * h);
  }
}

TEST_CASE("generator rejects bad arguments") {
  const auto tag = tag_all(BoundaryTag::Dirichlet);
  CHECK_THROWS_AS(generate_rect_mesh(0, 1, 1.0, 1.0, tag), std::invalid_argument);
  CHECK_THROWS_AS(generate_rect_mesh(1, -2, 1.0, 1.0, tag), std::invalid_argument);
  CHECK_THROWS_AS(generate_rect_mesh(1, 1, 0.0, 1.0, tag), std::invalid_argument);
  CHECK_THROWS_AS(generate_rect_mesh(1, 1, 1.0, -1.0, tag), std::invalid_argument);
}

TEST_CASE("mixed tags follow the tagger") {
  // Left side Neumann, everything else Dirichlet.
  const Mesh m = generate_rect_mesh(3, 3, 1.0, 1.0, [](const Vec2& a, const Vec2& b) {
    return a.x() == 0.0 && b.x() == 0.0 ? BoundaryTag::Neumann : BoundaryTag::Dirichlet;
  });
  int neumann = 0;
  for (const auto& e : m.boundary_edges()) neumann += e.tag == BoundaryTag::Neumann;
  CHECK(neumann == 3);
  CHECK(validate_mesh(m).empty());
  // Corner vertices shared with a Dirichlet edge count as Dirichlet.
  const auto dir = m.dirichlet_vertices();
  CHECK(dir[0]);
  CHECK_FALSE(dir[4]);
}

TEST_CASE("validation names the clockwise triangle") {
  const Mesh good = test::unit_square(1);
  auto tris = good.triangles();
  std::swap(tris[2][0], tris[2][1]);
  const Mesh bad(good.vertices(), tris, good.boundary_edges());
  const auto report = validate_mesh(bad);
  REQUIRE_FALSE(report.empty());
  CHECK(mentions(report, "triangle 2", "non-positive area"));
}

TEST_CASE("validation names an untagged boundary edge") {
  const Mesh good = test::unit_square(1);
  auto edges = good.boundary_edges();
  const auto dropped = edges.back();
  edges.pop_back();
  const Mesh bad(good.vertices(), good.triangles(), edges);
  const auto report = validate_mesh(bad);
  REQUIRE(report.size() == 1);
  const int a = std::min(dropped.v[0], dropped.v[1]);
  const int b = std::max(dropped.v[0], dropped.v[1]);
  CHECK(mentions(report, "(" + std::to_string(a) + "," + std::to_string(b) + ")", "untagged"));
}

TEST_CASE("validation flags double tags and interior tags") {
  const Mesh good = test::unit_square(1);
  auto edges = good.boundary_edges();
  edges.push_back({edges[0].v, BoundaryTag::Neumann});
  CHECK(mentions(validate_mesh(Mesh(good.vertices(), good.triangles(), edges)), "boundary edge",
                 "tagged more than once"));
  auto interior = good.boundary_edges();
  interior.push_back({{0, 4}, BoundaryTag::Dirichlet});
  CHECK(mentions(validate_mesh(Mesh(good.vertices(), good.triangles(), interior)), "(0,4)",
                 "interior edge"));
}

TEST_CASE("save/load round trip is exact") {
  // Coordinates that are not short decimals.
  const Mesh m = generate_rect_mesh(3, 2, 1.0 / 3.0, std::sqrt(2.0), [](const Vec2& a, const Vec2&) {
    return a.y() == 0.0 ? BoundaryTag::Neumann : BoundaryTag::Dirichlet;
  });
  const std::string text = save_mesh(m);
  const Mesh back = load_mesh(text);
  REQUIRE(back.num_vertices() == m.num_vertices());
  for (int i = 0; i < m.num_vertices(); ++i) {
    CHECK(back.vertices()[i].x() == m.vertices()[i].x());
    CHECK(back.vertices()[i].y() == m.vertices()[i].y());
  }
  CHECK(back.triangles() == m.triangles());
  REQUIRE(back.boundary_edges().size() == m.boundary_edges().size());
  for (std::size_t e = 0; e < m.boundary_edges().size(); ++e) {
    CHECK(back.boundary_edges()[e].v == m.boundary_edges()[e].v);
    CHECK(back.boundary_edges()[e].tag == m.boundary_edges()[e].tag);
  }
  CHECK(save_mesh(back) == text);
}

TEST_CASE("load parses tags and comments") {
  const std::string text =
      "# one triangle\n"
      "v 0 0\nv 1 0\nv 0 1\n"
      "t 0 1 2\n"
      "e 0 1 D\ne 1 2 N\n"
      "# trailing comment\n"
      "e 2 0 D\n";
  const Mesh m = load_mesh(text);
  REQUIRE(m.boundary_edges().size() == 3);
  CHECK(m.boundary_edges()[0].tag == BoundaryTag::Dirichlet);
  CHECK(m.boundary_edges()[1].tag == BoundaryTag::Neumann);
}

TEST_CASE("load reports the line of an out-of-range triangle index") {
  const std::string text = "v 0 0\nv 1 0\nv 0 1\n# c\nt 0 1 7\ne 0 1 D\ne 1 2 D\ne 2 0 D\n";
  try {
    load_mesh(text);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 5);
    CHECK(std::string(e.what()).find("line 5") != std::string::npos);
  }
}

TEST_CASE("load rejects malformed records") {
  CHECK_THROWS_AS(load_mesh("v 0\n"), ParseError);
  CHECK_THROWS_AS(load_mesh("v 0 x\n"), ParseError);
  CHECK_THROWS_AS(load_mesh("q 1 2\n"), ParseError);
  CHECK_THROWS_AS(load_mesh("v 0 0\nv 1 0\nv 0 1\nt 0 1 2\ne 0 1 X\n"), ParseError);
}

TEST_CASE("load surfaces invariant violations") {
  // Clockwise triangle parses but is invalid.
  const std::string text = "v 0 0\nv 1 0\nv 0 1\nt 0 2 1\ne 0 1 D\ne 1 2 D\ne 2 0 D\n";
  CHECK_THROWS_AS(load_mesh(text), ValidationError);
}
