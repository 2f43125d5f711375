#include <doctest.h>

#include "support.hpp"

#include "hadamard_eig/errors.hpp"
#include "hadamard_eig/hadamard.hpp"
#include "hadamard_eig/oracle.hpp"
#include "hadamard_eig/report_io.hpp"

using namespace hadamard_eig;

namespace {

EigenCurve dilation_curve(const Eigen::VectorXd& l0) {
  return [l0](double t) -> Eigen::VectorXd { return l0 / ((1.0 + t) * (1.0 + t)); };
}

}  // namespace

TEST_CASE("first-order FD on the dilation curve") {
  const Eigen::VectorXd l0 = Eigen::Vector3d(2.0, 5.0, 8.0) * test::kPi2;
  for (Side side : {Side::Right, Side::Left}) {
    for (int j = 1; j <= 3; ++j) {
      const FdEstimate e = fd_first_derivative(dilation_curve(l0), 0.0, j, 1e-3, side);
      CHECK(test::rel_err(e.value, -2.0 * l0[j - 1]) < 1e-8);
      CHECK(e.monotone);
    }
  }
}

TEST_CASE("second-order FD on the dilation curve") {
  const Eigen::VectorXd l0 = Eigen::Vector2d(2.0, 5.0) * test::kPi2;
  for (Side side : {Side::Right, Side::Left}) {
    for (int j = 1; j <= 2; ++j) {
      const FdEstimate e = fd_second_derivative(dilation_curve(l0), 0.0, j, -2.0 * l0[j - 1], 1e-3, side);
      CHECK(test::rel_err(e.value, 6.0 * l0[j - 1]) < 1e-4);
    }
  }
}

TEST_CASE("constant curves have zero derivatives") {
  const EigenCurve flat = [](double) -> Eigen::VectorXd { return Eigen::Vector2d(1.0, 3.0); };
  CHECK(fd_first_derivative(flat, 0.2, 2).value == 0.0);
  CHECK(fd_second_derivative(flat, 0.2, 1, 0.0).value == 0.0);
  CHECK(fd_first_derivative(flat, 0.2, 1).monotone);
  CHECK_THROWS_AS(fd_first_derivative(flat, 0.2, 3), std::out_of_range);
  CHECK_THROWS_AS(fd_first_derivative(flat, 0.2, 1, -1.0), std::invalid_argument);
}

TEST_CASE("FD on the stretch_x double eigenvalue follows the pairing") {
  const Mesh mesh = test::unit_square(8);
  const DeformationFamily fam = test::analytic("stretch_x", mesh);
  const FormBundle b = assemble_forms(mesh, fam, 0.0);
  const FirstOrderResult f = first_derivatives(b, make_cluster(solve_gevp(b, 4), {2, 2}));
  const EigenCurve curve = [&](double s) { return test::eigenvalues_at(mesh, fam, s, 4); };
  CHECK(std::abs(fd_first_derivative(curve, 0.0, 2, 1e-3, Side::Right).value - f.nu[0]) < 1e-6);
  CHECK(std::abs(fd_first_derivative(curve, 0.0, 2, 1e-3, Side::Left).value - f.nu[1]) < 1e-6);
  CHECK(std::abs(fd_first_derivative(curve, 0.0, 3, 1e-3, Side::Right).value - f.nu[1]) < 1e-6);
  CHECK(std::abs(fd_first_derivative(curve, 0.0, 3, 1e-3, Side::Left).value - f.nu[0]) < 1e-6);
}

TEST_CASE("second-order FD matches textbook perturbation theory") {
  std::mt19937_64 rng(5);
  const int n = 8;
  const Eigen::MatrixXd Q = test::random_rotation(n, rng);
  const Eigen::VectorXd d = Eigen::VectorXd::LinSpaced(n, 1.0, 8.0);
  const Eigen::MatrixXd A0 = Q * d.asDiagonal() * Q.transpose();
  std::normal_distribution<double> g;
  Eigen::MatrixXd A1(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) A1(i, j) = A1(j, i) = 0.3 * g(rng);
  const EigenCurve curve = [&](double t) -> Eigen::VectorXd {
    return solve_gevp_dense(A0 + t * A1, Eigen::MatrixXd::Identity(n, n), n).values;
  };
  for (int j : {1, 4, 8}) {
    const double first = fd_first_derivative(curve, 0.0, j).value;
    const double second = fd_second_derivative(curve, 0.0, j, first).value;
    CHECK(test::rel_err(second, second_order_perturbation(A0, A1, j)) < 1e-4);
  }
  CHECK_THROWS(second_order_perturbation(Eigen::MatrixXd::Identity(3, 3), A1.topLeftCorner(3, 3), 1));
}

TEST_CASE("random pencils") {
  const PencilFamily p = random_pencil(5, 42, {{2.0, 2, {}}});
  validate_pencil(p);
  const Eigen::VectorXd l = p.eigenvalues(0.0);
  CHECK(std::abs(l[0] - 2.0) <= 1e-12 * 2.0);
  CHECK(std::abs(l[1] - 2.0) <= 1e-12 * 2.0);
  CHECK(l[2] > 2.2);

  const PencilFamily q = random_pencil(5, 42, {{2.0, 2, {}}});
  CHECK(q.A0 == p.A0);
  CHECK(q.A1 == p.A1);
  CHECK(q.B2 == p.B2);
  const PencilFamily other = random_pencil(5, 43, {{2.0, 2, {}}});
  CHECK(other.A0 != p.A0);

  CHECK_THROWS_AS(random_pencil(3, 1, {{2.0, 2, {}}, {3.0, 2, {}}}), std::invalid_argument);
  CHECK_THROWS_AS(random_pencil(3, 1, {{2.0, 2, {1.0}}}), std::invalid_argument);
  CHECK_THROWS_AS(random_pencil(3, 1, {{-1.0, 1, {}}}), std::invalid_argument);
}

TEST_CASE("zero perturbation gives a constant family") {
  const PencilFamily p = random_pencil(10, 9, {{1.5, 3, {}}}, 0.0);
  CHECK(p.A1.norm() == 0.0);
  CHECK(p.B2.norm() == 0.0);
  const SensitivityReport r = full_report(p.bundle(0.0), 6);
  CHECK(r.right_first.cwiseAbs().maxCoeff() == 0.0);
  CHECK(r.right_second.cwiseAbs().maxCoeff() == 0.0);
  CHECK(r.left_second.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("planted slopes appear as G eigenvalues") {
  const PencilFamily p = random_pencil(12, 17, {{1.2, 3, {-1.0, 0.5, 2.0}}});
  const FormBundle b = p.bundle(0.0);
  const FirstOrderResult f = first_derivatives(b, make_cluster(solve_gevp(b, 3), {1, 3}));
  CHECK(std::abs(f.nu[0] + 1.0) < 1e-9);
  CHECK(std::abs(f.nu[1] - 0.5) < 1e-9);
  CHECK(std::abs(f.nu[2] - 2.0) < 1e-9);
}

TEST_CASE("vsplit_gamma agrees with the bordered solve") {
  const PencilFamily p = random_pencil(20, 1234, {{1.3, 2, {-0.7, 0.9}}});
  const FormBundle b = p.bundle(0.0);
  const EigenPacket full = solve_gevp(b, b.dim());
  const Cluster c = make_cluster(full, {1, 2});
  const FirstOrderResult f = first_derivatives(b, c);
  for (int q = 0; q < 2; ++q) {
    const Eigen::VectorXd u = f.rotated_basis.col(q);
    const Eigen::VectorXd w = vsplit_gamma(b, full, c, u, f.nu[q]);
    const Eigen::VectorXd ref = solve_gamma(b, c, u, f.nu[q]).w;
    CHECK((w - ref).norm() <= 1e-9 * std::max(1.0, ref.norm()));
  }
  // Cluster in the middle of the spectrum: both V0 and V1 contribute.
  const PencilFamily mid = random_pencil(20, 99, {{3.1, 2, {-0.4, 0.8}}});
  const FormBundle bm = mid.bundle(0.0);
  const EigenPacket fm = solve_gevp(bm, bm.dim());
  const auto ranges = detect_clusters(std::span<const double>(fm.values.data(), fm.size()), 1e-8);
  const auto it = std::find_if(ranges.begin(), ranges.end(), [](const ClusterRange& r) { return r.m == 2; });
  REQUIRE(it != ranges.end());
  CHECK(it->k > 1);
  const Cluster cm = make_cluster(fm, *it);
  const FirstOrderResult ff = first_derivatives(bm, cm);
  const Eigen::VectorXd u = ff.rotated_basis.col(0);
  const Eigen::VectorXd ref = solve_gamma(bm, cm, u, ff.nu[0]).w;
  CHECK((vsplit_gamma(bm, fm, cm, u, ff.nu[0]) - ref).norm() <= 1e-9 * std::max(1.0, ref.norm()));

  CHECK_THROWS_AS(vsplit_gamma(b, solve_gevp(b, 4), c, f.rotated_basis.col(0), f.nu[0]), std::invalid_argument);
}

TEST_CASE("vsplit_gamma vanishes for dilation and identity") {
  const Mesh mesh = test::unit_square(4);
  for (const char* name : {"dilation", "identity"}) {
    const DeformationFamily fam = std::string(name) == "identity" ? identity_family() : test::analytic(name, mesh);
    const FormBundle b = assemble_forms(mesh, fam, 0.0);
    const EigenPacket full = solve_gevp(b, b.dim());
    const Cluster c = make_cluster(full, {1, 1});
    const double lp = std::string(name) == "identity" ? 0.0 : -2.0 * c.lambda;
    CHECK(vsplit_gamma(b, full, c, c.basis.col(0), lp).norm() <= 1e-10);
  }
}

TEST_CASE("pencil JSON round trip") {
  const PencilFamily p = random_pencil(6, 77, {{1.5, 2, {-0.3, 0.6}}});
  const PencilFamily q = pencil_from_json(nlohmann::json::parse(pencil_to_json(p).dump()));
  CHECK(q.A0 == p.A0);
  CHECK(q.A2 == p.A2);
  CHECK(q.B1 == p.B1);
  CHECK(q.seed == 77);
  REQUIRE(q.plan.size() == 1);
  CHECK(q.plan[0].slopes == std::vector<double>{-0.3, 0.6});
  nlohmann::json broken = pencil_to_json(p);
  broken["B0"][0][0] = -100.0;
  CHECK_THROWS_AS(pencil_from_json(broken), ValidationError);
  broken.erase("A1");
  CHECK_THROWS_AS(pencil_from_json(broken), ValidationError);
}
