#include <doctest.h>

#include "support.hpp"

#include "hadamard_eig/hadamard.hpp"

#include <Eigen/LU>
#include <Eigen/QR>

#include <random>

using namespace hadamard_eig;

namespace {

struct Setup {
  Mesh mesh;
  DeformationFamily fam;
  FormBundle bundle;
  EigenPacket packet;
};

Setup setup(int n, const std::string& field, double t = 0.0, int k = 6,
            BoundaryTag tag = BoundaryTag::Dirichlet) {
  Mesh mesh = test::unit_square(n, tag);
  DeformationFamily fam = field == "identity" ? identity_family() : test::analytic(field, mesh);
  FormBundle bundle = assemble_forms(mesh, fam, t);
  EigenPacket packet = solve_gevp(bundle, k);
  return {std::move(mesh), std::move(fam), std::move(bundle), std::move(packet)};
}

Eigen::VectorXd cdot(const FormBundle& b, double lam, double lp, const Eigen::VectorXd& u) {
  return b.A_dot * u - lam * (b.B_dot * u) - lp * (b.B * u);
}

/// gamma(u) by restricting C to the B-orthogonal complement of the cluster explicitly.
Eigen::VectorXd nullspace_gamma(const FormBundle& b, const Cluster& c, const Eigen::VectorXd& u, double lp) {
  const Eigen::MatrixXd BY = b.B * c.basis;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(BY);
  const Eigen::MatrixXd Qfull = qr.householderQ();
  const Eigen::MatrixXd Z = Qfull.rightCols(b.dim() - c.m);
  const Eigen::MatrixXd C = Eigen::MatrixXd(b.A) - c.pencil_lambda() * Eigen::MatrixXd(b.B);
  const Eigen::MatrixXd K = Z.transpose() * C * Z;
  const Eigen::VectorXd x = K.partialPivLu().solve(-Z.transpose() * cdot(b, c.pencil_lambda(), lp, u));
  return Z * x;
}

}  // namespace

TEST_CASE("detect_clusters") {
  const double p = test::kPi2;
  const std::vector<double> v{2 * p, 5 * p, 5 * p + 1e-12, 8 * p};
  CHECK(detect_clusters(v, 1e-8) == std::vector<ClusterRange>{{1, 1}, {2, 2}, {4, 1}});
  const std::vector<double> d{1.0, 2.0, 3.0};
  CHECK(detect_clusters(d, 1e-8) == std::vector<ClusterRange>{{1, 1}, {2, 1}, {3, 1}});
  const std::vector<double> t{1.0, 1.0, 1.0};
  CHECK(detect_clusters(t, 1e-8) == std::vector<ClusterRange>{{1, 3}});
  CHECK(detect_clusters(std::vector<double>{}, 1e-8).empty());
  // Absolute floor below |lambda| = 1.
  const std::vector<double> small{1e-3, 1e-3 + 5e-9};
  CHECK(detect_clusters(small, 1e-8) == std::vector<ClusterRange>{{1, 2}});
  const std::vector<double> nu{-3.0, -3.0 + 1e-7, 2.0};
  CHECK(detect_equal_runs(nu, 1e-6) == std::vector<ClusterRange>{{1, 2}, {3, 1}});
}

TEST_CASE("dilation first and second derivatives are exact") {
  const Setup s = setup(8, "dilation");
  for (const ClusterRange& r : detect_clusters(std::span<const double>(s.packet.values.data(), 4), 1e-8)) {
    const Cluster c = make_cluster(s.packet, r);
    const FirstOrderResult f = first_derivatives(s.bundle, c);
    for (int q = 0; q < c.m; ++q) CHECK(test::rel_err(f.nu[q], -2.0 * c.lambda) < 1e-9);
    const auto second = second_derivatives(s.bundle, f);
    REQUIRE(second.size() == 1);
    for (int q = 0; q < c.m; ++q) CHECK(test::rel_err(second[0].sigma[q], 6.0 * c.lambda) < 1e-9);
    // lambda' = -2 lambda makes C_dot vanish on the eigenspace.
    for (int q = 0; q < c.m; ++q) {
      const GammaSolution g = solve_gamma(s.bundle, c, f.rotated_basis.col(q), f.nu[q]);
      CHECK(g.w.norm() <= 1e-10);
    }
  }
}

TEST_CASE("identity family derivatives vanish") {
  const Setup s = setup(6, "identity");
  const SensitivityReport r = full_report(s.bundle, 4);
  CHECK(r.right_first.cwiseAbs().maxCoeff() == 0.0);
  CHECK(r.left_first.cwiseAbs().maxCoeff() == 0.0);
  CHECK(r.right_second.cwiseAbs().maxCoeff() == 0.0);
  CHECK(r.left_second.cwiseAbs().maxCoeff() == 0.0);
  const Cluster c = make_cluster(s.packet, {1, 1});
  CHECK(solve_gamma(s.bundle, c, c.basis.col(0), 0.0).w.norm() == 0.0);
}

TEST_CASE("stretch_x splits the 5 pi^2 cluster") {
  const Setup s = setup(16, "stretch_x");
  const auto ranges = detect_clusters(std::span<const double>(s.packet.values.data(), 4), 1e-8);
  REQUIRE(ranges.size() == 3);
  REQUIRE(ranges[1] == ClusterRange{2, 2});
  const Cluster c = make_cluster(s.packet, ranges[1]);
  const FirstOrderResult f = first_derivatives(s.bundle, c);
  CHECK(f.nu[0] < f.nu[1]);
  CHECK(test::rel_err(f.nu[0], -8 * test::kPi2) < 0.05);
  CHECK(test::rel_err(f.nu[1], -2 * test::kPi2) < 0.05);
  CHECK(f.right(2) == f.nu[0]);
  CHECK(f.right(3) == f.nu[1]);
  CHECK(f.left(2) == f.nu[1]);
  CHECK(f.left(3) == f.nu[0]);

  // E-diagonalization of the rotated basis.
  const Eigen::MatrixXd E = f.rotated_basis.transpose() *
                            ((s.bundle.A_dot - c.pencil_lambda() * s.bundle.B_dot) * f.rotated_basis);
  CHECK((E - Eigen::MatrixXd(f.nu.asDiagonal())).cwiseAbs().maxCoeff() <= 1e-9 * std::abs(f.nu[0]));

  const auto second = second_derivatives(s.bundle, f);
  REQUIRE(second.size() == 2);
  CHECK(second[0].l == 2);
  CHECK(second[0].r == 3);
  CHECK(second[1].l == 3);
  CHECK(test::rel_err(second[0].sigma[0], 24 * test::kPi2) < 0.1);
  CHECK(test::rel_err(second[1].sigma[0], 6 * test::kPi2) < 0.1);
  for (const auto& sr : second) {
    // gamma vectors are B-orthogonal to the cluster.
    const Eigen::MatrixXd proj = c.basis.transpose() * (s.bundle.B * sr.gamma_vectors);
    CHECK(proj.cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(sr.gamma_residual <= 1e-8);
  }
  const Eigen::VectorXd left = left_second_derivatives(f, second);
  CHECK(left[0] == second[1].sigma[0]);
  CHECK(left[1] == second[0].sigma[0]);
}

TEST_CASE("gamma agrees with a null-space solve") {
  const Setup s = setup(6, "stretch_x", 0.0, 4);
  const Cluster c = make_cluster(s.packet, {2, 2});
  const FirstOrderResult f = first_derivatives(s.bundle, c);
  const GammaSolver solver(s.bundle, c);
  for (int q = 0; q < 2; ++q) {
    const Eigen::VectorXd u = f.rotated_basis.col(q);
    const GammaSolution g = solver.solve(u, f.nu[q]);
    const Eigen::VectorXd ref = nullspace_gamma(s.bundle, c, u, f.nu[q]);
    CHECK((g.w - ref).norm() <= 1e-9 * std::max(1.0, ref.norm()));
    CHECK((c.basis.transpose() * (s.bundle.B * g.w)).cwiseAbs().maxCoeff() <= 1e-10);
    // The equation holds against every v once the multiplier term is included.
    const Eigen::VectorXd C_w = s.bundle.A * g.w - c.pencil_lambda() * (s.bundle.B * g.w);
    const Eigen::VectorXd full = C_w + cdot(s.bundle, c.pencil_lambda(), f.nu[q], u) +
                                 s.bundle.B * (c.basis * g.multiplier);
    CHECK(full.norm() <= 1e-8 * std::max(1.0, C_w.norm()));
  }
}

TEST_CASE("non-orthonormal basis is rejected") {
  const Setup s = setup(4, "stretch_x", 0.0, 3);
  Cluster c = make_cluster(s.packet, {2, 2});
  c.basis.col(1) *= 1.5;
  CHECK_THROWS_AS(first_derivatives(s.bundle, c), std::invalid_argument);
  CHECK_THROWS_AS(make_cluster(s.packet, {3, 2}), std::invalid_argument);
}

TEST_CASE("basis independence") {
  const Setup s = setup(8, "stretch_x", 0.0, 4);
  const Cluster c = make_cluster(s.packet, {2, 2});
  const FirstOrderResult f0 = first_derivatives(s.bundle, c);
  const auto s0 = second_derivatives(s.bundle, f0);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    Cluster rc = c;
    rc.basis = c.basis * test::random_rotation(2, rng);
    const FirstOrderResult f = first_derivatives(s.bundle, rc);
    CHECK((f.nu - f0.nu).cwiseAbs().maxCoeff() <= 1e-9 * f0.nu.cwiseAbs().maxCoeff());
    const auto sr = second_derivatives(s.bundle, f);
    REQUIRE(sr.size() == s0.size());
    for (std::size_t i = 0; i < sr.size(); ++i)
      CHECK(std::abs(sr[i].sigma[0] - s0[i].sigma[0]) <= 1e-9 * std::abs(s0[i].sigma[0]));
  }
}

TEST_CASE("full report for the stretch family") {
  const Setup s = setup(8, "stretch_x", 0.0, 4);
  const SensitivityReport r = full_report(s.mesh, s.fam, 0.0, 4);
  REQUIRE(r.size() == 4);
  REQUIRE(r.clusters.size() == 3);
  const auto& nu = r.clusters[1].first.nu;
  CHECK(r.right_first[1] == nu[0]);
  CHECK(r.right_first[2] == nu[1]);
  CHECK(r.left_first[1] == nu[1]);
  CHECK(r.left_first[2] == nu[0]);
  CHECK(r.right_first[0] == r.left_first[0]);
  CHECK(r.right_second[1] == r.left_second[2]);
  // Every index in exactly one subcluster.
  std::vector<int> hits(r.size() + 1, 0);
  for (const auto& c : r.clusters)
    for (const auto& sub : c.second)
      for (int j = sub.l; j < sub.r; ++j) ++hits[j];
  for (int j = 1; j <= r.size(); ++j) CHECK(hits[j] == 1);
  CHECK_THROWS_AS(full_report(s.mesh, s.fam, 5.0, 4), std::invalid_argument);
}

TEST_CASE("report extends to close a cut cluster") {
  const Setup s = setup(8, "identity", 0.0, 4);
  const SensitivityReport r = full_report(s.bundle, 2);
  CHECK(r.size() == 3);
  CHECK(r.clusters.back().first.cluster.m == 2);
}

TEST_CASE("equal derivatives form one subcluster") {
  // Dilation keeps the double eigenvalue double: H is 2x2.
  const Setup s = setup(8, "dilation", 0.0, 4);
  const FirstOrderResult f = first_derivatives(s.bundle, make_cluster(s.packet, {2, 2}));
  const auto sr = second_derivatives(s.bundle, f);
  REQUIRE(sr.size() == 1);
  CHECK(sr[0].size() == 2);
  CHECK(sr[0].l == 2);
  CHECK(sr[0].r == 4);
}

TEST_CASE("shift invariance on a pure Neumann square") {
  const Mesh mesh = test::unit_square(6, BoundaryTag::Neumann);
  const DeformationFamily fam = test::analytic("stretch_x", mesh);
  const double t = 0.05;
  const FormBundle b = assemble_forms(mesh, fam, t);
  REQUIRE(b.shifted);
  const SensitivityReport shifted = full_report(b, 6);

  // Unshifted pencil with the constant mode deflated to alpha: D = alpha (B1)(B1)^T / (1^T B 1).
  const double alpha = 1e3;
  const int n = b.dim();
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd bv = b.B * one, bd = b.B_dot * one, bdd = b.B_ddot * one;
  const double s0 = one.dot(bv), s1 = one.dot(bd), s2 = one.dot(bdd);
  const Eigen::MatrixXd D0 = alpha * bv * bv.transpose() / s0;
  const Eigen::MatrixXd P1 = bd * bv.transpose() + bv * bd.transpose();
  const Eigen::MatrixXd D1 = alpha * (P1 / s0 - bv * bv.transpose() * s1 / (s0 * s0));
  const Eigen::MatrixXd D2 =
      alpha * ((bdd * bv.transpose() + 2.0 * bd * bd.transpose() + bv * bdd.transpose()) / s0 -
               2.0 * P1 * s1 / (s0 * s0) + bv * bv.transpose() * (2.0 * s1 * s1 / (s0 * s0 * s0) - s2 / (s0 * s0)));
  auto sp = [](const Eigen::MatrixXd& m) -> SpMat { return m.sparseView(); };
  const FormBundle deflated = bundle_from_matrices(
      sp(Eigen::MatrixXd(b.A - b.B) + D0), b.B, sp(Eigen::MatrixXd(b.A_dot - b.B_dot) + D1), b.B_dot,
      sp(Eigen::MatrixXd(b.A_ddot - b.B_ddot) + D2), b.B_ddot, t);
  const SensitivityReport other = full_report(deflated, 5);

  CHECK(std::abs(shifted.eigenvalues[0]) <= 1e-10);
  for (int j = 0; j < 5; ++j) {
    CAPTURE(j);
    CHECK(test::rel_err(other.eigenvalues[j], shifted.eigenvalues[j + 1]) <= 1e-10);
    CHECK(std::abs(other.right_first[j] - shifted.right_first[j + 1]) <= 1e-8 * std::max(1.0, std::abs(shifted.right_first[j + 1])));
    CHECK(std::abs(other.right_second[j] - shifted.right_second[j + 1]) <= 1e-8 * std::max(1.0, std::abs(shifted.right_second[j + 1])));
    CHECK(std::abs(other.left_second[j] - shifted.left_second[j + 1]) <= 1e-8 * std::max(1.0, std::abs(shifted.left_second[j + 1])));
  }
}
