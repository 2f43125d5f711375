#pragma once

#include "hadamard_eig/assemble.hpp"
#include "hadamard_eig/deform.hpp"
#include "hadamard_eig/gevp.hpp"
#include "hadamard_eig/mesh.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <random>

namespace test {

using namespace hadamard_eig;

constexpr double kPi = 3.14159265358979323846;
constexpr double kPi2 = kPi * kPi;

inline Mesh unit_square(int n, BoundaryTag tag = BoundaryTag::Dirichlet) {
  return generate_rect_mesh(n, n, 1.0, 1.0, tag_all(tag));
}

inline DeformationFamily analytic(const std::string& name, const Mesh& mesh) {
  return affine_family(analytic_field(name), mesh);
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

inline Eigen::MatrixXd random_rotation(int m, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd X(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) X(i, j) = g(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(X);
  return qr.householderQ();
}

/// Sorted smallest k eigenvalues of the assembled pencil at time s.
inline Eigen::VectorXd eigenvalues_at(const Mesh& mesh, const DeformationFamily& fam, double s, int k) {
  return solve_gevp(assemble_forms(mesh, fam, s), k).values;
}

}  // namespace test
