#include "hadamard_eig/assemble.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <array>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <tuple>

namespace hadamard_eig {

namespace {

TriangleRule make_rule(std::initializer_list<std::tuple<double, double, double, double>> orbits) {
  TriangleRule rule;
  for (const auto& [a, b, c, w] : orbits) {
    if (a == b && b == c) {
      rule.points.emplace_back(a, b, c);
      rule.weights.push_back(w);
    } else {
      // (a, a, c) orbit with three distinct permutations.
      rule.points.emplace_back(a, a, c);
      rule.points.emplace_back(a, c, a);
      rule.points.emplace_back(c, a, a);
      for (int i = 0; i < 3; ++i) rule.weights.push_back(w);
    }
  }
  return rule;
}

constexpr int kNumForms = 6;

SpMat symmetrized(const SpMat& m) {
  SpMat t = m.transpose();
  SpMat s = 0.5 * (m + t);
  s.makeCompressed();
  return s;
}

}  // namespace

const TriangleRule& degree4_rule() {
  static const TriangleRule rule = [] {
    constexpr double a1 = 0.44594849091596488632, w1 = 0.22338158967801146570;
    constexpr double a2 = 0.09157621350977074346, w2 = 0.10995174365532186764;
    return make_rule({{a1, a1, 1.0 - 2.0 * a1, w1}, {a2, a2, 1.0 - 2.0 * a2, w2}});
  }();
  return rule;
}

const TriangleRule& degree5_rule() {
  static const TriangleRule rule = [] {
    constexpr double third = 1.0 / 3.0;
    constexpr double a1 = 0.47014206410511508977, w1 = 0.13239415278850618074;
    constexpr double a2 = 0.10128650732345633880, w2 = 0.12593918054482715260;
    return make_rule({{third, third, third, 0.225},
                      {a1, a1, 1.0 - 2.0 * a1, w1},
                      {a2, a2, 1.0 - 2.0 * a2, w2}});
  }();
  return rule;
}

const SpMat& FormBundle::form(FormKind which) const {
  switch (which) {
    case FormKind::A: return A;
    case FormKind::B: return B;
    case FormKind::A_dot: return A_dot;
    case FormKind::B_dot: return B_dot;
    case FormKind::A_ddot: return A_ddot;
    case FormKind::B_ddot: return B_ddot;
  }
  throw std::invalid_argument("unknown form");
}

FormBundle assemble_forms(const Mesh& mesh, const DeformationFamily& family, double t,
                          const TriangleRule& rule) {
  FormBundle bundle;
  bundle.t = t;

  const auto dirichlet = mesh.dirichlet_vertices();
  bundle.vertex_to_dof.assign(mesh.num_vertices(), -1);
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    if (!dirichlet[v]) {
      bundle.vertex_to_dof[v] = static_cast<int>(bundle.dof_to_vertex.size());
      bundle.dof_to_vertex.push_back(v);
    }
  }
  const int n = static_cast<int>(bundle.dof_to_vertex.size());
  if (n == 0) throw std::invalid_argument("assemble_forms: no free degrees of freedom");

  std::array<std::vector<Eigen::Triplet<double>>, kNumForms> trip;
  for (auto& tr : trip) tr.reserve(9 * mesh.num_triangles());

  const auto& verts = mesh.vertices();
  for (int tri = 0; tri < mesh.num_triangles(); ++tri) {
    const auto& T = mesh.triangles()[tri];
    Mat2 J;
    J.col(0) = verts[T[1]] - verts[T[0]];
    J.col(1) = verts[T[2]] - verts[T[0]];
    const double area = 0.5 * J.determinant();
    if (!(area > 0.0))
      throw std::invalid_argument("assemble_forms: triangle " + std::to_string(tri) +
                                  " has non-positive area");
    // Gradients of the barycentric coordinates are the columns of J^{-T} applied to
    // (-1,-1), (1,0), (0,1).
    const Mat2 JinvT = J.inverse().transpose();
    std::array<Vec2, 3> grad;
    grad[1] = JinvT.col(0);
    grad[2] = JinvT.col(1);
    grad[0] = -grad[1] - grad[2];

    // Element matrices, upper triangle only: [form][i][j].
    double el[kNumForms][3][3] = {};
    for (size_t q = 0; q < rule.points.size(); ++q) {
      const Eigen::Vector3d& bary = rule.points[q];
      const double w = rule.weights[q] * area;
      const RefPoint p{bary[0] * verts[T[0]] + bary[1] * verts[T[1]] + bary[2] * verts[T[2]], tri};
      const PullbackCoeffs c = pullback_coeffs(family, p, t);

      const Mat2 S0 = c.a * c.Q;
      const Mat2 S1 = c.Q_dot * c.a + c.Q * c.a_dot;
      const Mat2 S2 = c.Q_ddot * c.a + 2.0 * c.Q_dot * c.a_dot + c.Q * c.a_ddot;
      for (int i = 0; i < 3; ++i) {
        for (int j = i; j < 3; ++j) {
          const double phi = bary[i] * bary[j];
          el[0][i][j] += w * grad[i].dot(S0 * grad[j]);
          el[1][i][j] += w * phi * c.a;
          el[2][i][j] += w * grad[i].dot(S1 * grad[j]);
          el[3][i][j] += w * phi * c.a_dot;
          el[4][i][j] += w * grad[i].dot(S2 * grad[j]);
          el[5][i][j] += w * phi * c.a_ddot;
        }
      }
    }

    for (int i = 0; i < 3; ++i) {
      const int di = bundle.vertex_to_dof[T[i]];
      if (di < 0) continue;
      for (int j = 0; j < 3; ++j) {
        const int dj = bundle.vertex_to_dof[T[j]];
        if (dj < 0) continue;
        const int lo = std::min(i, j), hi = std::max(i, j);
        for (int f = 0; f < kNumForms; ++f) trip[f].emplace_back(di, dj, el[f][lo][hi]);
      }
    }
  }

  std::array<SpMat, kNumForms> forms;
  for (int f = 0; f < kNumForms; ++f) {
    forms[f].resize(n, n);
    forms[f].setFromTriplets(trip[f].begin(), trip[f].end());
    forms[f] = symmetrized(forms[f]);
  }
  bundle.A = std::move(forms[0]);
  bundle.B = std::move(forms[1]);
  bundle.A_dot = std::move(forms[2]);
  bundle.B_dot = std::move(forms[3]);
  bundle.A_ddot = std::move(forms[4]);
  bundle.B_ddot = std::move(forms[5]);

  if (!mesh.has_dirichlet()) {
    bundle.A += bundle.B;
    bundle.A_dot += bundle.B_dot;
    bundle.A_ddot += bundle.B_ddot;
    bundle.shifted = true;
  }
  return bundle;
}

FormBundle bundle_from_matrices(SpMat A, SpMat B, SpMat A_dot, SpMat B_dot, SpMat A_ddot,
                                SpMat B_ddot, double t) {
  const auto n = A.rows();
  for (const SpMat* m : {&A, &B, &A_dot, &B_dot, &A_ddot, &B_ddot}) {
    if (m->rows() != n || m->cols() != n)
      throw std::invalid_argument("bundle_from_matrices: all forms must be square and equal-sized");
  }
  FormBundle bundle;
  bundle.A = symmetrized(A);
  bundle.B = symmetrized(B);
  bundle.A_dot = symmetrized(A_dot);
  bundle.B_dot = symmetrized(B_dot);
  bundle.A_ddot = symmetrized(A_ddot);
  bundle.B_ddot = symmetrized(B_ddot);
  bundle.t = t;
  bundle.vertex_to_dof.resize(n);
  bundle.dof_to_vertex.resize(n);
  for (int i = 0; i < n; ++i) bundle.vertex_to_dof[i] = bundle.dof_to_vertex[i] = i;
  return bundle;
}

double eval_form(const FormBundle& bundle, FormKind which, const Eigen::VectorXd& u,
                 const Eigen::VectorXd& v) {
  const SpMat& m = bundle.form(which);
  if (u.size() != m.rows() || v.size() != m.rows())
    throw std::invalid_argument("eval_form: vector length " + std::to_string(u.size()) + "/" +
                                std::to_string(v.size()) + " does not match form dimension " +
                                std::to_string(m.rows()));
  return u.dot(m * v);
}

void write_coo(std::ostream& out, const SpMat& m) {
  std::vector<std::tuple<int, int, double>> entries;
  entries.reserve(m.nonZeros());
  for (int k = 0; k < m.outerSize(); ++k)
    for (SpMat::InnerIterator it(m, k); it; ++it)
      entries.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
  });
  char buf[64];
  for (const auto& [r, c, v] : entries) {
    std::snprintf(buf, sizeof buf, "%d %d %.17g\n", r, c, v);
    out << buf;
  }
}

}  // namespace hadamard_eig
