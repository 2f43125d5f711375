#pragma once

#include "hadamard_eig/deform.hpp"
#include "hadamard_eig/mesh.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <iosfwd>
#include <span>
#include <vector>

namespace hadamard_eig {

using SpMat = Eigen::SparseMatrix<double>;

enum class FormKind { A, B, A_dot, B_dot, A_ddot, B_ddot };

/// Symmetric triangle quadrature on the reference triangle; barycentric points, weights sum to 1.
struct TriangleRule {
  std::vector<Eigen::Vector3d> points;
  std::vector<double> weights;
};

/// 6-point rule, exact for degree 4.
const TriangleRule& degree4_rule();
/// 7-point rule, exact for degree 5.
const TriangleRule& degree5_rule();

/// The pulled-back forms and their t-derivatives on free DOFs at one time t.
struct FormBundle {
  SpMat A, B, A_dot, B_dot, A_ddot, B_ddot;
  /// vertex -> free DOF index, -1 for vertices on a Dirichlet edge.
  std::vector<int> vertex_to_dof;
  std::vector<int> dof_to_vertex;
  /// A (and its derivatives) had B added because the mesh has no Dirichlet edge.
  bool shifted = false;
  double t = 0.0;

  int dim() const { return static_cast<int>(A.rows()); }
  const SpMat& form(FormKind which) const;
  /// Amount added to every eigenvalue of the stored pencil by the shift (0 or 1).
  double shift() const { return shifted ? 1.0 : 0.0; }
};

/// Element-wise P1 assembly of A_t, B_t and the derivative forms. Vertices on Dirichlet edges
/// are eliminated; with no Dirichlet edge every A-type form gets the matching B-type form added.
FormBundle assemble_forms(const Mesh& mesh, const DeformationFamily& family, double t,
                          const TriangleRule& rule = degree4_rule());

/// Wraps raw symmetric matrices (e.g. a synthetic pencil) as a bundle with identity DOF maps.
FormBundle bundle_from_matrices(SpMat A, SpMat B, SpMat A_dot, SpMat B_dot, SpMat A_ddot,
                                SpMat B_ddot, double t);

/// u^T M v for the selected form.
double eval_form(const FormBundle& bundle, FormKind which, const Eigen::VectorXd& u,
                 const Eigen::VectorXd& v);

/// Coordinate dump `row col value`, sorted by (row, col), 17 significant digits.
void write_coo(std::ostream& out, const SpMat& m);

}  // namespace hadamard_eig
