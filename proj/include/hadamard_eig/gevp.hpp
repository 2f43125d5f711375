#pragma once

#include "hadamard_eig/assemble.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace hadamard_eig {

/// Smallest eigenpairs of a symmetric-definite pencil, vectors B-orthonormal.
struct EigenPacket {
  /// Ascending, already corrected by `shifted_correction`.
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  double t = 0.0;
  /// Subtracted from the pencil's eigenvalues to obtain `values`.
  double shifted_correction = 0.0;
  /// Worst relative residual ||A x - lambda B x|| / ||A x|| over the returned pairs.
  double max_residual = 0.0;

  int size() const { return static_cast<int>(values.size()); }
  /// Eigenvalue of the stored (possibly shifted) pencil.
  double pencil_value(int i) const { return values[i] + shifted_correction; }
};

struct GevpOptions {
  double tol = 1e-10;
  /// Problems up to this dimension use the dense Cholesky-reduced solver.
  int dense_threshold = 300;
  int max_iterations = 1000;
};

/// Smallest k eigenpairs of A x = lambda B x for the bundle's A, B; un-shifts if the
/// bundle was shifted. Throws FactorizationError / ConvergenceError.
EigenPacket solve_gevp(const FormBundle& bundle, int k, const GevpOptions& opts = {});

/// Raw-pencil entry points (no shift correction).
EigenPacket solve_gevp(const SpMat& A, const SpMat& B, int k, const GevpOptions& opts = {});
EigenPacket solve_gevp_dense(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, int k,
                             const GevpOptions& opts = {});

/// Modified Gram-Schmidt (two passes) in the B inner product. Throws RankDeficient naming
/// the first column that is numerically dependent on its predecessors.
Eigen::MatrixXd b_orthonormalize(const Eigen::MatrixXd& vectors, const SpMat& B);
Eigen::MatrixXd b_orthonormalize(const Eigen::MatrixXd& vectors, const Eigen::MatrixXd& B);

/// Flips each column so its first entry with |x_i| > 1e-8 * max|x| is positive.
void normalize_signs(Eigen::MatrixXd& vectors);

}  // namespace hadamard_eig
