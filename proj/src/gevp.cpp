#include "hadamard_eig/gevp.hpp"

#include "hadamard_eig/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace hadamard_eig {

namespace {

template <typename ApplyB>
Eigen::MatrixXd b_orthonormalize_impl(const Eigen::MatrixXd& vectors, ApplyB&& apply_b) {
  Eigen::MatrixXd Q = vectors;
  Eigen::MatrixXd BQ(Q.rows(), Q.cols());
  for (int j = 0; j < Q.cols(); ++j) {
    Eigen::VectorXd x = Q.col(j);
    Eigen::VectorXd Bx = apply_b(x);
    const double norm0 = std::sqrt(std::max(0.0, x.dot(Bx)));
    if (!(norm0 > 0.0)) throw RankDeficient(j, "b_orthonormalize: vector " + std::to_string(j) + " has zero B-norm");
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i < j; ++i) x -= BQ.col(i).dot(x) * Q.col(i);
      Bx = apply_b(x);
    }
    const double norm = std::sqrt(std::max(0.0, x.dot(Bx)));
    if (!(norm > 1e-10 * norm0))
      throw RankDeficient(j, "b_orthonormalize: vector " + std::to_string(j) +
                                 " is linearly dependent on the preceding vectors");
    Q.col(j) = x / norm;
    BQ.col(j) = Bx / norm;
  }
  return Q;
}

double relative_residual(const Eigen::VectorXd& Ax, const Eigen::VectorXd& Bx, double lambda) {
  const double denom = Ax.norm();
  const double r = (Ax - lambda * Bx).norm();
  return denom > 0.0 ? r / denom : r;
}

void check_k(int k, Eigen::Index n) {
  if (k < 1 || k > n)
    throw std::invalid_argument("solve_gevp: k = " + std::to_string(k) + " outside [1, " +
                                std::to_string(n) + "]");
}

EigenPacket solve_sparse_iterative(const SpMat& A, const SpMat& B, int k, const GevpOptions& opts) {
  const int n = static_cast<int>(A.rows());
  Eigen::SimplicialLLT<SpMat> chol_b(B);
  if (chol_b.info() != Eigen::Success)
    throw FactorizationError("solve_gevp: B is not symmetric positive definite");
  Eigen::SimplicialLDLT<SpMat> fact(A);
  if (fact.info() != Eigen::Success)
    throw FactorizationError("solve_gevp: factorization of A failed");
  if ((fact.vectorD().array() <= 0.0).any())
    throw FactorizationError("solve_gevp: A is not positive definite");

  const int p = std::min(n, std::max(2 * k, k + 8));
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::MatrixXd X(n, p);
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < n; ++i) X(i, j) = dist(rng);
  X = b_orthonormalize(X, B);

  Eigen::VectorXd theta;
  double worst = std::numeric_limits<double>::infinity();
  double previous = worst;
  int polish = 0;
  for (int it = 0; it < opts.max_iterations; ++it) {
    Eigen::MatrixXd Y = fact.solve(B * X);
    Y = b_orthonormalize(Y, B);
    Eigen::MatrixXd AY = A * Y;
    Eigen::MatrixXd Ap = Y.transpose() * AY;
    Ap = 0.5 * (Ap + Ap.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Ap);
    theta = es.eigenvalues();
    X = Y * es.eigenvectors();
    const Eigen::MatrixXd AX = AY * es.eigenvectors();
    const Eigen::MatrixXd BX = B * X;

    worst = 0.0;
    for (int j = 0; j < k; ++j)
      worst = std::max(worst, relative_residual(AX.col(j), BX.col(j), theta[j]));
    if (worst <= opts.tol) {
      // Keep going while the residual still improves noticeably, up to the rounding floor.
      if (polish >= 5 || worst > 0.5 * previous) break;
      ++polish;
    }
    previous = worst;
  }
  if (!(worst <= opts.tol))
    throw ConvergenceError("solve_gevp: subspace iteration did not converge, residual " +
                               std::to_string(worst),
                           worst);

  EigenPacket packet;
  packet.values = theta.head(k);
  packet.vectors = X.leftCols(k);
  packet.max_residual = worst;
  return packet;
}

}  // namespace

Eigen::MatrixXd b_orthonormalize(const Eigen::MatrixXd& vectors, const SpMat& B) {
  if (B.rows() != vectors.rows())
    throw std::invalid_argument("b_orthonormalize: dimension mismatch");
  return b_orthonormalize_impl(vectors, [&B](const Eigen::VectorXd& x) -> Eigen::VectorXd { return B * x; });
}

Eigen::MatrixXd b_orthonormalize(const Eigen::MatrixXd& vectors, const Eigen::MatrixXd& B) {
  if (B.rows() != vectors.rows())
    throw std::invalid_argument("b_orthonormalize: dimension mismatch");
  return b_orthonormalize_impl(vectors, [&B](const Eigen::VectorXd& x) -> Eigen::VectorXd { return B * x; });
}

void normalize_signs(Eigen::MatrixXd& vectors) {
  for (int j = 0; j < vectors.cols(); ++j) {
    auto col = vectors.col(j);
    const double cutoff = 1e-8 * col.cwiseAbs().maxCoeff();
    for (int i = 0; i < col.size(); ++i) {
      if (std::abs(col[i]) > cutoff) {
        if (col[i] < 0.0) col = -col;
        break;
      }
    }
  }
}

EigenPacket solve_gevp_dense(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, int k,
                             const GevpOptions& opts) {
  const auto n = A.rows();
  if (A.cols() != n || B.rows() != n || B.cols() != n)
    throw std::invalid_argument("solve_gevp: A and B must be square and of equal size");
  check_k(k, n);

  Eigen::LLT<Eigen::MatrixXd> llt(B);
  if (llt.info() != Eigen::Success)
    throw FactorizationError("solve_gevp: B is not symmetric positive definite");
  // C = L^{-1} A L^{-T}
  Eigen::MatrixXd C = llt.matrixL().solve(A);
  C = llt.matrixL().solve(C.transpose()).transpose().eval();
  C = 0.5 * (C + C.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
  if (es.info() != Eigen::Success)
    throw ConvergenceError("solve_gevp: dense symmetric eigensolver failed", NAN);

  EigenPacket packet;
  packet.values = es.eigenvalues().head(k);
  packet.vectors = llt.matrixU().solve(es.eigenvectors().leftCols(k));

  double worst = 0.0;
  for (int j = 0; j < k; ++j) {
    const Eigen::VectorXd x = packet.vectors.col(j);
    worst = std::max(worst, relative_residual(A * x, B * x, packet.values[j]));
  }
  packet.max_residual = worst;
  if (!(worst <= opts.tol))
    throw ConvergenceError("solve_gevp: dense residual " + std::to_string(worst) +
                               " exceeds tolerance",
                           worst);
  normalize_signs(packet.vectors);
  return packet;
}

EigenPacket solve_gevp(const SpMat& A, const SpMat& B, int k, const GevpOptions& opts) {
  const auto n = A.rows();
  if (A.cols() != n || B.rows() != n || B.cols() != n)
    throw std::invalid_argument("solve_gevp: A and B must be square and of equal size");
  check_k(k, n);
  if (n <= opts.dense_threshold || 3 * k > n)
    return solve_gevp_dense(Eigen::MatrixXd(A), Eigen::MatrixXd(B), k, opts);
  EigenPacket packet = solve_sparse_iterative(A, B, k, opts);
  normalize_signs(packet.vectors);
  return packet;
}

EigenPacket solve_gevp(const FormBundle& bundle, int k, const GevpOptions& opts) {
  EigenPacket packet = solve_gevp(bundle.A, bundle.B, k, opts);
  packet.t = bundle.t;
  packet.shifted_correction = bundle.shift();
  packet.values.array() -= packet.shifted_correction;
  return packet;
}

}  // namespace hadamard_eig
