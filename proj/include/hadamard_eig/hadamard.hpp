#pragma once

#include "hadamard_eig/assemble.hpp"
#include "hadamard_eig/deform.hpp"
#include "hadamard_eig/gevp.hpp"
#include "hadamard_eig/mesh.hpp"

#include <Eigen/Core>
#include <Eigen/SparseLU>

#include <memory>
#include <span>
#include <vector>

namespace hadamard_eig {

/// Index run {k, ..., k+m-1} (1-based) of equal eigenvalues.
struct ClusterRange {
  int k = 1;
  int m = 1;
  int last() const { return k + m - 1; }
  bool operator==(const ClusterRange&) const = default;
};

/// Maximal runs with |v[j+1] - v[j]| <= rel_tol * max(1, |v[j]|). Ranges partition 1..size.
std::vector<ClusterRange> detect_clusters(std::span<const double> values, double rel_tol);

/// Same partition rule with an absolute tolerance; used to group equal first derivatives.
std::vector<ClusterRange> detect_equal_runs(std::span<const double> values, double abs_tol);

/// An eigenvalue cluster together with a B-orthonormal basis of its eigenspace.
struct Cluster {
  int k = 1;
  int m = 1;
  /// Reported (un-shifted) common eigenvalue; the mean of the members.
  double lambda = 0.0;
  /// Shift of the stored pencil (1 when the bundle was shifted).
  double shift = 0.0;
  Eigen::MatrixXd basis;

  double pencil_lambda() const { return lambda + shift; }
};

Cluster make_cluster(const EigenPacket& packet, const ClusterRange& range);

/// First unilateral derivatives of one cluster: ascending eigenvalues nu of
/// G = (E(phi_i, phi_j)), E = A_dot - lambda B_dot.
struct FirstOrderResult {
  Cluster cluster;
  Eigen::VectorXd nu;
  /// cluster.basis rotated by the eigenvectors of G; column q carries nu[q].
  Eigen::MatrixXd rotated_basis;

  /// lambda_dot^+ at global index j (1-based): nu_{j-k+1}.
  double right(int j) const;
  /// lambda_dot^- at global index j: nu_{k+m-j}.
  double left(int j) const;
};

/// Throws std::invalid_argument if the cluster basis is not B-orthonormal within 1e-10.
FirstOrderResult first_derivatives(const FormBundle& bundle, const Cluster& cluster);

struct GammaSolution {
  Eigen::VectorXd w;
  Eigen::VectorXd multiplier;
  /// ||C w + c_dot + B Y mu|| relative to the size of its terms.
  double residual = 0.0;
};

/// Solves C(w, v) = -C_dot(u, v) for all v B-orthogonal to the cluster, w B-orthogonal to
/// the cluster, via the bordered system [C, BY; (BY)^T, 0]. The factorization of the
/// bordered matrix is computed once and reused for every right-hand side.
class GammaSolver {
 public:
  GammaSolver(const FormBundle& bundle, const Cluster& cluster);

  GammaSolution solve(const Eigen::VectorXd& u, double lambda_prime) const;

 private:
  const FormBundle* bundle_;
  double lambda_;
  Eigen::MatrixXd BY_;
  SpMat C_;
  std::shared_ptr<Eigen::SparseLU<SpMat>> lu_;
};

/// Convenience wrapper for a single right-hand side.
GammaSolution solve_gamma(const FormBundle& bundle, const Cluster& cluster,
                          const Eigen::VectorXd& u, double lambda_prime);

/// F(u, v) = (A_ddot - lambda B_ddot - 2 lambda' B_dot)(u, v) - 2 C(gamma(u), gamma(v)).
double f_form(const FormBundle& bundle, double pencil_lambda, double lambda_prime,
              const Eigen::VectorXd& u, const Eigen::VectorXd& v, const Eigen::VectorXd& gamma_u,
              const Eigen::VectorXd& gamma_v);

/// Second derivatives on one run of equal nu inside a cluster.
struct SecondOrderResult {
  /// Global 1-based index range [l, r-1].
  int l = 1;
  int r = 2;
  double lambda_prime = 0.0;
  /// Ascending eigenvalues of H = (F(phi_i, phi_j)).
  Eigen::VectorXd sigma;
  /// Rotated basis vectors of this run (columns of FirstOrderResult::rotated_basis).
  Eigen::MatrixXd basis;
  /// gamma(basis column q) in column q.
  Eigen::MatrixXd gamma_vectors;
  /// Largest postcondition residual among the gamma solves.
  double gamma_residual = 0.0;

  int size() const { return r - l; }
};

std::vector<SecondOrderResult> second_derivatives(const FormBundle& bundle,
                                                  const FirstOrderResult& first,
                                                  double deriv_tol = 1e-6);

struct Tolerances {
  /// Relative eigenvalue clustering tolerance.
  double cluster = 1e-8;
  /// Absolute tolerance for equal first derivatives.
  double derivative = 1e-6;
  /// Relative eigen-residual tolerance.
  double residual = 1e-10;
};

struct ClusterReport {
  FirstOrderResult first;
  std::vector<SecondOrderResult> second;
};

struct SensitivityReport {
  double t = 0.0;
  Eigen::VectorXd eigenvalues;
  std::vector<ClusterReport> clusters;
  Tolerances tolerances;
  /// Per-index unilateral derivatives (0-based storage for index j = 1..size).
  Eigen::VectorXd right_first, left_first, right_second, left_second;

  int size() const { return static_cast<int>(eigenvalues.size()); }
};

/// Clusters, first and second derivatives for the smallest eigenvalues of an assembled bundle.
/// At least k_max values are reported; the list is extended so no cluster is cut.
SensitivityReport full_report(const FormBundle& bundle, int k_max, const Tolerances& tol = {},
                              const GevpOptions& gevp = {});

SensitivityReport full_report(const Mesh& mesh, const DeformationFamily& family, double t,
                              int k_max, const Tolerances& tol = {});

/// Per-index left second derivatives for one cluster given its right-side runs.
/// Runs occupying right positions [a, b] sit at left positions [m-b+1, m-a+1], same sigma order.
Eigen::VectorXd left_second_derivatives(const FirstOrderResult& first,
                                        const std::vector<SecondOrderResult>& runs);

}  // namespace hadamard_eig
