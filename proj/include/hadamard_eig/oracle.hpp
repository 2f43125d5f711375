#pragma once

#include "hadamard_eig/assemble.hpp"
#include "hadamard_eig/gevp.hpp"
#include "hadamard_eig/hadamard.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <vector>

namespace hadamard_eig {

/// An eigenvalue planted with the given multiplicity at t = 0. When `slopes` is non-empty
/// (one entry per copy) the first-order splitting of the cluster is planted as well.
struct PlantedEigenvalue {
  double value = 1.0;
  int multiplicity = 1;
  std::vector<double> slopes;
};

/// Quadratic pencil A(t) = A0 + t A1 + t^2 A2, B(t) = B0 + t B1 + t^2 B2, all symmetric.
struct PencilFamily {
  Eigen::MatrixXd A0, A1, A2, B0, B1, B2;
  double t_min = -0.25;
  double t_max = 0.25;
  std::uint64_t seed = 0;
  std::vector<PlantedEigenvalue> plan;

  int dim() const { return static_cast<int>(A0.rows()); }
  Eigen::MatrixXd A(double t) const { return A0 + t * A1 + t * t * A2; }
  Eigen::MatrixXd B(double t) const { return B0 + t * B1 + t * t * B2; }
  Eigen::MatrixXd A_dot(double t) const { return A1 + 2.0 * t * A2; }
  Eigen::MatrixXd B_dot(double t) const { return B1 + 2.0 * t * B2; }

  /// Forms at time t, in the same layout the finite element path produces.
  FormBundle bundle(double t) const;
  /// Smallest k eigenvalues at t, ascending (all of them for k = 0).
  Eigen::VectorXd eigenvalues(double t, int k = 0) const;
};

/// Throws ValidationError unless A(t), B(t) are symmetric positive definite at `samples`
/// evenly spaced times of the validity interval.
void validate_pencil(const PencilFamily& pencil, int samples = 21);

/// SPD pencil with the planted eigenvalues at t = 0: B0 = M^T M, A0 = M^T diag M with
/// M = Q1 S Q2^T for random orthogonal Q1, Q2 and singular values S in [1, 2]. Remaining
/// eigenvalues are filled in from 2 upwards with gaps >= 0.4. Deterministic per seed.
PencilFamily random_pencil(int dim, std::uint64_t seed, const std::vector<PlantedEigenvalue>& plan,
                           double perturbation = 1.0);

enum class Side { Right, Left };

/// Finite-difference estimate from a depth-3 Richardson table over h0, h0/2, h0/4.
struct FdEstimate {
  double value = 0.0;
  /// |R(2,2) - R(2,1)|
  double error = 0.0;
  /// false when successive raw differences did not shrink.
  bool monotone = true;
};

/// t -> ascending eigenvalue list.
using EigenCurve = std::function<Eigen::VectorXd(double)>;

/// One-sided (1/h)(lambda_j(t+h) - lambda_j(t)), j 1-based.
FdEstimate fd_first_derivative(const EigenCurve& curve, double t, int j, double h0 = 1e-3,
                               Side side = Side::Right);

/// One-sided (2/h^2)(lambda_j(t+h) - lambda_j(t) - h first_deriv), j 1-based.
FdEstimate fd_second_derivative(const EigenCurve& curve, double t, int j, double first_deriv,
                                double h0 = 1e-3, Side side = Side::Right);

/// gamma(u) assembled from a complete eigendecomposition: the component below the cluster solves
/// the (negative definite) restricted problem, the component above it the positive definite one.
/// Throws std::invalid_argument unless `full` holds every eigenpair of the bundle's pencil.
Eigen::VectorXd vsplit_gamma(const FormBundle& bundle, const EigenPacket& full,
                             const Cluster& cluster, const Eigen::VectorXd& u,
                             double lambda_prime);

/// lambda_j''(0) for A(t) = A0 + t A1, B = I and a simple eigenvalue j (1-based):
/// 2 sum_{i != j} <u_i, A1 u_j>^2 / (lambda_j - lambda_i).
double second_order_perturbation(const Eigen::MatrixXd& A0, const Eigen::MatrixXd& A1, int j);

}  // namespace hadamard_eig
