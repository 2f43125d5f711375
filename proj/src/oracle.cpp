#include "hadamard_eig/oracle.hpp"

#include "hadamard_eig/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace hadamard_eig {

namespace {

Eigen::MatrixXd random_orthogonal(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd G(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) G(i, j) = gauss(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  Eigen::MatrixXd Q = qr.householderQ();
  const Eigen::MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j)
    if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
  return Q;
}

/// Symmetric Gaussian matrix scaled to the given spectral norm.
Eigen::MatrixXd random_symmetric(int n, double norm, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd S(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= j; ++i) S(i, j) = S(j, i) = gauss(rng);
  if (norm == 0.0) return Eigen::MatrixXd::Zero(n, n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  const double spec = es.eigenvalues().cwiseAbs().maxCoeff();
  return S * (norm / spec);
}

SpMat sparse(const Eigen::MatrixXd& m) { return m.sparseView(0.0, 0.0); }

struct RichardsonTable {
  double value;
  double error;
  bool monotone;
};

// Removes the O(h) and O(h^2) terms from D(h0), D(h0/2), D(h0/4).
RichardsonTable richardson(double d0, double d1, double d2) {
  const double r11 = 2.0 * d1 - d0;
  const double r21 = 2.0 * d2 - d1;
  const double r22 = (4.0 * r21 - r11) / 3.0;
  return {r22, std::abs(r22 - r21), std::abs(d2 - d1) <= std::abs(d1 - d0)};
}

double entry(const Eigen::VectorXd& v, int j) {
  if (j < 1 || j > v.size())
    throw std::out_of_range("finite difference: eigenvalue index " + std::to_string(j) +
                            " not available");
  return v[j - 1];
}

}  // namespace

FormBundle PencilFamily::bundle(double t) const {
  return bundle_from_matrices(sparse(A(t)), sparse(B(t)), sparse(A_dot(t)), sparse(B_dot(t)),
                              sparse(2.0 * A2), sparse(2.0 * B2), t);
}

Eigen::VectorXd PencilFamily::eigenvalues(double t, int k) const {
  GevpOptions opts;
  opts.tol = 1e-9;
  return solve_gevp_dense(A(t), B(t), k > 0 ? k : dim(), opts).values;
}

void validate_pencil(const PencilFamily& p, int samples) {
  const int n = p.dim();
  for (const Eigen::MatrixXd* m : {&p.A0, &p.A1, &p.A2, &p.B0, &p.B1, &p.B2}) {
    if (m->rows() != n || m->cols() != n)
      throw ValidationError("pencil: coefficient matrices must all be " + std::to_string(n) + "x" +
                            std::to_string(n));
    if (!m->isApprox(m->transpose(), 1e-14) && m->norm() > 0.0)
      throw ValidationError("pencil: coefficient matrix is not symmetric");
  }
  if (!(p.t_max > p.t_min)) throw ValidationError("pencil: empty validity interval");
  for (int s = 0; s < samples; ++s) {
    const double t = samples == 1 ? 0.0 : p.t_min + (p.t_max - p.t_min) * s / (samples - 1);
    if (Eigen::LLT<Eigen::MatrixXd>(p.A(t)).info() != Eigen::Success)
      throw ValidationError("pencil: A(t) not positive definite at t = " + std::to_string(t));
    if (Eigen::LLT<Eigen::MatrixXd>(p.B(t)).info() != Eigen::Success)
      throw ValidationError("pencil: B(t) not positive definite at t = " + std::to_string(t));
  }
}

PencilFamily random_pencil(int dim, std::uint64_t seed, const std::vector<PlantedEigenvalue>& plan,
                           double perturbation) {
  int planted = 0;
  for (const auto& pe : plan) {
    if (pe.multiplicity < 1) throw std::invalid_argument("random_pencil: multiplicity must be >= 1");
    if (!(pe.value > 0.0)) throw std::invalid_argument("random_pencil: planted values must be positive");
    if (!pe.slopes.empty() && static_cast<int>(pe.slopes.size()) != pe.multiplicity)
      throw std::invalid_argument("random_pencil: need one slope per planted copy");
    planted += pe.multiplicity;
  }
  if (dim < 1 || planted > dim)
    throw std::invalid_argument("random_pencil: dimension " + std::to_string(dim) +
                                " cannot hold " + std::to_string(planted) + " planted eigenvalues");
  if (perturbation < 0.0) throw std::invalid_argument("random_pencil: negative perturbation");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  // Diagonal seed: planted values first, fillers avoid them by at least 0.3.
  std::vector<double> diag;
  std::vector<std::pair<int, const PlantedEigenvalue*>> planted_slots;
  for (const auto& pe : plan)
    for (int c = 0; c < pe.multiplicity; ++c) {
      if (c == 0) planted_slots.emplace_back(static_cast<int>(diag.size()), &pe);
      diag.push_back(pe.value);
    }
  for (int i = 0; static_cast<int>(diag.size()) < dim; ++i) {
    const double v = 2.0 + 0.6 * i + 0.2 * (unif(rng) - 0.5);
    const bool clash = std::any_of(plan.begin(), plan.end(), [v](const PlantedEigenvalue& pe) {
      return std::abs(pe.value - v) < 0.3;
    });
    if (!clash) diag.push_back(v);
  }

  const Eigen::MatrixXd Q1 = random_orthogonal(dim, rng);
  const Eigen::MatrixXd Q2 = random_orthogonal(dim, rng);
  Eigen::VectorXd s(dim);
  for (int i = 0; i < dim; ++i) s[i] = 1.0 + unif(rng);
  const Eigen::MatrixXd M = Q1 * s.asDiagonal() * Q2.transpose();

  Eigen::MatrixXd A1t = random_symmetric(dim, perturbation, rng);
  const Eigen::MatrixXd A2t = random_symmetric(dim, 0.5 * perturbation, rng);
  const Eigen::MatrixXd B1t = random_symmetric(dim, 0.2 * perturbation, rng);
  const Eigen::MatrixXd B2t = random_symmetric(dim, 0.1 * perturbation, rng);

  // G = A1t_cc - lambda B1t_cc on a planted cluster; overwrite the block to plant its spectrum.
  for (const auto& [start, pe] : planted_slots) {
    if (pe->slopes.empty()) continue;
    const int m = pe->multiplicity;
    const Eigen::MatrixXd R = random_orthogonal(m, rng);
    const Eigen::VectorXd nu = Eigen::Map<const Eigen::VectorXd>(pe->slopes.data(), m);
    A1t.block(start, start, m, m) =
        pe->value * B1t.block(start, start, m, m) + R * nu.asDiagonal() * R.transpose();
  }

  PencilFamily p;
  p.seed = seed;
  p.plan = plan;
  const Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(diag.data(), dim);
  auto congruence = [&M](const Eigen::MatrixXd& X) -> Eigen::MatrixXd {
    Eigen::MatrixXd Y = M.transpose() * X * M;
    return 0.5 * (Y + Y.transpose());
  };
  p.A0 = congruence(d.asDiagonal().toDenseMatrix());
  p.B0 = congruence(Eigen::MatrixXd::Identity(dim, dim));
  p.A1 = congruence(A1t);
  p.A2 = congruence(A2t);
  p.B1 = congruence(B1t);
  p.B2 = congruence(B2t);
  validate_pencil(p);
  return p;
}

FdEstimate fd_first_derivative(const EigenCurve& curve, double t, int j, double h0, Side side) {
  if (!(h0 > 0.0)) throw std::invalid_argument("fd_first_derivative: h0 must be positive");
  const double s = side == Side::Right ? 1.0 : -1.0;
  const double base = entry(curve(t), j);
  double d[3];
  for (int level = 0; level < 3; ++level) {
    const double h = h0 / (1 << level);
    d[level] = (entry(curve(t + s * h), j) - base) / (s * h);
  }
  const auto r = richardson(d[0], d[1], d[2]);
  return {r.value, r.error, r.monotone};
}

FdEstimate fd_second_derivative(const EigenCurve& curve, double t, int j, double first_deriv,
                                double h0, Side side) {
  if (!(h0 > 0.0)) throw std::invalid_argument("fd_second_derivative: h0 must be positive");
  const double s = side == Side::Right ? 1.0 : -1.0;
  const double base = entry(curve(t), j);
  double d[3];
  for (int level = 0; level < 3; ++level) {
    const double h = h0 / (1 << level);
    d[level] = 2.0 / (h * h) * (entry(curve(t + s * h), j) - base - s * h * first_deriv);
  }
  const auto r = richardson(d[0], d[1], d[2]);
  return {r.value, r.error, r.monotone};
}

Eigen::VectorXd vsplit_gamma(const FormBundle& bundle, const EigenPacket& full,
                             const Cluster& cluster, const Eigen::VectorXd& u,
                             double lambda_prime) {
  const int n = bundle.dim();
  if (full.size() != n || full.vectors.rows() != n)
    throw std::invalid_argument("vsplit_gamma: needs the complete eigendecomposition (" +
                                std::to_string(n) + " pairs), got " + std::to_string(full.size()));
  if (cluster.k < 1 || cluster.k + cluster.m - 1 > n)
    throw std::invalid_argument("vsplit_gamma: cluster outside the decomposition");
  const double lam = cluster.pencil_lambda();
  const Eigen::VectorXd cdot =
      bundle.A_dot * u - lam * (bundle.B_dot * u) - lambda_prime * (bundle.B * u);

  // In the B-orthonormal eigenbasis C is diagonal with entries lambda_i - lambda: negative on
  // V0 (indices below the cluster), positive on V1 (indices above it).
  const int below = cluster.k - 1;
  const int above = cluster.k - 1 + cluster.m;
  Eigen::VectorXd w0 = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < below; ++i) {
    const double ci = full.pencil_value(i) - lam;
    w0 -= (full.vectors.col(i).dot(cdot) / ci) * full.vectors.col(i);
  }
  Eigen::VectorXd w1 = Eigen::VectorXd::Zero(n);
  for (int i = above; i < n; ++i) {
    const double ci = full.pencil_value(i) - lam;
    w1 -= (full.vectors.col(i).dot(cdot) / ci) * full.vectors.col(i);
  }
  return w0 + w1;
}

double second_order_perturbation(const Eigen::MatrixXd& A0, const Eigen::MatrixXd& A1, int j) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A0);
  const int n = static_cast<int>(A0.rows());
  if (j < 1 || j > n) throw std::out_of_range("second_order_perturbation: index out of range");
  const Eigen::VectorXd& lam = es.eigenvalues();
  const Eigen::MatrixXd& U = es.eigenvectors();
  const Eigen::VectorXd Auj = A1 * U.col(j - 1);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    if (i == j - 1) continue;
    const double gap = lam[j - 1] - lam[i];
    if (std::abs(gap) < 1e-12 * std::max(1.0, std::abs(lam[j - 1])))
      throw std::invalid_argument("second_order_perturbation: eigenvalue is not simple");
    const double c = U.col(i).dot(Auj);
    sum += c * c / gap;
  }
  return 2.0 * sum;
}

}  // namespace hadamard_eig
