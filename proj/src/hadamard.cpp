#include "hadamard_eig/hadamard.hpp"

#include "hadamard_eig/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hadamard_eig {

namespace {

template <typename GapOk>
std::vector<ClusterRange> runs(std::span<const double> values, GapOk&& same) {
  std::vector<ClusterRange> out;
  const int n = static_cast<int>(values.size());
  int start = 0;
  for (int j = 1; j <= n; ++j) {
    if (j == n || !same(values[j - 1], values[j])) {
      out.push_back({start + 1, j - start});
      start = j;
    }
  }
  return out;
}

Eigen::MatrixXd symmetric(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

std::vector<ClusterRange> detect_clusters(std::span<const double> values, double rel_tol) {
  if (!(rel_tol > 0.0)) throw std::invalid_argument("detect_clusters: rel_tol must be positive");
  return runs(values, [rel_tol](double a, double b) {
    return std::abs(b - a) <= rel_tol * std::max(1.0, std::abs(a));
  });
}

std::vector<ClusterRange> detect_equal_runs(std::span<const double> values, double abs_tol) {
  if (!(abs_tol > 0.0)) throw std::invalid_argument("detect_equal_runs: tolerance must be positive");
  return runs(values, [abs_tol](double a, double b) { return std::abs(b - a) <= abs_tol; });
}

Cluster make_cluster(const EigenPacket& packet, const ClusterRange& range) {
  if (range.k < 1 || range.m < 1 || range.last() > packet.size())
    throw std::invalid_argument("make_cluster: range outside the eigen packet");
  Cluster c;
  c.k = range.k;
  c.m = range.m;
  c.lambda = packet.values.segment(range.k - 1, range.m).mean();
  c.shift = packet.shifted_correction;
  c.basis = packet.vectors.middleCols(range.k - 1, range.m);
  return c;
}

double FirstOrderResult::right(int j) const {
  const int q = j - cluster.k;
  if (q < 0 || q >= cluster.m) throw std::out_of_range("FirstOrderResult::right: index outside cluster");
  return nu[q];
}

double FirstOrderResult::left(int j) const {
  const int q = j - cluster.k;
  if (q < 0 || q >= cluster.m) throw std::out_of_range("FirstOrderResult::left: index outside cluster");
  return nu[cluster.m - 1 - q];
}

FirstOrderResult first_derivatives(const FormBundle& bundle, const Cluster& cluster) {
  const Eigen::MatrixXd& Y = cluster.basis;
  if (Y.rows() != bundle.dim() || Y.cols() != cluster.m)
    throw std::invalid_argument("first_derivatives: cluster basis has wrong shape");
  const Eigen::MatrixXd gram = Y.transpose() * (bundle.B * Y);
  const double dev = (gram - Eigen::MatrixXd::Identity(cluster.m, cluster.m)).cwiseAbs().maxCoeff();
  if (!(dev <= 1e-10))
    throw std::invalid_argument("first_derivatives: cluster basis is not B-orthonormal (deviation " +
                                std::to_string(dev) + ")");

  const double lam = cluster.pencil_lambda();
  const Eigen::MatrixXd EY = bundle.A_dot * Y - lam * (bundle.B_dot * Y);
  const Eigen::MatrixXd G = symmetric(Y.transpose() * EY);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);

  FirstOrderResult res;
  res.cluster = cluster;
  res.nu = es.eigenvalues();
  res.rotated_basis = Y * es.eigenvectors();
  return res;
}

GammaSolver::GammaSolver(const FormBundle& bundle, const Cluster& cluster)
    : bundle_(&bundle), lambda_(cluster.pencil_lambda()) {
  const int n = bundle.dim();
  const int m = cluster.m;
  if (cluster.basis.rows() != n || cluster.basis.cols() != m)
    throw std::invalid_argument("GammaSolver: cluster basis has wrong shape");
  BY_ = bundle.B * cluster.basis;
  C_ = bundle.A - lambda_ * bundle.B;

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(C_.nonZeros() + 2 * static_cast<size_t>(n) * m);
  for (int col = 0; col < C_.outerSize(); ++col)
    for (SpMat::InnerIterator it(C_, col); it; ++it)
      trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < n; ++i) {
      const double v = BY_(i, j);
      if (v == 0.0) continue;
      trip.emplace_back(i, n + j, v);
      trip.emplace_back(n + j, i, v);
    }
  }
  SpMat K(n + m, n + m);
  K.setFromTriplets(trip.begin(), trip.end());
  K.makeCompressed();

  lu_ = std::make_shared<Eigen::SparseLU<SpMat>>();
  lu_->analyzePattern(K);
  lu_->factorize(K);
  if (lu_->info() != Eigen::Success)
    throw FactorizationError("solve_gamma: bordered system is singular: " + lu_->lastErrorMessage());
}

GammaSolution GammaSolver::solve(const Eigen::VectorXd& u, double lambda_prime) const {
  const FormBundle& b = *bundle_;
  const int n = b.dim();
  const int m = static_cast<int>(BY_.cols());
  if (u.size() != n) throw std::invalid_argument("solve_gamma: vector length mismatch");

  const Eigen::VectorXd cdot = b.A_dot * u - lambda_ * (b.B_dot * u) - lambda_prime * (b.B * u);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + m);
  rhs.head(n) = -cdot;
  const Eigen::VectorXd sol = lu_->solve(rhs);
  if (lu_->info() != Eigen::Success || !sol.allFinite())
    throw FactorizationError("solve_gamma: bordered solve failed");

  GammaSolution g;
  g.w = sol.head(n);
  g.multiplier = sol.tail(m);
  const Eigen::VectorXd Cw = C_ * g.w;
  const Eigen::VectorXd BYmu = BY_ * g.multiplier;
  const double scale = cdot.norm() + Cw.norm() + BYmu.norm();
  g.residual = scale > 0.0 ? (Cw + cdot + BYmu).norm() / scale : 0.0;
  if (!(g.residual <= 1e-8))
    throw FactorizationError("solve_gamma: bordered solve residual " + std::to_string(g.residual) +
                             " exceeds 1e-8 (near-singular system)");
  return g;
}

GammaSolution solve_gamma(const FormBundle& bundle, const Cluster& cluster,
                          const Eigen::VectorXd& u, double lambda_prime) {
  return GammaSolver(bundle, cluster).solve(u, lambda_prime);
}

double f_form(const FormBundle& bundle, double pencil_lambda, double lambda_prime,
              const Eigen::VectorXd& u, const Eigen::VectorXd& v, const Eigen::VectorXd& gamma_u,
              const Eigen::VectorXd& gamma_v) {
  const Eigen::VectorXd Dv =
      bundle.A_ddot * v - pencil_lambda * (bundle.B_ddot * v) - 2.0 * lambda_prime * (bundle.B_dot * v);
  const Eigen::VectorXd Cg = bundle.A * gamma_v - pencil_lambda * (bundle.B * gamma_v);
  return u.dot(Dv) - 2.0 * gamma_u.dot(Cg);
}

std::vector<SecondOrderResult> second_derivatives(const FormBundle& bundle,
                                                  const FirstOrderResult& first,
                                                  double deriv_tol) {
  const Cluster& cl = first.cluster;
  const double lam = cl.pencil_lambda();
  const GammaSolver solver(bundle, cl);
  const auto nu = std::span<const double>(first.nu.data(), first.nu.size());

  std::vector<SecondOrderResult> out;
  for (const ClusterRange& run : detect_equal_runs(nu, deriv_tol)) {
    SecondOrderResult res;
    res.l = cl.k + run.k - 1;
    res.r = res.l + run.m;
    res.lambda_prime = first.nu.segment(run.k - 1, run.m).mean();
    res.basis = first.rotated_basis.middleCols(run.k - 1, run.m);
    res.gamma_vectors.resize(bundle.dim(), run.m);
    for (int q = 0; q < run.m; ++q) {
      const GammaSolution g = solver.solve(res.basis.col(q), res.lambda_prime);
      res.gamma_vectors.col(q) = g.w;
      res.gamma_residual = std::max(res.gamma_residual, g.residual);
    }

    const Eigen::MatrixXd& Phi = res.basis;
    const Eigen::MatrixXd& Gam = res.gamma_vectors;
    const Eigen::MatrixXd DPhi = bundle.A_ddot * Phi - lam * (bundle.B_ddot * Phi) -
                                 2.0 * res.lambda_prime * (bundle.B_dot * Phi);
    const Eigen::MatrixXd CGam = bundle.A * Gam - lam * (bundle.B * Gam);
    const Eigen::MatrixXd H = symmetric(Phi.transpose() * DPhi - 2.0 * Gam.transpose() * CGam);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    res.sigma = es.eigenvalues();
    out.push_back(std::move(res));
  }
  return out;
}

Eigen::VectorXd left_second_derivatives(const FirstOrderResult& first,
                                        const std::vector<SecondOrderResult>& runs_right) {
  const int k = first.cluster.k;
  const int m = first.cluster.m;
  Eigen::VectorXd left = Eigen::VectorXd::Constant(m, std::nan(""));
  for (const auto& run : runs_right) {
    const int b = run.r - 1 - k + 1;
    const int start = m - b + 1;
    for (int q = 0; q < run.size(); ++q) left[start - 1 + q] = run.sigma[q];
  }
  return left;
}

SensitivityReport full_report(const FormBundle& bundle, int k_max, const Tolerances& tol,
                              const GevpOptions& gevp_in) {
  const int n = bundle.dim();
  if (k_max < 1 || k_max > n)
    throw std::invalid_argument("full_report: k_max = " + std::to_string(k_max) + " outside [1, " +
                                std::to_string(n) + "]");
  GevpOptions gevp = gevp_in;
  gevp.tol = tol.residual;

  // Solve a few extra pairs so the cluster containing k_max is closed on the right.
  int k = std::min(n, k_max + 4);
  EigenPacket packet;
  std::vector<ClusterRange> ranges;
  int keep = 0;
  for (;;) {
    packet = solve_gevp(bundle, k, gevp);
    ranges = detect_clusters(std::span<const double>(packet.values.data(), packet.values.size()),
                             tol.cluster);
    const auto it = std::find_if(ranges.begin(), ranges.end(),
                                 [k_max](const ClusterRange& r) { return r.last() >= k_max; });
    keep = it->last();
    if (keep < k || k == n) break;
    k = std::min(n, k + 4);
  }
  while (!ranges.empty() && ranges.back().k > keep) ranges.pop_back();

  SensitivityReport rep;
  rep.t = bundle.t;
  rep.tolerances = tol;
  rep.eigenvalues = packet.values.head(keep);
  rep.right_first.resize(keep);
  rep.left_first.resize(keep);
  rep.right_second.resize(keep);
  rep.left_second.resize(keep);
  for (const ClusterRange& range : ranges) {
    ClusterReport cr;
    cr.first = first_derivatives(bundle, make_cluster(packet, range));
    cr.second = second_derivatives(bundle, cr.first, tol.derivative);
    const Eigen::VectorXd left2 = left_second_derivatives(cr.first, cr.second);
    for (int q = 0; q < range.m; ++q) {
      const int j = range.k + q;
      rep.right_first[j - 1] = cr.first.right(j);
      rep.left_first[j - 1] = cr.first.left(j);
      rep.left_second[j - 1] = left2[q];
    }
    for (const auto& run : cr.second)
      for (int q = 0; q < run.size(); ++q) rep.right_second[run.l - 1 + q] = run.sigma[q];
    rep.clusters.push_back(std::move(cr));
  }
  return rep;
}

SensitivityReport full_report(const Mesh& mesh, const DeformationFamily& family, double t,
                              int k_max, const Tolerances& tol) {
  if (!family.contains(t))
    throw std::invalid_argument("full_report: t = " + std::to_string(t) +
                                " outside the deformation family's admissible range");
  return full_report(assemble_forms(mesh, family, t), k_max, tol);
}

}  // namespace hadamard_eig
