#pragma once

#include <Eigen/Core>

#include <functional>
#include <iosfwd>
#include <vector>

namespace hadamard_eig {

/// Eigenvalue curves sampled on a t-grid. Row i holds the data at ts[i], column j branch j+1.
/// For sorted input each row of `values` is ascending.
struct CurveGrid {
  std::vector<double> ts;
  Eigen::MatrixXd values;
  Eigen::MatrixXd right_derivs;
  Eigen::MatrixXd left_derivs;
  /// Optional; empty (0x0) when second-derivative data is unavailable.
  Eigen::MatrixXd right_second;
  Eigen::MatrixXd left_second;

  int nodes() const { return static_cast<int>(ts.size()); }
  int branches() const { return static_cast<int>(values.cols()); }
  bool has_second() const { return right_second.size() > 0; }
};

/// Throws std::invalid_argument when sizes disagree or ts is not strictly increasing.
void check_grid(const CurveGrid& grid);

struct SwapEvent {
  int node = 0;
  /// Cluster entry (1-based), size and p-value.
  int k = 1;
  int n = 2;
  int p = 1;
  bool operator==(const SwapEvent&) const = default;
};

/// Relabeling produced by the transversal rearrangement.
struct RearrangementPlan {
  std::vector<SwapEvent> events;
  /// interval_perms[i][L] = 0-based sorted index carried by label L on (ts[i], ts[i+1]).
  std::vector<std::vector<int>> interval_perms;
  int branches = 0;

  /// Labeling in force just left / right of node i.
  const std::vector<int>& left_perm(int node) const;
  const std::vector<int>& right_perm(int node) const;
};

/// Number of strictly split derivative pairs (j, 2k+n-1-j), j = k..k+floor(n/2)-1, in the cluster
/// of entry k (1-based) and size n: the largest such j with d_j < d_{2k+n-1-j} - deriv_tol,
/// minus k-1; 0 if none.
int cluster_p_value(const Eigen::VectorXd& right_derivs, int k, int n, double deriv_tol = 1e-6);

/// Detects swap events at interior nodes (clusters of size >= 2 with p >= 1) and builds the
/// per-interval labeling. Throws GridTooCoarse when events at adjacent nodes share an index.
RearrangementPlan transversal_rearrange(const CurveGrid& grid, double cluster_tol = 1e-8,
                                        double deriv_tol = 1e-6);

/// Materializes the relabeled branches. At event nodes a label takes its right derivative from
/// the right labeling and its left derivative from the left labeling.
CurveGrid apply_plan(const CurveGrid& grid, const RearrangementPlan& plan);

/// Sorted eigenvalue data at one time, as returned by an evaluator.
struct NodeSample {
  Eigen::VectorXd values;
  Eigen::VectorXd right_derivs;
  Eigen::VectorXd left_derivs;
  Eigen::VectorXd right_second;
  Eigen::VectorXd left_second;
};

using NodeEvaluator = std::function<NodeSample(double)>;

/// Builds a sorted CurveGrid by evaluating every node, on up to `threads` workers.
/// The evaluator must be safe to call concurrently when threads > 1.
CurveGrid sample_grid(const std::vector<double>& ts, const NodeEvaluator& eval, int branches,
                      int threads = 1);

/// Localizes crossings that fall strictly between grid nodes by bisecting on the sign of the
/// gap derivative, and inserts a node wherever the bisection lands on an exact (within
/// cluster_tol) eigenvalue cluster. Avoided crossings leave the grid unchanged.
CurveGrid refine_crossings(const CurveGrid& grid, const NodeEvaluator& eval,
                           double cluster_tol = 1e-8, double deriv_tol = 1e-6,
                           double t_tol = 1e-13);

/// CSV with columns t, branch_j, dbranch_j (right derivative), dbranch_left_j.
void write_curves_csv(std::ostream& out, const CurveGrid& grid);

}  // namespace hadamard_eig
