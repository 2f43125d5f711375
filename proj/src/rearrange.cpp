#include "hadamard_eig/rearrange.hpp"

#include "hadamard_eig/errors.hpp"
#include "hadamard_eig/hadamard.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>

namespace hadamard_eig {

namespace {

std::vector<int> identity_perm(int m) {
  std::vector<int> p(m);
  std::iota(p.begin(), p.end(), 0);
  return p;
}

void check_block(const Eigen::MatrixXd& m, int rows, int cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols)
    throw std::invalid_argument(std::string("CurveGrid: ") + name + " has shape " +
                                std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                                ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
}

bool same_value(double a, double b, double rel_tol) {
  return std::abs(b - a) <= rel_tol * std::max(1.0, std::abs(a));
}

}  // namespace

void check_grid(const CurveGrid& grid) {
  const int N = grid.nodes();
  const int m = grid.branches();
  if (N < 1) throw std::invalid_argument("CurveGrid: empty grid");
  check_block(grid.values, N, m, "values");
  check_block(grid.right_derivs, N, m, "right_derivs");
  check_block(grid.left_derivs, N, m, "left_derivs");
  if (grid.has_second()) {
    check_block(grid.right_second, N, m, "right_second");
    check_block(grid.left_second, N, m, "left_second");
  }
  for (int i = 1; i < N; ++i)
    if (!(grid.ts[i] > grid.ts[i - 1]))
      throw std::invalid_argument("CurveGrid: times must be strictly increasing (node " +
                                  std::to_string(i) + ")");
}

const std::vector<int>& RearrangementPlan::left_perm(int node) const {
  if (interval_perms.empty()) throw std::logic_error("RearrangementPlan: empty plan");
  const int i = std::clamp(node - 1, 0, static_cast<int>(interval_perms.size()) - 1);
  return interval_perms[i];
}

const std::vector<int>& RearrangementPlan::right_perm(int node) const {
  if (interval_perms.empty()) throw std::logic_error("RearrangementPlan: empty plan");
  const int i = std::clamp(node, 0, static_cast<int>(interval_perms.size()) - 1);
  return interval_perms[i];
}

int cluster_p_value(const Eigen::VectorXd& right_derivs, int k, int n, double deriv_tol) {
  if (k < 1 || n < 1 || k + n - 1 > right_derivs.size())
    throw std::invalid_argument("cluster_p_value: cluster outside derivative list");
  int best = 0;
  for (int j = k; j <= k + n / 2 - 1; ++j) {
    const int partner = 2 * k + n - 1 - j;
    if (right_derivs[j - 1] < right_derivs[partner - 1] - deriv_tol) best = j - k + 1;
  }
  return best;
}

RearrangementPlan transversal_rearrange(const CurveGrid& grid, double cluster_tol,
                                        double deriv_tol) {
  check_grid(grid);
  const int N = grid.nodes();
  const int m = grid.branches();
  for (int i = 0; i < N; ++i)
    for (int j = 1; j < m; ++j)
      if (grid.values(i, j) < grid.values(i, j - 1))
        throw std::invalid_argument("transversal_rearrange: values at node " + std::to_string(i) +
                                    " are not ascending");

  RearrangementPlan plan;
  plan.branches = m;
  plan.interval_perms.assign(std::max(1, N - 1), identity_perm(m));

  std::vector<int> current = identity_perm(m);
  std::vector<SwapEvent> previous_events;
  for (int i = 1; i + 1 < N; ++i) {
    const Eigen::VectorXd row = grid.values.row(i).transpose();
    const Eigen::VectorXd right = grid.right_derivs.row(i).transpose();
    std::vector<SwapEvent> here;
    for (const ClusterRange& c :
         detect_clusters(std::span<const double>(row.data(), row.size()), cluster_tol)) {
      if (c.m < 2) continue;
      const int p = cluster_p_value(right, c.k, c.m, deriv_tol);
      if (p >= 1) here.push_back({i, c.k, c.m, p});
    }
    for (const SwapEvent& e : here) {
      for (const SwapEvent& prev : previous_events) {
        const bool overlap = e.k <= prev.k + prev.n - 1 && prev.k <= e.k + e.n - 1;
        if (overlap)
          throw GridTooCoarse(prev.node, e.node,
                              "transversal_rearrange: swap events at adjacent nodes " +
                                  std::to_string(prev.node) + " and " + std::to_string(e.node) +
                                  " share branch indices; refine the grid");
      }
    }
    // Sorted index s on the left continues as sigma(s) on the right.
    std::vector<int> sigma = identity_perm(m);
    for (const SwapEvent& e : here) {
      for (int q = 0; q < e.p; ++q) {
        // j = k+q pairs with 2k+n-1-j (both 1-based).
        const int lo = e.k - 1 + q;
        const int hi = 2 * e.k + e.n - 3 - lo;
        std::swap(sigma[lo], sigma[hi]);
      }
      plan.events.push_back(e);
    }
    for (int L = 0; L < m; ++L) current[L] = sigma[current[L]];
    plan.interval_perms[i] = current;
    previous_events = std::move(here);
  }
  return plan;
}

CurveGrid apply_plan(const CurveGrid& grid, const RearrangementPlan& plan) {
  check_grid(grid);
  const int N = grid.nodes();
  const int m = grid.branches();
  if (plan.branches != m || static_cast<int>(plan.interval_perms.size()) != std::max(1, N - 1))
    throw std::invalid_argument("apply_plan: plan does not match the grid (" +
                                std::to_string(plan.branches) + " branches, " +
                                std::to_string(plan.interval_perms.size()) + " intervals)");
  for (const auto& perm : plan.interval_perms)
    if (static_cast<int>(perm.size()) != m)
      throw std::invalid_argument("apply_plan: permutation size mismatch");

  CurveGrid out = grid;
  for (int i = 0; i < N; ++i) {
    const auto& lp = plan.left_perm(i);
    const auto& rp = plan.right_perm(i);
    for (int L = 0; L < m; ++L) {
      out.values(i, L) = grid.values(i, rp[L]);
      out.right_derivs(i, L) = grid.right_derivs(i, rp[L]);
      out.left_derivs(i, L) = grid.left_derivs(i, lp[L]);
      if (grid.has_second()) {
        out.right_second(i, L) = grid.right_second(i, rp[L]);
        out.left_second(i, L) = grid.left_second(i, lp[L]);
      }
    }
  }
  return out;
}

CurveGrid sample_grid(const std::vector<double>& ts, const NodeEvaluator& eval, int branches,
                      int threads) {
  CurveGrid grid;
  grid.ts = ts;
  const int N = static_cast<int>(ts.size());
  grid.values.resize(N, branches);
  grid.right_derivs.resize(N, branches);
  grid.left_derivs.resize(N, branches);
  bool second = true;
  std::vector<NodeSample> samples(N);
  const int workers = std::clamp(threads, 1, std::max(1, N));
  if (workers == 1) {
    for (int i = 0; i < N; ++i) samples[i] = eval(ts[i]);
  } else {
    // Static round-robin split; each node is written by exactly one worker.
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (int i = w; i < N; i += workers) samples[i] = eval(ts[i]);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  for (int i = 0; i < N; ++i) {
    const NodeSample& s = samples[i];
    if (s.values.size() < branches || s.right_derivs.size() < branches ||
        s.left_derivs.size() < branches)
      throw std::invalid_argument("sample_grid: evaluator returned too few branches at t = " +
                                  std::to_string(ts[i]));
    if (s.right_second.size() < branches || s.left_second.size() < branches) second = false;
  }
  if (second) {
    grid.right_second.resize(N, branches);
    grid.left_second.resize(N, branches);
  }
  for (int i = 0; i < N; ++i) {
    const NodeSample& s = samples[i];
    grid.values.row(i) = s.values.head(branches).transpose();
    grid.right_derivs.row(i) = s.right_derivs.head(branches).transpose();
    grid.left_derivs.row(i) = s.left_derivs.head(branches).transpose();
    if (second) {
      grid.right_second.row(i) = s.right_second.head(branches).transpose();
      grid.left_second.row(i) = s.left_second.head(branches).transpose();
    }
  }
  check_grid(grid);
  return grid;
}

CurveGrid refine_crossings(const CurveGrid& grid, const NodeEvaluator& eval, double cluster_tol,
                           double deriv_tol, double t_tol) {
  check_grid(grid);
  const int N = grid.nodes();
  const int m = grid.branches();
  std::vector<double> extra;

  for (int i = 0; i + 1 < N; ++i) {
    for (int j = 0; j + 1 < m; ++j) {
      if (same_value(grid.values(i, j), grid.values(i, j + 1), cluster_tol) ||
          same_value(grid.values(i + 1, j), grid.values(i + 1, j + 1), cluster_tol))
        continue;
      const bool closing = grid.right_derivs(i, j + 1) - grid.right_derivs(i, j) < -deriv_tol;
      const bool opening = grid.left_derivs(i + 1, j + 1) - grid.left_derivs(i + 1, j) > deriv_tol;
      if (!closing || !opening) continue;

      double lo = grid.ts[i], hi = grid.ts[i + 1];
      while (hi - lo > t_tol * std::max(1.0, std::abs(lo))) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const NodeSample s = eval(mid);
        if (s.values.size() < m) throw std::invalid_argument("refine_crossings: short sample");
        if (same_value(s.values[j], s.values[j + 1], cluster_tol)) {
          extra.push_back(mid);
          break;
        }
        if (s.right_derivs[j + 1] - s.right_derivs[j] < 0.0)
          lo = mid;
        else
          hi = mid;
      }
    }
  }
  if (extra.empty()) return grid;

  std::vector<double> ts = grid.ts;
  ts.insert(ts.end(), extra.begin(), extra.end());
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());

  // Re-evaluate only the inserted nodes; existing rows are copied.
  CurveGrid out;
  out.ts = ts;
  const int M = static_cast<int>(ts.size());
  out.values.resize(M, m);
  out.right_derivs.resize(M, m);
  out.left_derivs.resize(M, m);
  if (grid.has_second()) {
    out.right_second.resize(M, m);
    out.left_second.resize(M, m);
  }
  int src = 0;
  for (int r = 0; r < M; ++r) {
    if (src < N && grid.ts[src] == ts[r]) {
      out.values.row(r) = grid.values.row(src);
      out.right_derivs.row(r) = grid.right_derivs.row(src);
      out.left_derivs.row(r) = grid.left_derivs.row(src);
      if (grid.has_second()) {
        out.right_second.row(r) = grid.right_second.row(src);
        out.left_second.row(r) = grid.left_second.row(src);
      }
      ++src;
      continue;
    }
    const NodeSample s = eval(ts[r]);
    out.values.row(r) = s.values.head(m).transpose();
    out.right_derivs.row(r) = s.right_derivs.head(m).transpose();
    out.left_derivs.row(r) = s.left_derivs.head(m).transpose();
    if (grid.has_second()) {
      if (s.right_second.size() < m || s.left_second.size() < m)
        throw std::invalid_argument("refine_crossings: evaluator lacks second derivatives");
      out.right_second.row(r) = s.right_second.head(m).transpose();
      out.left_second.row(r) = s.left_second.head(m).transpose();
    }
  }
  return out;
}

void write_curves_csv(std::ostream& out, const CurveGrid& grid) {
  check_grid(grid);
  const int m = grid.branches();
  out << "t";
  for (int j = 1; j <= m; ++j) out << ",branch_" << j;
  for (int j = 1; j <= m; ++j) out << ",dbranch_" << j;
  for (int j = 1; j <= m; ++j) out << ",dbranch_left_" << j;
  out << '\n';
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
  };
  for (int i = 0; i < grid.nodes(); ++i) {
    put(grid.ts[i]);
    for (int j = 0; j < m; ++j) out << ',', put(grid.values(i, j));
    for (int j = 0; j < m; ++j) out << ',', put(grid.right_derivs(i, j));
    for (int j = 0; j < m; ++j) out << ',', put(grid.left_derivs(i, j));
    out << '\n';
  }
}

}  // namespace hadamard_eig
