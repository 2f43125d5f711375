#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace hadamard_eig {

/// Raised when file content does not follow the expected text format.
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// A structurally well-formed object violates a domain invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// det DT_t <= 0 somewhere the deformation is evaluated.
class SingularDeformation : public std::runtime_error {
 public:
  SingularDeformation(const Eigen::Vector2d& x, double t, double det);
  const Eigen::Vector2d& point() const { return point_; }
  double time() const { return t_; }

 private:
  Eigen::Vector2d point_;
  double t_;
};

/// Factorization or linear solve failed (non-SPD, singular pivot).
class FactorizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Iterative solver ran out of iterations before reaching the requested residual.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// A vector set passed to B-orthonormalization is (numerically) rank deficient.
class RankDeficient : public std::runtime_error {
 public:
  RankDeficient(int index, const std::string& what)
      : std::runtime_error(what), index_(index) {}
  int index() const { return index_; }

 private:
  int index_;
};

/// Swap events were found at adjacent grid nodes inside the same cluster.
class GridTooCoarse : public std::runtime_error {
 public:
  GridTooCoarse(int node_a, int node_b, const std::string& what)
      : std::runtime_error(what), node_a_(node_a), node_b_(node_b) {}
  int first_node() const { return node_a_; }
  int second_node() const { return node_b_; }

 private:
  int node_a_;
  int node_b_;
};

}  // namespace hadamard_eig
