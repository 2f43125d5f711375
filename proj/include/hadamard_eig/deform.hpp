#pragma once

#include "hadamard_eig/mesh.hpp"

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <string>

namespace hadamard_eig {

using Mat2 = Eigen::Matrix2d;

/// Reference point together with the triangle it is evaluated in. Piecewise-linear
/// fields have a jump in DW across edges, so Jacobian queries carry the element.
struct RefPoint {
  Vec2 x;
  int triangle = -1;
};

/// DT_t and its first two t-derivatives at one reference point.
struct JacobianTriple {
  Mat2 F;
  Mat2 F_dot;
  Mat2 F_ddot;
};

/// Pullback coefficients a_t = det DT_t, Q_t = DT_t^{-1} DT_t^{-T} and their t-derivatives.
struct PullbackCoeffs {
  double a = 1.0;
  double a_dot = 0.0;
  double a_ddot = 0.0;
  Mat2 Q = Mat2::Identity();
  Mat2 Q_dot = Mat2::Zero();
  Mat2 Q_ddot = Mat2::Zero();
};

/// Velocity field W with its spatial Jacobian.
class VelocityField {
 public:
  virtual ~VelocityField() = default;
  virtual Vec2 value(const RefPoint& p) const = 0;
  virtual Mat2 jacobian(const RefPoint& p) const = 0;
  /// Smallest |t| at which det(I + t DW) vanishes over the given mesh (infinity if never).
  virtual double singular_radius(const Mesh& mesh) const = 0;
};

/// W(x) = x + c for a constant 2x2 matrix and offset; covers the built-in analytic fields.
class LinearField final : public VelocityField {
 public:
  LinearField(const Mat2& matrix, const Vec2& offset = Vec2::Zero());
  Vec2 value(const RefPoint& p) const override { return matrix_ * p.x + offset_; }
  Mat2 jacobian(const RefPoint&) const override { return matrix_; }
  double singular_radius(const Mesh& mesh) const override;
  const Mat2& matrix() const { return matrix_; }

 private:
  Mat2 matrix_;
  Vec2 offset_;
};

/// Piecewise-linear field interpolating one 2-vector per mesh vertex.
class NodalField final : public VelocityField {
 public:
  NodalField(std::shared_ptr<const Mesh> mesh, std::vector<Vec2> values);
  Vec2 value(const RefPoint& p) const override;
  Mat2 jacobian(const RefPoint& p) const override;
  double singular_radius(const Mesh& mesh) const override;

 private:
  Mat2 triangle_jacobian(int tri) const;

  std::shared_ptr<const Mesh> mesh_;
  std::vector<Vec2> values_;
};

/// Built-in analytic fields: "dilation" W = s x, "stretch_x" W = (s x, 0), "shear" W = (s y, 0).
std::shared_ptr<const VelocityField> analytic_field(const std::string& name, double scale = 1.0);

/// Family of orientation-preserving deformations T_t, t in (-eps0, eps0), with T_0 = I.
class DeformationFamily {
 public:
  using MapFn = std::function<Vec2(const RefPoint&, double)>;
  using JacFn = std::function<JacobianTriple(const RefPoint&, double)>;

  DeformationFamily(MapFn map, JacFn jac, double eps0);

  Vec2 map(const RefPoint& p, double t) const { return map_(p, t); }
  JacobianTriple jacobian(const RefPoint& p, double t) const { return jac_(p, t); }
  double eps0() const { return eps0_; }
  bool contains(double t) const { return t > -eps0_ && t < eps0_; }

 private:
  MapFn map_;
  JacFn jac_;
  double eps0_;
};

/// T_t x = x + t W(x): F = I + t DW, F_dot = DW, F_ddot = 0.
/// eps0 defaults to the singular radius of W on the mesh (infinite for W = 0).
DeformationFamily affine_family(std::shared_ptr<const VelocityField> field, double eps0);
DeformationFamily affine_family(std::shared_ptr<const VelocityField> field, const Mesh& mesh);

/// T_t = I for every t.
DeformationFamily identity_family();

PullbackCoeffs pullback_coeffs(const JacobianTriple& jac);
/// Throws SingularDeformation when det DT_t <= 0 at the point.
PullbackCoeffs pullback_coeffs(const DeformationFamily& family, const RefPoint& p, double t);

}  // namespace hadamard_eig
