#include "hadamard_eig/deform.hpp"

#include "hadamard_eig/errors.hpp"

#include <Eigen/LU>

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace hadamard_eig {

namespace {

std::string singular_message(const Vec2& x, double t, double det) {
  std::ostringstream out;
  out.precision(17);
  out << "singular deformation at x = (" << x.x() << ", " << x.y() << "), t = " << t
      << ": det DT_t = " << det;
  return out.str();
}

// Smallest |t| with det(I + t D) = 1 + t tr D + t^2 det D = 0.
double first_singular_time(const Mat2& D) {
  const double a = D.determinant();
  const double b = D.trace();
  constexpr double inf = std::numeric_limits<double>::infinity();
  double best = inf;
  if (std::abs(a) < 1e-300) {
    if (b != 0.0) best = std::abs(1.0 / b);
    return best;
  }
  const double disc = b * b - 4.0 * a;
  if (disc < 0.0) return inf;
  const double s = std::sqrt(disc);
  // Stable roots of a t^2 + b t + 1.
  const double q = -0.5 * (b + (b >= 0.0 ? s : -s));
  if (q != 0.0) {
    best = std::min(best, std::abs(1.0 / q));
    best = std::min(best, std::abs(q / a));
  }
  return best;
}

Mat2 symmetric_part(const Mat2& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

SingularDeformation::SingularDeformation(const Eigen::Vector2d& x, double t, double det)
    : std::runtime_error(singular_message(x, t, det)), point_(x), t_(t) {}

LinearField::LinearField(const Mat2& matrix, const Vec2& offset)
    : matrix_(matrix), offset_(offset) {}

double LinearField::singular_radius(const Mesh&) const { return first_singular_time(matrix_); }

NodalField::NodalField(std::shared_ptr<const Mesh> mesh, std::vector<Vec2> values)
    : mesh_(std::move(mesh)), values_(std::move(values)) {
  if (!mesh_) throw std::invalid_argument("NodalField: null mesh");
  if (static_cast<int>(values_.size()) != mesh_->num_vertices())
    throw std::invalid_argument("NodalField: expected one value per mesh vertex (" +
                                std::to_string(mesh_->num_vertices()) + "), got " +
                                std::to_string(values_.size()));
}

Mat2 NodalField::triangle_jacobian(int tri) const {
  const auto& t = mesh_->triangles().at(tri);
  const auto& v = mesh_->vertices();
  Mat2 J;
  J.col(0) = v[t[1]] - v[t[0]];
  J.col(1) = v[t[2]] - v[t[0]];
  Mat2 dW;
  dW.col(0) = values_[t[1]] - values_[t[0]];
  dW.col(1) = values_[t[2]] - values_[t[0]];
  return dW * J.inverse();
}

Vec2 NodalField::value(const RefPoint& p) const {
  if (p.triangle < 0) throw std::invalid_argument("NodalField: evaluation needs a triangle index");
  const auto& t = mesh_->triangles().at(p.triangle);
  return values_[t[0]] + triangle_jacobian(p.triangle) * (p.x - mesh_->vertices()[t[0]]);
}

Mat2 NodalField::jacobian(const RefPoint& p) const {
  if (p.triangle < 0) throw std::invalid_argument("NodalField: evaluation needs a triangle index");
  return triangle_jacobian(p.triangle);
}

double NodalField::singular_radius(const Mesh&) const {
  double best = std::numeric_limits<double>::infinity();
  for (int t = 0; t < mesh_->num_triangles(); ++t)
    best = std::min(best, first_singular_time(triangle_jacobian(t)));
  return best;
}

std::shared_ptr<const VelocityField> analytic_field(const std::string& name, double scale) {
  Mat2 m = Mat2::Zero();
  if (name == "dilation") {
    m = scale * Mat2::Identity();
  } else if (name == "stretch_x") {
    m(0, 0) = scale;
  } else if (name == "shear") {
    m(0, 1) = scale;
  } else {
    throw std::invalid_argument("unknown analytic field '" + name + "'");
  }
  return std::make_shared<LinearField>(m);
}

DeformationFamily::DeformationFamily(MapFn map, JacFn jac, double eps0)
    : map_(std::move(map)), jac_(std::move(jac)), eps0_(eps0) {
  if (!map_ || !jac_) throw std::invalid_argument("DeformationFamily: empty callback");
  if (!(eps0_ > 0.0)) throw std::invalid_argument("DeformationFamily: eps0 must be positive");
}

DeformationFamily affine_family(std::shared_ptr<const VelocityField> field, double eps0) {
  if (!field) throw std::invalid_argument("affine_family: null field");
  auto map = [field](const RefPoint& p, double t) -> Vec2 { return p.x + t * field->value(p); };
  auto jac = [field](const RefPoint& p, double t) -> JacobianTriple {
    const Mat2 dW = field->jacobian(p);
    return {Mat2::Identity() + t * dW, dW, Mat2::Zero()};
  };
  return DeformationFamily(std::move(map), std::move(jac), eps0);
}

DeformationFamily affine_family(std::shared_ptr<const VelocityField> field, const Mesh& mesh) {
  if (!field) throw std::invalid_argument("affine_family: null field");
  const double radius = field->singular_radius(mesh);
  return affine_family(field, radius);
}

DeformationFamily identity_family() {
  return DeformationFamily([](const RefPoint& p, double) { return p.x; },
                           [](const RefPoint&, double) {
                             return JacobianTriple{Mat2::Identity(), Mat2::Zero(), Mat2::Zero()};
                           },
                           std::numeric_limits<double>::infinity());
}

PullbackCoeffs pullback_coeffs(const JacobianTriple& jac) {
  PullbackCoeffs c;
  const double det = jac.F.determinant();
  const Mat2 Finv = jac.F.inverse();
  const Mat2 M = Finv * jac.F_dot;
  const Mat2 N = Finv * jac.F_ddot;

  c.a = det;
  const double trM = M.trace();
  c.a_dot = det * trM;
  c.a_ddot = det * (trM * trM - (M * M).trace() + N.trace());

  c.Q = symmetric_part(Finv * Finv.transpose());
  // d/dt F^{-1} = -M F^{-1}, so Q_dot = Y + Y^T with Y = -M Q.
  const Mat2 Y = -M * c.Q;
  c.Q_dot = Y + Y.transpose();
  // d/dt M = N - M^2; Q_ddot = X + X^T with X = -(N - M^2) Q - M Q_dot.
  const Mat2 X = -(N - M * M) * c.Q - M * c.Q_dot;
  c.Q_ddot = X + X.transpose();
  return c;
}

PullbackCoeffs pullback_coeffs(const DeformationFamily& family, const RefPoint& p, double t) {
  const JacobianTriple jac = family.jacobian(p, t);
  const double det = jac.F.determinant();
  if (!(det > 0.0)) throw SingularDeformation(p.x, t, det);
  return pullback_coeffs(jac);
}

}  // namespace hadamard_eig
