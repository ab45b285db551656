#include "jte/kinematics.hpp"

#include <cmath>

namespace jte {

int RobotModel::dof() const {
  return kind == Kind::planar_world_angles ? static_cast<int>(link_lengths.size())
                                           : static_cast<int>(joints.size());
}

void RobotModel::validate() const {
  if (dof() < 1) throw std::invalid_argument("robot needs at least one joint");
  if (kind == Kind::planar_world_angles) {
    for (double l : link_lengths)
      if (!(l > 0.0)) throw std::invalid_argument("link lengths must be positive");
  } else {
    for (const Joint& j : joints) {
      Eigen::Matrix3d err = j.rotation * j.rotation.transpose() - Eigen::Matrix3d::Identity();
      if (err.cwiseAbs().maxCoeff() > 1e-9)
        throw std::invalid_argument("joint rotation block is not orthonormal");
      if (std::fabs(j.axis.norm() - 1.0) > 1e-9)
        throw std::invalid_argument("joint axis must be unit length");
    }
  }
}

Eigen::Vector3d fk_position(const RobotModel& robot, const Eigen::VectorXd& x) {
  if (x.size() != robot.dof()) throw std::invalid_argument("fk_position: dimension mismatch");
  if (robot.kind == RobotModel::Kind::planar_world_angles) {
    double px = 0.0, py = 0.0;
    for (int i = 0; i < robot.dof(); ++i) {
      px += robot.link_lengths[static_cast<size_t>(i)] * std::cos(x[i]);
      py += robot.link_lengths[static_cast<size_t>(i)] * std::sin(x[i]);
    }
    return {px, py, 0.0};
  }
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
  for (int i = 0; i < robot.dof(); ++i) {
    const Joint& j = robot.joints[static_cast<size_t>(i)];
    t += R * j.translation;
    R = R * j.rotation * Eigen::AngleAxisd(x[i], j.axis).toRotationMatrix();
  }
  return t + R * robot.tool;
}

double eval_constraint(const HalfPlaneConstraint& c, const RobotModel& robot,
                       const Eigen::VectorXd& x) {
  double na = c.normal.norm();
  if (!(na > 0.0)) throw std::invalid_argument("constraint normal must be nonzero");
  return (c.offset - c.normal.dot(fk_position(robot, x))) / na;
}

namespace {

using PolyMat3 = std::array<std::array<Polynomial, 3>, 3>;
using PolyVec3 = std::array<Polynomial, 3>;

PolyVec3 mat_apply(const PolyMat3& R, const PolyVec3& v) {
  PolyVec3 out;
  for (int r = 0; r < 3; ++r)
    for (int k = 0; k < 3; ++k) out[r] += R[r][k] * v[k];
  return out;
}

PolyMat3 mat_mul(const PolyMat3& A, const PolyMat3& B) {
  PolyMat3 out;
  for (int r = 0; r < 3; ++r)
    for (int cc = 0; cc < 3; ++cc)
      for (int k = 0; k < 3; ++k) out[r][cc] += A[r][k] * B[k][cc];
  return out;
}

PolyMat3 constant_matrix(const Eigen::Matrix3d& M) {
  PolyMat3 out;
  for (int r = 0; r < 3; ++r)
    for (int cc = 0; cc < 3; ++cc) out[r][cc] = Polynomial(M(r, cc));
  return out;
}

// Rodrigues form R = cos(x) I + sin(x) [k]x + (1 - cos(x)) k k^T, entry-wise
// affine in the atoms (c, s) of the joint angle.
PolyMat3 rotation_about_axis(const Eigen::Vector3d& k, VarId c_atom, VarId s_atom) {
  Polynomial c = Polynomial::variable(c_atom);
  Polynomial s = Polynomial::variable(s_atom);
  Eigen::Matrix3d K;
  K << 0, -k.z(), k.y(), k.z(), 0, -k.x(), -k.y(), k.x(), 0;
  PolyMat3 out;
  for (int r = 0; r < 3; ++r)
    for (int cc = 0; cc < 3; ++cc) {
      double id = (r == cc) ? 1.0 : 0.0;
      double kk = k(r) * k(cc);
      // id*c + K*s + kk*(1-c)
      out[r][cc] = Polynomial(kk) + (id - kk) * c + K(r, cc) * s;
    }
  return out;
}

}  // namespace

AtomFK symbolic_fk(const RobotModel& robot) {
  robot.validate();
  int n = robot.dof();
  AtomFK fk;
  for (int i = 1; i <= n; ++i) {
    fk.c.push_back(fk.atom_vars.add("c" + std::to_string(i), VarKind::deviation));
    fk.s.push_back(fk.atom_vars.add("s" + std::to_string(i), VarKind::deviation));
  }
  if (robot.kind == RobotModel::Kind::planar_world_angles) {
    for (int i = 0; i < n; ++i) {
      double L = robot.link_lengths[static_cast<size_t>(i)];
      fk.position[0] += L * Polynomial::variable(fk.c[static_cast<size_t>(i)]);
      fk.position[1] += L * Polynomial::variable(fk.s[static_cast<size_t>(i)]);
    }
    return fk;
  }
  PolyMat3 R = constant_matrix(Eigen::Matrix3d::Identity());
  PolyVec3 t;
  for (int i = 0; i < n; ++i) {
    const Joint& j = robot.joints[static_cast<size_t>(i)];
    PolyVec3 trans = {Polynomial(j.translation.x()), Polynomial(j.translation.y()),
                      Polynomial(j.translation.z())};
    PolyVec3 shifted = mat_apply(R, trans);
    for (int r = 0; r < 3; ++r) t[r] += shifted[r];
    R = mat_mul(R, constant_matrix(j.rotation));
    R = mat_mul(R, rotation_about_axis(j.axis, fk.c[static_cast<size_t>(i)],
                                        fk.s[static_cast<size_t>(i)]));
  }
  PolyVec3 tool = {Polynomial(robot.tool.x()), Polynomial(robot.tool.y()),
                   Polynomial(robot.tool.z())};
  PolyVec3 tip = mat_apply(R, tool);
  for (int r = 0; r < 3; ++r) fk.position[r] = t[r] + tip[r];
  return fk;
}

Polynomial constraint_atom_poly(const HalfPlaneConstraint& c, const AtomFK& fk) {
  double na = c.normal.norm();
  if (!(na > 0.0)) throw std::invalid_argument("constraint normal must be nonzero");
  Polynomial f(c.offset / na);
  for (int r = 0; r < 3; ++r) f -= (c.normal(r) / na) * fk.position[r];
  return f;
}

DeviationVars add_deviation_vars(VariableSet& vars, int n) {
  DeviationVars dev;
  for (int i = 1; i <= n; ++i)
    dev.y.push_back(vars.add("y" + std::to_string(i), VarKind::deviation));
  dev.lambda = vars.add("lambda", VarKind::tolerance);
  return dev;
}

Polynomial lower_bound_poly(const HalfPlaneConstraint& c, const RobotModel& robot,
                            const Eigen::VectorXd& xr, const DeviationVars& dev) {
  int n = robot.dof();
  if (xr.size() != n) throw std::invalid_argument("lower_bound_poly: dimension mismatch");
  if (static_cast<int>(dev.y.size()) != n)
    throw std::invalid_argument("lower_bound_poly: deviation variable count mismatch");

  AtomFK fk = symbolic_fk(robot);
  Polynomial f = constraint_atom_poly(c, fk);

  // cos(x_i^r + y_i L) -> c_r (1 - y^2 L^2 / 2) - s_r y L, sine analogue.
  std::map<VarId, Polynomial> repl;
  for (int i = 0; i < n; ++i) {
    double cr = std::cos(xr[i]);
    double sr = std::sin(xr[i]);
    Monomial yl = Monomial::var(dev.y[static_cast<size_t>(i)]).times(Monomial::var(dev.lambda));
    Monomial y2l2 =
        Monomial::var(dev.y[static_cast<size_t>(i)], 2).times(Monomial::var(dev.lambda, 2));
    Polynomial cos_small = Polynomial(cr) + Polynomial::term(y2l2, -cr / 2.0) +
                           Polynomial::term(yl, -sr);
    Polynomial sin_small = Polynomial(sr) + Polynomial::term(y2l2, -sr / 2.0) +
                           Polynomial::term(yl, cr);
    repl[fk.c[static_cast<size_t>(i)]] = cos_small;
    repl[fk.s[static_cast<size_t>(i)]] = sin_small;
  }
  return f.substitute(repl);
}

}  // namespace jte
