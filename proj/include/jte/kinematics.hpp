#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "jte/polynomial.hpp"

namespace jte {

// Beyond this deviation magnitude (radians) the quadratic small-angle bound
// loses its stated accuracy, so certified tolerances are flagged.
inline constexpr double kSmallAngleLimit = 0.244;

// One revolute joint of a spatial chain: a fixed transform from the parent
// frame followed by a rotation about `axis` through the joint angle.
struct Joint {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
};

struct RobotModel {
  enum class Kind { planar_world_angles, spatial_transform_chain };

  Kind kind = Kind::planar_world_angles;
  std::vector<double> link_lengths;  // planar only
  std::vector<Joint> joints;         // spatial only
  Eigen::Vector3d tool = Eigen::Vector3d::Zero();  // point carried by the last frame

  int dof() const;
  // Throws std::invalid_argument on empty chains, nonpositive link lengths,
  // non-orthonormal rotation blocks, or non-unit axes.
  void validate() const;
};

// Safe region is { p : a . p <= c }. The normal need not be unit length;
// distances are normalized internally.
struct HalfPlaneConstraint {
  Eigen::Vector3d normal = Eigen::Vector3d::UnitX();  // planar: z component 0
  double offset = 0.0;
  std::string name;
};

Eigen::Vector3d fk_position(const RobotModel& robot, const Eigen::VectorXd& x);

// Signed distance f(x) = (c - a . p(x)) / |a|; positive means safe.
double eval_constraint(const HalfPlaneConstraint& c, const RobotModel& robot,
                       const Eigen::VectorXd& x);

// End-effector position written symbolically over per-joint trig atoms
// c_i = cos x_i, s_i = sin x_i. Both robot kinds reduce to this form, which
// gives the small-angle substitution a single code path.
struct AtomFK {
  VariableSet atom_vars;
  std::vector<VarId> c, s;
  std::array<Polynomial, 3> position;
};

AtomFK symbolic_fk(const RobotModel& robot);

// f as a polynomial over the trig atoms of `fk`.
Polynomial constraint_atom_poly(const HalfPlaneConstraint& c, const AtomFK& fk);

// Deviation variables y_1..y_n and the tolerance lambda, registered into a
// caller-owned universe so later stages can extend it.
struct DeviationVars {
  std::vector<VarId> y;
  VarId lambda;
};

DeviationVars add_deviation_vars(VariableSet& vars, int n);

// Quadratic small-angle lower bound g(y, lambda) of f(x^r + y*lambda):
// each trig term is expanded by the angle-sum identity and cos(y_i*lambda),
// sin(y_i*lambda) are replaced by 1 - y_i^2 lambda^2 / 2 and y_i*lambda.
// g at lambda = 0 equals f(x^r).
Polynomial lower_bound_poly(const HalfPlaneConstraint& c, const RobotModel& robot,
                            const Eigen::VectorXd& xr, const DeviationVars& dev);

}  // namespace jte
