#include "teleop/compliance.hpp"

#include <Eigen/SVD>

#include "teleop/errors.hpp"

namespace teleop {

Wrench estimateEeWrench(const SerialChaind& chain, const JointVectord& q, const VecX& tau_measured,
                        const VecX& tau_gravity, WrenchModel model, double sigma_min) {
  checkJointVector(chain, q);
  if (tau_measured.size() != chain.dof() || tau_gravity.size() != chain.dof())
    throw StructuralError("torque vectors must have one entry per joint of chain '" + chain.name + "'");

  const Jacobiand jac = geometricJacobian(chain, q);
  const Eigen::MatrixXd jt = model == WrenchModel::ForceOnly ? Eigen::MatrixXd(jac.topRows<3>().transpose())
                                                             : Eigen::MatrixXd(jac.transpose());
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(jt, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VecX& s = svd.singularValues();
  VecX s_inv = VecX::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] >= sigma_min) s_inv[i] = 1.0 / s[i];
  const VecX w = svd.matrixV() * s_inv.asDiagonal() * svd.matrixU().transpose() * (tau_measured - tau_gravity);

  if (model == WrenchModel::ForceOnly) return Wrench::fromForce(w.head<3>());
  return Wrench::fromVector(w);
}

VecX impedanceTorque(const SerialChaind& chain, const JointVectord& q, const Wrench& desired, const Vec3& gravity) {
  return gravityTorques(chain, q, gravity) + geometricJacobian(chain, q).transpose() * desired.vector();
}

void CouplingParams::validate() const {
  if (!(lambda > 0.0)) throw ConfigurationError("coupling lambda must be positive");
  if (!(beta >= 0.0)) throw ConfigurationError("coupling beta must be non-negative");
  if (!(dt > 0.0)) throw ConfigurationError("coupling dt must be positive");
}

namespace {

// Error and error rate of the follower relative to the leader, in the
// leader's rotation frame for the angular part.
std::pair<Vec6, Vec6> errorState(const Posed& x_l, const Twistd& xdot_l, const Posed& x_r, const Twistd& xdot_r) {
  const Vec6 e = poseError(x_l, x_r);
  Vec6 edot;
  edot << xdot_l.linear - xdot_r.linear, x_r.rotation.inverse() * Vec3(xdot_l.angular - xdot_r.angular);
  return {e, edot};
}

}  // namespace

CouplingStep coupledFollowerStep(const Posed& x_l, const Twistd& xdot_l, const Posed& x_r, const Twistd& xdot_r,
                                 const CouplingParams& p) {
  p.validate();
  const auto [e, edot] = errorState(x_l, xdot_l, x_r, xdot_r);

  Vec6 e_next;
  if (p.law == CouplingLaw::Stable) {
    // backward Euler on e'' = -(lambda/dt^2) e - (beta/dt) e', in units of dt*e'
    e_next = ((1.0 + p.beta) * e + p.dt * edot) / (1.0 + p.beta + p.lambda);
  } else {
    e_next = p.lambda * e + p.beta * edot;
  }
  const Vec6 edot_next = (e_next - e) / p.dt;

  CouplingStep out;
  out.pose = poseRetract(x_r, e_next);
  out.twist.linear = xdot_r.linear + edot_next.head<3>();
  out.twist.angular = xdot_r.angular + x_r.rotation * Vec3(edot_next.tail<3>());
  return out;
}

double couplingEnergy(const Posed& x_l, const Twistd& xdot_l, const Posed& x_r, const Twistd& xdot_r,
                      const CouplingParams& p) {
  const auto [e, edot] = errorState(x_l, xdot_l, x_r, xdot_r);
  return 0.5 * p.stiffness() * e.squaredNorm() + 0.5 * edot.squaredNorm();
}

}  // namespace teleop
