#ifndef FMPULSE_KINEMATICS_HPP
#define FMPULSE_KINEMATICS_HPP

#include <array>
#include <iosfwd>
#include <vector>

#include "fmpulse/pulse.hpp"

namespace fmpulse {

// SU(2) propagator P(t) = q0 * 1 - i (q1 sx + q2 sy + q3 sz) as a unit
// quaternion.  With the continuous rotation angle psi and axis a,
// (q0, q1, q2, q3) = (cos(psi/2), sin(psi/2) a).
struct Su2State {
  double q0, q1, q2, q3;

  double norm() const;
};

// Accumulated rotation of the spin from 0 to t: angle psi (continuously
// unwrapped, psi(0) = 0) about the unit axis (ax, ay, az).  theta and
// varphi are the spherical angles of the axis,
// (ax, ay, az) = (sin theta cos varphi, sin theta sin varphi, cos theta).
struct AxisAngle {
  double psi;
  double ax, ay, az;
  double theta, varphi;
};

struct RotationTrajectory {
  PulseSpec pulse;
  int steps = 0;                  // N; uniform grid t_k = k/N, k = 0..N
  std::vector<Su2State> su2;      // N+1 samples
  std::vector<AxisAngle> states;  // N+1 samples

  double time(int k) const { return static_cast<double>(k) / steps; }
};

// The t = 0 convention state: psi = 0, axis (cos Phi(0), sin Phi(0), 0).
AxisAngle initial_axis_angle(const PulseSpec& pulse);

// Extracts (psi, axis) from a normalized quaternion, unwrapping psi against
// `previous` and continuing the axis through psi in 2 pi Z where it is not
// determined by q.  Total function given the continuity convention.
AxisAngle axis_angle_from_su2(const Su2State& q, const AxisAngle& previous);

// Integrates i dP/dt = (v(t).sigma) P with classic RK4 at step 1/steps,
// renormalizing the quaternion each step.  Requires steps >= 16, even, and
// steps >= 32 v0 so that psi advances less than pi/2 per step (unwrap
// safety).  Throws std::invalid_argument on a bad grid and
// std::runtime_error (with the sample index) if unwrapping is ambiguous.
RotationTrajectory propagate_su2(const PulseSpec& pulse, int steps);

struct SphericalRates {
  double dpsi, dtheta, dvarphi;
};

// Right-hand sides of the spherical-coordinate kinematic ODEs,
//   psi'    = 2 V0 sin(theta) cos(Phi - varphi)
//   varphi' = V0 [cos(psi/2) sin(Phi - varphi)
//                 - sin(psi/2) cos(theta) cos(Phi - varphi)]
//             / (sin(psi/2) sin(theta))
//   theta'  = V0 [cos(psi/2) cos(theta) cos(Phi - varphi)
//                 + sin(psi/2) sin(Phi - varphi)] / sin(psi/2)
// Throws std::domain_error when |sin(psi/2)| < 1e-12 or |sin theta| < 1e-12
// (coordinate-chart singularity, not a physical one).
SphericalRates rhs_spherical(double psi, double theta, double varphi,
                             double Phi, double v0);

// Independent cross-check of propagate_su2: integrates the spherical ODEs
// with RK4.  The chart is singular at t = 0, so the first step is taken by
// a second-order Taylor expansion around the analytic limits
//   psi ~ 2 V0 t,  varphi ~ Phi(0) + Phi'(0) t / 2 + Phi''(0) t^2 / 6,
//   theta ~ pi/2 + V0 Phi'(0) t^2 / 6.
// Propagates chart singularities as std::runtime_error with the time at
// which they occur.
RotationTrajectory integrate_spherical(const PulseSpec& pulse, int steps);

// CSV export: header t,phi,vx,vy,psi,theta,varphi,ax,ay,az, one row per
// grid sample, 17 significant digits, LF line endings.
void write_trajectory_csv(const RotationTrajectory& traj, std::ostream& os);

}  // namespace fmpulse

#endif  // FMPULSE_KINEMATICS_HPP
