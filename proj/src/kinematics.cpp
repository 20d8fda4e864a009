#include "fmpulse/kinematics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace fmpulse {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Quat {
  double q0, q1, q2, q3;
};

// q0' = -v.qv ; qv' = q0 v + v x qv, with v = v0 (cos Phi, sin Phi, 0).
inline Quat su2_rhs(const Quat& q, double vx, double vy) {
  return {-(vx * q.q1 + vy * q.q2),
          q.q0 * vx + vy * q.q3,
          q.q0 * vy - vx * q.q3,
          vx * q.q2 - vy * q.q1};
}

inline Quat axpy(const Quat& q, double h, const Quat& d) {
  return {q.q0 + h * d.q0, q.q1 + h * d.q1, q.q2 + h * d.q2, q.q3 + h * d.q3};
}

}  // namespace

double Su2State::norm() const {
  return std::sqrt(q0 * q0 + q1 * q1 + q2 * q2 + q3 * q3);
}

AxisAngle initial_axis_angle(const PulseSpec& pulse) {
  const double phi0 = PhaseSeries(pulse).phase(0.0);  // 0 by the ansatz
  return {0.0, std::cos(phi0), std::sin(phi0), 0.0, kPi / 2, phi0};
}

AxisAngle axis_angle_from_su2(const Su2State& q, const AxisAngle& previous) {
  const double nv = std::sqrt(q.q1 * q.q1 + q.q2 * q.q2 + q.q3 * q.q3);
  const double raw = 2.0 * std::atan2(nv, q.q0);  // in [0, 2 pi]

  // psi and axis are defined up to (psi, a) -> (-psi, -a) and psi -> psi+4pi.
  // Near psi in 2 pi Z the two branches are almost equidistant in angle and
  // proximity alone picks the folding branch, so the axis decides: the
  // correct branch keeps a . a_prev > 0 (the two candidate axes are exact
  // opposites).  Away from the fold the angle decides.
  AxisAngle out;
  if (nv < 1e-9) {
    // axis not determined by q; continue it and keep the nearest angle
    double best = 0.0, best_dist = HUGE_VAL;
    for (const double s : {1.0, -1.0}) {
      const double m = std::round((previous.psi - s * raw) / (4.0 * kPi));
      const double cand = s * raw + 4.0 * kPi * m;
      if (std::abs(cand - previous.psi) < best_dist) {
        best = cand;
        best_dist = std::abs(cand - previous.psi);
      }
    }
    out.psi = best;
    out.ax = previous.ax;
    out.ay = previous.ay;
    out.az = previous.az;
  } else {
    const double dots =
        (q.q1 * previous.ax + q.q2 * previous.ay + q.q3 * previous.az) / nv;
    double best = 0.0, best_score = -HUGE_VAL;
    for (const double s : {1.0, -1.0}) {
      const double m = std::round((previous.psi - s * raw) / (4.0 * kPi));
      const double cand = s * raw + 4.0 * kPi * m;
      if (std::abs(cand - previous.psi) > kPi) continue;
      // axis for this branch is q_vec / sin(cand/2); its alignment with
      // the previous axis scores the branch, the angle step breaks ties
      const double align = dots * (std::sin(cand / 2.0) >= 0.0 ? 1.0 : -1.0);
      const double score = align - std::abs(cand - previous.psi) / (8.0 * kPi);
      if (score > best_score) {
        best_score = score;
        best = cand;
      }
    }
    if (best_score == -HUGE_VAL) {
      // no branch within the advance bound; fall back to nearest
      for (const double s : {1.0, -1.0}) {
        const double m = std::round((previous.psi - s * raw) / (4.0 * kPi));
        const double cand = s * raw + 4.0 * kPi * m;
        if (best_score == -HUGE_VAL ||
            std::abs(cand - previous.psi) < std::abs(best - previous.psi)) {
          best = cand;
          best_score = 0.0;
        }
      }
    }
    out.psi = best;
    const double shalf = std::sin(best / 2.0);
    if (std::abs(shalf) < 1e-9) {
      out.ax = previous.ax;
      out.ay = previous.ay;
      out.az = previous.az;
    } else {
      const double ax = q.q1 / shalf, ay = q.q2 / shalf, az = q.q3 / shalf;
      const double n = std::sqrt(ax * ax + ay * ay + az * az);
      out.ax = ax / n;
      out.ay = ay / n;
      out.az = az / n;
    }
  }
  out.theta = std::acos(std::clamp(out.az, -1.0, 1.0));
  out.varphi = std::atan2(out.ay, out.ax);
  return out;
}

RotationTrajectory propagate_su2(const PulseSpec& pulse, int steps) {
  validate_pulse(pulse);
  if (steps < 16 || steps % 2 != 0)
    throw std::invalid_argument("propagate_su2: steps must be even and >= 16");
  if (steps < 32.0 * pulse.v0)
    throw std::invalid_argument(
        "propagate_su2: steps must be >= 32 v0 for unambiguous unwrapping");

  const PhaseSeries series(pulse);
  const double h = 1.0 / steps;
  const double v0 = pulse.v0;

  RotationTrajectory traj;
  traj.pulse = pulse;
  traj.steps = steps;
  traj.su2.reserve(steps + 1);
  traj.states.reserve(steps + 1);

  Quat q{1.0, 0.0, 0.0, 0.0};
  traj.su2.push_back({q.q0, q.q1, q.q2, q.q3});
  traj.states.push_back(initial_axis_angle(pulse));

  auto control = [&](double t, double& vx, double& vy) {
    const double phi = series.phase(t);
    vx = v0 * std::cos(phi);
    vy = v0 * std::sin(phi);
  };

  for (int k = 0; k < steps; ++k) {
    const double t = k * h;
    double vx, vy;
    control(t, vx, vy);
    const Quat k1 = su2_rhs(q, vx, vy);
    control(t + 0.5 * h, vx, vy);
    const Quat k2 = su2_rhs(axpy(q, 0.5 * h, k1), vx, vy);
    const Quat k3 = su2_rhs(axpy(q, 0.5 * h, k2), vx, vy);
    control(t + h, vx, vy);
    const Quat k4 = su2_rhs(axpy(q, h, k3), vx, vy);

    q.q0 += h / 6.0 * (k1.q0 + 2.0 * (k2.q0 + k3.q0) + k4.q0);
    q.q1 += h / 6.0 * (k1.q1 + 2.0 * (k2.q1 + k3.q1) + k4.q1);
    q.q2 += h / 6.0 * (k1.q2 + 2.0 * (k2.q2 + k3.q2) + k4.q2);
    q.q3 += h / 6.0 * (k1.q3 + 2.0 * (k2.q3 + k3.q3) + k4.q3);
    const double n =
        std::sqrt(q.q0 * q.q0 + q.q1 * q.q1 + q.q2 * q.q2 + q.q3 * q.q3);
    q.q0 /= n;
    q.q1 /= n;
    q.q2 /= n;
    q.q3 /= n;

    traj.su2.push_back({q.q0, q.q1, q.q2, q.q3});
    const AxisAngle state =
        axis_angle_from_su2(traj.su2.back(), traj.states.back());
    if (std::abs(state.psi - traj.states.back().psi) > kPi / 2)
      throw std::runtime_error("propagate_su2: ambiguous psi unwrap at sample " +
                               std::to_string(k + 1));
    traj.states.push_back(state);
  }
  return traj;
}

SphericalRates rhs_spherical(double psi, double theta, double varphi,
                             double Phi, double v0) {
  const double sh = std::sin(psi / 2), ch = std::cos(psi / 2);
  const double st = std::sin(theta), ct = std::cos(theta);
  if (std::abs(sh) < 1e-12)
    throw std::domain_error("rhs_spherical: chart singular, |sin(psi/2)| < 1e-12");
  if (std::abs(st) < 1e-12)
    throw std::domain_error("rhs_spherical: chart singular, |sin(theta)| < 1e-12");
  const double cd = std::cos(Phi - varphi), sd = std::sin(Phi - varphi);
  return {2.0 * v0 * st * cd,
          v0 * (ch * ct * cd + sh * sd) / sh,
          v0 * (ch * sd - sh * ct * cd) / (sh * st)};
}

RotationTrajectory integrate_spherical(const PulseSpec& pulse, int steps) {
  validate_pulse(pulse);
  if (steps < 16 || steps % 2 != 0)
    throw std::invalid_argument("integrate_spherical: steps must be even and >= 16");

  const PhaseSeries series(pulse);
  const double h = 1.0 / steps;
  const double v0 = pulse.v0;

  RotationTrajectory traj;
  traj.pulse = pulse;
  traj.steps = steps;
  traj.su2.reserve(steps + 1);
  traj.states.reserve(steps + 1);

  auto push = [&](double psi, double theta, double varphi) {
    AxisAngle s;
    s.psi = psi;
    s.theta = theta;
    s.varphi = varphi;
    s.ax = std::sin(theta) * std::cos(varphi);
    s.ay = std::sin(theta) * std::sin(varphi);
    s.az = std::cos(theta);
    traj.states.push_back(s);
    const double half = psi / 2;
    traj.su2.push_back({std::cos(half), std::sin(half) * s.ax,
                        std::sin(half) * s.ay, std::sin(half) * s.az});
  };

  const double phi0 = series.phase(0.0);
  push(0.0, kPi / 2, phi0);

  // First step by Taylor expansion from the analytic t -> 0 limits; the
  // chart ODEs are 0/0 there.
  const double d1 = series.d1(0.0), d2 = series.d2(0.0);
  double psi = 2.0 * v0 * h;
  double varphi = phi0 + 0.5 * d1 * h + d2 * h * h / 6.0;
  double theta = kPi / 2 + v0 * d1 * h * h / 6.0;
  push(psi, theta, varphi);

  auto rhs = [&](double t, const std::array<double, 3>& y) {
    SphericalRates r;
    try {
      r = rhs_spherical(y[0], y[1], y[2], series.phase(t), v0);
    } catch (const std::domain_error& e) {
      throw std::runtime_error("integrate_spherical: " + std::string(e.what()) +
                               " at t = " + std::to_string(t));
    }
    return std::array<double, 3>{r.dpsi, r.dtheta, r.dvarphi};
  };

  std::array<double, 3> y{psi, theta, varphi};
  for (int k = 1; k < steps; ++k) {
    const double t = k * h;
    const auto k1 = rhs(t, y);
    std::array<double, 3> y2, y3, y4;
    for (int i = 0; i < 3; ++i) y2[i] = y[i] + 0.5 * h * k1[i];
    const auto k2 = rhs(t + 0.5 * h, y2);
    for (int i = 0; i < 3; ++i) y3[i] = y[i] + 0.5 * h * k2[i];
    const auto k3 = rhs(t + 0.5 * h, y3);
    for (int i = 0; i < 3; ++i) y4[i] = y[i] + h * k3[i];
    const auto k4 = rhs(t + h, y4);
    for (int i = 0; i < 3; ++i)
      y[i] += h / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
    push(y[0], y[1], y[2]);
  }
  return traj;
}

void write_trajectory_csv(const RotationTrajectory& traj, std::ostream& os) {
  const PhaseSeries series(traj.pulse);
  os << "t,phi,vx,vy,psi,theta,varphi,ax,ay,az\n";
  char buf[512];
  for (int k = 0; k <= traj.steps; ++k) {
    const double t = traj.time(k);
    const double phi = series.phase(t);
    const AxisAngle& s = traj.states[k];
    std::snprintf(buf, sizeof(buf),
                  "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  t, phi, traj.pulse.v0 * std::cos(phi),
                  traj.pulse.v0 * std::sin(phi), s.psi, s.theta, s.varphi,
                  s.ax, s.ay, s.az);
    os << buf;
  }
}

}  // namespace fmpulse
