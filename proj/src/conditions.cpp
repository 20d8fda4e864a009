#include "fmpulse/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <vector>

namespace fmpulse {

namespace quadrature {

double simpson(const double* f, int n, double h) {
  if (n < 2 || n % 2 != 0)
    throw std::invalid_argument("simpson: need an even number of intervals");
  double odd = 0.0, even = 0.0;
  for (int k = 1; k < n; k += 2) odd += f[k];
  for (int k = 2; k < n; k += 2) even += f[k];
  return h / 3.0 * (f[0] + f[n] + 4.0 * odd + 2.0 * even);
}

void cumulative(const double* f, int n, double h, double* F) {
  if (n < 3) throw std::invalid_argument("cumulative: need at least 3 intervals");
  F[0] = 0.0;
  for (int k = 0; k < n; ++k) {
    double seg;
    if (k == 0)
      seg = h * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]) / 24.0;
    else if (k == n - 1)
      seg = h * (9.0 * f[n] + 19.0 * f[n - 1] - 5.0 * f[n - 2] + f[n - 3]) / 24.0;
    else
      seg = h * (-f[k - 1] + 13.0 * f[k] + 13.0 * f[k + 1] - f[k + 2]) / 24.0;
    F[k + 1] = F[k] + seg;
  }
}

}  // namespace quadrature

namespace {

constexpr double kPi = 3.14159265358979323846;

// z-column elements of D_a(-psi) at every trajectory sample.
struct ZColumn {
  std::vector<double> nxz, nyz, nzz;
};

ZColumn z_column(const RotationTrajectory& traj) {
  const int n = traj.steps;
  ZColumn col;
  col.nxz.resize(n + 1);
  col.nyz.resize(n + 1);
  col.nzz.resize(n + 1);
  for (int k = 0; k <= n; ++k) {
    const AxisAngle& s = traj.states[k];
    const double sp = std::sin(s.psi), cp = std::cos(s.psi);
    col.nxz[k] = -s.ay * sp + (1.0 - cp) * s.ax * s.az;
    col.nyz[k] = s.ax * sp + (1.0 - cp) * s.ay * s.az;
    col.nzz[k] = cp + (1.0 - cp) * s.az * s.az;
  }
  return col;
}

void check_grid(const RotationTrajectory& traj) {
  if (traj.steps < 2 || traj.steps % 2 != 0 ||
      static_cast<int>(traj.states.size()) != traj.steps + 1)
    throw std::invalid_argument("conditions: trajectory grid must be uniform with even N");
}

}  // namespace

RotationMatrixSample rotation_matrix(double psi,
                                     const std::array<double, 3>& axis) {
  const double n2 =
      axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2];
  if (std::abs(n2 - 1.0) > 2e-9)
    throw std::domain_error("rotation_matrix: axis must be a unit vector");
  const double ax = axis[0], ay = axis[1], az = axis[2];
  const double s = std::sin(psi), c = std::cos(psi), u = 1.0 - c;
  RotationMatrixSample m;
  m.n[0][0] = c + u * ax * ax;
  m.n[0][1] = az * s + u * ax * ay;
  m.n[0][2] = -ay * s + u * ax * az;
  m.n[1][0] = -az * s + u * ax * ay;
  m.n[1][1] = c + u * ay * ay;
  m.n[1][2] = ax * s + u * ay * az;
  m.n[2][0] = ay * s + u * ax * az;
  m.n[2][1] = -ax * s + u * ay * az;
  m.n[2][2] = c + u * az * az;
  return m;
}

double ConditionResiduals::max_abs(int order) const {
  double m = std::max({std::abs(eta11), std::abs(eta12), std::abs(eta13),
                       std::abs(bc_psi), std::abs(bc_theta)});
  if (order >= 2)
    m = std::max({m, std::abs(eta21), std::abs(eta22), std::abs(eta23),
                  std::abs(eta24), std::abs(eta25), std::abs(eta26)});
  return m;
}

std::array<double, 3> first_order_residuals(const RotationTrajectory& traj) {
  check_grid(traj);
  const int n = traj.steps;
  const double h = 1.0 / n;
  std::vector<double> f1(n + 1), f2(n + 1), f3(n + 1);
  for (int k = 0; k <= n; ++k) {
    const AxisAngle& s = traj.states[k];
    const double sp = std::sin(s.psi), cp = std::cos(s.psi), u = 1.0 - cp;
    f1[k] = s.ay * sp - u * s.ax * s.az;
    f2[k] = s.ax * sp + u * s.ay * s.az;
    f3[k] = cp + u * s.az * s.az;
  }
  using quadrature::simpson;
  return {simpson(f1.data(), n, h), simpson(f2.data(), n, h),
          simpson(f3.data(), n, h)};
}

std::array<double, 6> second_order_residuals(const RotationTrajectory& traj) {
  check_grid(traj);
  const int n = traj.steps;
  const double h = 1.0 / n;
  std::vector<double> f1(n + 1), f2(n + 1), f3(n + 1);
  for (int k = 0; k <= n; ++k) {
    const AxisAngle& s = traj.states[k];
    const double t = traj.time(k);
    const double sp = std::sin(s.psi), cp = std::cos(s.psi), u = 1.0 - cp;
    f1[k] = t * (s.ay * sp - u * s.ax * s.az);
    f2[k] = t * (s.ax * sp + u * s.ay * s.az);
    f3[k] = t * (cp + u * s.az * s.az);
  }

  const ZColumn col = z_column(traj);
  std::vector<double> Fx(n + 1), Fy(n + 1), Fz(n + 1);
  quadrature::cumulative(col.nxz.data(), n, h, Fx.data());
  quadrature::cumulative(col.nyz.data(), n, h, Fy.data());
  quadrature::cumulative(col.nzz.data(), n, h, Fz.data());

  std::vector<double> g4(n + 1), g5(n + 1), g6(n + 1);
  for (int k = 0; k <= n; ++k) {
    g4[k] = col.nyz[k] * Fz[k] - col.nzz[k] * Fy[k];
    g5[k] = col.nzz[k] * Fx[k] - col.nxz[k] * Fz[k];
    g6[k] = col.nxz[k] * Fy[k] - col.nyz[k] * Fx[k];
  }
  using quadrature::simpson;
  return {simpson(f1.data(), n, h), simpson(f2.data(), n, h),
          simpson(f3.data(), n, h), simpson(g4.data(), n, h),
          simpson(g5.data(), n, h), simpson(g6.data(), n, h)};
}

std::array<double, 3> second_order_double_integrals_direct(
    const RotationTrajectory& traj) {
  check_grid(traj);
  const int n = traj.steps;
  const double h = 1.0 / n;
  const ZColumn col = z_column(traj);

  // Outer Simpson over even samples (step 2h); inner Simpson over [0, t_k]
  // on the h grid, which has an even interval count at even k.
  auto inner = [&](const std::vector<double>& f, int k) {
    return k == 0 ? 0.0 : quadrature::simpson(f.data(), k, h);
  };
  std::vector<double> g4(n / 2 + 1), g5(n / 2 + 1), g6(n / 2 + 1);
  for (int j = 0; j <= n / 2; ++j) {
    const int k = 2 * j;
    const double Fx = inner(col.nxz, k), Fy = inner(col.nyz, k),
                 Fz = inner(col.nzz, k);
    g4[j] = col.nyz[k] * Fz - col.nzz[k] * Fy;
    g5[j] = col.nzz[k] * Fx - col.nxz[k] * Fz;
    g6[j] = col.nxz[k] * Fy - col.nyz[k] * Fx;
  }
  using quadrature::simpson;
  return {simpson(g4.data(), n / 2, 2 * h), simpson(g5.data(), n / 2, 2 * h),
          simpson(g6.data(), n / 2, 2 * h)};
}

std::array<double, 2> boundary_residuals(const RotationTrajectory& traj,
                                         double chi) {
  const AxisAngle& last = traj.states.back();
  const double theta1 = std::acos(std::clamp(last.az, -1.0, 1.0));
  return {last.psi - chi, theta1 - kPi / 2};
}

ConditionResiduals evaluate_conditions(const RotationTrajectory& traj,
                                       double chi) {
  ConditionResiduals r;
  const auto e1 = first_order_residuals(traj);
  r.eta11 = e1[0];
  r.eta12 = e1[1];
  r.eta13 = e1[2];
  const auto e2 = second_order_residuals(traj);
  r.eta21 = e2[0];
  r.eta22 = e2[1];
  r.eta23 = e2[2];
  r.eta24 = e2[3];
  r.eta25 = e2[4];
  r.eta26 = e2[5];
  const auto bc = boundary_residuals(traj, chi);
  r.bc_psi = bc[0];
  r.bc_theta = bc[1];
  return r;
}

std::string residual_csv_row(const std::string& label,
                             const ConditionResiduals& r, int order) {
  char buf[640];
  std::snprintf(buf, sizeof(buf),
                "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                "%.17g,%.17g,%.17g",
                label.c_str(), r.eta11, r.eta12, r.eta13, r.eta21, r.eta22,
                r.eta23, r.eta24, r.eta25, r.eta26, r.bc_psi, r.bc_theta,
                r.max_abs(order));
  return buf;
}

std::string residual_report(const std::string& label,
                            const ConditionResiduals& r, int order) {
  char buf[1024];
  int n = std::snprintf(buf, sizeof(buf),
                        "pulse: %s\n"
                        "  eta11 = %+.6e\n  eta12 = %+.6e\n  eta13 = %+.6e\n",
                        label.c_str(), r.eta11, r.eta12, r.eta13);
  if (order >= 2)
    n += std::snprintf(buf + n, sizeof(buf) - n,
                       "  eta21 = %+.6e\n  eta22 = %+.6e\n  eta23 = %+.6e\n"
                       "  eta24 = %+.6e\n  eta25 = %+.6e\n  eta26 = %+.6e\n",
                       r.eta21, r.eta22, r.eta23, r.eta24, r.eta25, r.eta26);
  std::snprintf(buf + n, sizeof(buf) - n,
                "  bc_psi = %+.6e\n  bc_theta = %+.6e\n"
                "  max_abs (order %d, max-norm) = %.6e\n",
                r.bc_psi, r.bc_theta, order, r.max_abs(order));
  return buf;
}

}  // namespace fmpulse
