#ifndef FMPULSE_CONDITIONS_HPP
#define FMPULSE_CONDITIONS_HPP

#include <array>
#include <string>

#include "fmpulse/kinematics.hpp"

namespace fmpulse {

// One sample of the rotation matrix D_a(-psi) that carries sigma . e_j into
// sum_i n[i][j] sigma_i under conjugation by P(t).  Orthogonal with unit
// determinant; every element bounded by 1 in modulus.
struct RotationMatrixSample {
  double n[3][3];
  double t = 0.0;
};

// Elementwise construction,
//   n[x][x] = cos psi + (1-cos psi) ax^2
//   n[x][y] = az sin psi + (1-cos psi) ax ay     ... etc.
// Throws std::domain_error unless |axis| = 1 within 1e-9.
RotationMatrixSample rotation_matrix(double psi, const std::array<double, 3>& axis);

// The scalar decoupling integrals of a pure-dephasing coupling plus the
// boundary residuals.  First order:
//   eta11 = int ay sin psi - (1-cos psi) ax az dt
//   eta12 = int ax sin psi + (1-cos psi) ay az dt
//   eta13 = int cos psi + (1-cos psi) az^2 dt
// Second order: eta21..eta23 are the t-weighted versions of the same
// integrands; eta24..eta26 are the antisymmetrized double integrals of the
// z-column elements n_xz, n_yz, n_zz.  Boundary: psi(1) - chi and
// theta(1) - pi/2.
struct ConditionResiduals {
  double eta11 = 0, eta12 = 0, eta13 = 0;
  double eta21 = 0, eta22 = 0, eta23 = 0;
  double eta24 = 0, eta25 = 0, eta26 = 0;
  double bc_psi = 0, bc_theta = 0;

  // Max-norm over the residuals applicable at the given order (1 or 2),
  // boundary terms included.  This is the reported fulfillment figure.
  double max_abs(int order) const;
};

std::array<double, 3> first_order_residuals(const RotationTrajectory& traj);

// eta21..eta26.  The double integrals are reduced to single integrals over
// cumulative inner integrals F_j(t) = int_0^t n_jz, so the cost is O(N).
std::array<double, 6> second_order_residuals(const RotationTrajectory& traj);

// Direct O(N^2) 2-D quadrature of eta24..eta26, kept as an independent
// check of the reduction above.
std::array<double, 3> second_order_double_integrals_direct(
    const RotationTrajectory& traj);

// (psi(1) - chi, theta(1) - pi/2) with theta(1) = acos(az(1)).
std::array<double, 2> boundary_residuals(const RotationTrajectory& traj,
                                         double chi);

// Everything above in one pass.
ConditionResiduals evaluate_conditions(const RotationTrajectory& traj,
                                       double chi);

// `label,eta11,eta12,eta13,eta21,...,eta26,bc_psi,bc_theta,max_abs` with
// max_abs taken at the given order.
std::string residual_csv_row(const std::string& label,
                             const ConditionResiduals& r, int order);

// Human-readable block of the same numbers.
std::string residual_report(const std::string& label,
                            const ConditionResiduals& r, int order);

namespace quadrature {

// Composite Simpson on a uniform grid of n+1 samples (n even), step h.
double simpson(const double* f, int n, double h);

// Cumulative integral F[k] = int_0^{t_k} f dt on the same grid, fourth
// order (cubic through four neighboring samples per subinterval).
void cumulative(const double* f, int n, double h, double* F);

}  // namespace quadrature

}  // namespace fmpulse

#endif  // FMPULSE_CONDITIONS_HPP
