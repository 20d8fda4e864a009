#ifndef FMPULSE_VERIFIER_HPP
#define FMPULSE_VERIFIER_HPP

#include <Eigen/Dense>
#include <complex>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fmpulse/pulse.hpp"

namespace fmpulse {

// One weighted Pauli string over the bath sites, e.g. 0.7 X1 or 0.5 X1 Z2.
// Sites are 1-based; site 1 is the leftmost tensor factor.
struct PauliTerm {
  double weight = 0.0;
  std::vector<std::pair<char, int>> factors;  // ('X'|'Y'|'Z'|'I', site)
};

// Explicit small bath: H_b(t) = H_b0 + H_b1 t, A(t) = A0 + A1 t in physical
// time, the spin coupled through sigma_z (x) A(t).  The term lists are
// dimensionless patterns; build_bath scales hb* by omega_b and a* by
// lambda (linear-in-t terms per unit physical time).
struct BathSpec {
  int n_spins = 1;  // 1..3
  double lambda = 1.0;
  double omega_b = 1.0;
  std::vector<PauliTerm> hb0, hb1, a0, a1;
};

// The stock verification bath: one spin, H_b0 = w_b Z, H_b1 = 0.4 w_b X,
// A0 = lambda (0.7 X + 0.3 Z), A1 = 0.5 lambda Y.  Noncommuting at every
// level so each condition is exercised.
BathSpec default_bath();

// Bath-file format: `key = value` lines with `#` comments; keys n_spins,
// lambda, omega_b and term lists hb0, hb1, a0, a1 such as
//   a0 = 0.7 X1 + 0.3 Z1
// Throws std::runtime_error with a line number on malformed input.
BathSpec parse_bath(std::string_view text);

struct BathOperators {
  Eigen::MatrixXcd hb0, hb1, a0, a1;  // dimension 2^n_spins, Hermitian
};

// Dense operator construction.  Throws std::invalid_argument on a
// malformed Pauli string or unsupported n_spins.
BathOperators build_bath(const BathSpec& spec);

struct PropagatorSet {
  Eigen::MatrixXcd u_full;  // U(tau_p), dimension 2^(n_spins+1)
  Eigen::MatrixXcd u_bath;  // U_b(tau_p), bath dimension
  Eigen::MatrixXcd p_final; // P(tau_p) (x) 1_bath
  Eigen::MatrixXcd u_corr;  // U_c = P^dag U_b^dag U

  // tr(U_c) - D and the correction distance, both accumulated in extended
  // precision; they stay resolved far below the double rounding floor of
  // the matrices above.
  std::complex<double> corr_trace_deviation{
      std::numeric_limits<double>::quiet_NaN(), 0.0};
  double corr_distance = std::numeric_limits<double>::quiet_NaN();
};

// Exact time-ordered evolution over [0, tau_p] of
//   H(t) = 1 (x) [H_b0 + H_b1 t] + sigma_z (x) [A0 + A1 t]
//          + (v(t/tau_p)/tau_p) . sigma (x) 1
// as a midpoint exponential product over `steps` uniform steps.  The
// product is accumulated in the control toggling frame in 128-bit
// arithmetic so that the deviation of U_c from the identity is resolved
// far below the double-precision floor; the returned matrices are the
// plain double projections.  Requires steps >= 256, tau_p > 0.
PropagatorSet evolve_full(const PulseSpec& pulse, const BathSpec& bath,
                          double tau_p, int steps);

// Global-phase-invariant distance of U_c from the identity,
// d = sqrt(1 - |tr U_c| / D).  Uses the extended-precision trace deviation
// when present, otherwise the stored u_corr matrix.
double correction_error(const PropagatorSet& pset);

struct VerificationPoint {
  double tau = 0.0;
  double lambda_tau = 0.0;
  double d = 0.0;
  double floor = 0.0;  // estimated integrator error at this point
  bool excluded = false;
};

struct VerificationReport {
  std::vector<VerificationPoint> points;
  double slope = 0.0;      // least-squares log-log slope over included points
  double window_lo = 0.0;  // tau range used for the fit
  double window_hi = 0.0;
};

// Sweeps tau over tau_list (ascending, spanning >= 1.5 decades, with
// lambda tau <= 0.1 and omega_b tau <= 0.1), computes d(U_c) per point and
// fits the log-log slope.  Points with d below 100x the per-point
// integrator-error estimate (step halving plus the arithmetic floor) are
// excluded; throws std::runtime_error if fewer than 4 points remain.
VerificationReport scaling_exponent(const PulseSpec& pulse,
                                    const BathSpec& bath,
                                    std::span<const double> taus,
                                    int steps = 4096);

// CSV: `tau,lambda_tau,d,excluded_from_fit` rows and a footer line
// `slope=<value>,window=[<t0>,<t1>]`.
void write_verification_csv(const VerificationReport& report,
                            std::ostream& os);

// Convenience: n log-spaced values of lambda*tau mapped to physical tau.
std::vector<double> log_spaced_taus(double lo, double hi, int n,
                                    double lambda);

}  // namespace fmpulse

#endif  // FMPULSE_VERIFIER_HPP
