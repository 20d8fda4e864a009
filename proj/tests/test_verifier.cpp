#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <random>

#include "fmpulse/kinematics.hpp"
#include "fmpulse/solver.hpp"
#include "fmpulse/tables.hpp"
#include "fmpulse/verifier.hpp"

using namespace fmpulse;
using Eigen::MatrixXcd;

namespace {

constexpr double kPi = 3.14159265358979323846;

PulseSpec flat_pulse(double v0, double chi = kPi) {
  PulseSpec p;
  p.chi = chi;
  p.v0 = v0;
  return p;
}

MatrixXcd expm_h(const MatrixXcd& H, double dt) {
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(H);
  const auto& w = es.eigenvalues();
  MatrixXcd D = MatrixXcd::Zero(H.rows(), H.rows());
  for (int i = 0; i < H.rows(); ++i)
    D(i, i) = std::polar(1.0, -dt * w[i]);
  return es.eigenvectors() * D * es.eigenvectors().adjoint();
}

MatrixXcd kron(const MatrixXcd& A, const MatrixXcd& B) {
  MatrixXcd out(A.rows() * B.rows(), A.cols() * B.cols());
  for (int i = 0; i < A.rows(); ++i)
    for (int j = 0; j < A.cols(); ++j)
      out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return out;
}

// The plain lab-frame midpoint exponential product, evaluated entirely in
// doubles: independent oracle for evolve_full at moderate lambda tau.
PropagatorSet oracle_midpoint(const PulseSpec& pulse, const BathSpec& bath,
                              double tau, int M) {
  const BathOperators ops = build_bath(bath);
  const int db = static_cast<int>(ops.hb0.rows());
  const MatrixXcd Ib = MatrixXcd::Identity(db, db);
  MatrixXcd sx(2, 2), sy(2, 2), sz(2, 2), I2 = MatrixXcd::Identity(2, 2);
  sx << 0, 1, 1, 0;
  sy << 0, std::complex<double>(0, -1), std::complex<double>(0, 1), 0;
  sz << 1, 0, 0, -1;

  const PhaseSeries series(pulse);
  const double h = tau / M;
  MatrixXcd U = MatrixXcd::Identity(2 * db, 2 * db);
  MatrixXcd Ub = Ib;
  for (int m = 0; m < M; ++m) {
    const double tm = (m + 0.5) * h;
    const MatrixXcd Hb = ops.hb0 + tm * ops.hb1;
    const MatrixXcd A = ops.a0 + tm * ops.a1;
    const double phi = series.phase(tm / tau);
    const double vx = pulse.v0 * std::cos(phi) / tau;
    const double vy = pulse.v0 * std::sin(phi) / tau;
    const MatrixXcd H =
        kron(I2, Hb) + kron(sz, A) + vx * kron(sx, Ib) + vy * kron(sy, Ib);
    U = expm_h(H, h) * U;
    Ub = expm_h(Hb, h) * Ub;
  }
  const RotationTrajectory traj = propagate_su2(pulse, 8192);
  const Su2State& q = traj.su2.back();
  MatrixXcd P(2, 2);
  P << std::complex<double>(q.q0, -q.q3),
      std::complex<double>(-q.q2, -q.q1),
      std::complex<double>(q.q2, -q.q1), std::complex<double>(q.q0, q.q3);
  PropagatorSet out;
  out.u_full = U;
  out.u_bath = Ub;
  out.p_final = kron(P, Ib);
  out.u_corr = out.p_final.adjoint() * kron(I2, Ub).adjoint() * U;
  return out;
}

}  // namespace

TEST_CASE("pauli strings build the expected small operators") {
  BathSpec spec;
  spec.n_spins = 1;
  spec.lambda = 1.0;
  spec.omega_b = 1.0;
  spec.hb0 = {{1.0, {{'Z', 1}}}};
  spec.a0 = {{1.0, {{'X', 1}}}};
  const BathOperators ops = build_bath(spec);
  CHECK(ops.hb0.rows() == 2);
  // [Z, X] = 2iY is nonzero
  const MatrixXcd comm = ops.hb0 * ops.a0 - ops.a0 * ops.hb0;
  CHECK(comm.norm() > 1.0);
  CHECK((ops.hb0 - ops.hb0.adjoint()).norm() < 1e-15);
  // absent term lists stay zero (static bath case)
  CHECK(ops.hb1.norm() == 0.0);
  CHECK(ops.a1.norm() == 0.0);
}

TEST_CASE("two-spin operators are Hermitian with the right dimension") {
  BathSpec spec;
  spec.n_spins = 2;
  spec.a0 = {{1.0, {{'X', 1}}}, {1.0, {{'X', 2}}}};
  spec.a1 = {{1.0, {{'Y', 1}}}};
  spec.hb0 = {{0.5, {{'Z', 1}, {'Z', 2}}}};
  const BathOperators ops = build_bath(spec);
  CHECK(ops.a0.rows() == 4);
  CHECK((ops.a0 - ops.a0.adjoint()).norm() < 1e-15);
  CHECK((ops.a1 - ops.a1.adjoint()).norm() < 1e-15);
  CHECK((ops.hb0 - ops.hb0.adjoint()).norm() < 1e-15);
}

TEST_CASE("pauli string errors") {
  BathSpec spec;
  spec.n_spins = 1;
  spec.a0 = {{1.0, {{'X', 2}}}};
  CHECK_THROWS_AS(build_bath(spec), std::invalid_argument);
  spec.a0 = {{1.0, {{'Q', 1}}}};
  CHECK_THROWS_AS(build_bath(spec), std::invalid_argument);
  spec.a0 = {{1.0, {{'X', 1}, {'Y', 1}}}};
  CHECK_THROWS_AS(build_bath(spec), std::invalid_argument);
  spec.a0.clear();
  spec.n_spins = 4;
  CHECK_THROWS_AS(build_bath(spec), std::invalid_argument);
}

TEST_CASE("bath file parsing") {
  const BathSpec spec = parse_bath(
      "# stock bath\n"
      "n_spins = 2\n"
      "lambda = 0.5\n"
      "omega_b = 0.25\n"
      "a0 = 0.7 X1 + 0.3 Z1 - 0.1 X2\n"
      "a1 = Y1\n"
      "hb0 = 1.0 Z1 Z2\n");
  CHECK(spec.n_spins == 2);
  CHECK(spec.lambda == 0.5);
  CHECK(spec.a0.size() == 3);
  CHECK(spec.a0[2].weight == doctest::Approx(-0.1));
  CHECK(spec.a1[0].weight == doctest::Approx(1.0));
  REQUIRE(spec.hb0[0].factors.size() == 2);

  CHECK_THROWS_AS(parse_bath("lambda = 1\n"), std::runtime_error);
  CHECK_THROWS_AS(parse_bath("n_spins = 1\na0 = 0.5 W1\n"), std::runtime_error);
  CHECK_THROWS_AS(parse_bath("n_spins = 1\nbogus = 1\n"), std::runtime_error);
}

TEST_CASE("correction error metric") {
  PropagatorSet pset;
  pset.u_corr = MatrixXcd::Identity(4, 4);
  CHECK(correction_error(pset) == 0.0);

  pset.u_corr = std::polar(1.0, 1.234) * MatrixXcd::Identity(4, 4);
  CHECK(correction_error(pset) < 1e-12);

  // exp(-i eps Z (x) 1): d is linear in eps with slope 1/sqrt(2)
  MatrixXcd Z(2, 2);
  Z << 1, 0, 0, -1;
  const MatrixXcd gen = kron(Z, MatrixXcd::Identity(2, 2));
  for (const double eps : {1e-3, 1e-2}) {
    pset.u_corr = expm_h(gen, eps);
    const double d = correction_error(pset);
    CHECK(d == doctest::Approx(eps / std::sqrt(2.0)).epsilon(1e-3));
  }
}

TEST_CASE("decoupled limit: zero coupling gives identity correction") {
  BathSpec bath = default_bath();
  bath.lambda = 0.0;
  const PropagatorSet pset =
      evolve_full(*find_builtin("fm-1-pi"), bath, 0.05, 512);
  CHECK(correction_error(pset) < 1e-12);
  // and U = U_b (x) P exactly in that limit
  const MatrixXcd rebuilt =
      pset.p_final * kron(MatrixXcd::Identity(2, 2), pset.u_bath);
  CHECK((pset.u_full - rebuilt).norm() < 1e-10);
}

TEST_CASE("returned propagators are unitary and factor exactly") {
  const PropagatorSet pset =
      evolve_full(*find_builtin("fm-2-pi"), default_bath(), 0.08, 1024);
  const int D = 4;
  const MatrixXcd I = MatrixXcd::Identity(D, D);
  CHECK((pset.u_full.adjoint() * pset.u_full - I).norm() < 1e-10);
  CHECK((pset.u_corr.adjoint() * pset.u_corr - I).norm() < 1e-10);
  CHECK((pset.p_final.adjoint() * pset.p_final - I).norm() < 1e-12);
  // U = U_b P U_c by construction
  const MatrixXcd rebuilt = kron(MatrixXcd::Identity(2, 2), pset.u_bath) *
                            pset.p_final * pset.u_corr;
  CHECK((pset.u_full - rebuilt).norm() < 1e-12);
}

TEST_CASE("toggled product agrees with the plain midpoint oracle") {
  // at moderate lambda tau both integrators resolve d comfortably above
  // the double rounding floor
  const PulseSpec p = *find_builtin("fm-1-pi");
  const BathSpec bath = default_bath();
  for (const double tau : {0.05, 0.1}) {
    const PropagatorSet a = evolve_full(p, bath, tau, 2048);
    const PropagatorSet b = oracle_midpoint(p, bath, tau, 2048);
    const double da = correction_error(a);
    const double db_ = std::sqrt(std::max(
        0.0, 1.0 - std::abs(b.u_corr.trace()) / b.u_corr.rows()));
    CHECK(std::abs(da - db_) < 5e-7 + 0.01 * da);
    // the full propagators agree entrywise at double accuracy
    CHECK((a.u_full - b.u_full).cwiseAbs().maxCoeff() < 1e-5);
  }
}

TEST_CASE("step halving moves d by little once converged") {
  const PulseSpec p = *find_builtin("fm-2-pi-refined");
  const BathSpec bath = default_bath();
  const double tau = 0.1;
  const double d1 = correction_error(evolve_full(p, bath, tau, 1024));
  const double d2 = correction_error(evolve_full(p, bath, tau, 2048));
  CHECK(std::abs(d1 - d2) < 0.01 * d1);
}

TEST_CASE("scaling exponents at reduced cost") {
  const BathSpec bath = default_bath();
  const auto taus = log_spaced_taus(3e-3, 1e-1, 6, bath.lambda);

  SUBCASE("flat pulse decouples at first order only") {
    const VerificationReport rep =
        scaling_exponent(flat_pulse(kPi / 2), bath, taus, 1024);
    CHECK(rep.slope == doctest::Approx(1.0).epsilon(0.1));
  }
  SUBCASE("first-order pulse reaches slope 2") {
    const VerificationReport rep =
        scaling_exponent(*find_builtin("fm-1-pi-refined"), bath, taus, 1024);
    CHECK(rep.slope > 1.9);
    CHECK(rep.slope < 2.3);
  }
  SUBCASE("second-order pulse reaches slope 3") {
    // needs the production step count: at lower M the small-tau points sit
    // on the integrator floor and the fit correctly refuses to use them
    const VerificationReport rep =
        scaling_exponent(*find_builtin("fm-2-pi2-refined"), bath, taus, 4096);
    CHECK(rep.slope > 2.9);
  }
}

TEST_CASE("scaling_exponent validates its inputs") {
  const BathSpec bath = default_bath();
  const PulseSpec p = *find_builtin("fm-1-pi");
  const std::vector<double> narrow{0.05, 0.06, 0.08, 0.1};
  CHECK_THROWS_AS(scaling_exponent(p, bath, narrow, 1024),
                  std::invalid_argument);
  const std::vector<double> toolarge{0.01, 0.05, 0.2, 0.5};
  CHECK_THROWS_AS(scaling_exponent(p, bath, toolarge, 1024),
                  std::invalid_argument);
  const std::vector<double> unsorted{0.1, 0.05, 0.01, 0.003};
  CHECK_THROWS_AS(scaling_exponent(p, bath, unsorted, 1024),
                  std::invalid_argument);
}

namespace {

// A pulse satisfying the first-order conditions, the boundary targets and
// the double-integral conditions but violating the first-moment integrals:
// one continuation step along the null space of the partial system, seeded
// at a full second-order root.
PulseSpec first_moment_violator() {
  const double chi = kPi;
  const int grid = 2048;
  auto resid8 = [&](const Eigen::VectorXd& p) {
    PulseSpec pulse;
    pulse.chi = chi;
    pulse.v0 = p[0];
    for (int i = 1; i <= 10; ++i) pulse.coeffs[i] = p[i];
    const ConditionResiduals r =
        evaluate_conditions(propagate_su2(pulse, grid), chi);
    Eigen::VectorXd f(8);
    f << r.eta11, r.eta12, r.eta13, r.bc_psi, r.bc_theta, r.eta24, r.eta25,
        r.eta26;
    return f;
  };
  auto jac = [&](const Eigen::VectorXd& q) {
    Eigen::MatrixXd J(8, 11);
    for (int j = 0; j < 11; ++j) {
      Eigen::VectorXd pp = q, pm = q;
      pp[j] += 1e-6;
      pm[j] -= 1e-6;
      J.col(j) = (resid8(pp) - resid8(pm)) / 2e-6;
    }
    return J;
  };

  const PulseSpec seed = *find_builtin("fm-2-pi-refined");
  Eigen::VectorXd p(11);
  p[0] = seed.v0;
  for (int i = 1; i <= 10; ++i) p[i] = seed.coeff(i);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac(p), Eigen::ComputeFullV);
  Eigen::VectorXd dir = svd.matrixV().col(8);
  if (dir[0] < 0) dir = -dir;
  p += 0.25 * dir;
  for (int c = 0; c < 6; ++c) {
    const Eigen::VectorXd f = resid8(p);
    if (f.lpNorm<Eigen::Infinity>() < 1e-10) break;
    p -= jac(p).completeOrthogonalDecomposition().solve(f);
  }

  PulseSpec pulse;
  pulse.chi = chi;
  pulse.v0 = p[0];
  for (int i = 1; i <= 10; ++i) pulse.coeffs[i] = p[i];
  return pulse;
}

}  // namespace

TEST_CASE("structural invariants of the second-order conditions") {
  const PulseSpec pulse = first_moment_violator();
  const ConditionResiduals r =
      evaluate_conditions(propagate_su2(pulse, 4096), pulse.chi);
  const double partial =
      std::max({std::abs(r.eta11), std::abs(r.eta12), std::abs(r.eta13),
                std::abs(r.bc_psi), std::abs(r.bc_theta), std::abs(r.eta24),
                std::abs(r.eta25), std::abs(r.eta26)});
  const double first_moment =
      std::max({std::abs(r.eta21), std::abs(r.eta22), std::abs(r.eta23)});
  REQUIRE(partial < 1e-8);
  REQUIRE(first_moment > 2e-3);

  const auto taus = log_spaced_taus(3e-3, 1e-1, 6, 1.0);

  SUBCASE("first-moment violation degrades the default bath to slope 2") {
    const VerificationReport rep =
        scaling_exponent(pulse, default_bath(), taus, 4096);
    CHECK(rep.slope == doctest::Approx(2.0).epsilon(0.1));
  }

  SUBCASE("a commuting static bath does not see the first moments") {
    // [H_b0, A0] = 0 and A1 = H_b1 = 0 removes the time-moment content of
    // the second-order conditions entirely, so on such a bath this pulse
    // decouples exactly as well as the full second-order root, while on
    // the noncommuting bath its correction is dominated by the violation.
    // (The third-order coefficient on the commuting bath is ~4e-5, too
    // small for a floor-respecting slope fit at any affordable step count,
    // so the order retention is asserted through the comparison.)
    BathSpec commuting;
    commuting.n_spins = 1;
    commuting.lambda = 1.0;
    commuting.omega_b = 1.0;
    commuting.hb0 = {{1.0, {{'Z', 1}}}};
    commuting.a0 = {{1.0, {{'Z', 1}}}};
    const PulseSpec full_root = *find_builtin("fm-2-pi-refined");
    for (const double tau : {0.05, 0.1}) {
      const double d_viol =
          correction_error(evolve_full(pulse, commuting, tau, 8192));
      const double d_full =
          correction_error(evolve_full(full_root, commuting, tau, 8192));
      CHECK(d_viol < 3.0 * d_full + 1e-9);

      const double d_viol_nc =
          correction_error(evolve_full(pulse, default_bath(), tau, 8192));
      const double d_full_nc =
          correction_error(evolve_full(full_root, default_bath(), tau, 8192));
      CHECK(d_viol_nc > 4.0 * d_full_nc);
    }
  }
}

TEST_CASE("verification CSV format") {
  VerificationReport rep;
  rep.points.push_back({0.01, 0.01, 1e-5, 1e-9, false});
  rep.points.push_back({0.1, 0.1, 1e-3, 1e-9, true});
  rep.slope = 2.0;
  rep.window_lo = 0.01;
  rep.window_hi = 0.1;
  std::ostringstream os;
  write_verification_csv(rep, os);
  const std::string text = os.str();
  CHECK(text.rfind("tau,lambda_tau,d,excluded_from_fit\n", 0) == 0);
  CHECK(text.find(",1\n") != std::string::npos);
  CHECK(text.find("slope=2.000000,window=[0.01,0.1]") != std::string::npos);
}
