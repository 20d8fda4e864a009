#include "fmpulse/verifier.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <ostream>
#include <stdexcept>

#include "fmpulse/kinematics.hpp"

namespace fmpulse {

namespace {

constexpr double kArithmeticFloor = 1e-14;  // d resolution of the 128-bit product

// ---------------------------------------------------------------------------
// 128-bit complex matrices, fixed capacity 16x16 (up to 3 bath spins).
// The correction propagator is accumulated as a deviation from the identity
// so that d(U_c) values far below the double rounding floor stay resolved.
// ---------------------------------------------------------------------------

using qreal = __float128;

struct QC {
  qreal re, im;
};

inline QC qc_add(QC a, QC b) { return {a.re + b.re, a.im + b.im}; }
inline QC qc_mul(QC a, QC b) {
  return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}

constexpr int kCap = 16;

struct QMat {
  int n = 0;
  std::array<QC, kCap * kCap> a{};

  QC& at(int i, int j) { return a[i * n + j]; }
  const QC& at(int i, int j) const { return a[i * n + j]; }

  void set_zero(int dim) {
    n = dim;
    for (int i = 0; i < n * n; ++i) a[i] = {0, 0};
  }
};

// C = A * B (no aliasing)
void qm_mul(QMat& C, const QMat& A, const QMat& B) {
  const int n = A.n;
  C.n = n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      QC s{0, 0};
      for (int k = 0; k < n; ++k) s = qc_add(s, qc_mul(A.at(i, k), B.at(k, j)));
      C.at(i, j) = s;
    }
}

void qm_add_inplace(QMat& A, const QMat& B) {
  for (int i = 0; i < A.n * A.n; ++i) A.a[i] = qc_add(A.a[i], B.a[i]);
}

qreal qm_max_abs(const QMat& A) {
  qreal m = 0;
  for (int i = 0; i < A.n * A.n; ++i) {
    const qreal v = A.a[i].re >= 0 ? A.a[i].re : -A.a[i].re;
    const qreal w = A.a[i].im >= 0 ? A.a[i].im : -A.a[i].im;
    if (v > m) m = v;
    if (w > m) m = w;
  }
  return m;
}

void qm_copy(QMat& dst, const QMat& src) {
  dst.n = src.n;
  for (int i = 0; i < src.n * src.n; ++i) dst.a[i] = src.a[i];
}

// F = exp(-i h H) - 1 by Taylor series; h ||H|| is tiny for every step of
// the toggled product.  Truncation is cut well below the midpoint scheme
// error (~1e-13 per step), not at full 128-bit accuracy, which keeps the
// series short.
void exp_deviation(QMat& F, const Eigen::MatrixXcd& H, double h, QMat& base,
                   QMat& term, QMat& scratch) {
  const int n = static_cast<int>(H.rows());
  F.set_zero(n);
  base.n = n;
  // base <- -i h H
  const qreal qh = h;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const std::complex<double> z = H(i, j);
      base.at(i, j) = {qh * static_cast<qreal>(z.imag()),
                       -qh * static_cast<qreal>(z.real())};
    }
  qm_copy(term, base);
  for (int k = 1; k <= 24; ++k) {
    qm_add_inplace(F, term);
    if (qm_max_abs(term) < static_cast<qreal>(1e-20)) break;
    qm_mul(scratch, base, term);
    const qreal inv = qreal(1) / qreal(k + 1);
    for (int i = 0; i < n * n; ++i)
      scratch.a[i] = {scratch.a[i].re * inv, scratch.a[i].im * inv};
    qm_copy(term, scratch);
  }
}

// Delta <- F + Delta + F * Delta   (product accumulation of I + Delta)
void accumulate(QMat& delta, const QMat& F, QMat& scratch) {
  qm_mul(scratch, F, delta);
  qm_add_inplace(delta, F);
  qm_add_inplace(delta, scratch);
}

Eigen::MatrixXcd to_double(const QMat& A) {
  Eigen::MatrixXcd M(A.n, A.n);
  for (int i = 0; i < A.n; ++i)
    for (int j = 0; j < A.n; ++j)
      M(i, j) = {static_cast<double>(A.at(i, j).re),
                 static_cast<double>(A.at(i, j).im)};
  return M;
}

// ---------------------------------------------------------------------------
// Pauli-string construction
// ---------------------------------------------------------------------------

Eigen::Matrix2cd pauli(char op) {
  using namespace std::complex_literals;
  Eigen::Matrix2cd m;
  switch (op) {
    case 'X': m << 0, 1, 1, 0; break;
    case 'Y': m << 0, -1i, 1i, 0; break;
    case 'Z': m << 1, 0, 0, -1; break;
    case 'I': m.setIdentity(); break;
    default:
      throw std::invalid_argument(std::string("unknown Pauli operator '") +
                                  op + "'");
  }
  return m;
}

Eigen::MatrixXcd pauli_string(const PauliTerm& term, int n_spins) {
  std::vector<char> site_op(n_spins, 'I');
  for (const auto& [op, site] : term.factors) {
    if (site < 1 || site > n_spins)
      throw std::invalid_argument("Pauli factor site " + std::to_string(site) +
                                  " outside 1.." + std::to_string(n_spins));
    if (site_op[site - 1] != 'I')
      throw std::invalid_argument("duplicate site " + std::to_string(site) +
                                  " in Pauli term");
    if (op != 'X' && op != 'Y' && op != 'Z' && op != 'I')
      throw std::invalid_argument(std::string("unknown Pauli operator '") + op +
                                  "'");
    site_op[site - 1] = op;
  }
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(1, 1);
  for (int s = 0; s < n_spins; ++s) {
    const Eigen::Matrix2cd p = pauli(site_op[s]);
    Eigen::MatrixXcd next(out.rows() * 2, out.cols() * 2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) next.block(i * out.rows(), j * out.cols(),
                                             out.rows(), out.cols()) =
          p(i, j) * out;
    out = next;
  }
  return term.weight * out;
}

Eigen::MatrixXcd sum_terms(const std::vector<PauliTerm>& terms, int n_spins,
                           double scale) {
  const int dim = 1 << n_spins;
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim, dim);
  for (const auto& t : terms) out += pauli_string(t, n_spins);
  return scale * out;
}

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& B) {
  Eigen::MatrixXcd out(A.rows() * B.rows(), A.cols() * B.cols());
  for (int i = 0; i < A.rows(); ++i)
    for (int j = 0; j < A.cols(); ++j)
      out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return out;
}

}  // namespace

BathSpec default_bath() {
  BathSpec b;
  b.n_spins = 1;
  b.lambda = 1.0;
  b.omega_b = 1.0;
  b.hb0 = {{1.0, {{'Z', 1}}}};
  b.hb1 = {{0.4, {{'X', 1}}}};
  b.a0 = {{0.7, {{'X', 1}}}, {0.3, {{'Z', 1}}}};
  b.a1 = {{0.5, {{'Y', 1}}}};
  return b;
}

BathOperators build_bath(const BathSpec& spec) {
  if (spec.n_spins < 1 || spec.n_spins > 3)
    throw std::invalid_argument("build_bath: n_spins must be 1..3");
  BathOperators ops;
  ops.hb0 = sum_terms(spec.hb0, spec.n_spins, spec.omega_b);
  ops.hb1 = sum_terms(spec.hb1, spec.n_spins, spec.omega_b);
  ops.a0 = sum_terms(spec.a0, spec.n_spins, spec.lambda);
  ops.a1 = sum_terms(spec.a1, spec.n_spins, spec.lambda);
  return ops;
}

PropagatorSet evolve_full(const PulseSpec& pulse, const BathSpec& bath,
                          double tau_p, int steps) {
  if (steps < 256)
    throw std::invalid_argument("evolve_full: steps must be >= 256");
  if (!(tau_p > 0.0)) throw std::invalid_argument("evolve_full: tau_p must be > 0");

  const BathOperators ops = build_bath(bath);
  const int db = static_cast<int>(ops.hb0.rows());
  const int D = 2 * db;
  const double h = tau_p / steps;

  // control rotation sampled at the step midpoints (normalized time)
  const RotationTrajectory traj = propagate_su2(pulse, 2 * steps);

  const Eigen::MatrixXcd Ib = Eigen::MatrixXcd::Identity(db, db);

  // toggled product: W over the full space, U_b over the bath alone
  struct Work {
    QMat delta, deltab, F, Fb, base, term, scratch;
  };
  auto evo = std::make_unique<Work>();
  evo->delta.set_zero(D);
  evo->deltab.set_zero(db);

  Eigen::MatrixXcd HW(D, D), Hb(db, db), A(db, db);

  for (int m = 0; m < steps; ++m) {
    const double tm = (m + 0.5) * h;
    Hb = ops.hb0 + tm * ops.hb1;
    A = ops.a0 + tm * ops.a1;

    // P^dag sigma_z P = sum_i n_iz sigma_i, straight from the quaternion
    const Su2State& q = traj.su2[2 * m + 1];
    const double nxz = -2.0 * q.q0 * q.q2 + 2.0 * q.q1 * q.q3;
    const double nyz = 2.0 * q.q0 * q.q1 + 2.0 * q.q2 * q.q3;
    const double nzz = q.q0 * q.q0 - q.q1 * q.q1 - q.q2 * q.q2 + q.q3 * q.q3;
    const std::complex<double> srot[2][2] = {
        {{nzz, 0.0}, {nxz, -nyz}},
        {{nxz, nyz}, {-nzz, 0.0}}};

    // HW = 1 (x) Hb + sig_rot (x) A, filled in place
    for (int s = 0; s < 2; ++s)
      for (int sp = 0; sp < 2; ++sp)
        for (int i = 0; i < db; ++i)
          for (int j = 0; j < db; ++j)
            HW(s * db + i, sp * db + j) =
                (s == sp ? Hb(i, j) : 0.0) + srot[s][sp] * A(i, j);

    exp_deviation(evo->F, HW, h, evo->base, evo->term, evo->scratch);
    accumulate(evo->delta, evo->F, evo->scratch);

    exp_deviation(evo->Fb, Hb, h, evo->base, evo->term, evo->scratch);
    accumulate(evo->deltab, evo->Fb, evo->scratch);
  }

  // U_c = (1 (x) U_b)^dag W = 1 + Dc,  Dc = Bt^dag + Dw + Bt^dag Dw
  // with Bt = 1 (x) Delta_b.
  QMat btd;  // (1 (x) Delta_b)^dag
  btd.set_zero(D);
  for (int s = 0; s < 2; ++s)
    for (int i = 0; i < db; ++i)
      for (int j = 0; j < db; ++j) {
        const QC& z = evo->deltab.at(j, i);  // transpose
        btd.at(s * db + i, s * db + j) = {z.re, -z.im};
      }
  QMat dc = btd;
  qm_add_inplace(dc, evo->delta);
  qm_mul(evo->scratch, btd, evo->delta);
  qm_add_inplace(dc, evo->scratch);

  QC z{0, 0};
  for (int i = 0; i < D; ++i) z = qc_add(z, dc.at(i, i));

  PropagatorSet out;

  // d^2 = 1 - |D + z|/D = -u / (1 + sqrt(1 + u)),  u = |1 + z/D|^2 - 1,
  // evaluated in 128-bit so the near-cancellation never reaches doubles.
  const qreal qD = D;
  const qreal u = (2 * z.re) / qD + (z.re * z.re + z.im * z.im) / (qD * qD);
  const double ud = static_cast<double>(u);
  const double denom = 1.0 + std::sqrt(std::max(0.0, 1.0 + ud));
  const double d2 = -ud / denom;
  out.corr_trace_deviation = {static_cast<double>(z.re),
                              static_cast<double>(z.im)};

  // double projections of the propagators
  const Su2State& qe = traj.su2.back();
  Eigen::Matrix2cd P;
  {
    using namespace std::complex_literals;
    P << qe.q0 - 1i * qe.q3, -1i * (qe.q1 - 1i * qe.q2),
        -1i * (qe.q1 + 1i * qe.q2), qe.q0 + 1i * qe.q3;
  }
  const Eigen::MatrixXcd W =
      Eigen::MatrixXcd::Identity(D, D) + to_double(evo->delta);
  out.p_final = kron(P, Ib);
  out.u_full = out.p_final * W;
  out.u_bath = Eigen::MatrixXcd::Identity(db, db) + to_double(evo->deltab);
  out.u_corr = Eigen::MatrixXcd::Identity(D, D) + to_double(dc);
  out.corr_distance = std::sqrt(std::max(0.0, d2));
  return out;
}

double correction_error(const PropagatorSet& pset) {
  if (std::isfinite(pset.corr_distance) && pset.corr_distance >= 0.0)
    return pset.corr_distance;
  const int D = static_cast<int>(pset.u_corr.rows());
  const double t = std::abs(pset.u_corr.trace());
  return std::sqrt(std::max(0.0, 1.0 - t / D));
}

std::vector<double> log_spaced_taus(double lo, double hi, int n,
                                    double lambda) {
  if (n < 2 || !(hi > lo) || !(lo > 0))
    throw std::invalid_argument("log_spaced_taus: bad range");
  std::vector<double> out(n);
  for (int k = 0; k < n; ++k)
    out[k] = lo * std::pow(hi / lo, double(k) / (n - 1)) / lambda;
  return out;
}

VerificationReport scaling_exponent(const PulseSpec& pulse,
                                    const BathSpec& bath,
                                    std::span<const double> taus, int steps) {
  if (steps < 512 || steps % 2 != 0)
    throw std::invalid_argument(
        "scaling_exponent: steps must be even and >= 512 (the floor estimate "
        "re-runs at steps/2)");
  if (taus.size() < 4)
    throw std::invalid_argument("scaling_exponent: need at least 4 tau values");
  for (size_t i = 1; i < taus.size(); ++i)
    if (!(taus[i] > taus[i - 1]))
      throw std::invalid_argument("scaling_exponent: taus must be ascending");
  const double span = std::log10(taus.back() / taus.front());
  if (span < 1.5 - 1e-9)
    throw std::invalid_argument(
        "scaling_exponent: tau range must span at least 1.5 decades");
  if (bath.lambda * taus.back() > 0.1 + 1e-9 ||
      bath.omega_b * taus.back() > 0.1 + 1e-9)
    throw std::invalid_argument(
        "scaling_exponent: expansion parameters must stay <= 0.1");

  VerificationReport report;
  for (const double tau : taus) {
    const PropagatorSet full = evolve_full(pulse, bath, tau, steps);
    const PropagatorSet half = evolve_full(pulse, bath, tau, steps / 2);
    const double d = correction_error(full);
    const double dh = correction_error(half);
    VerificationPoint pt;
    pt.tau = tau;
    pt.lambda_tau = bath.lambda * tau;
    pt.d = d;
    // second-order scheme: |d_M - d_{M/2}| ~ 3x the error at M
    pt.floor = std::max(std::abs(d - dh) / 3.0, kArithmeticFloor);
    pt.excluded = !(d > 100.0 * pt.floor);
    report.points.push_back(pt);
  }

  int used = 0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  report.window_lo = 0;
  report.window_hi = 0;
  for (const auto& pt : report.points) {
    if (pt.excluded) continue;
    const double x = std::log(pt.tau), y = std::log(pt.d);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    if (used == 0) report.window_lo = pt.tau;
    report.window_hi = pt.tau;
    ++used;
  }
  if (used < 4)
    throw std::runtime_error(
        "scaling_exponent: fewer than 4 points above the numerical floor");
  report.slope = (used * sxy - sx * sy) / (used * sxx - sx * sx);
  return report;
}

void write_verification_csv(const VerificationReport& report,
                            std::ostream& os) {
  os << "tau,lambda_tau,d,excluded_from_fit\n";
  char buf[160];
  for (const auto& pt : report.points) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%d\n", pt.tau,
                  pt.lambda_tau, pt.d, pt.excluded ? 1 : 0);
    os << buf;
  }
  std::snprintf(buf, sizeof(buf), "slope=%.6f,window=[%.6g,%.6g]\n",
                report.slope, report.window_lo, report.window_hi);
  os << buf;
}

namespace {

[[noreturn]] void bath_fail(int line, const std::string& what) {
  throw std::runtime_error("bath parse error, line " + std::to_string(line) +
                           ": " + what);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

// term list: `0.7 X1 + 0.3 Z1 - X2`.  Terms are separated by standalone
// + or - tokens; inside a term the first token may be a weight.
std::vector<PauliTerm> parse_terms(std::string_view text, int line) {
  std::vector<std::string> tokens;
  size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() &&
           std::isspace(static_cast<unsigned char>(text[pos])))
      ++pos;
    size_t end = pos;
    while (end < text.size() &&
           !std::isspace(static_cast<unsigned char>(text[end])))
      ++end;
    if (end > pos) tokens.emplace_back(text.substr(pos, end - pos));
    pos = end;
  }
  if (tokens.empty()) bath_fail(line, "empty term list");

  std::vector<PauliTerm> terms;
  std::vector<std::string> group;
  double sign = 1.0;

  auto flush = [&](double group_sign) {
    if (group.empty()) bath_fail(line, "empty term");
    PauliTerm term;
    term.weight = group_sign;
    size_t first = 0;
    char* end = nullptr;
    const double w = std::strtod(group[0].c_str(), &end);
    if (end == group[0].c_str() + group[0].size()) {
      term.weight *= w;
      first = 1;
    }
    for (size_t i = first; i < group.size(); ++i) {
      const std::string& tok = group[i];
      if (tok.size() < 2 ||
          std::string("XYZI").find(tok[0]) == std::string::npos)
        bath_fail(line, "malformed Pauli factor '" + tok + "'");
      char* site_end = nullptr;
      const long site = std::strtol(tok.c_str() + 1, &site_end, 10);
      if (*site_end != '\0' || site < 1)
        bath_fail(line, "malformed Pauli factor '" + tok + "'");
      term.factors.emplace_back(tok[0], static_cast<int>(site));
    }
    terms.push_back(std::move(term));
    group.clear();
  };

  for (const auto& tok : tokens) {
    if (tok == "+" || tok == "-") {
      flush(sign);
      sign = tok == "-" ? -1.0 : 1.0;
    } else {
      group.push_back(tok);
    }
  }
  flush(sign);
  return terms;
}

}  // namespace

BathSpec parse_bath(std::string_view text) {
  BathSpec spec;
  bool have_n = false;
  int line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    const size_t eol = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, eol == std::string_view::npos ? text.size() - pos
                                                       : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    if (const size_t hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string_view::npos) bath_fail(line_no, "expected 'key = value'");
    const std::string key{trim(line.substr(0, eq))};
    const std::string value{trim(line.substr(eq + 1))};

    auto number = [&](const std::string& v) {
      char* end = nullptr;
      const double x = std::strtod(v.c_str(), &end);
      if (v.empty() || end != v.c_str() + v.size())
        bath_fail(line_no, "malformed number '" + v + "'");
      return x;
    };
    if (key == "n_spins") {
      spec.n_spins = static_cast<int>(number(value));
      have_n = true;
    } else if (key == "lambda") {
      spec.lambda = number(value);
    } else if (key == "omega_b") {
      spec.omega_b = number(value);
    } else if (key == "hb0") {
      spec.hb0 = parse_terms(value, line_no);
    } else if (key == "hb1") {
      spec.hb1 = parse_terms(value, line_no);
    } else if (key == "a0") {
      spec.a0 = parse_terms(value, line_no);
    } else if (key == "a1") {
      spec.a1 = parse_terms(value, line_no);
    } else {
      bath_fail(line_no, "unknown key '" + key + "'");
    }
  }
  if (!have_n) throw std::runtime_error("bath parse error: missing key n_spins");
  return spec;
}

}  // namespace fmpulse
