#ifndef FMPULSE_PULSE_HPP
#define FMPULSE_PULSE_HPP

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace fmpulse {

// A frequency-modulated pulse: constant amplitude v0 and a time-dependent
// phase built from the Fourier series
//
//   Phi(t) = sum_n  b_{2n-1} sin(2 pi n t) + b_{2n} [cos(2 pi n t) - 1]
//
// on the normalized pulse interval t in [0,1].  Phi(0) = Phi(1) = 0 for
// every coefficient vector.  Amplitudes are in units of the inverse pulse
// duration; time is dimensionless throughout the library.
struct PulseSpec {
  double chi = 0.0;              // target rotation angle, radians
  double v0 = 0.0;               // control amplitude, units of 1/tau_p
  std::map<int, double> coeffs;  // sparse Fourier coefficients b_n, n >= 1
  std::string label;

  // Coefficient by index; absent indices are zero.
  double coeff(int n) const;

  bool operator==(const PulseSpec&) const = default;
};

// Throws std::invalid_argument unless v0 > 0, chi in (0, 2 pi), all
// coefficients finite and indexed >= 1.
void validate_pulse(const PulseSpec& pulse);

// Dense harmonic form of the sparse coefficient map, for hot loops.
class PhaseSeries {
 public:
  PhaseSeries() = default;
  explicit PhaseSeries(const PulseSpec& pulse);

  double phase(double t) const;   // Phi(t), no domain check
  double d1(double t) const;      // Phi'(t)
  double d2(double t) const;      // Phi''(t)

 private:
  struct Harmonic {
    double w;   // 2 pi n
    double bs;  // sine coefficient b_{2n-1}
    double bc;  // cosine coefficient b_{2n}
  };
  std::vector<Harmonic> terms_;
};

struct ControlSample {
  double t;    // time in units of tau_p
  double phi;  // Phi(t), radians
  double vx;   // v0 cos Phi(t)
  double vy;   // v0 sin Phi(t)
};

// Phi(t).  Throws std::domain_error if t is outside [0,1].
double eval_phase(const PulseSpec& pulse, double t);

// Control vector at time t; |v| = v0 exactly, v_z = 0.
ControlSample eval_control(const PulseSpec& pulse, double t);

struct LabSample {
  double t;
  double hx;  //  v0 cos(omega_L t - Phi(t))
  double hy;  // -v0 sin(omega_L t - Phi(t))
};

// Lab-frame waveform sampled on a uniform grid of `grid` points including
// both endpoints.  omega_L is the carrier angular frequency in radians per
// unit normalized time.  Throws std::domain_error on grid < 2 or
// omega_L < 0.
std::vector<LabSample> lab_frame_waveform(const PulseSpec& pulse,
                                          double omega_L, int grid);

// Pulse-file format: UTF-8 lines of `key = value`, `#` starts a comment.
// Required keys `chi`, `v0`; coefficients as `b1 = ...`; optional `label`.
// serialize_pulse writes 17 significant digits so that
// parse_pulse(serialize_pulse(p)) == p bit-exactly.
// parse_pulse throws std::runtime_error with a line number on malformed
// input, duplicate keys, or missing chi / v0.
PulseSpec parse_pulse(std::string_view text);
std::string serialize_pulse(const PulseSpec& pulse);

}  // namespace fmpulse

#endif  // FMPULSE_PULSE_HPP
