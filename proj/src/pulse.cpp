#include "fmpulse/pulse.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace fmpulse {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::string format17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void check_time(double t) {
  if (!(t >= -1e-12 && t <= 1.0 + 1e-12))
    throw std::domain_error("pulse time outside [0,1]: " + std::to_string(t));
}

}  // namespace

double PulseSpec::coeff(int n) const {
  auto it = coeffs.find(n);
  return it == coeffs.end() ? 0.0 : it->second;
}

void validate_pulse(const PulseSpec& pulse) {
  if (!(pulse.v0 > 0.0) || !std::isfinite(pulse.v0))
    throw std::invalid_argument("pulse: v0 must be positive");
  if (!(pulse.chi > 0.0 && pulse.chi < kTwoPi))
    throw std::invalid_argument("pulse: chi must lie in (0, 2 pi)");
  for (const auto& [n, b] : pulse.coeffs) {
    if (n < 1) throw std::invalid_argument("pulse: coefficient index must be >= 1");
    if (!std::isfinite(b))
      throw std::invalid_argument("pulse: coefficient b" + std::to_string(n) +
                                  " is not finite");
  }
}

PhaseSeries::PhaseSeries(const PulseSpec& pulse) {
  int nmax = 0;
  for (const auto& [idx, b] : pulse.coeffs) {
    (void)b;
    nmax = std::max(nmax, (idx + 1) / 2);
  }
  terms_.resize(nmax);
  for (int n = 1; n <= nmax; ++n)
    terms_[n - 1] = {kTwoPi * n, pulse.coeff(2 * n - 1), pulse.coeff(2 * n)};
}

double PhaseSeries::phase(double t) const {
  double out = 0.0;
  for (const auto& h : terms_) {
    const double a = h.w * t;
    out += h.bs * std::sin(a) + h.bc * (std::cos(a) - 1.0);
  }
  return out;
}

double PhaseSeries::d1(double t) const {
  double out = 0.0;
  for (const auto& h : terms_) {
    const double a = h.w * t;
    out += h.w * (h.bs * std::cos(a) - h.bc * std::sin(a));
  }
  return out;
}

double PhaseSeries::d2(double t) const {
  double out = 0.0;
  for (const auto& h : terms_) {
    const double a = h.w * t;
    out -= h.w * h.w * (h.bs * std::sin(a) + h.bc * std::cos(a));
  }
  return out;
}

double eval_phase(const PulseSpec& pulse, double t) {
  check_time(t);
  return PhaseSeries(pulse).phase(std::clamp(t, 0.0, 1.0));
}

ControlSample eval_control(const PulseSpec& pulse, double t) {
  const double phi = eval_phase(pulse, t);
  return {t, phi, pulse.v0 * std::cos(phi), pulse.v0 * std::sin(phi)};
}

std::vector<LabSample> lab_frame_waveform(const PulseSpec& pulse,
                                          double omega_L, int grid) {
  if (grid < 2) throw std::domain_error("lab_frame_waveform: grid must be >= 2");
  if (omega_L < 0.0)
    throw std::domain_error("lab_frame_waveform: omega_L must be >= 0");
  const PhaseSeries series(pulse);
  std::vector<LabSample> out(grid);
  for (int k = 0; k < grid; ++k) {
    const double t = double(k) / (grid - 1);
    const double arg = omega_L * t - series.phase(t);
    out[k] = {t, pulse.v0 * std::cos(arg), -pulse.v0 * std::sin(arg)};
  }
  return out;
}

namespace {

[[noreturn]] void parse_fail(int line, const std::string& what) {
  throw std::runtime_error("pulse parse error, line " + std::to_string(line) +
                           ": " + what);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view v, int line) {
  std::string tmp(v);
  char* end = nullptr;
  const double x = std::strtod(tmp.c_str(), &end);
  if (end != tmp.c_str() + tmp.size() || tmp.empty())
    parse_fail(line, "malformed number '" + tmp + "'");
  return x;
}

}  // namespace

PulseSpec parse_pulse(std::string_view text) {
  PulseSpec pulse;
  bool have_chi = false, have_v0 = false;
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
    if (eq == std::string_view::npos) parse_fail(line_no, "expected 'key = value'");
    const std::string key{trim(line.substr(0, eq))};
    const std::string_view value = trim(line.substr(eq + 1));

    if (key == "chi") {
      if (have_chi) parse_fail(line_no, "duplicate key: chi");
      pulse.chi = parse_number(value, line_no);
      have_chi = true;
    } else if (key == "v0") {
      if (have_v0) parse_fail(line_no, "duplicate key: v0");
      pulse.v0 = parse_number(value, line_no);
      have_v0 = true;
    } else if (key == "label") {
      if (!pulse.label.empty()) parse_fail(line_no, "duplicate key: label");
      pulse.label = std::string(value);
    } else if (key.size() > 1 && key[0] == 'b' &&
               key.find_first_not_of("0123456789", 1) == std::string::npos) {
      const long idx = std::strtol(key.c_str() + 1, nullptr, 10);
      if (idx < 1) parse_fail(line_no, "malformed key '" + key + "'");
      if (pulse.coeffs.count(static_cast<int>(idx)))
        parse_fail(line_no, "duplicate coefficient b" + std::to_string(idx));
      pulse.coeffs[static_cast<int>(idx)] = parse_number(value, line_no);
    } else {
      parse_fail(line_no, "unknown key '" + key + "'");
    }
  }
  if (!have_chi) throw std::runtime_error("pulse parse error: missing required key: chi");
  if (!have_v0) throw std::runtime_error("pulse parse error: missing required key: v0");
  validate_pulse(pulse);
  return pulse;
}

std::string serialize_pulse(const PulseSpec& pulse) {
  std::string out;
  if (!pulse.label.empty()) out += "label = " + pulse.label + "\n";
  out += "chi = " + format17(pulse.chi) + "\n";
  out += "v0 = " + format17(pulse.v0) + "\n";
  for (const auto& [n, b] : pulse.coeffs)
    out += "b" + std::to_string(n) + " = " + format17(b) + "\n";
  return out;
}

}  // namespace fmpulse
