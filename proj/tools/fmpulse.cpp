// Command-line front end: solve for pulses, check built-in or file pulses
// against the decoupling conditions, verify decoupling order against the
// quantum oracle, export waveforms, list the built-in tables.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "fmpulse/conditions.hpp"
#include "fmpulse/kinematics.hpp"
#include "fmpulse/pulse.hpp"
#include "fmpulse/solver.hpp"
#include "fmpulse/tables.hpp"
#include "fmpulse/verifier.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;
constexpr double kPi = 3.14159265358979323846;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// NAME (built-in, case-insensitive) or a pulse-file path.
fmpulse::PulseSpec load_pulse(const std::string& arg) {
  if (auto p = fmpulse::find_builtin(arg)) return *p;
  auto pulse = fmpulse::parse_pulse(read_file(arg));
  if (pulse.label.empty()) pulse.label = arg;
  return pulse;
}

double parse_angle(const std::string& s) {
  if (s == "pi") return kPi;
  if (s == "pi2") return kPi / 2;
  throw CLI::ValidationError("--angle", "must be 'pi' or 'pi2'");
}

int parse_coeff_index(const std::string& s) {
  const std::string digits = (!s.empty() && (s[0] == 'b' || s[0] == 'B'))
                                 ? s.substr(1)
                                 : s;
  char* end = nullptr;
  const long idx = std::strtol(digits.c_str(), &end, 10);
  if (*end != '\0' || idx < 1)
    throw CLI::ValidationError("--extra", "expected a coefficient like b14");
  return static_cast<int>(idx);
}

void print_pulse_block(const fmpulse::PulseSpec& p, bool full_precision) {
  const char* fmt = full_precision ? "  %-4s = %.17g\n" : "  %-4s = %.8f\n";
  std::printf("%s  (chi = %s)\n", p.label.c_str(),
              std::abs(p.chi - kPi) < 1e-12 ? "pi" : "pi/2");
  std::printf(fmt, "V0", p.v0);
  for (const auto& [n, b] : p.coeffs) {
    char key[8];
    std::snprintf(key, sizeof(key), "b%d", n);
    std::printf(fmt, key, b);
  }
}

int cmd_tables(bool refined) {
  const auto& pulses =
      refined ? fmpulse::refined_pulses() : fmpulse::published_pulses();
  for (const auto& p : pulses) {
    print_pulse_block(p, refined);
    std::printf("\n");
  }
  return kExitOk;
}

int cmd_check(const std::string& pulse_arg, int order, int grid, double tol) {
  const fmpulse::PulseSpec pulse = load_pulse(pulse_arg);
  const fmpulse::RotationTrajectory traj = fmpulse::propagate_su2(pulse, grid);
  const fmpulse::ConditionResiduals r =
      fmpulse::evaluate_conditions(traj, pulse.chi);
  const std::string label = pulse.label.empty() ? pulse_arg : pulse.label;
  std::printf("%s", fmpulse::residual_report(label, r, order).c_str());
  std::printf("csv: %s\n", fmpulse::residual_csv_row(label, r, order).c_str());
  return r.max_abs(order) <= tol ? kExitOk : kExitDomain;
}

int cmd_solve(int order, double chi, bool minimize, int extra, int grid,
              double tol, int seeds, std::uint64_t seed, bool random_only,
              const std::string& out_path) {
  fmpulse::SolveConfig config;
  config.order = order;
  config.chi = chi;
  config.grid = grid;
  config.tol = tol;
  config.random_seeds = seeds;
  config.rng_seed = seed;
  config.builtin_seeds = !random_only;
  config.log = &std::cerr;

  fmpulse::SolveResult result = minimize
                                    ? fmpulse::minimize_amplitude(config, extra)
                                    : fmpulse::solve_pulse(config);
  if (!result.converged) {
    std::fprintf(stderr, "no convergence (best residual max %.3e)\n",
                 result.residual_max);
    return kExitDomain;
  }
  std::printf("converged: seed %d, %d iterations, V0 = %.12f\n",
              result.seed_index, result.iterations, result.pulse.v0);
  std::printf("residual max %.3e (recheck at finer grid %.3e)\n",
              result.residual_max, result.recheck_max);
  if (minimize) {
    std::printf("minimize trace (%zu probes):\n", result.minimize_trace.size());
    for (const auto& [x, v0] : result.minimize_trace)
      std::printf("  b%d = %+.6f  ->  V0 = %.9f\n", extra, x, v0);
  }
  std::ofstream out(out_path);
  if (!out) {
    std::fprintf(stderr, "cannot write %s\n", out_path.c_str());
    return kExitDomain;
  }
  out << fmpulse::serialize_pulse(result.pulse);
  return kExitOk;
}

int cmd_verify(const std::string& pulse_arg, const std::string& bath_path,
               double tau_min, double tau_max, int points, int steps,
               const std::string& out_path) {
  const fmpulse::PulseSpec pulse = load_pulse(pulse_arg);
  const fmpulse::BathSpec bath = bath_path.empty()
                                     ? fmpulse::default_bath()
                                     : fmpulse::parse_bath(read_file(bath_path));
  const std::vector<double> taus =
      fmpulse::log_spaced_taus(tau_min, tau_max, points, bath.lambda);
  const fmpulse::VerificationReport report =
      fmpulse::scaling_exponent(pulse, bath, taus, steps);

  std::ofstream out(out_path);
  if (!out) {
    std::fprintf(stderr, "cannot write %s\n", out_path.c_str());
    return kExitDomain;
  }
  fmpulse::write_verification_csv(report, out);
  std::printf("slope = %.4f over tau in [%g, %g]\n", report.slope,
              report.window_lo, report.window_hi);
  return kExitOk;
}

int cmd_export(const std::string& pulse_arg, int grid, double larmor,
               bool have_larmor, const std::string& out_path) {
  const fmpulse::PulseSpec pulse = load_pulse(pulse_arg);
  std::ofstream out(out_path);
  if (!out) {
    std::fprintf(stderr, "cannot write %s\n", out_path.c_str());
    return kExitDomain;
  }
  if (have_larmor) {
    const auto samples = fmpulse::lab_frame_waveform(pulse, larmor, grid + 1);
    out << "t,hx,hy\n";
    char buf[128];
    for (const auto& s : samples) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", s.t, s.hx, s.hy);
      out << buf;
    }
  } else {
    const fmpulse::RotationTrajectory traj = fmpulse::propagate_su2(pulse, grid);
    fmpulse::write_trajectory_csv(traj, out);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"frequency-modulated decoupling pulse engine"};
  app.require_subcommand(1);

  // solve
  auto* solve = app.add_subcommand("solve", "find a pulse by root finding");
  int order = 1;
  std::string angle = "pi";
  bool minimize = false;
  std::string extra = "b14";
  int grid = 4096;
  double tol = 1e-10;
  int seeds = 0;
  std::uint64_t seed = 20120601;
  bool random_only = false;
  std::string out_path;
  solve->add_option("--order", order, "decoupling order")->check(CLI::IsMember({1, 2}));
  solve->add_option("--angle", angle, "target angle, pi or pi2");
  solve->add_flag("--minimize", minimize, "minimize V0 over an extra coefficient");
  solve->add_option("--extra", extra, "extra coefficient for --minimize (e.g. b14)");
  solve->add_option("--grid", grid, "trajectory steps");
  solve->add_option("--tol", tol, "residual max-norm target");
  solve->add_option("--seeds", seeds, "number of random seeds");
  solve->add_option("--seed", seed, "random generator seed");
  solve->add_flag("--random-only", random_only, "skip the built-in table seeds");
  solve->add_option("--out", out_path, "output pulse file")->required();

  // check
  auto* check = app.add_subcommand("check", "evaluate the decoupling conditions");
  std::string check_pulse;
  int check_order = 1;
  int check_grid = 4096;
  double check_tol = 1e-7;
  check->add_option("--pulse", check_pulse, "built-in name or pulse file")->required();
  check->add_option("--order", check_order, "order to report")->check(CLI::IsMember({1, 2}));
  check->add_option("--grid", check_grid, "trajectory steps");
  check->add_option("--tol", check_tol, "pass/fail threshold on the max-norm");

  // verify
  auto* verify = app.add_subcommand("verify", "measure the decoupling order");
  std::string verify_pulse, bath_path;
  double tau_min = 1e-3, tau_max = 1e-1;
  int points = 8, steps = 4096;
  std::string verify_out;
  verify->add_option("--pulse", verify_pulse, "built-in name or pulse file")->required();
  verify->add_option("--bath", bath_path, "bath file (default: stock 1-spin bath)");
  verify->add_option("--tau-min", tau_min, "smallest lambda*tau");
  verify->add_option("--tau-max", tau_max, "largest lambda*tau");
  verify->add_option("--points", points, "sweep points");
  verify->add_option("--steps", steps, "oracle steps per evolution");
  verify->add_option("--out", verify_out, "output CSV")->required();

  // export
  auto* exportc = app.add_subcommand("export", "write trajectory or waveform CSV");
  std::string export_pulse, export_out;
  int export_grid = 4096;
  double larmor = 0.0;
  exportc->add_option("--pulse", export_pulse, "built-in name or pulse file")->required();
  exportc->add_option("--grid", export_grid, "sample intervals");
  auto* larmor_opt =
      exportc->add_option("--larmor", larmor, "lab-frame carrier frequency");
  exportc->add_option("--out", export_out, "output CSV")->required();

  // tables
  auto* tables = app.add_subcommand("tables", "print the built-in pulses");
  bool refined = false;
  tables->add_flag("--refined", refined, "print the refined variants instead");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints message / help
    return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*solve)
      return cmd_solve(order, parse_angle(angle), minimize,
                       parse_coeff_index(extra), grid, tol, seeds, seed,
                       random_only, out_path);
    if (*check) return cmd_check(check_pulse, check_order, check_grid, check_tol);
    if (*verify)
      return cmd_verify(verify_pulse, bath_path, tau_min, tau_max, points,
                        steps, verify_out);
    if (*exportc)
      return cmd_export(export_pulse, export_grid, larmor,
                        larmor_opt->count() > 0, export_out);
    if (*tables) return cmd_tables(refined);
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitDomain;
  }
  return kExitUsage;
}
