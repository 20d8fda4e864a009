#ifndef FMPULSE_SOLVER_HPP
#define FMPULSE_SOLVER_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "fmpulse/conditions.hpp"
#include "fmpulse/pulse.hpp"

namespace fmpulse {

// Root-finding setup.  The parameter vector is [v0, b_i for i in
// active_indices]; the residual vector is
//   order 1: [eta11, eta12, eta13, bc_psi, bc_theta]            (5)
//   order 2: the above followed by [eta21 .. eta26]             (11)
// so the system is square with the default active sets {1..4} and {1..10}.
struct SolveConfig {
  int order = 1;
  double chi = 3.14159265358979323846;
  std::vector<int> active_indices;  // empty -> default for the order
  std::map<int, double> frozen_coeffs;  // held fixed during the solve

  int grid = 4096;          // trajectory steps during iteration
  int verify_grid = 0;      // recheck grid; 0 -> 2 * grid
  double tol = 1e-10;       // residual max-norm target
  int max_iter = 200;       // per seed

  // Seeding: explicit start vectors first, then matching built-in pulses
  // (unless disabled), then `random_seeds` pseudo-random draws.
  std::vector<std::vector<double>> seed_points;
  bool builtin_seeds = true;
  int random_seeds = 0;
  std::uint64_t rng_seed = 20120601;
  double v0_lo = 1.0, v0_hi = 8.0;
  double coeff_lo = -2.0, coeff_hi = 2.0;

  bool stop_at_first = true;  // otherwise run all seeds, keep lowest v0

  // 1-D search range for minimize_amplitude's extra coefficient.
  double minimize_lo = -2.0, minimize_hi = 2.0;

  std::ostream* log = nullptr;  // one line per iteration when set
};

struct SolveResult {
  PulseSpec pulse;
  ConditionResiduals residuals;
  int iterations = 0;
  bool converged = false;
  int seed_index = -1;
  double residual_max = 0.0;  // at config.grid
  double recheck_max = 0.0;   // at the verification grid
  std::vector<std::pair<double, double>> minimize_trace;  // (extra b, v0)
};

// Effective active index list for a config (applies the defaults).
std::vector<int> active_indices(const SolveConfig& config);

// Residual vector at a parameter point.  Throws std::domain_error for
// non-evaluable points (v0 <= 0 or v0 too large for the grid); the root
// finder treats those as penalty walls.
std::vector<double> assemble_residuals(std::span<const double> params,
                                       const SolveConfig& config);

// Multi-start Powell-hybrid root finding (GSL hybridsj with a
// central-difference Jacobian, step 1e-6 per parameter).  A converged
// result satisfies max-norm <= tol at config.grid and <= 10 tol at the
// verification grid.  With no convergent seed, returns converged = false
// and the best attempt.  Throws std::invalid_argument on an empty seed
// list or a non-square system.
SolveResult solve_pulse(const SolveConfig& config);

// Outer golden-section minimization of v0 over one extra coefficient, the
// inner solves warm-started along the search.  Throws std::runtime_error
// if no converged inner solve exists in the search range.
SolveResult minimize_amplitude(const SolveConfig& config, int extra_index);

}  // namespace fmpulse

#endif  // FMPULSE_SOLVER_HPP
