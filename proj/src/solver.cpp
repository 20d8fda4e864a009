#include "fmpulse/solver.hpp"

#include <gsl/gsl_multiroots.h>
#include <gsl/gsl_vector.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

#include "fmpulse/kinematics.hpp"
#include "fmpulse/tables.hpp"

namespace fmpulse {

namespace {

int expected_equations(int order) { return order == 1 ? 5 : 11; }

PulseSpec pulse_from_params(std::span<const double> params,
                            const SolveConfig& config,
                            const std::vector<int>& active) {
  PulseSpec p;
  p.chi = config.chi;
  p.v0 = params[0];
  for (size_t i = 0; i < active.size(); ++i) p.coeffs[active[i]] = params[1 + i];
  for (const auto& [n, b] : config.frozen_coeffs) p.coeffs[n] = b;
  return p;
}

std::vector<double> residuals_at(const PulseSpec& pulse,
                                 const SolveConfig& config, int grid) {
  const RotationTrajectory traj = propagate_su2(pulse, grid);
  const auto e1 = first_order_residuals(traj);
  const auto bc = boundary_residuals(traj, config.chi);
  std::vector<double> r{e1[0], e1[1], e1[2], bc[0], bc[1]};
  if (config.order >= 2) {
    const auto e2 = second_order_residuals(traj);
    r.insert(r.end(), e2.begin(), e2.end());
  }
  return r;
}

double max_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// GSL adapter.  Non-evaluable points (v0 out of range) become smooth
// penalty walls that no iterate can mistake for a root.
struct GslCtx {
  const SolveConfig* config;
  const std::vector<int>* active;
  int n;
  long evals = 0;

  void eval(const gsl_vector* x, gsl_vector* f) const {
    std::vector<double> p(n);
    for (int i = 0; i < n; ++i) p[i] = gsl_vector_get(x, i);
    const double v0 = p[0];
    const double v0_max = config->grid / 32.0;
    if (!(v0 > 0.0) || v0 > v0_max || !std::isfinite(v0)) {
      const double excess =
          !(v0 > 0.0) ? 1.0 - v0 : (std::isfinite(v0) ? v0 - v0_max : 1e6);
      for (int i = 0; i < n; ++i)
        gsl_vector_set(f, i, 1e3 * (1.0 + excess));
      return;
    }
    // pulse evaluation must not throw through the GSL C frames
    try {
      const PulseSpec pulse = pulse_from_params(p, *config, *active);
      const std::vector<double> r = residuals_at(pulse, *config, config->grid);
      for (int i = 0; i < n; ++i) gsl_vector_set(f, i, r[i]);
    } catch (const std::exception&) {
      for (int i = 0; i < n; ++i) gsl_vector_set(f, i, 1e3);
    }
  }
};

int gsl_f(const gsl_vector* x, void* params, gsl_vector* f) {
  auto* ctx = static_cast<GslCtx*>(params);
  ++ctx->evals;
  ctx->eval(x, f);
  return GSL_SUCCESS;
}

// Central differences, absolute step 1e-6 per parameter.
int gsl_df(const gsl_vector* x, void* params, gsl_matrix* J) {
  auto* ctx = static_cast<GslCtx*>(params);
  const int n = ctx->n;
  const double step = 1e-6;
  gsl_vector* xp = gsl_vector_alloc(n);
  gsl_vector* fp = gsl_vector_alloc(n);
  gsl_vector* fm = gsl_vector_alloc(n);
  for (int j = 0; j < n; ++j) {
    gsl_vector_memcpy(xp, x);
    gsl_vector_set(xp, j, gsl_vector_get(x, j) + step);
    ctx->eval(xp, fp);
    gsl_vector_set(xp, j, gsl_vector_get(x, j) - step);
    ctx->eval(xp, fm);
    ctx->evals += 2;
    for (int i = 0; i < n; ++i)
      gsl_matrix_set(J, i, j,
                     (gsl_vector_get(fp, i) - gsl_vector_get(fm, i)) /
                         (2.0 * step));
  }
  gsl_vector_free(xp);
  gsl_vector_free(fp);
  gsl_vector_free(fm);
  return GSL_SUCCESS;
}

int gsl_fdf(const gsl_vector* x, void* params, gsl_vector* f, gsl_matrix* J) {
  gsl_f(x, params, f);
  gsl_df(x, params, J);
  return GSL_SUCCESS;
}

struct SeedOutcome {
  bool converged = false;
  std::vector<double> params;
  double residual_max = std::numeric_limits<double>::infinity();
  int iterations = 0;
};

SeedOutcome run_seed(const SolveConfig& config, const std::vector<int>& active,
                     const std::vector<double>& start, int seed_index) {
  const int n = static_cast<int>(start.size());
  GslCtx ctx{&config, &active, n};
  gsl_multiroot_function_fdf F{&gsl_f, &gsl_df, &gsl_fdf,
                               static_cast<size_t>(n), &ctx};

  gsl_vector* x0 = gsl_vector_alloc(n);
  for (int i = 0; i < n; ++i) gsl_vector_set(x0, i, start[i]);
  gsl_multiroot_fdfsolver* s =
      gsl_multiroot_fdfsolver_alloc(gsl_multiroot_fdfsolver_hybridsj, n);
  gsl_multiroot_fdfsolver_set(s, &F, x0);

  SeedOutcome out;
  out.params = start;
  auto record = [&]() {
    double m = 0.0;
    for (int i = 0; i < n; ++i)
      m = std::max(m, std::abs(gsl_vector_get(s->f, i)));
    if (m < out.residual_max) {
      out.residual_max = m;
      for (int i = 0; i < n; ++i) out.params[i] = gsl_vector_get(s->x, i);
    }
    return m;
  };

  double m = record();
  for (int iter = 1; iter <= config.max_iter && m > config.tol; ++iter) {
    const int status = gsl_multiroot_fdfsolver_iterate(s);
    out.iterations = iter;
    if (status) break;  // GSL_ENOPROG or similar: this seed stalled
    m = record();
    if (config.log) {
      double step_norm = 0.0;
      for (int i = 0; i < n; ++i)
        step_norm =
            std::max(step_norm, std::abs(gsl_vector_get(s->dx, i)));
      char line[160];
      std::snprintf(line, sizeof(line), "seed %d: %d,%.3e,%.9f,%.3e\n",
                    seed_index, iter, m, gsl_vector_get(s->x, 0), step_norm);
      *config.log << line;
    }
  }
  out.converged = out.residual_max <= config.tol;

  gsl_multiroot_fdfsolver_free(s);
  gsl_vector_free(x0);
  return out;
}

std::vector<std::vector<double>> build_seed_list(const SolveConfig& config,
                                                 const std::vector<int>& active) {
  std::vector<std::vector<double>> seeds = config.seed_points;
  for (const auto& s : seeds)
    if (s.size() != active.size() + 1)
      throw std::invalid_argument("solve_pulse: seed point has wrong length");

  if (config.builtin_seeds) {
    auto matches = [&](const PulseSpec& p) {
      const bool chi_ok = std::abs(p.chi - config.chi) < 1e-9;
      const bool order_ok =
          (config.order == 1) == (p.coeffs.count(5) == 0);
      return chi_ok && order_ok;
    };
    for (const auto& set : {&published_pulses(), &refined_pulses()})
      for (const auto& p : *set)
        if (matches(p)) {
          std::vector<double> s(active.size() + 1);
          s[0] = p.v0;
          for (size_t i = 0; i < active.size(); ++i)
            s[1 + i] = p.coeff(active[i]);
          seeds.push_back(std::move(s));
        }
  }

  std::mt19937_64 rng(config.rng_seed);
  std::uniform_real_distribution<double> v0_draw(config.v0_lo, config.v0_hi);
  std::uniform_real_distribution<double> b_draw(config.coeff_lo,
                                                config.coeff_hi);
  for (int k = 0; k < config.random_seeds; ++k) {
    std::vector<double> s(active.size() + 1);
    s[0] = v0_draw(rng);
    for (size_t i = 0; i < active.size(); ++i) s[1 + i] = b_draw(rng);
    seeds.push_back(std::move(s));
  }
  return seeds;
}

}  // namespace

std::vector<int> active_indices(const SolveConfig& config) {
  if (!config.active_indices.empty()) return config.active_indices;
  std::vector<int> idx;
  const int count = config.order == 1 ? 4 : 10;
  for (int i = 1; i <= count; ++i) idx.push_back(i);
  return idx;
}

std::vector<double> assemble_residuals(std::span<const double> params,
                                       const SolveConfig& config) {
  const std::vector<int> active = active_indices(config);
  if (params.size() != active.size() + 1)
    throw std::invalid_argument("assemble_residuals: parameter count mismatch");
  const double v0 = params[0];
  if (!(v0 > 0.0))
    throw std::domain_error("assemble_residuals: v0 must be positive");
  if (v0 > config.grid / 32.0)
    throw std::domain_error("assemble_residuals: v0 too large for the grid");
  const PulseSpec pulse = pulse_from_params(params, config, active);
  return residuals_at(pulse, config, config.grid);
}

SolveResult solve_pulse(const SolveConfig& config) {
  if (config.order != 1 && config.order != 2)
    throw std::invalid_argument("solve_pulse: order must be 1 or 2");
  const std::vector<int> active = active_indices(config);
  const int n_eq = expected_equations(config.order);
  if (static_cast<int>(active.size()) + 1 != n_eq)
    throw std::invalid_argument(
        "solve_pulse: system is not square (" +
        std::to_string(active.size() + 1) + " unknowns, " +
        std::to_string(n_eq) + " equations)");

  const auto seeds = build_seed_list(config, active);
  if (seeds.empty())
    throw std::invalid_argument("solve_pulse: no seeds configured");

  const int verify_grid =
      config.verify_grid > 0 ? config.verify_grid : 2 * config.grid;

  SolveResult best;
  bool have_converged = false;
  SeedOutcome best_attempt;
  int best_attempt_seed = -1;

  for (size_t si = 0; si < seeds.size(); ++si) {
    const SeedOutcome out = run_seed(config, active, seeds[si], int(si));
    if (!out.converged) {
      if (out.residual_max < best_attempt.residual_max) {
        best_attempt = out;
        best_attempt_seed = int(si);
      }
      continue;
    }
    // guard against quadrature-artifact roots: recheck on a finer grid
    const PulseSpec pulse = pulse_from_params(out.params, config, active);
    SolveConfig fine = config;
    fine.grid = verify_grid;
    const std::vector<double> rv = residuals_at(pulse, fine, verify_grid);
    const double recheck = max_norm(rv);
    if (recheck > 10.0 * config.tol) {
      if (out.residual_max < best_attempt.residual_max) {
        best_attempt = out;
        best_attempt_seed = int(si);
      }
      continue;
    }
    if (!have_converged || pulse.v0 < best.pulse.v0) {
      best.pulse = pulse;
      best.pulse.label = "";
      best.converged = true;
      best.iterations = out.iterations;
      best.seed_index = int(si);
      best.residual_max = out.residual_max;
      best.recheck_max = recheck;
      const RotationTrajectory traj = propagate_su2(pulse, config.grid);
      best.residuals = evaluate_conditions(traj, config.chi);
      have_converged = true;
    }
    if (config.stop_at_first) break;
  }

  if (have_converged) return best;

  SolveResult fail;
  fail.converged = false;
  fail.seed_index = best_attempt_seed;
  fail.iterations = best_attempt.iterations;
  fail.residual_max = best_attempt.residual_max;
  if (!best_attempt.params.empty() && best_attempt.params[0] > 0.0 &&
      best_attempt.params[0] <= config.grid / 32.0) {
    fail.pulse = pulse_from_params(best_attempt.params, config, active);
    const RotationTrajectory traj = propagate_su2(fail.pulse, config.grid);
    fail.residuals = evaluate_conditions(traj, config.chi);
  }
  return fail;
}

SolveResult minimize_amplitude(const SolveConfig& config, int extra_index) {
  if (config.order != 2)
    throw std::invalid_argument("minimize_amplitude: requires order 2");
  const std::vector<int> active = active_indices(config);
  if (std::find(active.begin(), active.end(), extra_index) != active.end())
    throw std::invalid_argument(
        "minimize_amplitude: extra index is already an unknown");
  if (config.frozen_coeffs.count(extra_index))
    throw std::invalid_argument("minimize_amplitude: extra index is frozen");

  std::vector<std::pair<double, double>> trace;
  std::vector<double> warm;  // best parameter vector seen so far

  auto probe = [&](double x) -> SolveResult {
    SolveConfig inner = config;
    inner.frozen_coeffs[extra_index] = x;
    inner.stop_at_first = true;
    if (!warm.empty())
      inner.seed_points.insert(inner.seed_points.begin(), warm);
    SolveResult r = solve_pulse(inner);
    if (r.converged) {
      trace.emplace_back(x, r.pulse.v0);
      warm.resize(active.size() + 1);
      warm[0] = r.pulse.v0;
      for (size_t i = 0; i < active.size(); ++i)
        warm[1 + i] = r.pulse.coeff(active[i]);
    } else {
      trace.emplace_back(x, std::numeric_limits<double>::infinity());
    }
    return r;
  };

  const double inf = std::numeric_limits<double>::infinity();

  // Degenerate range: a single frozen value, plain solve.
  if (config.minimize_lo == config.minimize_hi) {
    SolveResult r = probe(config.minimize_lo);
    r.minimize_trace = trace;
    return r;
  }

  // Coarse scan with bracket expansion, then golden section.
  double lo = config.minimize_lo, hi = config.minimize_hi;
  constexpr int kScanPoints = 9;
  std::vector<double> xs, vs;
  std::vector<SolveResult> results;

  auto scan = [&](double a, double b) {
    xs.clear();
    vs.clear();
    results.clear();
    // march outward from the center so warm starts track the branch
    std::vector<double> order;
    for (int k = 0; k < kScanPoints; ++k)
      order.push_back(a + (b - a) * k / (kScanPoints - 1));
    std::sort(order.begin(), order.end(), [&](double p, double q) {
      return std::abs(p - (a + b) / 2) < std::abs(q - (a + b) / 2);
    });
    std::vector<std::pair<double, SolveResult>> got;
    for (double x : order) got.emplace_back(x, probe(x));
    std::sort(got.begin(), got.end(),
              [](const auto& p, const auto& q) { return p.first < q.first; });
    for (auto& [x, r] : got) {
      xs.push_back(x);
      vs.push_back(r.converged ? r.pulse.v0 : inf);
      results.push_back(std::move(r));
    }
  };

  scan(lo, hi);
  for (int expand = 0; expand < 2; ++expand) {
    const auto it = std::min_element(vs.begin(), vs.end());
    if (*it == inf) break;  // nothing converged; expansion will not help
    const size_t i = it - vs.begin();
    if (i != 0 && i != vs.size() - 1) break;  // interior minimum: bracketed
    lo *= 2.0;
    hi *= 2.0;
    scan(lo, hi);
  }

  const auto it = std::min_element(vs.begin(), vs.end());
  if (*it == inf)
    throw std::runtime_error(
        "minimize_amplitude: no converged inner solve in the search range");
  size_t imin = it - vs.begin();

  double a = xs[std::max<size_t>(imin, 1) - 1];
  double b = xs[std::min(imin + 1, xs.size() - 1)];
  SolveResult best = results[imin];

  // Golden-section refinement; failed probes count as +inf.
  const double gr = 0.618033988749894848;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  SolveResult r1 = probe(x1), r2 = probe(x2);
  double f1 = r1.converged ? r1.pulse.v0 : inf;
  double f2 = r2.converged ? r2.pulse.v0 : inf;
  for (int iter = 0; iter < 40 && (b - a) > 1e-3; ++iter) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      r2 = r1;
      x1 = b - gr * (b - a);
      r1 = probe(x1);
      f1 = r1.converged ? r1.pulse.v0 : inf;
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      r1 = r2;
      x2 = a + gr * (b - a);
      r2 = probe(x2);
      f2 = r2.converged ? r2.pulse.v0 : inf;
    }
    if (r1.converged && f1 < best.pulse.v0) best = r1;
    if (r2.converged && f2 < best.pulse.v0) best = r2;
  }

  best.minimize_trace = trace;
  return best;
}

}  // namespace fmpulse
