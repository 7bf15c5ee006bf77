"""Adaptive regularization when no Lipschitz constants are known.

Starts the doubling line search from a tiny M and watches it settle, then
compares the final value against the fixed-M run that needs the constants.
"""
import numpy as np

from hodc import ModelParams, SolverConfig, builtin_problem, run_ahodc, run_hodc

problem = builtin_problem("poly_dc", 4)
x0 = np.full(problem.n, 3.5)
params = ModelParams(2, 1, 1.0, 1.0)  # placeholder M, overridden by M_p0/M_q0

adaptive = run_ahodc(problem, x0, SolverConfig(params, mode="adaptive", gamma=1e-3, M_p0=1e-6, M_q0=1e-6))
print("  k   doublings   M_p used      F")
for rec in adaptive.trace[1:8]:
    print(f"{rec.k:3d}   {rec.doublings:9d}   {rec.M_p_used:.3e}   {rec.F_value:.10f}")
print(f"... {adaptive.status} after {len(adaptive.trace) - 1} iterations, F = {adaptive.F_final:.12f}")

L = problem.f.lipschitz_hint(2), problem.g.lipschitz_hint(1)
fixed = run_hodc(problem, x0, SolverConfig(params.with_regularization(1.5 * L[0], 1.5 * L[1])))
print(f"fixed M = 1.5 L: {fixed.status} after {len(fixed.trace) - 1} iterations, F = {fixed.F_final:.12f}")
print(f"stationary value -3n = {-3.0 * problem.n}")
