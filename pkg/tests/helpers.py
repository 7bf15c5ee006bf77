"""Shared fixtures-by-function for the test modules."""
import numpy as np

from hodc.model import ModelParams
from hodc.oracles import builtin_problem
from hodc.solver import SolverConfig, run_hodc

PQ = [(1, 1), (2, 1), (1, 2), (2, 2)]
SIZES = {"quad_minus_quad": 5, "lasso_minus_concave": 5, "lse_minus_lse": 5, "poly_dc": 3}


def hints(problem, p, q):
    return problem.f.lipschitz_hint(p), problem.g.lipschitz_hint(q)


def default_M(L):
    # 1.5 x hint; a zero hint (exact Taylor model) gets M = 1
    return 1.5 * L if L > 0 else 1.0


def supported(problem, p, q):
    return problem.psi.is_zero or q == 1


def sweep_cases():
    """(name, problem, p, q) over the builtin problems and supported orders."""
    out = []
    for name, n in SIZES.items():
        problem = builtin_problem(name, n, seed=0)
        for p, q in PQ:
            if supported(problem, p, q):
                out.append((name, problem, p, q))
    return out


def fixed_run(problem, p, q, x0=None, **config):
    L_p, L_q = hints(problem, p, q)
    params = ModelParams(p, q, default_M(L_p), default_M(L_q))
    x0 = np.ones(problem.n) if x0 is None else x0
    return run_hodc(problem, x0, SolverConfig(params, **config)), params, (L_p, L_q)
