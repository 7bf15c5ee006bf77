import math

import numpy as np
import pytest

from hodc.errors import CapabilityError, InputError
from hodc.model import ModelParams
from hodc.oracles import DcProblem, SimpleConvexTerm, SmoothOracle, builtin_problem, l1_term, make_quad_minus_quad, quadratic_oracle
from hodc.solver import SolverConfig, run_ahodc, run_hodc, solve, stationarity_residual

from helpers import fixed_run, hints, sweep_cases


# the unit-quadratic examples use M_p = L_p^f = 1 on purpose; the warning is expected there
at_hint = pytest.mark.filterwarnings("ignore:M_p=1.0:RuntimeWarning")


def _unit_quad(n=2):
    return make_quad_minus_quad(np.eye(n), np.zeros(n), 0.5)


@at_hint
def test_stationary_start_single_iteration():
    out = run_hodc(_unit_quad(), np.zeros(2), SolverConfig(ModelParams(1, 1, 1.0, 1.0)))
    assert out.status == "converged_step"
    assert len(out.trace) == 2 and out.trace[1].step_norm == 0.0


@at_hint
def test_unit_quadratic_geometric_decay():
    out = run_hodc(_unit_quad(), np.array([1.0, 0.0]), SolverConfig(ModelParams(1, 1, 1.0, 1.0)))
    xs = np.array([r.x for r in out.trace])
    F = np.array([r.F_value for r in out.trace])
    assert np.allclose(F, 0.25 * np.sum(xs**2, axis=1))
    # y = x - (x/2)/2 = 0.75 x, so F shrinks by 0.5625 per step
    ratios = F[1:20] / F[:19]
    assert np.allclose(ratios, 0.5625, rtol=1e-12)
    assert out.status.startswith("converged")


def test_poly_dc_newton_like_run():
    prob = builtin_problem("poly_dc", 1)
    out, params, _ = fixed_run(prob, 2, 2, x0=np.array([3.0]))
    x = out.final_x
    assert x[0] == pytest.approx(math.sqrt(6), abs=1e-8)
    assert abs(prob.f.gradient(x)[0] - prob.g.gradient(x)[0]) < 1e-8


def test_monotone_and_stop_reasons():
    for name, prob, p, q in sweep_cases():
        out, _, _ = fixed_run(prob, p, q, max_outer=200)
        F = [r.F_value for r in out.trace]
        assert all(b <= a + 1e-12 * (1 + abs(a)) for a, b in zip(F, F[1:])), (name, p, q)
        last = out.trace[-1]
        if out.status == "converged_step":
            assert last.step_norm < 1e-9
        elif out.status == "converged_residual":
            assert last.residual_bound < 1e-8
        else:
            assert out.status == "max_iters" and len(out.trace) == 201


def test_bad_start_and_capability():
    prob = builtin_problem("quad_minus_quad", 2, psi="nonneg")
    with pytest.raises(InputError):
        run_hodc(prob, -np.ones(2), SolverConfig(ModelParams(1, 1, 5.0, 5.0)))
    with pytest.raises(InputError):
        run_hodc(prob, np.ones(3), SolverConfig(ModelParams(1, 1, 5.0, 5.0)))
    with pytest.raises(CapabilityError):
        run_hodc(builtin_problem("lasso_minus_concave", 2), np.ones(2), SolverConfig(ModelParams(2, 2, 5.0, 5.0)))


def test_config_validation():
    params = ModelParams(1, 1, 1.0, 1.0)
    for bad in ({"mode": "fast"}, {"gamma": 0.0}, {"max_outer": 0}, {"M_p0": -1.0}):
        with pytest.raises(InputError):
            SolverConfig(params, **bad)


def test_warns_below_hints():
    prob = builtin_problem("quad_minus_quad", 3)
    L = prob.f.lipschitz_hint(1)
    with pytest.warns(RuntimeWarning, match="majorization"):
        run_hodc(prob, np.ones(3), SolverConfig(ModelParams(1, 1, 0.5 * L, 1.0), max_outer=3))


@at_hint
def test_broken_prox_reports_inner_failure():
    # a prox that moves away from the minimizer breaks the surrogate descent test
    psi = SimpleConvexTerm(value=lambda x: 0.0, prox=lambda x, t: np.asarray(x) + 1.0, name="broken")
    base = _unit_quad()
    prob = DcProblem(f=base.f, g=base.g, psi=psi, n=2)
    out = run_hodc(prob, np.ones(2), SolverConfig(ModelParams(1, 1, 1.0, 1.0)))
    assert out.status == "inner_failure" and "violated" in out.message


def test_stationarity_residual_examples():
    assert stationarity_residual(_unit_quad(), np.zeros(2), 0.3) == 0.0
    f = quadratic_oracle(np.zeros((1, 1)), [-0.7])
    prob = DcProblem(f=f, g=quadratic_oracle(np.zeros((1, 1))), psi=l1_term(1.0), n=1)
    assert stationarity_residual(prob, np.zeros(1), 0.5) == 0.0
    with pytest.raises(InputError):
        stationarity_residual(prob, np.zeros(1), 0.0)


def test_stationarity_residual_decreases_on_tail():
    prob = builtin_problem("lasso_minus_concave", 5, seed=3)
    out, params, _ = fixed_run(prob, 1, 1)
    t = 1.0 / (params.M_p + params.M_q)
    res = [stationarity_residual(prob, r.x, t) for r in out.trace[-30:]]
    assert res[0] > 0 and res[-1] < res[0]
    assert all(b <= a * (1 + 1e-6) + 1e-14 for a, b in zip(res, res[1:]))


@pytest.mark.parametrize("pq", [(1, 1), (2, 1), (1, 2), (2, 2)])
def test_fixed_point_of_iteration(pq):
    prob = builtin_problem("quad_minus_quad", 4, seed=2)
    A, b = prob.f.hessian(np.zeros(4)), -prob.f.gradient(np.zeros(4))
    mu = prob.g.hessian(np.zeros(4))[0, 0]
    x_star = np.linalg.solve(A - mu * np.eye(4), b)
    out, _, _ = fixed_run(prob, *pq, x0=x_star)
    assert out.trace[1].step_norm <= 1e-10


# ---------------------------------------------------------------------------
# adaptive


def _adaptive(prob, p, q, M0, **kw):
    params = ModelParams(p, q, 1.0, 1.0)
    cfg = SolverConfig(params, mode="adaptive", M_p0=M0[0], M_q0=M0[1], **kw)
    return run_ahodc(prob, np.ones(prob.n), cfg)


def test_adaptive_halves_after_immediate_acceptance():
    prob = builtin_problem("quad_minus_quad", 4)
    out = _adaptive(prob, 1, 1, (100.0, 100.0), max_outer=5)
    used = [r.M_p_used for r in out.trace[1:]]
    assert used[:3] == [100.0, 50.0, 25.0]
    assert all(r.doublings == 0 for r in out.trace[1:4])


def test_adaptive_doubling_bound_per_iteration():
    gamma = 1e-3
    for name, prob, p, q in sweep_cases():
        L_p, L_q = hints(prob, p, q)
        out = _adaptive(prob, p, q, (1e-6, 1e-6), gamma=gamma, max_outer=100)
        assert out.status != "inner_failure", name
        for rec in out.trace[1:]:
            base_p = rec.M_p_used / 2**rec.doublings
            base_q = rec.M_q_used / 2**rec.doublings
            need = max((gamma + L_p) / base_p, (gamma + L_q) / base_q)
            bound = max(0, math.ceil(math.log2(need))) + 1
            assert rec.doublings <= bound, (name, p, q, rec.k)


def test_adaptive_matches_fixed_final_value():
    prob = builtin_problem("quad_minus_quad", 6, seed=4)
    fixed, _, _ = fixed_run(prob, 1, 1)
    adaptive = solve(prob, np.ones(6), SolverConfig(ModelParams(1, 1, 1.0, 1.0), mode="adaptive", M_p0=1.0, M_q0=1.0))
    assert abs(fixed.F_final - adaptive.F_final) < 1e-6


def test_line_search_budget_exhausted():
    # a gradient with the wrong sign makes every trial step go uphill
    base = builtin_problem("quad_minus_quad", 3)
    f = SmoothOracle(value=base.f.value, gradient=lambda x: -base.f.gradient(x) - 5.0, lipschitz=base.f.lipschitz)
    prob = DcProblem(f=f, g=base.g, psi=base.psi, n=3)
    out = _adaptive(prob, 1, 1, (1.0, 1.0), max_line_search_doublings=5)
    assert out.status == "inner_failure"
    assert "doublings" in out.message


def test_adaptive_floor_clamps_halving():
    prob = builtin_problem("quad_minus_quad", 4)
    cfg = SolverConfig(ModelParams(1, 1, 1.0, 1.0), mode="adaptive", M_p0=8.0, M_q0=8.0, M_floor=(4.0, 4.0), max_outer=10)
    out = run_ahodc(prob, np.ones(4), cfg)
    assert min(r.M_p_used for r in out.trace[1:]) >= 4.0
