"""Command-line front end.

    hodc run --problem quad_minus_quad --n 10 --p 2 --q 2 --mode fixed --Mp 2 --Mq 2 --output trace.csv
    hodc sweep --problem lse_minus_lse --n 20 --pq 1,1 --pq 2,2 --modes fixed --output table.csv

Exit codes: 0 converged, 1 input error, 2 iteration budget exhausted,
3 inner solver / line search failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .diagnostics import audit_descent, audit_rate, summability_check, MIN_RATE_TRACE
from .errors import CapabilityError, InputError
from .model import ModelParams
from .oracles import BUILTIN_PROBLEMS, DcProblem, builtin_problem
from .solver import SolveOutcome, SolverConfig, solve

__all__ = ["RunSpec", "TRACE_COLUMNS", "SWEEP_COLUMNS", "run_command", "sweep_command", "main"]

TRACE_COLUMNS = ["k", "F", "step_norm", "residual_bound", "M_p_used", "M_q_used", "doublings", "inner_iters", "inner_status"]
SWEEP_COLUMNS = ["p", "q", "mode", "iterations", "status", "final_residual", "fitted_exponent", "theoretical_exponent"]

EXIT_CODES = {"converged_step": 0, "converged_residual": 0, "max_iters": 2, "inner_failure": 3}


@dataclass(frozen=True)
class RunSpec:
    problem_name: str = "quad_minus_quad"
    n: int = 10
    seed: int = 0
    p: int = 1
    q: int = 1
    mode: str = "fixed"
    M_p: Optional[float] = None
    M_q: Optional[float] = None
    M_p0: Optional[float] = None
    M_q0: Optional[float] = None
    gamma: float = 1e-3
    theta: float = 0.1
    x0_policy: str = "ones"
    max_outer: int = 500
    output_path: Optional[str] = None
    format: str = "csv"
    psi: Optional[str] = None

    @classmethod
    def from_dict(cls, data: dict) -> "RunSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InputError(f"unknown RunSpec fields: {', '.join(sorted(unknown))}")
        return cls(**data).validated()

    def validated(self) -> "RunSpec":
        if self.problem_name not in BUILTIN_PROBLEMS:
            raise InputError(f"unknown problem {self.problem_name!r}; registry: {', '.join(sorted(BUILTIN_PROBLEMS))}")
        if self.n < 1:
            raise InputError("n must be >= 1")
        if self.mode not in ("fixed", "adaptive"):
            raise InputError(f"mode must be fixed or adaptive, got {self.mode!r}")
        if self.format not in ("csv", "json"):
            raise InputError(f"format must be csv or json, got {self.format!r}")
        for name in ("M_p", "M_q", "M_p0", "M_q0"):
            val = getattr(self, name)
            if val is not None and not val > 0:
                raise InputError(f"{name} must be positive")
        if not self.gamma > 0:
            raise InputError("gamma must be positive")
        if self.max_outer < 1:
            raise InputError("max_outer must be >= 1")
        _x0_seed(self.x0_policy)
        return self


def _x0_seed(policy: str) -> Optional[int]:
    if policy in ("zeros", "ones"):
        return None
    if policy == "random":
        return 0
    if policy.startswith("random:"):
        try:
            return int(policy.split(":", 1)[1])
        except ValueError:
            pass
    raise InputError(f"x0 policy must be zeros, ones, random or random:<seed>, got {policy!r}")


def initial_point(policy: str, n: int) -> np.ndarray:
    if policy == "zeros":
        return np.zeros(n)
    if policy == "ones":
        return np.ones(n)
    return np.random.default_rng(_x0_seed(policy)).standard_normal(n)


def _default_M(hint: Optional[float]) -> float:
    return 1.5 * hint if hint else 1.0


def build_run(spec: RunSpec):
    problem = builtin_problem(spec.problem_name, spec.n, spec.seed, psi=spec.psi)
    M_p = spec.M_p if spec.M_p is not None else _default_M(problem.f.lipschitz_hint(spec.p))
    M_q = spec.M_q if spec.M_q is not None else _default_M(problem.g.lipschitz_hint(spec.q))
    params = ModelParams(spec.p, spec.q, M_p, M_q, spec.theta)
    config = SolverConfig(
        params=params,
        mode=spec.mode,
        gamma=spec.gamma,
        M_p0=spec.M_p0,
        M_q0=spec.M_q0,
        max_outer=spec.max_outer,
    )
    x0 = initial_point(spec.x0_policy, spec.n)
    if not problem.psi.contains(x0):
        x0 = np.asarray(problem.psi.prox(x0, 1.0))
    return problem, config, x0


# ---------------------------------------------------------------------------
# serialization


def _num(x) -> float | None:
    x = float(x)
    return x if math.isfinite(x) else None


def trace_rows(outcome: SolveOutcome) -> List[list]:
    return [
        [r.k, repr(float(r.F_value)), repr(float(r.step_norm)), repr(float(r.residual_bound)), repr(float(r.M_p_used)),
         repr(float(r.M_q_used)), r.doublings, r.inner_iterations, r.inner_status]
        for r in outcome.trace
    ]


def write_trace(outcome: SolveOutcome, path: Path, fmt: str) -> None:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        writer.writerows(trace_rows(outcome))
        path.write_text(buf.getvalue())
    else:
        records = [
            {
                "k": r.k,
                "F": _num(r.F_value),
                "step_norm": r.step_norm,
                "residual_bound": _num(r.residual_bound),
                "M_p_used": r.M_p_used,
                "M_q_used": r.M_q_used,
                "doublings": r.doublings,
                "inner_iters": r.inner_iterations,
                "inner_status": r.inner_status,
                "x": [float(v) for v in r.x],
            }
            for r in outcome.trace
        ]
        path.write_text(json.dumps(records, indent=1) + "\n")


def audit_report(problem: DcProblem, outcome: SolveOutcome, spec: RunSpec) -> dict:
    params = outcome.params
    hints = (problem.f.lipschitz_hint(params.p), problem.g.lipschitz_hint(params.q))
    spec_record = asdict(spec)
    # the directory is not part of the run; keep audits byte-identical across locations
    spec_record["output_path"] = Path(spec.output_path).name if spec.output_path else None
    report = {
        "spec": spec_record,
        "outcome": {
            "status": outcome.status,
            "F_final": _num(outcome.F_final),
            "iterations": len(outcome.trace) - 1,
            "final_x": [float(v) for v in outcome.final_x],
            "message": outcome.message,
        },
    }
    if None in hints:
        report["descent_audit"] = {"applicable": False, "notes": "no Lipschitz hints"}
        report["summability"] = None
    else:
        report["descent_audit"] = audit_descent(outcome.trace, params, hints).to_dict()
        F_lower = problem.known_lower_bound if problem.known_lower_bound is not None else outcome.F_final
        lhs, cap, ok = summability_check(outcome.trace, params, hints, F_lower)
        report["summability"] = {"lhs_sum": lhs, "rhs_cap": _num(cap), "pass": ok, "F_lower": F_lower}
    if len(outcome.trace) >= MIN_RATE_TRACE:
        rate = audit_rate(outcome.trace, params, None if None in hints else hints, problem.known_lower_bound)
        report["rate_report"] = rate.to_dict()
    else:
        report["rate_report"] = {"notes": f"trace shorter than {MIN_RATE_TRACE} records; no rate fit"}
    return report


def _audit_path(trace_path: Path) -> Path:
    return trace_path.with_name(trace_path.stem + ".audit.json")


def run_command(spec: RunSpec) -> int:
    """Solve, write the trace and the audit JSON, return the exit code."""
    spec = spec.validated()
    problem, config, x0 = build_run(spec)
    outcome = solve(problem, x0, config)
    path = Path(spec.output_path or f"hodc_trace.{spec.format}")
    path.parent.mkdir(parents=True, exist_ok=True)
    write_trace(outcome, path, spec.format)
    _audit_path(path).write_text(json.dumps(audit_report(problem, outcome, spec), indent=1, sort_keys=True) + "\n")
    print(f"{outcome.status}: F={outcome.F_final!r} after {len(outcome.trace) - 1} iterations -> {path}")
    return EXIT_CODES[outcome.status]


def _sweep_row(spec: RunSpec) -> list:
    problem, config, x0 = build_run(spec)
    outcome = solve(problem, x0, config)
    params = config.params
    theory = -2.0 * params.min_order / (params.p + params.q + 2)
    fitted = ""
    if len(outcome.trace) >= MIN_RATE_TRACE:
        exp = audit_rate(outcome.trace, params).fitted_exponent
        fitted = "" if exp is None else repr(exp)
    return [spec.p, spec.q, spec.mode, len(outcome.trace) - 1, outcome.status,
            repr(float(outcome.trace[-1].residual_bound)), fitted, repr(theory)]


def sweep_command(grid: Sequence[RunSpec], output_path: str, jobs: int = 1) -> int:
    """Run every spec and write one CSV row per (p, q, mode) in grid order."""
    if not grid:
        raise InputError("empty sweep grid")
    grid = [s.validated() for s in grid]
    shared = ("problem_name", "n", "seed", "x0_policy", "max_outer", "psi")
    ref = grid[0]
    for spec in grid[1:]:
        diff = [k for k in shared if getattr(spec, k) != getattr(ref, k)]
        if diff:
            raise InputError(f"sweep specs must share {', '.join(shared)}; differing: {', '.join(diff)}")
    for spec in grid:
        build_run(spec)  # capability and input errors surface before any work
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_row, grid))
    else:
        rows = [_sweep_row(s) for s in grid]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    writer.writerows(rows)
    path = Path(output_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue())
    print(f"wrote {len(rows)} rows -> {path}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


_FLAG_TO_FIELD = {
    "problem": "problem_name",
    "n": "n",
    "seed": "seed",
    "p": "p",
    "q": "q",
    "mode": "mode",
    "Mp": "M_p",
    "Mq": "M_q",
    "Mp0": "M_p0",
    "Mq0": "M_q0",
    "gamma": "gamma",
    "theta": "theta",
    "x0": "x0_policy",
    "max_outer": "max_outer",
    "output": "output_path",
    "format": "format",
    "psi": "psi",
}


def _add_spec_flags(sub, skip=()):
    sub.add_argument("--config", help="JSON file with RunSpec fields (flags override it)")
    sub.add_argument("--problem", help=f"one of: {', '.join(sorted(BUILTIN_PROBLEMS))}")
    sub.add_argument("--n", type=int)
    sub.add_argument("--seed", type=int)
    if "pq" not in skip:
        sub.add_argument("--p", type=int)
        sub.add_argument("--q", type=int)
        sub.add_argument("--mode", choices=["fixed", "adaptive"])
    sub.add_argument("--Mp", type=float)
    sub.add_argument("--Mq", type=float)
    sub.add_argument("--Mp0", type=float)
    sub.add_argument("--Mq0", type=float)
    sub.add_argument("--gamma", type=float)
    sub.add_argument("--theta", type=float)
    sub.add_argument("--x0", help="zeros | ones | random | random:<seed>")
    sub.add_argument("--max-outer", dest="max_outer", type=int)
    sub.add_argument("--output")
    sub.add_argument("--psi", choices=["zero", "nonneg"], help="replace the problem's simple term")
    if "format" not in skip:
        sub.add_argument("--format", choices=["csv", "json"])


def _spec_from_args(args, base: dict) -> dict:
    data = dict(base)
    for flag, name in _FLAG_TO_FIELD.items():
        val = getattr(args, flag, None)
        if val is not None:
            data[name] = val
    return data


def _load_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc


def _parse_pq(text: str):
    try:
        p, q = (int(v) for v in text.split(","))
    except ValueError:
        raise InputError(f"--pq expects 'p,q', got {text!r}") from None
    return p, q


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hodc", description="Higher-order DC solver runs and audits")
    subs = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    run = subs.add_parser("run", help="solve one problem and write trace + audit")
    _add_spec_flags(run)
    sweep = subs.add_parser("sweep", help="compare (p, q, mode) combinations on one problem")
    _add_spec_flags(sweep, skip=("pq", "format"))
    sweep.add_argument("--pq", action="append", help="p,q pair; repeatable (default: all of {1,2}^2)")
    sweep.add_argument("--modes", nargs="+", choices=["fixed", "adaptive"], default=None)
    sweep.add_argument("--jobs", type=int, default=1)
    return parser


def _sweep_grid(args) -> tuple:
    config = _load_config(args.config)
    base = {k: v for k, v in config.items() if k not in ("grid", "runs", "output_path", "jobs")}
    output = args.output or config.get("output_path") or "hodc_sweep.csv"
    base = _spec_from_args(args, base)
    base.pop("output_path", None)
    if "runs" in config:
        grid = [RunSpec.from_dict({**base, **entry}) for entry in config["runs"]]
    elif "grid" in config and not args.pq:
        grid = [RunSpec.from_dict({**base, **entry}) for entry in config["grid"]]
    else:
        pairs = [_parse_pq(t) for t in args.pq] if args.pq else [(1, 1), (2, 1), (1, 2), (2, 2)]
        modes = args.modes or [base.get("mode", "fixed")]
        grid = [RunSpec.from_dict({**base, "p": p, "q": q, "mode": m}) for p, q in pairs for m in modes]
    return grid, output, config.get("jobs", args.jobs)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            data = _spec_from_args(args, _load_config(args.config))
            return run_command(RunSpec.from_dict(data))
        grid, output, jobs = _sweep_grid(args)
        return sweep_command(grid, output, jobs=jobs)
    except (InputError, CapabilityError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
