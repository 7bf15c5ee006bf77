import csv
import json

import pytest

from hodc import cli
from hodc.cli import RunSpec, main, run_command, sweep_command
from hodc.errors import InputError


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_run_quadratic(tmp_path, capsys):
    out = tmp_path / "t.csv"
    code = main(["run", "--problem", "quad_minus_quad", "--n", "10", "--p", "2", "--q", "2", "--mode", "fixed", "--Mp", "2", "--Mq", "2", "--output", str(out)])
    assert code == 0
    rows = _rows(out)
    assert list(rows[0]) == cli.TRACE_COLUMNS
    F = [float(r["F"]) for r in rows]
    assert all(b <= a for a, b in zip(F, F[1:]))
    audit = json.loads((tmp_path / "t.audit.json").read_text())
    assert audit["outcome"]["iterations"] == len(rows) - 1
    assert audit["descent_audit"]["pass"] is True
    assert "regime" in audit["rate_report"]


def test_unknown_problem(capsys):
    assert main(["run", "--problem", "nope"]) == 1
    err = capsys.readouterr().err
    assert "quad_minus_quad" in err and "poly_dc" in err


def test_bad_flags_exit_1(capsys):
    with pytest.raises(SystemExit) as info:
        main(["run", "--mode", "sideways"])
    assert info.value.code == 1
    assert main(["run", "--x0", "random:abc"]) == 1
    assert main(["run", "--Mp", "-1"]) == 1


def test_budget_exit_2(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["run", "--problem", "lasso_minus_concave", "--max-outer", "1", "--output", str(out)]) == 2
    assert len(_rows(out)) == 2


def test_inner_failure_exit_3(tmp_path, monkeypatch):
    real = cli.solve

    def failing(problem, x0, config):
        outcome = real(problem, x0, config)
        outcome.status = "inner_failure"
        return outcome

    monkeypatch.setattr(cli, "solve", failing)
    assert run_command(RunSpec(output_path=str(tmp_path / "f.csv"), max_outer=2)) == 3


def test_capability_error_exit_1(tmp_path):
    assert main(["run", "--problem", "lasso_minus_concave", "--p", "2", "--q", "2", "--output", str(tmp_path / "c.csv")]) == 1


def test_json_format_and_config(tmp_path):
    cfg = tmp_path / "spec.json"
    cfg.write_text(json.dumps({"problem_name": "poly_dc", "n": 2, "p": 2, "q": 1, "mode": "adaptive", "format": "json", "x0_policy": "random:3"}))
    out = tmp_path / "t.json"
    assert main(["run", "--config", str(cfg), "--output", str(out)]) == 0
    records = json.loads(out.read_text())
    assert records[0]["inner_status"] == "initial" and len(records[0]["x"]) == 2
    cfg.write_text(json.dumps({"problem": "poly_dc"}))
    assert main(["run", "--config", str(cfg)]) == 1


def test_deterministic_bytes(tmp_path):
    spec = dict(problem_name="lse_minus_lse", n=6, seed=3, p=2, q=1, mode="adaptive", x0_policy="random:1", max_outer=60)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run_command(RunSpec(output_path=str(a), **spec))
    run_command(RunSpec(output_path=str(b), **spec))
    assert a.read_bytes() == b.read_bytes()


def test_sweep_single_and_mixed(tmp_path):
    out = tmp_path / "s.csv"
    assert sweep_command([RunSpec(problem_name="poly_dc", n=2)], str(out)) == 0
    rows = _rows(out)
    assert len(rows) == 1 and list(rows[0]) == cli.SWEEP_COLUMNS
    with pytest.raises(InputError, match="n"):
        sweep_command([RunSpec(n=10), RunSpec(n=20)], str(out))
    cfg = tmp_path / "g.json"
    cfg.write_text(json.dumps({"runs": [{"n": 10}, {"n": 20}]}))
    assert main(["sweep", "--config", str(cfg), "--output", str(out)]) == 1


def test_sweep_exponent_ordering(tmp_path):
    out = tmp_path / "lse.csv"
    assert main(["sweep", "--problem", "lse_minus_lse", "--n", "20", "--modes", "fixed", "--output", str(out)]) == 0
    rows = {(int(r["p"]), int(r["q"])): r for r in _rows(out)}
    assert set(rows) == {(1, 1), (2, 1), (1, 2), (2, 2)}
    fitted = {k: float(r["fitted_exponent"]) for k, r in rows.items()}
    theory = {k: float(r["theoretical_exponent"]) for k, r in rows.items()}
    assert theory[(2, 2)] < theory[(1, 1)]
    low = sorted(fitted[k] for k in ((1, 1), (2, 1), (1, 2)))
    # min(p, q) = 2 row against the median of the min(p, q) = 1 rows
    assert fitted[(2, 2)] <= low[1]


def test_sweep_parallel_matches_serial(tmp_path):
    grid = [RunSpec(problem_name="quad_minus_quad", n=4, p=p, q=q) for p, q in ((1, 1), (2, 2), (2, 1))]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    sweep_command(grid, str(a), jobs=1)
    sweep_command(grid, str(b), jobs=2)
    assert a.read_bytes() == b.read_bytes()


def test_module_entry_point(tmp_path):
    import subprocess
    import sys

    proc = subprocess.run([sys.executable, "-m", "hodc", "run", "--problem", "nope"], capture_output=True, text=True)
    assert proc.returncode == 1 and "registry" in proc.stderr
