import csv
import json
from fractions import Fraction as F
import math
from math import gcd, lcm

import pytest
import sympy

from inftorus import __version__
from inftorus.cli import main, run


def write(tmp_path, doc, name="run.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def report(out):
    return json.loads((out / "report.json").read_text())


ONE_SQRT2 = {
    "basis": [{"id": "sqrt2", "value": "1.41421356237309504880168872420969807856967187537694"}],
    "prefix": [[["1", "1"]], [["sqrt2", "1"]]],
}


def brute_prime_period(N):
    """Smallest positive multiple of every 1/lambda_k, by lcm of numerators over gcd of denominators."""
    primes = list(sympy.primerange(2, sympy.prime(2 * N) + 1))
    periods = [F(primes[2 * k], primes[2 * k + 1]) for k in range(N)]
    num = lcm(*[p.numerator for p in periods])
    den = 0
    for p in periods:
        den = gcd(den, p.denominator)
    return F(num, den)


def test_classify_prime_ratio(tmp_path):
    cfg = write(tmp_path, {"command": "classify", "system": {"family": "prime_ratio", "N": 6}})
    out = tmp_path / "out"
    assert main(["--config", cfg, "--out", str(out)]) == 0
    doc = report(out)
    assert doc["report"]["class"] == "III"
    assert doc["version"] == __version__ and len(doc["config_hash"]) == 64
    table = [F(p) for _, p in doc["report"]["period_table"]]
    assert table == [brute_prime_period(N) for N in range(1, 7)]
    rows = list(csv.reader((out / "period_table.csv").open(newline="")))
    assert rows[0] == ["N", "period_over_2pi"] and rows[3] == ["3", "110/1"]
    assert (out / "period_table.csv").read_bytes().count(b"\r") == 0


def test_simulate_zero_time(tmp_path):
    cfg = write(tmp_path, {
        "command": "simulate",
        "system": {"family": "factorial", "N": 3},
        "params": {"point": {"turns": ["1/3", "1/5", "2/7"]}, "t": 0.0, "steps": 0},
    })
    out = tmp_path / "o"
    assert main(["--config", cfg, "--out", str(out)]) == 0
    rows = list(csv.reader((out / "trajectory.csv").open()))
    assert rows[0][:4] == ["t", "theta_1", "theta_2", "theta_3"]
    assert [float(v) for v in rows[1][1:]] == [2 * math.pi * float(F(a, b)) for a, b in ((1, 3), (1, 5), (2, 7))]


def test_ergodic_test_resonant(tmp_path):
    cfg = write(tmp_path, {"command": "ergodic-test", "system": {"prefix": [[["1", "1"]], [["1", "2"]]]},
                           "params": {"samples": 5000, "steps": 1000, "T": 100.0, "traj_samples": 500}})
    out = tmp_path / "o"
    assert main(["--config", cfg, "--out", str(out), "--seed", "3"]) == 0
    rep = report(out)["report"]
    assert rep["status"] == "NotErgodic" and rep["witness"] == [2, -1]
    assert rep["stats"]["equidistribution_stat"] == 1.0


def test_config_errors(tmp_path, capsys):
    assert main(["--config", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["--config", str(bad)]) == 2
    cfg = write(tmp_path, {"command": "fly", "system": {"family": "factorial", "N": 2}})
    assert main(["--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "command" in capsys.readouterr().err
    cfg = write(tmp_path, {"command": "ergodic-test", "system": {"family": "factorial", "N": 2}})
    assert main(["--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "seed" in capsys.readouterr().err
    cfg = write(tmp_path, {"command": "recurrence", "system": ONE_SQRT2, "params": {"eps": -1, "T_floor": 1}})
    assert main(["--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "eps" in capsys.readouterr().err


def test_numeric_errors(tmp_path, capsys):
    cfg = write(tmp_path, {
        "command": "recurrence",
        "system": ONE_SQRT2,
        "torus": {"radii_head": [1, 1], "tail": {"kind": "geometric", "first": "1/2", "ratio": "1/2"}},
        "params": {"eps": 0.01, "T_floor": 10},
    })
    assert main(["--config", cfg, "--out", str(tmp_path / "o")]) == 3
    assert "eps" in capsys.readouterr().err


def test_recurrence_report(tmp_path):
    cfg = write(tmp_path, {"command": "recurrence", "system": ONE_SQRT2,
                           "params": {"eps": 0.1, "T_floor": 1000.0}})
    out = tmp_path / "o"
    assert main(["--config", cfg, "--out", str(out)]) == 0
    rep = report(out)["report"]
    assert rep["hits"] and all(h["dist_upper"] < 0.1 for h in rep["hits"])


def test_byte_determinism_and_workers(tmp_path):
    doc = {"command": "ergodic-test", "system": ONE_SQRT2,
           "params": {"samples": 20000, "steps": 2000, "T": 100.0, "traj_samples": 300, "seed": 11}}
    cfg = write(tmp_path, doc)
    outs = []
    for i, w in enumerate(["1", "1", "4"]):
        out = tmp_path / f"o{i}"
        assert main(["--config", cfg, "--out", str(out), "--workers", w]) == 0
        outs.append((out / "report.json").read_bytes())
    assert outs[0] == outs[1] == outs[2]
    env, _ = run(doc, seed=12)
    assert json.dumps(env, sort_keys=True).encode() != outs[0]
    assert env["config_hash"] != json.loads(outs[0])["config_hash"]
